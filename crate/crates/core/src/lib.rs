//! Exact filtering of a Cox process whose intensity follows an unobserved
//! square-root (CIR) diffusion.
//!
//! Only the jump times are observed. Starting from a `Gamma(2θ, φ)` prior
//! the conditional law of the intensity stays a finite Gamma mixture, and
//! the [`filter`] module propagates it recursively in closed form. Around
//! it sit full-information survival formulas ([`riccati`]), ground-truth
//! simulation ([`simulation`]), the mixture decomposition ([`mixture`]),
//! and two independent numerical oracles ([`oracle`]).

// `!(x > 0.0)` rejects NaN together with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod filter;
pub mod mixture;
pub mod oracle;
pub mod params;
pub mod riccati;
pub mod simulation;

pub use error::{Error, Result};
pub use filter::{filter_trace, FilterState, TraceRow};
pub use mixture::{mixture_from_state, GammaMixture};
pub use params::{validate_params, GammaLaw, JumpRecord, ModelParams, ParamsConfig};
pub use riccati::{riccati, survival_full_info, RiccatiPair};
