//! Dense real polynomials in the monomial basis.

use std::ops::{Add, Mul};

/// `Σ coeffs[i] sⁱ`. The vector length fixes the *formal* degree, which
/// may exceed the actual degree when the top coefficients are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "polynomial needs at least one coefficient"
        );
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `a s + b`
    pub fn linear(a: f64, b: f64) -> Self {
        Self { coeffs: vec![b, a] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn formal_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the highest coefficient whose magnitude exceeds
    /// `rel_tol` times the largest coefficient.
    pub fn degree(&self, rel_tol: f64) -> usize {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > rel_tol * scale)
            .unwrap_or(0)
    }

    /// Compensated Horner scheme (error-free transformations on each
    /// multiply-add), accurate to roughly twice the working precision.
    /// Near a root of `q` the monomial terms cancel heavily, and plain
    /// Horner would lose most of its digits there.
    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = 0.0f64;
        let mut err = 0.0f64;
        for &c in self.coeffs.iter().rev() {
            let prod = acc * s;
            let prod_err = acc.mul_add(s, -prod);
            let sum = prod + c;
            let z = sum - prod;
            let sum_err = (prod - (sum - z)) + (c - z);
            acc = sum;
            err = err * s + (prod_err + sum_err);
        }
        acc + err
    }

    /// Formal derivative; the result has formal degree one less (a
    /// constant stays a zero constant).
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Divide through by the constant coefficient so that `p(0) = 1`.
    pub fn normalized(&self) -> Option<Poly> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 || !c0.is_finite() {
            return None;
        }
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| c / c0).collect();
        coeffs[0] = 1.0;
        Some(Poly::new(coeffs))
    }

    /// `Σ_k c_k (a s + b)^k (c s + d)^{n−k}` with `n` the formal degree,
    /// i.e. `(cs+d)^n p((as+b)/(cs+d))`, expanded exactly.
    pub fn mobius_compose(&self, a: f64, b: f64, c: f64, d: f64) -> Poly {
        let n = self.formal_degree();
        let num = Poly::linear(a, b);
        let den = Poly::linear(c, d);
        let num_pows = powers(&num, n);
        let den_pows = powers(&den, n);
        let mut out = vec![0.0; n + 1];
        for (k, &ck) in self.coeffs.iter().enumerate() {
            if ck == 0.0 {
                continue;
            }
            let term = &num_pows[k] * &den_pows[n - k];
            for (o, t) in out.iter_mut().zip(term.coeffs) {
                *o += ck * t;
            }
        }
        Poly::new(out)
    }

    fn pad_to(&self, len: usize) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        v.resize(len.max(v.len()), 0.0);
        v
    }
}

fn powers(p: &Poly, n: usize) -> Vec<Poly> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(Poly::constant(1.0));
    for k in 1..=n {
        let next = &out[k - 1] * p;
        out.push(next);
    }
    out
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let a = self.pad_to(len);
        let b = rhs.pad_to(len);
        Poly::new(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &x) in self.coeffs.iter().enumerate() {
            for (j, &y) in rhs.coeffs.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        Poly::new(out)
    }
}
