//! Batch command-line front end. Every command reads one JSON run
//! configuration and writes CSV files into an output directory.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::error::Error;
use crate::filter::{filter_trace, FilterState};
use crate::mixture::mixture_from_state;
use crate::oracle::{validate, ValidationConfig};
use crate::params::{validate_params, GammaLaw, JumpRecord, ModelParams, ParamsConfig};
use crate::simulation::{simulate_scenario, InitialIntensity, DEFAULT_STEP};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "CIRFILTER_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "cirfilter",
    version,
    about = "Exact filtering for Cox processes with CIR intensity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Override every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate intensity paths and their jump times.
    Simulate,
    /// Run the exact filter over observed jump times.
    Filter,
    /// Partial-information survival curve.
    Survival,
    /// Gamma-mixture weights between jumps.
    Mixture,
    /// Compare the exact filter with a particle filter.
    Validate,
}

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
    #[error("validation failed: {exceedances} checks beyond |z| = 3, {allowed} allowed")]
    ValidationFailed { exceedances: usize, allowed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) | CliError::ValidationFailed { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateState(_) | Error::Degeneracy(_) | Error::StepFailure { .. } => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

/// Times given either explicitly or as `{start, end, step}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, end: f64, step: f64 },
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            GridSpec::List(ref v) => Ok(v.clone()),
            GridSpec::Range { start, end, step } => {
                if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
                    return Err(CliError::Input(format!(
                        "bad grid range start={start} end={end} step={step}"
                    )));
                }
                let count = ((end - start) / step + 1e-9).floor() as usize;
                Ok((0..=count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// Jump times inline or in a file with one time per line.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum JumpSource {
    Inline(Vec<f64>),
    File { file: PathBuf },
}

impl JumpSource {
    pub fn load(&self, base: &Path) -> Result<JumpRecord, CliError> {
        let times = match self {
            JumpSource::Inline(v) => v.clone(),
            JumpSource::File { file } => {
                let path = base.join(file);
                let text = fs::read_to_string(&path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                read_jump_lines(&text)?
            }
        };
        Ok(JumpRecord::new(times)?)
    }
}

/// Parse a jump file: one time per line, blank lines ignored.
pub fn read_jump_lines(text: &str) -> Result<Vec<f64>, CliError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| CliError::Input(format!("bad jump time `{l}`: {e}")))
        })
        .collect()
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_paths() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Fixed starting intensity; drawn from the prior when absent.
    #[serde(default)]
    pub lambda0: Option<f64>,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
}

fn default_horizons() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub jumps: Option<JumpSource>,
    pub query_grid: GridSpec,
    /// Transform arguments reported as `mgf_<s>` columns.
    #[serde(default)]
    pub mgf_s: Vec<f64>,
    /// Survival horizons reported as `survival_<h>y` columns.
    #[serde(default = "default_horizons")]
    pub survival_horizons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalConfig {
    pub horizons: Vec<f64>,
    /// Evaluation time; defaults to the last observed jump, or zero.
    #[serde(default)]
    pub at: Option<f64>,
    /// Falls back to the filter block's jumps when absent.
    #[serde(default)]
    pub jumps: Option<JumpSource>,
    /// Time of default, if it has happened; survival is zero from then on.
    #[serde(default)]
    pub default_time: Option<f64>,
}

fn default_mixture_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    #[serde(default)]
    pub jumps: Option<JumpSource>,
    /// Explicit evaluation times; when absent each interval is sampled
    /// with `t_step`.
    #[serde(default)]
    pub t_grid: Option<GridSpec>,
    #[serde(default = "default_mixture_step")]
    pub t_step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default)]
    pub particles: Option<usize>,
    #[serde(default)]
    pub scenarios: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub survival: Option<SurvivalConfig>,
    #[serde(default)]
    pub mixture: Option<MixtureConfig>,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }
}

struct Context {
    params: ModelParams,
    prior: GammaLaw,
    base: PathBuf,
    out: PathBuf,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        f.write_all(contents.as_bytes())
            .map_err(|e| io_err(&path, e))
    }

    fn phi(&self) -> f64 {
        self.prior.rate()
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    for r in rows {
        w.write_record(r)
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Internal(e.to_string()))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn section<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("config has no `{name}` block")))
}

/// Install the global thread pool size from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer")))?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Execute one command and return the names of the files written.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("--config is required".into()))?;
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", config_path.display())))?;
    let config = RunConfig::from_json(&text)?;
    let (params, prior) = validate_params(&config.params)?;
    fs::create_dir_all(&cli.out).map_err(|e| io_err(&cli.out, e))?;
    let ctx = Context {
        params,
        prior,
        base: config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
        out: cli.out.clone(),
    };
    match cli.command {
        Command::Simulate => cmd_simulate(&ctx, section(&config.simulate, "simulate")?, cli.seed),
        Command::Filter => cmd_filter(&ctx, section(&config.filter, "filter")?),
        Command::Survival => cmd_survival(&ctx, &config),
        Command::Mixture => cmd_mixture(&ctx, section(&config.mixture, "mixture")?),
        Command::Validate => cmd_validate(&ctx, section(&config.validate, "validate")?, cli.seed),
    }
}

fn cmd_simulate(
    ctx: &Context,
    cfg: &SimulateConfig,
    seed_override: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let initial = match cfg.lambda0 {
        Some(x) if x.is_finite() && x >= 0.0 => InitialIntensity::Fixed(x),
        Some(x) => {
            return Err(CliError::Input(format!(
                "lambda0 = {x} must be nonnegative"
            )))
        }
        None => InitialIntensity::Prior(ctx.prior),
    };
    let mut written = Vec::new();
    let mut summary = Vec::with_capacity(cfg.paths);
    for i in 0..cfg.paths {
        let sim = simulate_scenario(
            &ctx.params,
            initial,
            cfg.horizon,
            cfg.step,
            seed.wrapping_add(i as u64),
        )?;
        let rows: Vec<Vec<String>> = sim
            .grid()
            .iter()
            .zip(sim.intensity())
            .map(|(&t, &l)| vec![num(t), num(l)])
            .collect();
        let name = format!("path_{i}.csv");
        ctx.write(&name, &csv_text(&["t".into(), "lambda".into()], &rows)?)?;
        written.push(name);
        let mut jumps = String::new();
        for t in sim.jumps.times() {
            let _ = writeln!(jumps, "{}", num(*t));
        }
        let name = format!("jumps_{i}.txt");
        ctx.write(&name, &jumps)?;
        written.push(name);
        summary.push(vec![
            i.to_string(),
            num(sim.intensity()[0]),
            sim.jumps.len().to_string(),
        ]);
    }
    let header = ["path", "lambda0", "n_jumps"].map(String::from);
    ctx.write("summary.csv", &csv_text(&header, &summary)?)?;
    written.push("summary.csv".into());
    Ok(written)
}

fn load_jumps(src: Option<&JumpSource>, ctx: &Context) -> Result<JumpRecord, CliError> {
    src.map_or(Ok(JumpRecord::empty()), |s| s.load(&ctx.base))
}

fn cmd_filter(ctx: &Context, cfg: &FilterConfig) -> Result<Vec<String>, CliError> {
    let jumps = load_jumps(cfg.jumps.as_ref(), ctx)?;
    let query = cfg.query_grid.points()?;
    let rows = filter_trace(
        &ctx.params,
        ctx.phi(),
        &jumps,
        &query,
        &cfg.mgf_s,
        &cfg.survival_horizons,
    )?;
    let mut header: Vec<String> = ["t", "n", "Q", "lambda_hat"].map(String::from).to_vec();
    header.extend(cfg.mgf_s.iter().map(|s| format!("mgf_{s}")));
    header.extend(
        cfg.survival_horizons
            .iter()
            .map(|h| format!("survival_{h}y")),
    );
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![num(r.t), r.n.to_string(), num(r.rate), num(r.lambda_hat)];
            v.extend(r.mgf.iter().copied().map(num));
            v.extend(r.survival.iter().copied().map(num));
            v
        })
        .collect();
    ctx.write("filter_trace.csv", &csv_text(&header, &body)?)?;
    Ok(vec!["filter_trace.csv".into()])
}

fn cmd_survival(ctx: &Context, config: &RunConfig) -> Result<Vec<String>, CliError> {
    let cfg = section(&config.survival, "survival")?;
    let src = cfg
        .jumps
        .as_ref()
        .or_else(|| config.filter.as_ref().and_then(|f| f.jumps.as_ref()));
    let jumps = load_jumps(src, ctx)?;
    let at = cfg.at.unwrap_or_else(|| jumps.last().unwrap_or(0.0));
    let state = FilterState::at(&ctx.params, ctx.phi(), &jumps, at)?;
    let defaulted = cfg.default_time.is_some_and(|d| d <= at);
    let rows = cfg
        .horizons
        .iter()
        .map(|&h| {
            let p = if defaulted {
                0.0
            } else {
                state.conditional_survival(h)?
            };
            Ok(vec![num(at), num(h), num(p)])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let header = ["t", "horizon", "survival"].map(String::from);
    ctx.write("survival.csv", &csv_text(&header, &rows)?)?;
    Ok(vec!["survival.csv".into()])
}

fn cmd_mixture(ctx: &Context, cfg: &MixtureConfig) -> Result<Vec<String>, CliError> {
    let jumps = load_jumps(cfg.jumps.as_ref(), ctx)?;
    if !(cfg.t_step > 0.0) {
        return Err(CliError::Input("t_step must be positive".into()));
    }
    let times = jumps.times();
    let explicit = cfg.t_grid.as_ref().map(GridSpec::points).transpose()?;
    let mut written = Vec::new();
    for n in 0..=times.len() {
        let start = if n == 0 { 0.0 } else { times[n - 1] };
        let end = times.get(n).copied().unwrap_or(start + 1.0);
        let grid: Vec<f64> = match &explicit {
            Some(pts) => pts
                .iter()
                .copied()
                .filter(|&t| t >= start && t < end)
                .collect(),
            None => {
                let count = ((end - start) / cfg.t_step - 1e-9).ceil() as usize;
                (0..count)
                    .map(|i| start + i as f64 * cfg.t_step)
                    .filter(|&t| t < end)
                    .collect()
            }
        };
        if grid.is_empty() {
            continue;
        }
        let mut rows = Vec::with_capacity(grid.len());
        for &t in &grid {
            let state = FilterState::at(&ctx.params, ctx.phi(), &jumps, t)?;
            let mix = mixture_from_state(&state);
            let mut r = vec![num(t)];
            r.extend(mix.weights.iter().copied().map(num));
            rows.push(r);
        }
        let mut header = vec!["t".to_string()];
        header.extend((0..=n).map(|i| format!("pi_{i}")));
        let name = format!("mixture_n{n}.csv");
        ctx.write(&name, &csv_text(&header, &rows)?)?;
        written.push(name);
    }
    Ok(written)
}

fn cmd_validate(
    ctx: &Context,
    cfg: &ValidateConfig,
    seed_override: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let mut vc = ValidationConfig {
        parameter_sets: vec![(ctx.params, ctx.phi())],
        ..ValidationConfig::default()
    };
    if let Some(p) = cfg.particles {
        vc.particles = p;
    }
    if let Some(s) = cfg.scenarios {
        vc.scenarios = s;
    }
    if let Some(r) = cfg.replicates {
        vc.replicates = r;
    }
    if let Some(h) = cfg.horizon {
        vc.horizon = h;
    }
    if let Some(s) = seed_override.or(cfg.seed) {
        vc.seed = s;
    }
    let report = validate(&vc)?;
    let header = ["t", "exact_lambda_hat", "pf_estimate", "pf_se", "z_score"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.exact_lambda_hat),
                num(r.pf_estimate),
                num(r.pf_se),
                num(r.z_score),
            ]
        })
        .collect();
    ctx.write("oracle_report.csv", &csv_text(&header, &rows)?)?;
    if !report.passed() {
        return Err(CliError::ValidationFailed {
            exceedances: report.exceedances,
            allowed: report.allowed,
        });
    }
    Ok(vec!["oracle_report.csv".into()])
}
