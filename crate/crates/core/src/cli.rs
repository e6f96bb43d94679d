//! Config handling and runners behind the `rotvq` binary.
//!
//! Each subcommand reads an optional flat TOML file (unknown keys are
//! rejected), applies flag overrides, writes the effective values to
//! `<out>/resolved_config.toml` and then its artifacts. Passing that file
//! back with `--config` reproduces the run byte for byte.
//!
//! Exit codes: 0 success, 1 a verified property failed, 2 bad configuration
//! or any other error.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimators::EstimatorKind;
use crate::linalg::Matrix;
use crate::net::checkpoint;
use crate::net::model::CodebookLearning;
use crate::net::train::{comparison, train_on, TrainConfig};
use crate::sim::field::ScalarField2D;
use crate::sim::gradfield::{gradient_field, GridSpec};
use crate::sim::himmelblau::HimmelblauConfig;
use crate::sim::output::write_csv;
use crate::sim::voronoi::{figure_preset, SimRun};
use crate::verify::{run_suite, Fault, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rotvq", version, about = "Rotation-trick gradient estimators for vector quantization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the invariant suite and write report.json.
    Verify,
    /// Sample an estimator's gradient over a grid (field.csv).
    Gradfield,
    /// Voronoi-cell point dynamics (traj.csv, summary.csv).
    Voronoi,
    /// Quantized descent on Himmelblau's function (traj.csv, summary.csv).
    Himmelblau,
    /// Train the toy VQ autoencoder (metrics.csv, checkpoint.txt).
    Train,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Verify => "verify",
            Command::Gradfield => "gradfield",
            Command::Voronoi => "voronoi",
            Command::Himmelblau => "himmelblau",
            Command::Train => "train",
        })
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// Flat TOML file with the command's settings.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Estimator: ste, rotation, reflection, gamma:norm_ratio, gamma:one,
    /// gamma:inv_sq, hessian or exact.
    #[arg(long, global = true, value_name = "NAME")]
    pub estimator: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Run two estimators from one seed, e.g. `ste,rotation`.
    #[arg(long, global = true, value_name = "A,B")]
    pub paired: Option<String>,
    /// Test fixture: corrupt Rᵀ so `verify` must fail.
    #[arg(long, global = true, hide = true)]
    pub inject_fault: bool,
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    PropertyFailed(Vec<String>),
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::PropertyFailed(_) => EXIT_PROPERTY,
            CliError::Config(_) | CliError::Runtime(_) => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::PropertyFailed(names) => write!(f, "property check failed: {}", names.join(", ")),
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) | Error::Parse(m) => CliError::Config(m),
            other => CliError::Runtime(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(Error::Io(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("invalid value for `{key}`: {msg}"))
}

fn parse_estimator(key: &str, s: &str) -> CliResult<EstimatorKind> {
    s.parse().map_err(|e: Error| invalid(key, e))
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn nonzero(key: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        Err(invalid(key, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn decay(key: &str, v: f64) -> CliResult<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(key, format!("must lie in [0, 1), got {v}")))
    }
}

/// Settings shared by every command, so every config has the same flag
/// override behavior.
trait CommandConfig: Serialize + DeserializeOwned + Default {
    fn seed_mut(&mut self) -> &mut u64;
    fn estimator_mut(&mut self) -> Option<&mut String>;
    fn paired_mut(&mut self) -> Option<&mut String>;
    fn validate(&self) -> CliResult<()>;
}

macro_rules! common_fields {
    ($t:ty) => {
        impl CommandConfig for $t {
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
            fn estimator_mut(&mut self) -> Option<&mut String> {
                Some(&mut self.estimator)
            }
            fn paired_mut(&mut self) -> Option<&mut String> {
                Some(&mut self.paired)
            }
            fn validate(&self) -> CliResult<()> {
                parse_estimator("estimator", &self.estimator)?;
                arms(&self.estimator, &self.paired)?;
                self.check()
            }
        }
    };
}

/// Estimators to run: the single `estimator`, or both sides of `paired`.
fn arms(estimator: &str, paired: &str) -> CliResult<Vec<EstimatorKind>> {
    if paired.trim().is_empty() {
        return Ok(vec![parse_estimator("estimator", estimator)?]);
    }
    let parts: Vec<&str> = paired.split(',').map(str::trim).collect();
    if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(invalid("paired", format!("expected `A,B`, got `{paired}`")));
    }
    if parts[0] == parts[1] {
        return Err(invalid("paired", "the two estimators must differ"));
    }
    parts.iter().map(|p| parse_estimator("paired", p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyFileConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for VerifyFileConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 10_000,
        }
    }
}

impl CommandConfig for VerifyFileConfig {
    fn seed_mut(&mut self) -> &mut u64 {
        &mut self.seed
    }
    fn estimator_mut(&mut self) -> Option<&mut String> {
        None
    }
    fn paired_mut(&mut self) -> Option<&mut String> {
        None
    }
    fn validate(&self) -> CliResult<()> {
        nonzero("samples", self.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradfieldFileConfig {
    pub seed: u64,
    pub estimator: String,
    pub paired: String,
    pub field: String,
    /// Codebook size; codes are drawn uniformly from `[-code_range, code_range]²`.
    pub k: usize,
    pub code_range: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    /// Clamp gradient norms into `[clip_min, clip_max]`; 0 for both disables.
    pub clip_min: f64,
    pub clip_max: f64,
}

impl Default for GradfieldFileConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            seed: 0,
            estimator: "rotation".into(),
            paired: String::new(),
            field: "quadratic".into(),
            k: 16,
            code_range: 1.8,
            x_min: g.x_min,
            x_max: g.x_max,
            y_min: g.y_min,
            y_max: g.y_max,
            nx: g.nx,
            ny: g.ny,
            clip_min: 0.0,
            clip_max: 0.0,
        }
    }
}

impl GradfieldFileConfig {
    fn check(&self) -> CliResult<()> {
        self.field.parse::<ScalarField2D>().map_err(|e| invalid("field", e))?;
        nonzero("k", self.k)?;
        positive("code_range", self.code_range)?;
        if self.nx < 2 {
            return Err(invalid("nx", "must be at least 2"));
        }
        if self.ny < 2 {
            return Err(invalid("ny", "must be at least 2"));
        }
        if !(self.x_max > self.x_min) {
            return Err(invalid("x_max", "must exceed x_min"));
        }
        if !(self.y_max > self.y_min) {
            return Err(invalid("y_max", "must exceed y_min"));
        }
        if self.clip_min < 0.0 || self.clip_max < self.clip_min {
            return Err(invalid("clip_max", "need 0 <= clip_min <= clip_max"));
        }
        Ok(())
    }
}
common_fields!(GradfieldFileConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoronoiFileConfig {
    pub seed: u64,
    pub estimator: String,
    pub paired: String,
    pub lr: f64,
    pub steps: usize,
    pub update_codebook: bool,
    pub reassign: bool,
    pub decay: f64,
}

impl Default for VoronoiFileConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            estimator: "rotation".into(),
            paired: String::new(),
            lr: 0.02,
            steps: 25,
            update_codebook: false,
            reassign: false,
            decay: 0.8,
        }
    }
}

impl VoronoiFileConfig {
    fn check(&self) -> CliResult<()> {
        positive("lr", self.lr)?;
        nonzero("steps", self.steps)?;
        decay("decay", self.decay)
    }
}
common_fields!(VoronoiFileConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HimmelblauFileConfig {
    pub seed: u64,
    pub estimator: String,
    pub paired: String,
    pub k: usize,
    pub n: usize,
    pub steps: usize,
    pub lr: f64,
    pub decay: f64,
    pub half_width: f64,
}

impl Default for HimmelblauFileConfig {
    fn default() -> Self {
        let d = HimmelblauConfig::default();
        Self {
            seed: 0,
            estimator: "rotation".into(),
            paired: String::new(),
            k: d.k,
            n: d.n,
            steps: d.steps,
            lr: d.lr,
            decay: d.decay,
            half_width: d.half_width,
        }
    }
}

impl HimmelblauFileConfig {
    fn check(&self) -> CliResult<()> {
        nonzero("k", self.k)?;
        nonzero("n", self.n)?;
        nonzero("steps", self.steps)?;
        positive("lr", self.lr)?;
        decay("decay", self.decay)?;
        positive("half_width", self.half_width)
    }
}
common_fields!(HimmelblauFileConfig);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFileConfig {
    pub seed: u64,
    pub estimator: String,
    pub paired: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub k: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub beta: f64,
    pub decay: f64,
    /// `ema` or `loss`.
    pub codebook_learning: String,
    /// CSV file of samples; empty means the generated Gaussian mixture.
    pub dataset: String,
    pub n_samples: usize,
    pub components: usize,
    pub radius: f64,
    pub sigma: f64,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            seed: 0,
            estimator: "rotation".into(),
            paired: String::new(),
            epochs: d.epochs,
            batch_size: d.batch_size,
            lr: d.lr,
            k: d.k,
            latent_dim: d.latent_dim,
            hidden: d.hidden,
            beta: d.beta,
            decay: d.decay,
            codebook_learning: d.codebook_learning.to_string(),
            dataset: String::new(),
            n_samples: d.n_samples,
            components: d.components,
            radius: d.radius,
            sigma: d.sigma,
        }
    }
}

impl TrainFileConfig {
    fn check(&self) -> CliResult<()> {
        nonzero("epochs", self.epochs)?;
        nonzero("batch_size", self.batch_size)?;
        positive("lr", self.lr)?;
        nonzero("k", self.k)?;
        nonzero("latent_dim", self.latent_dim)?;
        nonzero("hidden", self.hidden)?;
        if !(self.beta >= 0.0) {
            return Err(invalid("beta", "must be non-negative"));
        }
        decay("decay", self.decay)?;
        self.codebook_learning
            .parse::<CodebookLearning>()
            .map_err(|e| invalid("codebook_learning", e))?;
        if self.dataset.is_empty() {
            nonzero("n_samples", self.n_samples)?;
            nonzero("components", self.components)?;
            positive("sigma", self.sigma)?;
        }
        Ok(())
    }

    fn to_train(&self, estimator: EstimatorKind) -> TrainConfig {
        TrainConfig {
            estimator,
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            k: self.k,
            latent_dim: self.latent_dim,
            hidden: self.hidden,
            beta: self.beta,
            decay: self.decay,
            codebook_learning: self.codebook_learning.parse().expect("validated"),
            n_samples: self.n_samples,
            components: self.components,
            radius: self.radius,
            sigma: self.sigma,
        }
    }
}
common_fields!(TrainFileConfig);

/// Loads `path` (or defaults), applies flag overrides and validates.
fn resolve<C: CommandConfig>(args: &CommonArgs) -> CliResult<C> {
    let mut cfg: C = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
        }
        None => C::default(),
    };
    if let Some(s) = args.seed {
        *cfg.seed_mut() = s;
    }
    if let Some(e) = &args.estimator {
        *cfg.estimator_mut().ok_or_else(|| CliError::Config("--estimator does not apply here".into()))? = e.clone();
    }
    if let Some(p) = &args.paired {
        *cfg.paired_mut().ok_or_else(|| CliError::Config("--paired does not apply here".into()))? = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_resolved<C: Serialize>(out: &Path, command: Command, cfg: &C) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    let body = toml::to_string(cfg).map_err(|e| CliError::Runtime(Error::Parse(e.to_string())))?;
    std::fs::write(out.join("resolved_config.toml"), format!("# rotvq {command}\n{body}"))?;
    Ok(())
}

/// Per-arm output directory: the root for single runs, a subdirectory named
/// after the estimator in paired mode.
fn arm_dir(out: &Path, arms: &[EstimatorKind], est: EstimatorKind) -> CliResult<PathBuf> {
    let dir = if arms.len() == 1 {
        out.to_path_buf()
    } else {
        out.join(est.to_string().replace(':', "_"))
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct CodeRow {
    code: usize,
    x: f64,
    y: f64,
}

fn write_codes(path: &Path, m: &Matrix) -> CliResult<()> {
    let rows: Vec<CodeRow> = m
        .iter_rows()
        .enumerate()
        .map(|(code, r)| CodeRow { code, x: r[0], y: r[1] })
        .collect();
    write_csv(path, &rows)?;
    Ok(())
}

fn cmd_verify(args: &CommonArgs) -> CliResult<String> {
    let cfg: VerifyFileConfig = resolve(args)?;
    write_resolved(&args.out, Command::Verify, &cfg)?;
    let report = run_suite(&VerifyOptions {
        seed: cfg.seed,
        samples: cfg.samples,
        fault: args.inject_fault.then_some(Fault::FlipTransposeSign),
    })?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(Error::Parse(e.to_string())))?;
    std::fs::write(args.out.join("report.json"), json + "\n")?;
    let mut lines = String::new();
    for p in &report.properties {
        lines.push_str(&format!(
            "{} {:<42} max_error {:.3e} (tol {:.1e})\n",
            if p.passed { "PASS" } else { "FAIL" },
            p.name,
            p.max_error,
            p.tolerance
        ));
    }
    if report.passed {
        Ok(lines)
    } else {
        eprint!("{lines}");
        Err(CliError::PropertyFailed(report.failures().map(|p| p.name.clone()).collect()))
    }
}

fn cmd_gradfield(args: &CommonArgs) -> CliResult<String> {
    use rand::Rng;
    let cfg: GradfieldFileConfig = resolve(args)?;
    write_resolved(&args.out, Command::Gradfield, &cfg)?;
    let field: ScalarField2D = cfg.field.parse()?;
    let mut rng = crate::seed::rng(cfg.seed, "gradfield/codebook");
    let r = cfg.code_range;
    let codes: Vec<[f64; 2]> = (0..cfg.k)
        .map(|_| [rng.random_range(-r..r), rng.random_range(-r..r)])
        .collect();
    let codes = Matrix::from_rows(&codes)?;
    write_codes(&args.out.join("codebook.csv"), &codes)?;
    let grid = GridSpec {
        x_min: cfg.x_min,
        x_max: cfg.x_max,
        y_min: cfg.y_min,
        y_max: cfg.y_max,
        nx: cfg.nx,
        ny: cfg.ny,
    };
    let clip = (cfg.clip_max > 0.0).then_some((cfg.clip_min, cfg.clip_max));
    let arms = arms(&cfg.estimator, &cfg.paired)?;
    let mut msg = String::new();
    for &est in &arms {
        let rows = gradient_field(field, &codes, &grid, est, clip)?;
        let dir = arm_dir(&args.out, &arms, est)?;
        write_csv(&dir.join("field.csv"), &rows)?;
        msg.push_str(&format!("{est}: {} rows -> {}\n", rows.len(), dir.join("field.csv").display()));
    }
    Ok(msg)
}

fn write_sim(dir: &Path, run: &SimRun) -> CliResult<()> {
    write_csv(&dir.join("traj.csv"), &run.traj)?;
    write_csv(&dir.join("summary.csv"), &run.summary)?;
    write_codes(&dir.join("codebook.csv"), run.state.codebook.vectors())?;
    Ok(())
}

fn sim_line(est: EstimatorKind, run: &SimRun) -> String {
    let last = run.summary.last().expect("steps >= 1");
    format!(
        "{est}: step {} mean_distortion {:.6} mean_objective {:.6} usage {:.3}\n",
        last.step, last.mean_distortion, last.mean_objective, last.usage
    )
}

fn cmd_voronoi(args: &CommonArgs) -> CliResult<String> {
    let cfg: VoronoiFileConfig = resolve(args)?;
    write_resolved(&args.out, Command::Voronoi, &cfg)?;
    let arms = arms(&cfg.estimator, &cfg.paired)?;
    let mut msg = String::new();
    for &est in &arms {
        let mut scn = figure_preset(est, cfg.seed)?;
        scn.lr = cfg.lr;
        scn.steps = cfg.steps;
        scn.update_codebook = cfg.update_codebook;
        scn.reassign = cfg.reassign;
        scn.ema_decay = cfg.decay;
        let run = scn.run()?;
        write_sim(&arm_dir(&args.out, &arms, est)?, &run)?;
        msg.push_str(&sim_line(est, &run));
    }
    Ok(msg)
}

fn cmd_himmelblau(args: &CommonArgs) -> CliResult<String> {
    let cfg: HimmelblauFileConfig = resolve(args)?;
    write_resolved(&args.out, Command::Himmelblau, &cfg)?;
    let arms = arms(&cfg.estimator, &cfg.paired)?;
    let mut msg = String::new();
    for &est in &arms {
        let h = HimmelblauConfig {
            k: cfg.k,
            n: cfg.n,
            steps: cfg.steps,
            lr: cfg.lr,
            decay: cfg.decay,
            half_width: cfg.half_width,
            estimator: est,
            seed: cfg.seed,
        };
        let run = h.scenario()?.run()?;
        write_sim(&arm_dir(&args.out, &arms, est)?, &run)?;
        msg.push_str(&sim_line(est, &run));
    }
    Ok(msg)
}

fn cmd_train(args: &CommonArgs) -> CliResult<String> {
    let cfg: TrainFileConfig = resolve(args)?;
    write_resolved(&args.out, Command::Train, &cfg)?;
    let arms = arms(&cfg.estimator, &cfg.paired)?;
    let data = if cfg.dataset.is_empty() {
        cfg.to_train(arms[0]).dataset()?
    } else {
        crate::data::load_csv(Path::new(&cfg.dataset))
            .map_err(|e| invalid("dataset", format!("{}: {e}", cfg.dataset)))?
    };
    let mut results = Vec::new();
    let mut msg = String::new();
    for &est in &arms {
        let (model, metrics) = train_on(&cfg.to_train(est), &data)?;
        let dir = arm_dir(&args.out, &arms, est)?;
        write_csv(&dir.join("metrics.csv"), &metrics)?;
        checkpoint::save(&model, &dir.join("checkpoint.txt"))?;
        let last = metrics.last().expect("epochs >= 1");
        msg.push_str(&format!(
            "{est}: epoch {} recon {:.6} quant_error {:.6} usage {:.4}\n",
            last.epoch, last.recon, last.quant_error, last.usage
        ));
        results.push((est, metrics));
    }
    if results.len() == 2 {
        write_csv(&args.out.join("comparison.csv"), &comparison(&results))?;
    }
    Ok(msg)
}

/// Runs one command; the `Ok` value is a human-readable summary.
pub fn run(command: Command, args: &CommonArgs) -> CliResult<String> {
    match command {
        Command::Verify => cmd_verify(args),
        Command::Gradfield => cmd_gradfield(args),
        Command::Voronoi => cmd_voronoi(args),
        Command::Himmelblau => cmd_himmelblau(args),
        Command::Train => cmd_train(args),
    }
}

/// Parses `argv`, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(cli.command, &cli.common) {
        Ok(msg) => {
            print!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("rotvq {}: {e}", cli.command);
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(out: &Path) -> CommonArgs {
        CommonArgs {
            out: out.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "seed = 1\nlearning_rate = 0.1\n").unwrap();
        let a = CommonArgs { config: Some(cfg), ..args(dir.path()) };
        let err = resolve::<HimmelblauFileConfig>(&a).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.to_string().contains("learning_rate"), "{err}");
    }

    #[test]
    fn invalid_fields_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "lr = -1.0\n").unwrap();
        let a = CommonArgs { config: Some(cfg), ..args(dir.path()) };
        let err = resolve::<TrainFileConfig>(&a).unwrap_err();
        assert!(err.to_string().contains("`lr`"), "{err}");
        let a = CommonArgs { estimator: Some("nope".into()), ..args(dir.path()) };
        assert!(resolve::<TrainFileConfig>(&a).unwrap_err().to_string().contains("`estimator`"));
        let a = CommonArgs { paired: Some("ste".into()), ..args(dir.path()) };
        assert!(resolve::<TrainFileConfig>(&a).unwrap_err().to_string().contains("`paired`"));
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "seed = 3\nestimator = \"ste\"\nsteps = 7\n").unwrap();
        let a = CommonArgs {
            config: Some(cfg),
            seed: Some(9),
            estimator: Some("reflection".into()),
            ..args(dir.path())
        };
        let c: HimmelblauFileConfig = resolve(&a).unwrap();
        assert_eq!((c.seed, c.estimator.as_str(), c.steps), (9, "reflection", 7));
    }

    #[test]
    fn resolved_config_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let c = TrainFileConfig { paired: "ste,rotation".into(), ..Default::default() };
        write_resolved(dir.path(), Command::Train, &c).unwrap();
        let a = CommonArgs {
            config: Some(dir.path().join("resolved_config.toml")),
            ..args(dir.path())
        };
        assert_eq!(resolve::<TrainFileConfig>(&a).unwrap(), c);
    }

    #[test]
    fn estimator_flag_rejected_for_verify() {
        let dir = tempfile::tempdir().unwrap();
        let a = CommonArgs { estimator: Some("ste".into()), ..args(dir.path()) };
        assert_eq!(run(Command::Verify, &a).unwrap_err().exit_code(), EXIT_CONFIG);
    }
}
