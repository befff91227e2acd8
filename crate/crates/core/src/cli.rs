//! Command-line front end.
//!
//! Settings come from built-in defaults, then an optional `--config` file of
//! `key = value` lines (keys are the long flag names without dashes), then
//! flags. Every CSV is written next to a `.manifest.json` describing the run.
//!
//! Exit codes: 0 success, 1 numerical or I/O failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::experiment::{
    find_flip_eta, output_state, run_point, sweep_eta, ExperimentConfig, GridSpec, SweepResult,
    Variant,
};
use crate::uncertainty::{propagate_monte_carlo, Propagation, UncertaintyModel};
use crate::witness::eb_threshold;

pub const CSV_HEADER: &str = "eta,nu2,delta,verdict,variant";

const SIGNIFICANT_DIGITS: i32 = 12;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(msg) => write!(f, "error: {msg}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "amendable",
    version,
    about = "Gaussian amendable-channel experiment simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the witness at a single transmissivity.
    Point(Settings),
    /// Sweep eta over a grid and write a CSV.
    Sweep(Settings),
    /// Report the analytic threshold and the bisected verdict flip.
    Threshold(Settings),
    /// Run one of the preset sweeps (fig5, fig6a, fig6b, fig7).
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig5,
    Fig6a,
    Fig6b,
    Fig7,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Directory receiving the CSV and manifest files.
    #[arg(long, default_value = ".")]
    output: PathBuf,
}

/// Every knob a run can take. `None` means "not given at this layer".
#[derive(Debug, Clone, Default, Args)]
struct Settings {
    /// OPO two-mode squeezing; the probe has r' = -r/2.
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "eta-min")]
    eta_min: Option<f64>,
    #[arg(long = "eta-max")]
    eta_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Preparation-loss transmissivity.
    #[arg(long)]
    t0: Option<f64>,
    /// Detection efficiency.
    #[arg(long)]
    tm: Option<f64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long, value_enum)]
    uncertainty: Option<Switch>,
    /// Relative per-element standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Absolute per-element standard deviation floor.
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    propagation: Option<Propagation>,
    /// Bisection tolerance on eta.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl FromStr for Propagation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "first-order" => Ok(Propagation::FirstOrder),
            "monte-carlo" => Ok(Propagation::MonteCarlo),
            other => Err(format!(
                "unknown propagation '{other}', expected first-order or monte-carlo"
            )),
        }
    }
}

impl std::fmt::Display for Propagation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Propagation::FirstOrder => "first-order",
            Propagation::MonteCarlo => "monte-carlo",
        })
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| usage(format!("config key '{key}': cannot parse '{raw}': {e}")))
}

impl Settings {
    /// Parses a flat `key = value` file. Blank lines and `#` comments are
    /// skipped; `key value` without `=` is also accepted.
    fn from_config_text(text: &str) -> CliResult<Self> {
        let mut s = Settings::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => line
                    .split_once(char::is_whitespace)
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .ok_or_else(|| usage(format!("config line {}: missing value", lineno + 1)))?,
            };
            let key = key.trim_start_matches("--");
            match key {
                "r" => s.r = Some(parse_value(key, value)?),
                "eta" => s.eta = Some(parse_value(key, value)?),
                "eta-min" => s.eta_min = Some(parse_value(key, value)?),
                "eta-max" => s.eta_max = Some(parse_value(key, value)?),
                "steps" => s.steps = Some(parse_value(key, value)?),
                "t0" => s.t0 = Some(parse_value(key, value)?),
                "tm" => s.tm = Some(parse_value(key, value)?),
                "variant" => s.variant = Some(parse_value(key, value)?),
                "uncertainty" => {
                    s.uncertainty = Some(
                        Switch::from_str(value, true)
                            .map_err(|e| usage(format!("config key 'uncertainty': {e}")))?,
                    )
                }
                "sigma" => s.sigma = Some(parse_value(key, value)?),
                "floor" => s.floor = Some(parse_value(key, value)?),
                "samples" => s.samples = Some(parse_value(key, value)?),
                "seed" => s.seed = Some(parse_value(key, value)?),
                "propagation" => s.propagation = Some(parse_value(key, value)?),
                "tol" => s.tol = Some(parse_value(key, value)?),
                "output" => s.output = Some(PathBuf::from(value)),
                other => {
                    return Err(usage(format!(
                        "config line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(s)
    }

    /// Values in `self` win over `base`.
    fn over(self, base: Settings) -> Settings {
        Settings {
            r: self.r.or(base.r),
            eta: self.eta.or(base.eta),
            eta_min: self.eta_min.or(base.eta_min),
            eta_max: self.eta_max.or(base.eta_max),
            steps: self.steps.or(base.steps),
            t0: self.t0.or(base.t0),
            tm: self.tm.or(base.tm),
            variant: self.variant.or(base.variant),
            uncertainty: self.uncertainty.or(base.uncertainty),
            sigma: self.sigma.or(base.sigma),
            floor: self.floor.or(base.floor),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            propagation: self.propagation.or(base.propagation),
            tol: self.tol.or(base.tol),
            output: self.output.or(base.output),
            config: self.config.or(base.config),
        }
    }

    /// Applies the config file named by `--config`, if any.
    fn resolve(self) -> CliResult<Resolved> {
        let merged = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                self.over(Settings::from_config_text(&text)?)
            }
            None => self,
        };
        Resolved::from_settings(merged)
    }
}

#[derive(Debug, Clone)]
struct Resolved {
    config: ExperimentConfig,
    grid: GridSpec,
    tol: f64,
    output: PathBuf,
}

impl Resolved {
    fn from_settings(s: Settings) -> CliResult<Self> {
        let defaults = UncertaintyModel::default();
        let model = UncertaintyModel {
            relative_sigma: s.sigma.unwrap_or(defaults.relative_sigma),
            absolute_floor: s.floor.unwrap_or(defaults.absolute_floor),
            samples: s.samples.unwrap_or(defaults.samples),
            seed: s.seed.unwrap_or(defaults.seed),
            propagation: s.propagation.unwrap_or(defaults.propagation),
        };
        let uncertainty = match s.uncertainty.unwrap_or(Switch::Off) {
            Switch::On => Some(model),
            Switch::Off => None,
        };
        let config = ExperimentConfig {
            r: s.r.unwrap_or(DEFAULT_R),
            eta: s.eta.unwrap_or(0.5),
            t0: s.t0.unwrap_or(1.0),
            tm: s.tm.unwrap_or(1.0),
            variant: s.variant.unwrap_or(Variant::Phi1),
            uncertainty,
        };
        config.validate().map_err(usage)?;
        let default_grid = GridSpec::default();
        let grid = GridSpec {
            min: s.eta_min.unwrap_or(default_grid.min),
            max: s.eta_max.unwrap_or(default_grid.max),
            steps: s.steps.unwrap_or(default_grid.steps),
        };
        grid.validate().map_err(usage)?;
        let tol = s.tol.unwrap_or(1e-6);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(usage(format!("tol must be positive, got {tol}")));
        }
        Ok(Self {
            config,
            grid,
            tol,
            output: s.output.unwrap_or_else(|| PathBuf::from("sweep.csv")),
        })
    }
}

/// Probe squeezing r' = 0.65.
const DEFAULT_R: f64 = -1.3;

/// Renders `x` in fixed-point notation with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", (SIGNIFICANT_DIGITS - 1) as usize, 0.0);
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn verdict_label(p: &crate::experiment::PointResult) -> &'static str {
    match &p.confidence {
        Some(c) => c.classification.label(),
        None if p.witness.entangled => "entangled",
        None => "separable",
    }
}

/// CSV body for one or more sweeps, header included.
pub fn render_csv(sweeps: &[SweepResult]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for sweep in sweeps {
        for p in &sweep.points {
            let delta = p.delta().map(format_sig).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                format_sig(p.eta),
                format_sig(p.witness.nu_squared),
                delta,
                verdict_label(p),
                sweep.config.variant
            );
        }
    }
    out
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub figure: Option<String>,
    pub configs: Vec<ExperimentConfig>,
    /// First configuration in config-file syntax.
    pub settings: BTreeMap<&'static str, String>,
    pub r_prime: f64,
    pub grid: GridSpec,
    pub output: String,
    pub timestamp: String,
}

impl RunManifest {
    fn new(command: &str, figure: Option<&str>, sweeps: &[SweepResult], output: &Path) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            figure: figure.map(str::to_string),
            configs: sweeps.iter().map(|s| s.config).collect(),
            settings: sweeps
                .first()
                .map(|s| config_echo(&s.config))
                .unwrap_or_default(),
            r_prime: sweeps.first().map(|s| s.config.r_prime()).unwrap_or(0.0),
            grid: sweeps.first().map(|s| s.grid).unwrap_or_default(),
            output: output.display().to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

fn write_outputs(csv_path: &Path, manifest: &RunManifest, body: &str) -> CliResult<()> {
    fs::write(csv_path, body)
        .map_err(|e| runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    let json = serde_json::to_string_pretty(manifest).map_err(runtime)?;
    let mpath = manifest_path(csv_path);
    fs::write(&mpath, json + "\n")
        .map_err(|e| runtime(format!("cannot write {}: {e}", mpath.display())))
}

fn numerical(e: Error) -> CliError {
    runtime(e)
}

fn cmd_point(settings: Settings) -> CliResult<String> {
    let run = settings.resolve()?;
    let cfg = run.config;
    let point = run_point(&cfg).map_err(numerical)?;
    let w = point.witness;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "r = {} (r' = {}), eta = {}, t0 = {}, tm = {}, variant = {}",
        cfg.r,
        cfg.r_prime(),
        cfg.eta,
        cfg.t0,
        cfg.tm,
        cfg.variant
    );
    let _ = writeln!(out, "nu^2           = {}", format_sig(w.nu_squared));
    let _ = writeln!(out, "Sigma          = {}", format_sig(w.sigma));
    let _ = writeln!(out, "det V          = {}", format_sig(w.det_v));
    let verdict = if w.entangled {
        "entangled (nu^2 < 1/4)"
    } else {
        "separable (nu^2 >= 1/4)"
    };
    let _ = writeln!(out, "verdict        = {verdict}");
    if let (Some(model), Some(conf)) = (&cfg.uncertainty, &point.confidence) {
        let _ = writeln!(
            out,
            "delta(nu^2)    = {} ({})",
            format_sig(conf.delta),
            model.propagation
        );
        let _ = writeln!(out, "classification = {}", conf.classification.label());
        if model.propagation == Propagation::MonteCarlo {
            let state = output_state(&cfg).map_err(numerical)?;
            let mc = propagate_monte_carlo(&state, model).map_err(numerical)?;
            let _ = writeln!(
                out,
                "monte carlo    = mean {}, std {}, {} unphysical of {}",
                format_sig(mc.mean),
                format_sig(mc.std),
                mc.rejected,
                model.samples
            );
        }
    }
    if cfg.r_prime() != 0.0 {
        if let Ok(t) = eb_threshold(cfg.r_prime()) {
            let note = if cfg.is_ideal() {
                ""
            } else {
                " (lossless pipeline only)"
            };
            let _ = writeln!(out, "eta threshold  = {}{note}", format_sig(t));
        }
    }
    Ok(out)
}

fn cmd_sweep(settings: Settings) -> CliResult<String> {
    let run = settings.resolve()?;
    let sweep = sweep_eta(&run.config, &run.grid).map_err(numerical)?;
    let body = render_csv(std::slice::from_ref(&sweep));
    let manifest = RunManifest::new("sweep", None, std::slice::from_ref(&sweep), &run.output);
    write_outputs(&run.output, &manifest, &body)?;
    let separable = sweep.separable_points().count();
    Ok(format!(
        "wrote {} rows to {} ({} separable)\n",
        sweep.points.len(),
        run.output.display(),
        separable
    ))
}

fn cmd_threshold(settings: Settings) -> CliResult<String> {
    let run = settings.resolve()?;
    let cfg = run.config;
    let r_prime = cfg.r_prime();
    if r_prime == 0.0 {
        return Err(usage(Error::SingularThreshold));
    }
    let mut out = String::new();
    if cfg.is_ideal() {
        let analytic = eb_threshold(r_prime).map_err(usage)?;
        let _ = writeln!(
            out,
            "analytic  eta~(r' = {r_prime}) = {}",
            format_sig(analytic)
        );
    }
    let flip = find_flip_eta(&cfg, run.tol).map_err(numerical)?;
    let _ = writeln!(
        out,
        "bisection flip (t0 = {}, tm = {}, {}) = {} +/- {}",
        cfg.t0,
        cfg.tm,
        cfg.variant,
        format_sig(flip),
        run.tol / 2.0
    );
    Ok(out)
}

struct Preset {
    file: &'static str,
    config: ExperimentConfig,
}

fn presets(figure: Figure) -> Vec<Preset> {
    let model = Some(UncertaintyModel::default());
    let base = |r_prime: f64| ExperimentConfig::from_r_prime(r_prime, 0.5, Variant::Phi1);
    match figure {
        Figure::Fig5 => vec![Preset {
            file: "fig5.csv",
            config: base(0.65),
        }],
        Figure::Fig6a => vec![Preset {
            file: "fig6a.csv",
            config: base(0.5).with_uncertainty(model),
        }],
        Figure::Fig6b => vec![Preset {
            file: "fig6b.csv",
            config: base(0.65).with_uncertainty(model),
        }],
        Figure::Fig7 => vec![
            Preset {
                file: "fig7_lossy.csv",
                config: base(0.65).with_losses(0.75, 0.90).with_uncertainty(model),
            },
            Preset {
                file: "fig7_ideal.csv",
                config: base(0.65).with_uncertainty(model),
            },
        ],
    }
}

fn figure_name(figure: Figure) -> &'static str {
    match figure {
        Figure::Fig5 => "fig5",
        Figure::Fig6a => "fig6a",
        Figure::Fig6b => "fig6b",
        Figure::Fig7 => "fig7",
    }
}

/// Sweeps for one preset file: Φ1 rows followed by Φ2 rows.
pub fn reproduce_sweeps(config: &ExperimentConfig) -> crate::Result<Vec<SweepResult>> {
    let grid = GridSpec::default();
    [Variant::Phi1, Variant::Phi2]
        .into_iter()
        .map(|v| sweep_eta(&config.with_variant(v), &grid))
        .collect()
}

fn cmd_reproduce(args: ReproduceArgs) -> CliResult<String> {
    fs::create_dir_all(&args.output)
        .map_err(|e| runtime(format!("cannot create {}: {e}", args.output.display())))?;
    let mut report = String::new();
    for preset in presets(args.figure) {
        let sweeps = reproduce_sweeps(&preset.config).map_err(numerical)?;
        let path = args.output.join(preset.file);
        let manifest =
            RunManifest::new("reproduce", Some(figure_name(args.figure)), &sweeps, &path);
        write_outputs(&path, &manifest, &render_csv(&sweeps))?;
        let _ = writeln!(report, "wrote {}", path.display());
    }
    Ok(report)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Point(s) => cmd_point(s),
        Command::Sweep(s) => cmd_sweep(s),
        Command::Threshold(s) => cmd_threshold(s),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Flat key/value echo of a configuration, in config-file syntax.
pub fn config_echo(cfg: &ExperimentConfig) -> BTreeMap<&'static str, String> {
    let mut m = BTreeMap::new();
    m.insert("r", cfg.r.to_string());
    m.insert("eta", cfg.eta.to_string());
    m.insert("t0", cfg.t0.to_string());
    m.insert("tm", cfg.tm.to_string());
    m.insert("variant", cfg.variant.to_string());
    match &cfg.uncertainty {
        Some(model) => {
            m.insert("uncertainty", "on".into());
            m.insert("sigma", model.relative_sigma.to_string());
            m.insert("floor", model.absolute_floor.to_string());
            m.insert("samples", model.samples.to_string());
            m.insert("seed", model.seed.to_string());
            m.insert("propagation", model.propagation.to_string());
        }
        None => {
            m.insert("uncertainty", "off".into());
        }
    }
    m
}
