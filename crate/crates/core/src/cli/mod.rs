//! Command-line front end.
//!
//! Every subcommand reads the same flag set. A JSON config file passed with
//! `--config` supplies defaults that flags override; the metadata sidecar a
//! run writes carries the fully resolved config under `"config"`, so feeding
//! it back with `--config` reproduces the run.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::ensemble::{load_betas, BetaEnsembleSpec, BetaSamples, BetaShape};
use crate::entropy::{
    bloch_sweep, default_window, entropy_trace, uniform_grid, EntropyKind, ExchangeProblem,
    FieldEntropyForm, DEFAULT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::jcm::{AtomInit, ModelParams};
use crate::output::write_atomic;
use crate::par::Execution;
use crate::specfun::{Deformation, DeformationIndex};
use crate::superstat::{
    calibrate_beta_star, mean_photon_bose, mean_photon_q, physical_beta, CavityModel, GammaSuperstat,
    TailPolicy, DEFAULT_TAIL_TOL,
};

pub mod selfcheck;

/// Photon-number cap used by the command-line pipelines.
pub const CLI_MAX_PHOTONS: usize = 20_000;
pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_CALIBRATION_GRID: &str = "0.5:10:50";
pub const DEFAULT_BLOCH_GRID: &str = "11x11";
pub const DEFAULT_ENSEMBLE_COUNT: usize = 100;
/// Exit status of a self-check with at least one failing check.
pub const SELFCHECK_FAILED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "jcm-entropy", version, about = "Entropy exchange in the Jaynes-Cummings model with a fluctuating-temperature cavity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Physical temperature T against T* for a list of q values.
    Calibrate(RunArgs),
    /// Initial photon-number distribution of the cavity.
    Weights(RunArgs),
    /// Entropy exchange as a function of time.
    Timeseries(RunArgs),
    /// Time-averaged exchange over a Bloch-sphere grid of initial atomic states.
    BlochSweep(RunArgs),
    /// Draw and store an ensemble of inverse temperatures.
    EnsembleGen(RunArgs),
    /// Oracle-equivalence and invariant checks on a built-in parameter grid.
    Selfcheck(SelfcheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EntropyArg {
    Vn,
    Tsallis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FieldArg {
    Full,
    Coarse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleArg {
    Normal,
    Weibull,
}

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// Deformation index; a comma-separated list for `calibrate`. q = 1 is the Gibbs state.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Physical inverse temperature (1/ω units); β* is derived by calibration.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Auxiliary inverse temperature β* of the gamma model.
    #[arg(long = "beta-star")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_star: Option<f64>,
    /// Excited-state population of the initial atom.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Detuning Δ = ω₀ − ω.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Atom-field coupling λ.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Field frequency ω.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Entropy functional; Tsallis uses the model q.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyArg>,
    /// Field entropy over the full photon spectrum or vacuum versus the rest.
    #[arg(long = "field-entropy", value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_entropy: Option<FieldArg>,
    /// calibrate: T* range `lo:hi:n`; bloch-sweep: `NRxNTHETA`; timeseries: sample count.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Number of time samples on [0, T].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Averaging window and time-series length, in units of 1/ω.
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Photon-number tail mass allowed to be dropped.
    #[arg(long = "tail-tol")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    /// Hard cap on the photon-number cutoff.
    #[arg(long = "max-photons")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_photons: Option<usize>,
    /// Seed for ensemble draws.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stored β ensemble for the multi-level model.
    #[arg(long = "betas-file")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas_file: Option<PathBuf>,
    /// Draw a β ensemble of this shape for the multi-level model.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleArg>,
    /// Ensemble parameters in units of βω: `mean,sd` or `scale,k`.
    #[arg(long = "ensemble-params", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_params: Option<Vec<f64>>,
    /// Ensemble size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Output format; CSV output with --out also writes a .meta.json sidecar.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Output path; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// JSON file supplying defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args)]
pub struct SelfcheckArgs {
    /// Add 1e-6 to one analytic coefficient before the oracle comparison.
    #[arg(long, hide = true)]
    pub perturb: bool,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl RunArgs {
    /// Overlays these flags on the config file named by `--config`, if any.
    pub fn with_config_file(self) -> Result<RunArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if let Some(inner) = doc.get_mut("config") {
            doc = inner.take();
        }
        let Value::Object(mut base) = doc else {
            return Err(usage(format!("{}: config must be a JSON object", path.display())));
        };
        let Value::Object(flags) = serde_json::to_value(&self)? else {
            unreachable!("RunArgs serializes to an object")
        };
        base.extend(flags);
        let mut merged: RunArgs = serde_json::from_value(Value::Object(base)).map_err(|e| Error::Parse {
            path: path.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        merged.out = self.out;
        Ok(merged)
    }

    fn single_q(&self) -> Result<Option<f64>> {
        match self.q.as_deref() {
            None => Ok(None),
            Some([q]) => Ok(Some(*q)),
            Some(list) => Err(usage(format!("expected a single --q, got {} values", list.len()))),
        }
    }

    fn omega(&self) -> f64 {
        self.omega.unwrap_or(1.0)
    }

    fn tail_policy(&self) -> Result<TailPolicy> {
        TailPolicy::new(
            self.tail_tol.unwrap_or(DEFAULT_TAIL_TOL),
            self.max_photons.unwrap_or(CLI_MAX_PHOTONS),
        )
    }

    fn params(&self) -> Result<ModelParams> {
        ModelParams::with_detuning(self.delta.unwrap_or(0.0), self.omega(), self.lambda.unwrap_or(DEFAULT_LAMBDA))
    }

    fn window(&self) -> f64 {
        self.t_end.unwrap_or_else(|| default_window(self.lambda.unwrap_or(DEFAULT_LAMBDA)))
    }

    fn ensemble_spec(&self, shape: EnsembleArg) -> Result<BetaEnsembleSpec> {
        let shape = match (shape, self.ensemble_params.as_deref()) {
            (EnsembleArg::Normal, None) => BetaShape::default_normal(),
            (EnsembleArg::Weibull, None) => BetaShape::default_weibull(),
            (EnsembleArg::Normal, Some(&[mean, sd])) => BetaShape::Normal { mean, sd },
            (EnsembleArg::Weibull, Some(&[scale, k])) => BetaShape::Weibull { scale, k },
            (_, Some(p)) => return Err(usage(format!("--ensemble-params takes two values, got {}", p.len()))),
        };
        BetaEnsembleSpec::new(
            shape,
            self.count.unwrap_or(DEFAULT_ENSEMBLE_COUNT),
            self.seed.unwrap_or(0),
            self.omega(),
        )
    }
}

/// The cavity model selected by the flags, with quantities derived on the way.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelChoice {
    pub model: CavityModel,
    pub derived: Map<String, Value>,
}

pub fn resolve_model(args: &RunArgs) -> Result<ModelChoice> {
    let omega = args.omega();
    let multilevel = args.betas_file.is_some() || args.ensemble.is_some();
    let q = args.single_q()?;
    let mut derived = Map::new();
    if multilevel {
        if args.betas_file.is_some() && args.ensemble.is_some() {
            return Err(usage("--betas-file and --ensemble are mutually exclusive"));
        }
        if q.is_some() || args.beta.is_some() || args.beta_star.is_some() {
            return Err(usage("a multi-level ensemble excludes --q, --beta and --beta-star"));
        }
        let samples = match (&args.betas_file, args.ensemble) {
            (Some(path), _) => load_betas(path)?,
            (None, Some(shape)) => BetaSamples::generate(args.ensemble_spec(shape)?)?,
            (None, None) => unreachable!(),
        };
        let mut superstat = samples.superstat()?;
        superstat.omega = omega;
        derived.insert("ensemble".into(), serde_json::to_value(samples.spec)?);
        derived.insert("betas".into(), json!(samples.betas));
        return Ok(ModelChoice {
            model: CavityModel::Multilevel(superstat),
            derived,
        });
    }
    match q {
        Some(q) if q != 1.0 => {
            let index = DeformationIndex::new(q)?;
            let beta_star = match (args.beta, args.beta_star) {
                (Some(_), Some(_)) => return Err(usage("give exactly one of --beta and --beta-star")),
                (None, None) => return Err(usage("the gamma model needs --beta or --beta-star")),
                (None, Some(bs)) => bs,
                (Some(b), None) => calibrate_beta_star(index.into(), b, omega)?,
            };
            let g = GammaSuperstat::new(index.into(), beta_star, omega)?;
            derived.insert("beta_star".into(), json!(beta_star));
            derived.insert("beta".into(), json!(physical_beta(&g)?));
            derived.insert("mean_photon_q".into(), json!(mean_photon_q(&g)?));
            Ok(ModelChoice {
                model: CavityModel::Gamma(g),
                derived,
            })
        }
        _ => {
            let beta = match (args.beta, args.beta_star) {
                (Some(b), None) | (None, Some(b)) => b,
                (Some(b), Some(bs)) if b == bs => b,
                (Some(_), Some(_)) => return Err(usage("at q = 1, --beta and --beta-star must agree")),
                (None, None) => return Err(usage("the Gibbs model needs --beta")),
            };
            crate::error::check_positive("beta", beta)?;
            derived.insert("beta".into(), json!(beta));
            derived.insert("mean_photon".into(), json!(mean_photon_bose(beta, omega)));
            Ok(ModelChoice {
                model: CavityModel::Gibbs { beta, omega },
                derived,
            })
        }
    }
}

fn entropy_kind(args: &RunArgs, model: &CavityModel) -> Result<EntropyKind> {
    match args.entropy {
        None => Ok(EntropyKind::for_model(model)),
        Some(EntropyArg::Vn) => Ok(EntropyKind::VonNeumann),
        Some(EntropyArg::Tsallis) => match model.deformation() {
            Deformation::Q(q) => EntropyKind::tsallis(q),
            Deformation::Gibbs => Err(usage("--entropy tsallis needs the gamma model (--q in (1, 2))")),
        },
    }
}

fn problem(args: &RunArgs, choice: &ModelChoice) -> Result<ExchangeProblem> {
    Ok(ExchangeProblem {
        params: args.params()?,
        model: choice.model.clone(),
        kind: entropy_kind(args, &choice.model)?,
        form: match args.field_entropy.unwrap_or(FieldArg::Full) {
            FieldArg::Full => FieldEntropyForm::FullSpectrum,
            FieldArg::Coarse => FieldEntropyForm::Coarse,
        },
        tail: args.tail_policy()?,
    })
}

/// `lo:hi:n` into `n` evenly spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("malformed grid `{s}`, expected lo:hi:n"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !lo.is_finite() || !hi.is_finite() || (n > 1 && !(hi > lo)) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect())
}

/// `NRxNTHETA`, or a single `N` for a square grid.
pub fn parse_bloch_grid(s: &str) -> Result<(usize, usize)> {
    let bad = || usage(format!("malformed Bloch grid `{s}`, expected NRxNTHETA"));
    let mut it = s.split(['x', 'X']).map(|p| p.trim().parse::<usize>());
    let (nr, nt) = match (it.next(), it.next(), it.next()) {
        (Some(Ok(n)), None, None) => (n, n),
        (Some(Ok(a)), Some(Ok(b)), None) => (a, b),
        _ => return Err(bad()),
    };
    if nr == 0 || nt == 0 {
        return Err(bad());
    }
    Ok((nr, nt))
}

/// Column-oriented numeric output.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (j, c) in self.columns.iter().enumerate() {
            m.insert((*c).into(), self.rows.iter().map(|r| json!(r[j])).collect());
        }
        Value::Object(m)
    }
}

/// Sidecar path for a CSV output: `trace.csv` → `trace.csv.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

struct Report {
    table: Table,
    derived: Map<String, Value>,
    metadata: Value,
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn emit(command: &str, args: &RunArgs, report: Report) -> Result<()> {
    let header = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": args,
        "derived": report.derived,
        "metadata": report.metadata,
    });
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let csv = report.table.to_csv();
            match &args.out {
                Some(out) => {
                    write_atomic(out, csv.as_bytes())?;
                    write_atomic(&sidecar_path(out), pretty(&header)?.as_bytes())?;
                }
                None => print_stdout(&csv)?,
            }
        }
        Format::Json => {
            let mut doc = header;
            doc["data"] = report.table.to_json();
            let text = pretty(&doc)?;
            match &args.out {
                Some(out) => write_atomic(out, text.as_bytes())?,
                None => print_stdout(&text)?,
            }
        }
    }
    Ok(())
}

fn print_stdout(s: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

/// Fills every unset option that the command reads with its default.
fn resolved(command: &Command, a: &RunArgs) -> RunArgs {
    let mut r = a.clone();
    r.omega.get_or_insert(1.0);
    r.format.get_or_insert(Format::Csv);
    let timed = matches!(command, Command::Timeseries(_) | Command::BlochSweep(_));
    let photons = timed || matches!(command, Command::Weights(_));
    if photons {
        r.tail_tol.get_or_insert(DEFAULT_TAIL_TOL);
        r.max_photons.get_or_insert(CLI_MAX_PHOTONS);
    }
    if timed {
        r.delta.get_or_insert(0.0);
        r.lambda.get_or_insert(DEFAULT_LAMBDA);
        let window = r.window();
        r.t_end.get_or_insert(window);
        r.field_entropy.get_or_insert(FieldArg::Full);
        if r.samples.is_none() && (r.grid.is_none() || matches!(command, Command::BlochSweep(_))) {
            r.samples = Some(DEFAULT_SAMPLES);
        }
    }
    match command {
        Command::Calibrate(_) => {
            r.q.get_or_insert_with(|| vec![1.2, 1.4, 1.6]);
            if r.beta.is_none() {
                r.grid.get_or_insert_with(|| DEFAULT_CALIBRATION_GRID.into());
            }
        }
        Command::Timeseries(_) => {
            r.epsilon.get_or_insert(0.0);
        }
        Command::BlochSweep(_) => {
            r.grid.get_or_insert_with(|| DEFAULT_BLOCH_GRID.into());
        }
        Command::EnsembleGen(_) => {
            r.ensemble.get_or_insert(EnsembleArg::Normal);
            r.count.get_or_insert(DEFAULT_ENSEMBLE_COUNT);
            r.seed.get_or_insert(0);
        }
        _ => {}
    }
    if let Some(shape) = r.ensemble {
        r.count.get_or_insert(DEFAULT_ENSEMBLE_COUNT);
        r.seed.get_or_insert(0);
        if r.ensemble_params.is_none() {
            r.ensemble_params = Some(match r.ensemble_spec(shape).map(|s| s.shape) {
                Ok(BetaShape::Normal { mean, sd }) => vec![mean, sd],
                Ok(BetaShape::Weibull { scale, k }) => vec![scale, k],
                Err(_) => vec![],
            });
        }
    }
    r
}

fn time_samples(a: &RunArgs) -> Result<usize> {
    if let Some(n) = a.samples {
        return Ok(n);
    }
    match &a.grid {
        Some(g) => g
            .trim()
            .parse()
            .map_err(|_| usage(format!("malformed sample count `{g}`"))),
        None => Ok(DEFAULT_SAMPLES),
    }
}

fn cmd_calibrate(a: &RunArgs) -> Result<Report> {
    let omega = a.omega();
    let qs = a.q.clone().unwrap_or_default();
    if qs.is_empty() {
        return Err(usage("calibrate needs at least one --q"));
    }
    let deformation = |q: f64| -> Result<Deformation> {
        if q == 1.0 {
            Ok(Deformation::Gibbs)
        } else {
            Ok(DeformationIndex::new(q)?.into())
        }
    };
    let mut rows = Vec::new();
    if let Some(beta) = a.beta {
        for &q in &qs {
            let d = deformation(q)?;
            let bs = calibrate_beta_star(d, beta, omega)?;
            let g = GammaSuperstat::new(d, bs, omega)?;
            rows.push(vec![q, beta, bs, mean_photon_q(&g)?]);
        }
        return Ok(Report {
            table: Table {
                columns: vec!["q", "beta", "beta_star", "mean_photon_q"],
                rows,
            },
            derived: Map::new(),
            metadata: json!({ "omega": omega }),
        });
    }
    let grid = parse_range(a.grid.as_deref().unwrap_or(DEFAULT_CALIBRATION_GRID))?;
    for &q in &qs {
        let d = deformation(q)?;
        for &t_star in &grid {
            crate::error::check_positive("T*", t_star)?;
            let g = GammaSuperstat::new(d, 1.0 / (t_star * omega), omega)?;
            let beta = physical_beta(&g)?;
            rows.push(vec![q, t_star, 1.0 / (beta * omega)]);
        }
    }
    Ok(Report {
        table: Table {
            columns: vec!["q", "T_star", "T"],
            rows,
        },
        derived: Map::new(),
        metadata: json!({ "omega": omega, "units": "temperatures in units of omega" }),
    })
}

fn cmd_weights(a: &RunArgs) -> Result<Report> {
    let choice = resolve_model(a)?;
    let dist = choice.model.distribution(&a.tail_policy()?)?;
    let rows = dist.weights.iter().enumerate().map(|(n, &p)| vec![n as f64, p]).collect();
    Ok(Report {
        table: Table {
            columns: vec!["n", "p_n"],
            rows,
        },
        metadata: json!({
            "model": choice.model,
            "n_max": dist.n_max(),
            "tail_mass": dist.tail_mass,
            "tail_limited": dist.tail_limited,
            "mean_photon_truncated": dist.mean(),
        }),
        derived: choice.derived,
    })
}

fn cmd_timeseries(a: &RunArgs) -> Result<Report> {
    let choice = resolve_model(a)?;
    let problem = problem(a, &choice)?;
    let atom = AtomInit::new(a.epsilon.unwrap_or(0.0))?;
    let grid = uniform_grid(a.window(), time_samples(a)?);
    let trace = entropy_trace(&problem, &atom, &grid)?;
    let rows = (0..trace.times.len())
        .map(|i| vec![trace.times[i], trace.d_sa[i], trace.d_sb[i], trace.d_stot[i]])
        .collect();
    if trace.metadata.grid_warning {
        eprintln!("warning: time grid too coarse, averages moved by more than 1e-6 between half and full grid");
    }
    let mut derived = choice.derived;
    derived.insert("avg_dSa".into(), json!(trace.avg_dsa));
    derived.insert("avg_dSb".into(), json!(trace.avg_dsb));
    Ok(Report {
        table: Table {
            columns: vec!["t", "dS_a", "dS_b", "dS_total"],
            rows,
        },
        derived,
        metadata: serde_json::to_value(&trace.metadata)?,
    })
}

fn cmd_bloch_sweep(a: &RunArgs) -> Result<Report> {
    let choice = resolve_model(a)?;
    let problem = problem(a, &choice)?;
    let (nr, nt) = parse_bloch_grid(a.grid.as_deref().unwrap_or(DEFAULT_BLOCH_GRID))?;
    let points = crate::entropy::bloch_grid(nr, nt);
    let window = a.window();
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    let grid = uniform_grid(window, samples);
    let sweep = bloch_sweep(&problem, &points, &grid, window, Execution::default())?;
    if sweep.iter().any(|p| p.grid_warning) {
        eprintln!("warning: time grid too coarse at some Bloch points");
    }
    let rows = sweep
        .iter()
        .map(|p| vec![p.r, p.theta, p.epsilon, p.avg_dsa, p.avg_dsb])
        .collect();
    let dist = problem.distribution()?;
    Ok(Report {
        table: Table {
            columns: vec!["r", "theta", "epsilon", "avg_dSa", "avg_dSb"],
            rows,
        },
        derived: choice.derived,
        metadata: json!({
            "params": problem.params,
            "model": problem.model,
            "kind": problem.kind,
            "form": problem.form,
            "tail": problem.tail,
            "n_max": dist.n_max(),
            "tail_mass": dist.tail_mass,
            "tail_limited": dist.tail_limited,
            "window": window,
            "samples": samples,
            "grid_warning": sweep.iter().any(|p| p.grid_warning),
        }),
    })
}

fn cmd_ensemble_gen(a: &RunArgs) -> Result<()> {
    let spec = a.ensemble_spec(a.ensemble.unwrap_or(EnsembleArg::Normal))?;
    let text = BetaSamples::generate(spec)?.to_text()?;
    match &a.out {
        Some(out) => write_atomic(out, text.as_bytes()),
        None => print_stdout(&text),
    }
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let (name, args) = match &cli.command {
        Command::Calibrate(a) => ("calibrate", a),
        Command::Weights(a) => ("weights", a),
        Command::Timeseries(a) => ("timeseries", a),
        Command::BlochSweep(a) => ("bloch-sweep", a),
        Command::EnsembleGen(a) => ("ensemble-gen", a),
        Command::Selfcheck(s) => {
            let report = selfcheck::run(s.perturb);
            print_stdout(&report.render())?;
            return Ok(if report.passed() { 0 } else { SELFCHECK_FAILED });
        }
    };
    let args = resolved(&cli.command, &args.clone().with_config_file()?);
    let report = match cli.command {
        Command::Calibrate(_) => cmd_calibrate(&args)?,
        Command::Weights(_) => cmd_weights(&args)?,
        Command::Timeseries(_) => cmd_timeseries(&args)?,
        Command::BlochSweep(_) => cmd_bloch_sweep(&args)?,
        Command::EnsembleGen(_) => {
            cmd_ensemble_gen(&args)?;
            return Ok(0);
        }
        Command::Selfcheck(_) => unreachable!(),
    };
    emit(name, &args, report)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("0.5:10:50").unwrap().len(), 50);
        assert_eq!(*parse_range("0.5:10:50").unwrap().last().unwrap(), 10.0);
        for bad in ["1:2", "a:b:c", "2:1:5", "1:2:0", ""] {
            assert!(matches!(parse_range(bad), Err(Error::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn bloch_grids() {
        assert_eq!(parse_bloch_grid("3x5").unwrap(), (3, 5));
        assert_eq!(parse_bloch_grid("4").unwrap(), (4, 4));
        assert!(parse_bloch_grid("0x3").is_err());
        assert!(parse_bloch_grid("3x").is_err());
    }

    #[test]
    fn model_selection_rules() {
        let gibbs = RunArgs {
            beta: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(resolve_model(&gibbs).unwrap().model, CavityModel::Gibbs { .. }));
        let both = RunArgs {
            q: Some(vec![1.5]),
            beta: Some(2.0),
            beta_star: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(resolve_model(&both), Err(Error::Usage(_))));
        let none = RunArgs {
            q: Some(vec![1.5]),
            ..Default::default()
        };
        assert!(matches!(resolve_model(&none), Err(Error::Usage(_))));
        let mixed = RunArgs {
            q: Some(vec![1.5]),
            beta: Some(2.0),
            ensemble: Some(EnsembleArg::Normal),
            ..Default::default()
        };
        assert!(matches!(resolve_model(&mixed), Err(Error::Usage(_))));
        let gamma = RunArgs {
            q: Some(vec![1.4]),
            beta: Some(11f64.ln()),
            ..Default::default()
        };
        let c = resolve_model(&gamma).unwrap();
        let bs = c.derived["beta_star"].as_f64().unwrap();
        assert!((bs - 3.335_691_574).abs() < 1e-8);
        assert!((c.derived["beta"].as_f64().unwrap() - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn tsallis_needs_gamma() {
        let a = RunArgs {
            beta: Some(2.0),
            entropy: Some(EntropyArg::Tsallis),
            ..Default::default()
        };
        let choice = resolve_model(&a).unwrap();
        assert!(matches!(problem(&a, &choice), Err(Error::Usage(_))));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(&p, r#"{"config": {"beta": 1.0, "lambda": 3.0, "T": 7.0}}"#).unwrap();
        let a = RunArgs {
            beta: Some(2.0),
            config: Some(p),
            ..Default::default()
        }
        .with_config_file()
        .unwrap();
        assert_eq!(a.beta, Some(2.0));
        assert_eq!(a.lambda, Some(3.0));
        assert_eq!(a.t_end, Some(7.0));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.json");
        std::fs::write(&p, r#"{"betta": 1.0}"#).unwrap();
        let a = RunArgs {
            config: Some(p),
            ..Default::default()
        };
        assert!(matches!(a.with_config_file(), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            columns: vec!["a", "b"],
            rows: vec![vec![0.1, 2.0], vec![1e-20, -3.5]],
        };
        assert_eq!(t.to_csv(), "a,b\n0.1,2.0\n1e-20,-3.5\n");
        assert_eq!(sidecar_path(Path::new("x/t.csv")), PathBuf::from("x/t.csv.meta.json"));
    }
}
