//! Entropy exchange between the atom and the cavity mode.
//!
//! `ΔS_j(t) = S_j(t) - S_j(0)` for the atom (`j = a`) and the field
//! (`j = b`), their sum `ΔS̃`, and time averages `(1/T)∫₀ᵀ ΔS_j dt`.
//! Entropies are either von Neumann or the Tsallis-like `-Σ p ln_q p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jcm::{reduced_atom, reduced_field, AtomInit, EvolvedState, FieldPopulations, ModelParams, Propagator};
use crate::par::{self, Execution};
use crate::specfun::{q_log, Deformation, DeformationIndex, Neumaier};
use crate::superstat::{CavityModel, PhotonDistribution, TailPolicy};

/// Negative entries down to this size are rounding noise and count as zero.
const NEGATIVE_SLACK: f64 = 1e-12;
const NORMALIZATION_SLACK: f64 = 1e-10;

/// Absolute change of a time average between the half and full grid above
/// which the grid is reported as too coarse.
pub const GRID_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 2000;
/// Default averaging window in units of `1/λ`.
pub const DEFAULT_WINDOW_LAMBDA: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "q", rename_all = "snake_case")]
pub enum EntropyKind {
    VonNeumann,
    Tsallis(DeformationIndex),
}

impl EntropyKind {
    pub fn tsallis(q: f64) -> Result<Self> {
        Ok(EntropyKind::Tsallis(DeformationIndex::new(q)?))
    }

    pub fn deformation(self) -> Deformation {
        match self {
            EntropyKind::VonNeumann => Deformation::Gibbs,
            EntropyKind::Tsallis(q) => q.into(),
        }
    }

    /// Tsallis at the model's q for the gamma model, von Neumann otherwise.
    pub fn for_model(model: &CavityModel) -> Self {
        match model.deformation() {
            Deformation::Q(q) => DeformationIndex::new(q).map_or(EntropyKind::VonNeumann, EntropyKind::Tsallis),
            Deformation::Gibbs => EntropyKind::VonNeumann,
        }
    }
}

/// Which probability vector the field entropy is taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldEntropyForm {
    /// Every photon-number population.
    #[default]
    FullSpectrum,
    /// The vacuum population against the aggregated `n ≥ 1` population.
    Coarse,
}

/// `-Σ p ln p` or `-Σ p ln_q p`, with `0 ln 0 = 0`.
pub fn entropy_of(p: &[f64], kind: EntropyKind) -> Result<f64> {
    let deformation = kind.deformation();
    let mut total = Neumaier::default();
    let mut acc = Neumaier::default();
    for (i, &x) in p.iter().enumerate() {
        if x < -NEGATIVE_SLACK || !x.is_finite() {
            return Err(Error::domain("entropy_of", format!("entry {i} = {x} is not a probability")));
        }
        if x <= 0.0 {
            continue;
        }
        total.add(x);
        acc.add(-x * q_log(x, deformation)?);
    }
    if total.value() > 1.0 + NORMALIZATION_SLACK {
        return Err(Error::domain(
            "entropy_of",
            format!("probabilities sum to {} > 1", total.value()),
        ));
    }
    Ok(acc.value().max(0.0))
}

/// Entropy of the uniform two-outcome distribution, the largest value any
/// two-level state can reach.
pub fn binary_entropy_max(kind: EntropyKind) -> f64 {
    -q_log(0.5, kind.deformation()).unwrap_or(f64::NAN)
}

fn atom_entropy_from(pe: f64, pg: f64, kind: EntropyKind) -> Result<f64> {
    entropy_of(&[pe, pg], kind)
}

fn field_entropy_from(field: &FieldPopulations, kind: EntropyKind, form: FieldEntropyForm) -> Result<f64> {
    match form {
        FieldEntropyForm::FullSpectrum => entropy_of(&field.weights, kind),
        FieldEntropyForm::Coarse => {
            let mut rest: Neumaier = field.weights.iter().skip(1).copied().collect();
            rest.add(field.tail_mass);
            entropy_of(&[field.weights[0], rest.value()], kind)
        }
    }
}

pub fn atom_entropy(state: &EvolvedState, kind: EntropyKind) -> Result<f64> {
    let (pe, pg) = reduced_atom(state);
    atom_entropy_from(pe, pg, kind)
}

pub fn field_entropy(state: &EvolvedState, kind: EntropyKind, form: FieldEntropyForm) -> Result<f64> {
    field_entropy_from(&reduced_field(state), kind, form)
}

/// Atom and field entropies of the propagated state at `t`.
pub fn entropies_at(prop: &Propagator, t: f64, kind: EntropyKind, form: FieldEntropyForm) -> Result<(f64, f64)> {
    let ((pe, pg), field) = prop.reduced_at(t);
    Ok((atom_entropy_from(pe, pg, kind)?, field_entropy_from(&field, kind, form)?))
}

/// Everything but the atomic state and the time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeProblem {
    pub params: ModelParams,
    pub model: CavityModel,
    pub kind: EntropyKind,
    pub form: FieldEntropyForm,
    pub tail: TailPolicy,
}

impl ExchangeProblem {
    /// Problem with the entropy kind matched to the model.
    pub fn new(params: ModelParams, model: CavityModel) -> Self {
        let kind = EntropyKind::for_model(&model);
        ExchangeProblem {
            params,
            model,
            kind,
            form: FieldEntropyForm::default(),
            tail: TailPolicy::default(),
        }
    }

    pub fn distribution(&self) -> Result<PhotonDistribution> {
        self.model.distribution(&self.tail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub params: ModelParams,
    pub detuning: f64,
    pub epsilon: f64,
    pub model: CavityModel,
    pub kind: EntropyKind,
    pub form: FieldEntropyForm,
    pub tail: TailPolicy,
    pub n_max: usize,
    pub tail_mass: f64,
    pub tail_limited: bool,
    pub samples: usize,
    pub window: f64,
    pub grid_warning: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub times: Vec<f64>,
    pub d_sa: Vec<f64>,
    pub d_sb: Vec<f64>,
    pub d_stot: Vec<f64>,
    pub avg_dsa: f64,
    pub avg_dsb: f64,
    pub metadata: TraceMetadata,
}

/// `samples` equally spaced times covering `[0, t_end]`.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let h = t_end / (samples - 1) as f64;
            (0..samples)
                .map(|i| if i + 1 == samples { t_end } else { h * i as f64 })
                .collect()
        }
    }
}

/// Default averaging window `50/λ`, or 50 when λ = 0.
pub fn default_window(lambda: f64) -> f64 {
    if lambda == 0.0 {
        DEFAULT_WINDOW_LAMBDA
    } else {
        DEFAULT_WINDOW_LAMBDA / lambda.abs()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let Some(&first) = grid.first() else {
        return Err(Error::domain("entropy_trace", "empty time grid"));
    };
    if first != 0.0 {
        return Err(Error::domain("entropy_trace", format!("grid starts at {first}, not 0")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("entropy_trace", "grid is not strictly increasing"));
    }
    Ok(())
}

/// Samples of `(ΔS_a, ΔS_b)` on `grid` for a prepared propagator.
pub fn exchange_series(
    prop: &Propagator,
    grid: &[f64],
    kind: EntropyKind,
    form: FieldEntropyForm,
    exec: Execution,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_grid(grid)?;
    let entropies = par::try_map_indexed(grid.len(), exec, |i| entropies_at(prop, grid[i], kind, form))?;
    let (sa0, sb0) = entropies[0];
    Ok(entropies.iter().map(|(sa, sb)| (sa - sa0, sb - sb0)).unzip())
}

pub fn entropy_trace(problem: &ExchangeProblem, atom: &AtomInit, grid: &[f64]) -> Result<EntropyTrace> {
    entropy_trace_with(problem, atom, grid, Execution::default())
}

pub fn entropy_trace_with(
    problem: &ExchangeProblem,
    atom: &AtomInit,
    grid: &[f64],
    exec: Execution,
) -> Result<EntropyTrace> {
    let dist = problem.distribution()?;
    trace_for_distribution(problem, &dist, atom, grid, exec)
}

/// As [`entropy_trace_with`] but reusing an already computed distribution.
pub fn trace_for_distribution(
    problem: &ExchangeProblem,
    dist: &PhotonDistribution,
    atom: &AtomInit,
    grid: &[f64],
    exec: Execution,
) -> Result<EntropyTrace> {
    let prop = Propagator::new(&problem.params, atom, dist)?;
    let (d_sa, d_sb) = exchange_series(&prop, grid, problem.kind, problem.form, exec)?;
    let d_stot = d_sa.iter().zip(&d_sb).map(|(a, b)| a + b).collect();
    let window = *grid.last().unwrap_or(&0.0);
    let (avg_dsa, avg_dsb, grid_warning) = if grid.len() > 1 {
        let a = average_on_grid(grid, &d_sa, window)?;
        let b = average_on_grid(grid, &d_sb, window)?;
        (a.value, b.value, a.coarse_grid() || b.coarse_grid())
    } else {
        (0.0, 0.0, false)
    };
    Ok(EntropyTrace {
        times: grid.to_vec(),
        d_sa,
        d_sb,
        d_stot,
        avg_dsa,
        avg_dsb,
        metadata: TraceMetadata {
            params: problem.params,
            detuning: problem.params.detuning(),
            epsilon: atom.epsilon,
            model: problem.model.clone(),
            kind: problem.kind,
            form: problem.form,
            tail: problem.tail,
            n_max: dist.n_max(),
            tail_mass: dist.tail_mass,
            tail_limited: dist.tail_limited,
            samples: grid.len(),
            window,
            grid_warning,
        },
    })
}

/// A time average together with its half-grid comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Average {
    pub value: f64,
    /// `|average(full grid) - average(every other sample)|` over the largest
    /// common sub-window.
    pub richardson_delta: f64,
}

impl Average {
    pub fn coarse_grid(&self) -> bool {
        self.richardson_delta > GRID_TOLERANCE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAverage {
    pub avg_dsa: f64,
    pub avg_dsb: f64,
    pub grid_warning: bool,
}

/// `(1/T) ∫₀ᵀ ΔS_j dt` for both subsystems of a stored trace.
pub fn time_average(trace: &EntropyTrace, window: f64) -> Result<TimeAverage> {
    let a = average_on_grid(&trace.times, &trace.d_sa, window)?;
    let b = average_on_grid(&trace.times, &trace.d_sb, window)?;
    Ok(TimeAverage {
        avg_dsa: a.value,
        avg_dsb: b.value,
        grid_warning: a.coarse_grid() || b.coarse_grid(),
    })
}

fn is_uniform(t: &[f64]) -> bool {
    if t.len() < 3 {
        return true;
    }
    let h = t[1] - t[0];
    t.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
}

/// Composite Simpson on a uniform grid (3/8 rule on the last three panels
/// when the panel count is odd), trapezoid otherwise.
fn integrate(t: &[f64], f: &[f64]) -> f64 {
    let m = t.len().saturating_sub(1);
    if m == 0 {
        return 0.0;
    }
    if m == 1 || !is_uniform(t) {
        return t
            .windows(2)
            .zip(f.windows(2))
            .map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1]))
            .collect::<Neumaier>()
            .value();
    }
    let h = (t[m] - t[0]) / m as f64;
    let simpson_end = if m.is_multiple_of(2) { m } else { m - 3 };
    let mut acc = Neumaier::default();
    let mut i = 0;
    while i + 2 <= simpson_end {
        acc.add(h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]));
        i += 2;
    }
    if simpson_end < m {
        let j = simpson_end;
        acc.add(3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]));
    }
    acc.value()
}

/// Average of sampled `values` over `[0, window]`.
pub fn average_on_grid(times: &[f64], values: &[f64], window: f64) -> Result<Average> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::domain("time_average", "need at least two samples"));
    }
    if times[0] != 0.0 {
        return Err(Error::domain("time_average", "grid must start at t = 0"));
    }
    let last = *times.last().unwrap();
    if !(window > 0.0) || window > last * (1.0 + 1e-12) {
        return Err(Error::domain(
            "time_average",
            format!("window {window} outside (0, {last}]"),
        ));
    }
    let slack = 1e-12 * window;
    let inside = times.partition_point(|&t| t <= window + slack);
    let mut t: Vec<f64> = times[..inside].to_vec();
    let mut f: Vec<f64> = values[..inside].to_vec();
    if (t[inside - 1] - window).abs() > slack {
        let (t0, t1) = (times[inside - 1], times[inside]);
        let w = (window - t0) / (t1 - t0);
        t.push(window);
        f.push(values[inside - 1] * (1.0 - w) + values[inside] * w);
    }
    let value = integrate(&t, &f) / window;

    // Half-grid comparison over [0, t[2k]].
    let last_even = (t.len() - 1) / 2 * 2;
    let richardson_delta = if last_even >= 4 {
        let sub_t = &t[..=last_even];
        let sub_f = &f[..=last_even];
        let fine = integrate(sub_t, sub_f);
        let ct: Vec<f64> = sub_t.iter().step_by(2).copied().collect();
        let cf: Vec<f64> = sub_f.iter().step_by(2).copied().collect();
        let coarse = integrate(&ct, &cf);
        (fine - coarse).abs() / sub_t[last_even]
    } else {
        f64::INFINITY
    };
    Ok(Average { value, richardson_delta })
}

/// Initial atomic state on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub r: f64,
    pub theta: f64,
}

impl BlochPoint {
    pub fn epsilon(&self) -> f64 {
        0.5 * (1.0 + self.r * self.theta.cos())
    }

    pub fn atom(&self) -> Result<AtomInit> {
        AtomInit::from_bloch(self.r, self.theta)
    }
}

/// `nr × ntheta` points, `r` outer and `θ` inner, each spanning its closed range.
pub fn bloch_grid(nr: usize, ntheta: usize) -> Vec<BlochPoint> {
    let span = |n: usize, hi: f64| -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![hi],
            _ => (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect(),
        }
    };
    let rs = span(nr, 1.0);
    let thetas = span(ntheta, std::f64::consts::PI);
    rs.iter()
        .flat_map(|&r| thetas.iter().map(move |&theta| BlochPoint { r, theta }))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochAverage {
    pub r: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub avg_dsa: f64,
    pub avg_dsb: f64,
    pub grid_warning: bool,
}

/// Time-averaged exchange at every Bloch point, in the order given.
pub fn bloch_sweep(
    problem: &ExchangeProblem,
    points: &[BlochPoint],
    grid: &[f64],
    window: f64,
    exec: Execution,
) -> Result<Vec<BlochAverage>> {
    check_grid(grid)?;
    let dist = problem.distribution()?;
    par::try_map_indexed(points.len(), exec, |i| {
        let pt = points[i];
        let atom = pt.atom()?;
        let prop = Propagator::new(&problem.params, &atom, &dist)?;
        let (d_sa, d_sb) = exchange_series(&prop, grid, problem.kind, problem.form, Execution::Sequential)?;
        let a = average_on_grid(grid, &d_sa, window)?;
        let b = average_on_grid(grid, &d_sb, window)?;
        Ok(BlochAverage {
            r: pt.r,
            theta: pt.theta,
            epsilon: atom.epsilon,
            avg_dsa: a.value,
            avg_dsb: b.value,
            grid_warning: a.coarse_grid() || b.coarse_grid(),
        })
    })
}
