//! Deformed exponential algebra and the Hurwitz zeta family.
//!
//! The Hurwitz zeta function is evaluated through its *scaled* form
//! `x^s ζ(s, x) = Σ_k (1 + k/x)^{-s}`, which stays representable when both
//! `s` and `x` are large. That regime is exactly what the near-Gibbs limit of
//! the q-deformed photon weights produces (`s = 1/(q-1)`, `x = s/(β*ω)`).
//!
//! The sum is split into a head block and a tail. The tail is closed either
//! with a rigorous integral bound (when it is already negligible) or with the
//! Euler-Maclaurin expansion carried to as many Bernoulli corrections as the
//! target precision needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-extensive index restricted to the open interval `(1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct DeformationIndex(f64);

impl DeformationIndex {
    pub fn new(q: f64) -> Result<Self> {
        if q > 1.0 && q < 2.0 {
            Ok(DeformationIndex(q))
        } else {
            Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "must satisfy 1 < q < 2",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1/(q-1)`, the exponent of the q-deformed photon weights.
    #[inline]
    pub fn weight_exponent(self) -> f64 {
        1.0 / (self.0 - 1.0)
    }

    /// `q/(q-1)`, the exponent of the escort (q-powered) weights.
    #[inline]
    pub fn escort_exponent(self) -> f64 {
        self.0 / (self.0 - 1.0)
    }
}

impl TryFrom<f64> for DeformationIndex {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        DeformationIndex::new(q)
    }
}

impl From<DeformationIndex> for f64 {
    fn from(q: DeformationIndex) -> f64 {
        q.0
    }
}

/// Selects either ordinary Boltzmann-Gibbs algebra or a q-deformed one.
///
/// `Q(q)` accepts any real `q`; the pipelines that need `1 < q < 2` carry a
/// [`DeformationIndex`] instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deformation {
    Gibbs,
    Q(f64),
}

impl Deformation {
    pub fn q(self) -> f64 {
        match self {
            Deformation::Gibbs => 1.0,
            Deformation::Q(q) => q,
        }
    }
}

impl From<DeformationIndex> for Deformation {
    fn from(q: DeformationIndex) -> Self {
        Deformation::Q(q.0)
    }
}

/// q-exponential `[1 + (1-q)x]^{1/(1-q)}`, zero outside its support.
pub fn q_exp(x: f64, q: impl Into<Deformation>) -> f64 {
    match q.into() {
        Deformation::Gibbs | Deformation::Q(1.0) => x.exp(),
        Deformation::Q(q) => {
            let one_minus_q = 1.0 - q;
            let arg = one_minus_q * x;
            if 1.0 + arg <= 0.0 {
                return 0.0;
            }
            (arg.ln_1p() / one_minus_q).exp()
        }
    }
}

/// q-logarithm `(x^{1-q} - 1)/(1-q)`.
pub fn q_log(x: f64, q: impl Into<Deformation>) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain("q_log", format!("argument {x} is not positive")));
    }
    Ok(match q.into() {
        Deformation::Gibbs | Deformation::Q(1.0) => x.ln(),
        Deformation::Q(q) => {
            let one_minus_q = 1.0 - q;
            (one_minus_q * x.ln()).exp_m1() / one_minus_q
        }
    })
}

/// How a head sum is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// Integral plus Bernoulli derivative corrections.
    EulerMaclaurin,
    /// Tail expressed through another Hurwitz zeta. For the zeta function
    /// itself this is the same as `EulerMaclaurin`.
    ClosedFormZeta,
    /// Direct summation until a rigorous integral bound meets the tolerance.
    PlainTruncation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesAccuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
    pub tail_method: TailMethod,
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        SeriesAccuracy {
            abs_tol: 1e-10,
            max_terms: 10_000_000,
            tail_method: TailMethod::EulerMaclaurin,
        }
    }
}

impl SeriesAccuracy {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "abs_tol",
                value: self.abs_tol,
                reason: "must be positive",
            });
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParameter {
                name: "max_terms",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// `B_{2m} / (2m)!` for m = 1..=15.
const BERNOULLI_OVER_FACTORIAL: [f64; 15] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 2730.0 / 479001600.0,
    7.0 / 6.0 / 87178291200.0,
    -3617.0 / 510.0 / 20922789888000.0,
    43867.0 / 798.0 / 6402373705728000.0,
    -174611.0 / 330.0 / 2432902008176640000.0,
    854513.0 / 138.0 / 1124000727777607680000.0,
    -236364091.0 / 2730.0 / 620448401733239439360000.0,
    8553103.0 / 6.0 / 403291461126605635584000000.0,
    -23749461029.0 / 870.0 / 304888344611713860501504000000.0,
    8615841276005.0 / 14322.0 / 265252859812191058636308480000000.0,
];

/// Euler-Maclaurin is attempted only once `x + k` exceeds this and
/// `EM_RATIO * s`, which keeps the Bernoulli series rapidly convergent.
const EM_MIN_ARGUMENT: f64 = 10.0;
const EM_RATIO: f64 = 1.6;

/// `x^s ζ(s, x) = Σ_{k≥0} (1 + k/x)^{-s}`.
pub fn hurwitz_zeta_scaled(s: f64, x: f64, acc: &SeriesAccuracy) -> Result<f64> {
    check_zeta_args("hurwitz_zeta", s, x)?;
    acc.validate()?;
    // The tolerance is stated for the unscaled value.
    let mut tol = acc.abs_tol * (s * x.ln()).exp();
    if !tol.is_finite() {
        tol = acc.abs_tol;
    }
    scaled_sum(s, x, tol, acc)
}

/// Hurwitz zeta function `ζ(s, x) = Σ_{k≥0} (k + x)^{-s}` for `s > 1`, `x > 0`.
pub fn hurwitz_zeta(s: f64, x: f64, acc: &SeriesAccuracy) -> Result<f64> {
    let scaled = hurwitz_zeta_scaled(s, x, acc)?;
    Ok(scaled * (-s * x.ln()).exp())
}

/// Hurwitz-Lerch transcendent `Φ(z, s, r)` on the unit circle point `z = 1`,
/// where it coincides with `ζ(s, r)`.
pub fn lerch_phi_unit(s: f64, r: f64, acc: &SeriesAccuracy) -> Result<f64> {
    hurwitz_zeta(s, r, acc)
}

fn check_zeta_args(op: &'static str, s: f64, x: f64) -> Result<()> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::domain(op, format!("s = {s} must exceed 1")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(op, format!("x = {x} must be positive")));
    }
    Ok(())
}

fn scaled_sum(s: f64, x: f64, tol: f64, acc: &SeriesAccuracy) -> Result<f64> {
    let term = |k: f64| (-s * (k / x).ln_1p()).exp();
    let use_em = acc.tail_method != TailMethod::PlainTruncation;

    let mut head = Neumaier::default();
    let mut last_bound = f64::INFINITY;
    for k in 0..acc.max_terms {
        let kf = k as f64;
        let fk = term(kf);
        let arg = x + kf;
        // Σ_{j≥k} f(j) ≤ f(k) + ∫_k^∞ f, since f is decreasing.
        let integral = arg / (s - 1.0) * fk;
        let bound = fk + integral;
        let goal = 0.25 * f64::EPSILON * (head.value() + integral);
        if bound <= goal || (!use_em && bound <= tol) {
            return Ok(head.value());
        }
        last_bound = bound;

        if use_em && arg >= EM_MIN_ARGUMENT && arg >= EM_RATIO * s {
            if let Some(tail) = euler_maclaurin_tail(s, arg, fk, integral, goal) {
                return Ok(head.value() + tail);
            }
        }
        head.add(fk);
    }
    if last_bound <= tol {
        return Ok(head.value());
    }
    Err(Error::AccuracyNotReached {
        op: "hurwitz_zeta",
        requested: tol,
        achieved: last_bound,
        terms: acc.max_terms,
    })
}

/// Σ_{j≥k} f(j) for f(u) = (1+u/x)^{-s}, given f(k), the integral from k,
/// and `arg = x + k`. Returns `None` if the corrections do not settle below
/// `goal` with the available Bernoulli numbers.
fn euler_maclaurin_tail(s: f64, arg: f64, fk: f64, integral: f64, goal: f64) -> Option<f64> {
    let mut tail = integral + 0.5 * fk;
    // poch(s, 2m-1) / arg^{2m-1}
    let mut deriv = s / arg;
    for (m, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let correction = coeff * deriv * fk;
        tail += correction;
        if correction.abs() <= goal {
            return Some(tail);
        }
        let j = 2.0 * (m as f64 + 1.0);
        deriv *= (s + j - 1.0) * (s + j) / (arg * arg);
    }
    None
}

/// Compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<Neumaier>().value()
}
