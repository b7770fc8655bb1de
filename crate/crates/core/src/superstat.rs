//! Superstatistical initial states of the cavity mode.
//!
//! Two fluctuation models are supported. The gamma (chi-square) model yields
//! q-exponential photon weights `p_n ∝ [1 + (q-1) n β* ω]^{-1/(q-1)}`; the
//! multi-level model averages ordinary Boltzmann factors over a finite list
//! of inverse temperatures. Both produce a [`PhotonDistribution`] with an
//! explicitly accounted tail.
//!
//! All q-deformed closed forms are written in terms of the scaled Hurwitz
//! zeta `Z_s = r^s ζ(s, r) = Σ_n (1 + n/r)^{-s}` with `r = 1/((q-1)β*ω)`:
//!
//! * partition function `𝒵 = Z_{1/(q-1)}`
//! * `Σ_n w_n^q = Z_{q/(q-1)}`
//! * `Σ_n n w_n^q = r (Z_{1/(q-1)} - Z_{q/(q-1)})`
//!
//! where `w_n` are the unnormalized weights. Energies use `E_n = nω`.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::roots;
use crate::specfun::{hurwitz_zeta_scaled, q_log, Deformation, DeformationIndex, SeriesAccuracy};

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_PHOTONS: usize = 10_000_000;

/// Scan interval for the calibration root search, in units of `1/ω`.
const CALIBRATION_RANGE: (f64, f64) = (1e-3, 1e3);
const CALIBRATION_SCAN_POINTS: usize = 43;

/// Truncation rule for photon-number weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    /// Largest acceptable probability beyond the last stored weight.
    pub tol: f64,
    /// Hard cap on the highest stored photon number.
    pub max_photons: usize,
}

impl Default for TailPolicy {
    fn default() -> Self {
        TailPolicy {
            tol: DEFAULT_TAIL_TOL,
            max_photons: DEFAULT_MAX_PHOTONS,
        }
    }
}

impl TailPolicy {
    pub fn new(tol: f64, max_photons: usize) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidParameter {
                name: "tail_tol",
                value: tol,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(TailPolicy { tol, max_photons })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSource {
    Gamma,
    Multilevel,
    Gibbs,
}

/// Diagonal cavity state `Σ p_n |n⟩⟨n|`, stored up to `n_max` with the exact
/// remaining mass kept in `tail_mass`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    pub weights: Vec<f64>,
    pub tail_mass: f64,
    pub source: DistributionSource,
    /// Set when the tail could not be brought under the requested tolerance
    /// before hitting the photon-number cap.
    pub tail_limited: bool,
}

impl PhotonDistribution {
    pub fn n_max(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    /// Weight of photon number `n`, zero beyond the stored range.
    #[inline]
    pub fn get(&self, n: usize) -> f64 {
        self.weights.get(n).copied().unwrap_or(0.0)
    }

    /// Keeps the first `len` weights and folds the rest into the tail.
    pub fn truncated(&self, len: usize) -> PhotonDistribution {
        if len >= self.weights.len() {
            return self.clone();
        }
        let dropped: f64 = crate::specfun::kahan_sum(&self.weights[len..]);
        PhotonDistribution {
            weights: self.weights[..len].to_vec(),
            tail_mass: self.tail_mass + dropped,
            source: self.source,
            tail_limited: self.tail_limited,
        }
    }

    /// `Σ n p_n` over the stored weights.
    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .collect::<crate::specfun::Neumaier>()
            .value()
    }
}

/// Gamma-distributed inverse temperature, in its Tsallis parametrization.
///
/// The gamma shape and scale are tied to `q` and the mean inverse
/// temperature by `c = 1/(q-1)` and `b c = β`; see [`GammaSuperstat::gamma_shape`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSuperstat {
    pub deformation: Deformation,
    pub beta_star: f64,
    pub omega: f64,
}

impl GammaSuperstat {
    pub fn new(deformation: Deformation, beta_star: f64, omega: f64) -> Result<Self> {
        if let Deformation::Q(q) = deformation {
            DeformationIndex::new(q)?;
        }
        check_positive("beta_star", beta_star)?;
        check_positive("omega", omega)?;
        Ok(GammaSuperstat {
            deformation,
            beta_star,
            omega,
        })
    }

    pub fn with_q(q: f64, beta_star: f64, omega: f64) -> Result<Self> {
        Self::new(Deformation::Q(DeformationIndex::new(q)?.get()), beta_star, omega)
    }

    pub fn gibbs(beta: f64, omega: f64) -> Result<Self> {
        Self::new(Deformation::Gibbs, beta, omega)
    }

    fn index(&self) -> Option<DeformationIndex> {
        match self.deformation {
            Deformation::Gibbs => None,
            Deformation::Q(q) => DeformationIndex::new(q).ok(),
        }
    }

    /// Shape parameter `c = 1/(q-1)` of the underlying gamma distribution.
    pub fn gamma_shape(&self) -> Option<f64> {
        self.index().map(DeformationIndex::weight_exponent)
    }

    /// Scale parameter `b = β (q-1)` for a given mean inverse temperature.
    pub fn gamma_scale(&self, beta: f64) -> Option<f64> {
        self.gamma_shape().map(|c| beta / c)
    }

    /// `r = 1/((q-1) β* ω)`.
    fn offset(&self, q: DeformationIndex) -> f64 {
        1.0 / ((q.get() - 1.0) * self.beta_star * self.omega)
    }
}

/// Equal-weight mixture of Boltzmann factors at the listed inverse temperatures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiLevelSuperstat {
    pub betas: Vec<f64>,
    pub omega: f64,
}

impl MultiLevelSuperstat {
    pub fn new(betas: Vec<f64>, omega: f64) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "betas",
                value: 0.0,
                reason: "at least one inverse temperature is required",
            });
        }
        for &b in &betas {
            check_positive("beta_k", b)?;
        }
        check_positive("omega", omega)?;
        Ok(MultiLevelSuperstat { betas, omega })
    }

    /// Super-partition function `Z_N = Σ_k 1/(1 - e^{-β_k ω}) = N + Σ_k n̄(ω, β_k)`.
    pub fn partition(&self) -> f64 {
        self.betas
            .iter()
            .map(|b| 1.0 / -(-b * self.omega).exp_m1())
            .collect::<crate::specfun::Neumaier>()
            .value()
    }
}

/// Smallest `n` in `[0, cap]` with `tail(n) <= tol`, assuming `tail` decreases.
/// Returns `(n, tail(n), limited)`.
fn adaptive_cutoff<F>(mut tail: F, tol: f64, cap: usize) -> Result<(usize, f64, bool)>
where
    F: FnMut(usize) -> Result<f64>,
{
    let t0 = tail(0)?;
    if t0 <= tol {
        return Ok((0, t0, false));
    }
    let mut lo = 0usize;
    let mut hi = 1usize;
    let mut t_hi;
    loop {
        if hi >= cap {
            let t_cap = tail(cap)?;
            if t_cap > tol {
                return Ok((cap, t_cap, true));
            }
            hi = cap;
            t_hi = t_cap;
            break;
        }
        t_hi = tail(hi)?;
        if t_hi <= tol {
            break;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let t_mid = tail(mid)?;
        if t_mid <= tol {
            hi = mid;
            t_hi = t_mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi, t_hi, false))
}

fn zeta_acc() -> SeriesAccuracy {
    SeriesAccuracy::default()
}

/// Geometric weights `(1 - e^{-βω}) e^{-nβω}`.
pub fn photon_weights_gibbs(beta: f64, omega: f64, policy: &TailPolicy) -> Result<PhotonDistribution> {
    check_positive("beta", beta)?;
    check_positive("omega", omega)?;
    let x = beta * omega;
    let norm = -(-x).exp_m1();
    let (n_max, tail, limited) =
        adaptive_cutoff(|n| Ok((-(n as f64 + 1.0) * x).exp()), policy.tol, policy.max_photons)?;
    let weights = (0..=n_max).map(|n| norm * (-(n as f64) * x).exp()).collect();
    Ok(PhotonDistribution {
        weights,
        tail_mass: tail,
        source: DistributionSource::Gibbs,
        tail_limited: limited,
    })
}

/// q-exponential photon weights of the gamma superstatistics.
///
/// The tail beyond `n_max` is evaluated in closed form as a ratio of Hurwitz
/// zetas, so `Σ weights + tail_mass = 1` holds even when the cap is hit.
pub fn photon_weights_gamma(s: &GammaSuperstat, policy: &TailPolicy) -> Result<PhotonDistribution> {
    let Some(q) = s.index() else {
        return photon_weights_gibbs(s.beta_star, s.omega, policy);
    };
    let exponent = q.weight_exponent();
    let r = s.offset(q);
    let a = 1.0 / r;
    let acc = zeta_acc();
    let partition = hurwitz_zeta_scaled(exponent, r, &acc)?;
    let unnormalized = |n: f64| (-exponent * (a * n).ln_1p()).exp();

    let tail_at = |n: usize| -> Result<f64> {
        let next = n as f64 + 1.0;
        let rest = hurwitz_zeta_scaled(exponent, r + next, &acc)?;
        Ok(unnormalized(next) * rest / partition)
    };
    let (n_max, tail, limited) = adaptive_cutoff(tail_at, policy.tol, policy.max_photons)?;
    let weights = (0..=n_max)
        .map(|n| unnormalized(n as f64) / partition)
        .collect();
    Ok(PhotonDistribution {
        weights,
        tail_mass: tail,
        source: DistributionSource::Gamma,
        tail_limited: limited,
    })
}

/// `p_n = (1/Z_N) Σ_k e^{-n β_k ω}` with a geometric closed-form tail.
pub fn photon_weights_multilevel(s: &MultiLevelSuperstat, policy: &TailPolicy) -> Result<PhotonDistribution> {
    let z = s.partition();
    let rates: Vec<f64> = s.betas.iter().map(|b| b * s.omega).collect();
    let tail_at = |n: usize| -> Result<f64> {
        let next = n as f64 + 1.0;
        let t: crate::specfun::Neumaier = rates
            .iter()
            .map(|x| (-next * x).exp() / -(-x).exp_m1())
            .collect();
        Ok(t.value() / z)
    };
    let (n_max, tail, limited) = adaptive_cutoff(tail_at, policy.tol, policy.max_photons)?;
    let weights = (0..=n_max)
        .map(|n| {
            let nf = n as f64;
            rates
                .iter()
                .map(|x| (-nf * x).exp())
                .collect::<crate::specfun::Neumaier>()
                .value()
                / z
        })
        .collect();
    Ok(PhotonDistribution {
        weights,
        tail_mass: tail,
        source: DistributionSource::Multilevel,
        tail_limited: limited,
    })
}

/// Scaled zeta sums shared by the q-deformed closed forms.
struct EscortSums {
    q: f64,
    r: f64,
    /// `Σ w_n`, the partition function.
    z1: f64,
    /// `Σ w_n^q`.
    z2: f64,
}

impl EscortSums {
    fn new(s: &GammaSuperstat, q: DeformationIndex) -> Result<Self> {
        let r = s.offset(q);
        let acc = zeta_acc();
        Ok(EscortSums {
            q: q.get(),
            r,
            z1: hurwitz_zeta_scaled(q.weight_exponent(), r, &acc)?,
            z2: hurwitz_zeta_scaled(q.escort_exponent(), r, &acc)?,
        })
    }

    /// `Σ n w_n^q`.
    fn first_moment(&self) -> f64 {
        self.r * (self.z1 - self.z2)
    }

    /// `Tr ϱ^q` of the normalized auxiliary state.
    fn trace(&self) -> f64 {
        self.z2 / self.z1.powf(self.q)
    }

    /// `Tr[ϱ^q n]`.
    fn number(&self) -> f64 {
        self.first_moment() / self.z1.powf(self.q)
    }
}

/// Partition function `𝒵 = Tr exp_q(-β* H)` of the auxiliary state.
pub fn q_partition(s: &GammaSuperstat) -> Result<f64> {
    match s.index() {
        None => Ok(1.0 / -(-s.beta_star * s.omega).exp_m1()),
        Some(q) => Ok(EscortSums::new(s, q)?.z1),
    }
}

/// `Tr[ϱ^q]` for the normalized auxiliary density operator.
pub fn q_trace(s: &GammaSuperstat) -> Result<f64> {
    match s.index() {
        None => Ok(1.0),
        Some(q) => Ok(EscortSums::new(s, q)?.trace()),
    }
}

/// `𝒰 = Tr[ϱ^q H] = -∂_{β*} ln_q 𝒵`.
pub fn q_internal_energy(s: &GammaSuperstat) -> Result<f64> {
    match s.index() {
        None => Ok(s.omega * mean_photon_bose(s.beta_star, s.omega)),
        Some(q) => Ok(s.omega * EscortSums::new(s, q)?.number()),
    }
}

/// `ln_q 𝒵`, whose negative β*-derivative is [`q_internal_energy`].
pub fn q_log_partition(s: &GammaSuperstat) -> Result<f64> {
    q_log(q_partition(s)?, s.deformation)
}

/// Physical inverse temperature
/// `β = β* Tr[ϱ^q] / (1 - (1-q) β* 𝒰 / Tr[ϱ^q])`.
pub fn physical_beta(s: &GammaSuperstat) -> Result<f64> {
    let Some(q) = s.index() else {
        return Ok(s.beta_star);
    };
    let sums = EscortSums::new(s, q)?;
    let trace = sums.trace();
    let energy = s.omega * sums.number();
    let denominator = 1.0 - (1.0 - q.get()) * s.beta_star * energy / trace;
    if !(denominator > 0.0) {
        return Err(Error::UndefinedTemperature {
            beta_star: s.beta_star,
            denominator,
        });
    }
    Ok(s.beta_star * trace / denominator)
}

/// Inverts [`physical_beta`]: the β* whose physical inverse temperature is
/// `beta_target`.
pub fn calibrate_beta_star(deformation: Deformation, beta_target: f64, omega: f64) -> Result<f64> {
    check_positive("beta", beta_target)?;
    check_positive("omega", omega)?;
    if let Deformation::Q(q) = deformation {
        DeformationIndex::new(q)?;
    } else {
        return Ok(beta_target);
    }
    let mut residual = |beta_star: f64| -> Result<f64> {
        let s = GammaSuperstat::new(deformation, beta_star, omega)?;
        Ok(physical_beta(&s)? / beta_target - 1.0)
    };
    let (lo, hi) = (CALIBRATION_RANGE.0 / omega, CALIBRATION_RANGE.1 / omega);
    let Some((a, b)) = roots::scan_log_bracket(&mut residual, lo, hi, CALIBRATION_SCAN_POINTS)? else {
        let lo_beta = physical_beta(&GammaSuperstat::new(deformation, lo, omega)?)?;
        let hi_beta = physical_beta(&GammaSuperstat::new(deformation, hi, omega)?)?;
        return Err(Error::NoBracket {
            target: beta_target,
            lo: lo_beta,
            hi: hi_beta,
        });
    };
    roots::illinois(&mut residual, a, b, 1e-14)
}

/// q-average photon number
/// `n̄_q = [Φ(1, 1/(q-1), r) - r Φ(1, q/(q-1), r)] / ζ(q/(q-1), r)`.
pub fn mean_photon_q(s: &GammaSuperstat) -> Result<f64> {
    match s.index() {
        None => Ok(mean_photon_bose(s.beta_star, s.omega)),
        Some(q) => {
            let sums = EscortSums::new(s, q)?;
            Ok(sums.first_moment() / sums.z2)
        }
    }
}

/// Bose-Einstein occupation `1/(e^{βω} - 1)`.
pub fn mean_photon_bose(beta: f64, omega: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// The cavity's initial-state model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CavityModel {
    Gibbs { beta: f64, omega: f64 },
    Gamma(GammaSuperstat),
    Multilevel(MultiLevelSuperstat),
}

impl CavityModel {
    pub fn distribution(&self, policy: &TailPolicy) -> Result<PhotonDistribution> {
        match self {
            CavityModel::Gibbs { beta, omega } => photon_weights_gibbs(*beta, *omega, policy),
            CavityModel::Gamma(g) => photon_weights_gamma(g, policy),
            CavityModel::Multilevel(m) => photon_weights_multilevel(m, policy),
        }
    }

    /// Deformation carried by the initial state (Gibbs unless gamma with q ≠ 1).
    pub fn deformation(&self) -> Deformation {
        match self {
            CavityModel::Gamma(g) => g.deformation,
            _ => Deformation::Gibbs,
        }
    }

    pub fn omega(&self) -> f64 {
        match self {
            CavityModel::Gibbs { omega, .. } => *omega,
            CavityModel::Gamma(g) => g.omega,
            CavityModel::Multilevel(m) => m.omega,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::kahan_sum;
    use std::f64::consts::PI;

    fn tight() -> TailPolicy {
        TailPolicy::new(1e-13, 1_000_000).unwrap()
    }

    fn total(d: &PhotonDistribution) -> f64 {
        kahan_sum(&d.weights) + d.tail_mass
    }

    #[test]
    fn gibbs_limit_of_gamma_weights() {
        let gibbs = GammaSuperstat::gibbs(2.0, 1.0).unwrap();
        let d = photon_weights_gamma(&gibbs, &tight()).unwrap();
        for (n, p) in d.weights.iter().enumerate() {
            let expected = (1.0 - (-2.0f64).exp()) * (-2.0 * n as f64).exp();
            assert!((p - expected).abs() < 1e-15);
        }
        let near = GammaSuperstat::with_q(1.0 + 1e-9, 2.0, 1.0).unwrap();
        let dq = photon_weights_gamma(&near, &tight()).unwrap();
        for n in 0..10 {
            assert!((dq.get(n) - d.get(n)).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn gamma_weights_at_unit_scale() {
        // (q-1) β* ω = 1 makes p_n = (1+n)^{-2} / ζ(2).
        let s = GammaSuperstat::with_q(1.5, 2.0, 1.0).unwrap();
        let d = photon_weights_gamma(&s, &TailPolicy::default()).unwrap();
        assert!((d.weights[0] - 6.0 / (PI * PI)).abs() < 1e-12);
        assert!((d.weights[1] - 1.5 / (PI * PI)).abs() < 1e-12);
        assert!((total(&d) - 1.0).abs() < 1e-12);
        // Tail ~ 1/n so 1e-8 needs ~1e8 terms: cap applies.
        assert!(d.tail_limited);
        assert_eq!(d.n_max(), DEFAULT_MAX_PHOTONS);
    }

    #[test]
    fn gamma_weights_normalize_with_cutoff() {
        for (q, bs) in [(1.2, 1.0), (1.4, 3.0), (1.1, 0.5)] {
            let s = GammaSuperstat::with_q(q, bs, 1.0).unwrap();
            let d = photon_weights_gamma(&s, &TailPolicy::new(1e-6, 2_000_000).unwrap()).unwrap();
            assert!((total(&d) - 1.0).abs() < 1e-12, "q={q}");
            assert!(d.tail_mass <= 1e-6 || d.tail_limited);
            assert!(d.weights.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn multilevel_examples() {
        let m = MultiLevelSuperstat::new(vec![1.0, 2.0], 1.0).unwrap();
        let z = m.partition();
        assert!((z - 2.738_494).abs() < 1e-6, "{z}");
        let d = photon_weights_multilevel(&m, &tight()).unwrap();
        assert!((d.weights[0] - 2.0 / z).abs() < 1e-15);
        assert!((d.weights[0] - 0.730_328).abs() < 1e-6);
        assert!((total(&d) - 1.0).abs() < 1e-12);

        let same = MultiLevelSuperstat::new(vec![1.3; 4], 1.0).unwrap();
        let dm = photon_weights_multilevel(&same, &tight()).unwrap();
        let dg = photon_weights_gibbs(1.3, 1.0, &tight()).unwrap();
        assert_eq!(dm.weights.len(), dg.weights.len());
        for (a, b) in dm.weights.iter().zip(&dg.weights) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn multilevel_rejects_bad_input() {
        assert!(MultiLevelSuperstat::new(vec![], 1.0).is_err());
        assert!(MultiLevelSuperstat::new(vec![1.0, -0.5], 1.0).is_err());
    }

    #[test]
    fn partition_examples() {
        let s = GammaSuperstat::with_q(1.5, 2.0, 1.0).unwrap();
        assert!((q_partition(&s).unwrap() - PI * PI / 6.0).abs() < 1e-13);
        let g = GammaSuperstat::gibbs(0.7, 1.0).unwrap();
        assert!((q_partition(&g).unwrap() - 1.0 / (1.0 - (-0.7f64).exp())).abs() < 1e-14);
        assert_eq!(q_trace(&g).unwrap(), 1.0);
    }

    #[test]
    fn p0_times_partition_is_one() {
        for (q, bs) in [(1.3, 0.8), (1.7, 2.5), (1.5, 2.0)] {
            let s = GammaSuperstat::with_q(q, bs, 1.0).unwrap();
            let d = photon_weights_gamma(&s, &TailPolicy::new(1e-4, 1000).unwrap()).unwrap();
            assert!((d.weights[0] * q_partition(&s).unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gibbs_energy_and_occupation() {
        let g = GammaSuperstat::gibbs(11f64.ln(), 1.0).unwrap();
        assert!((mean_photon_q(&g).unwrap() - 0.1).abs() < 1e-15);
        assert!((q_internal_energy(&g).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(physical_beta(&g).unwrap(), 11f64.ln());
        assert!((mean_photon_bose(3.0, 1.0) - 0.052_396).abs() < 1e-6);
        assert_eq!(mean_photon_bose(800.0, 1.0), 0.0);
    }

    #[test]
    fn calibration_round_trip() {
        let target = 11f64.ln();
        let bs = calibrate_beta_star(Deformation::Q(1.2), target, 1.0).unwrap();
        let s = GammaSuperstat::with_q(1.2, bs, 1.0).unwrap();
        let back = physical_beta(&s).unwrap();
        assert!(((back - target) / target).abs() < 1e-10);
        assert_eq!(calibrate_beta_star(Deformation::Gibbs, 1.7, 1.0).unwrap(), 1.7);
    }

    #[test]
    fn calibration_out_of_range() {
        let err = calibrate_beta_star(Deformation::Q(1.5), 1e6, 1.0).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn truncation_moves_mass_to_tail() {
        let d = photon_weights_gibbs(0.5, 1.0, &tight()).unwrap();
        let t = d.truncated(5);
        assert_eq!(t.weights.len(), 5);
        assert!((total(&t) - 1.0).abs() < 1e-14);
    }
}
