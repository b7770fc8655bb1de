//! Resonant and detuned Jaynes-Cummings dynamics for a diagonal initial state.
//!
//! Under `H = ω₀σ_z/2 + ω a†a + (λ/2)(a†σ₋ + aσ₊)` the state space splits into
//! the uncoupled vacuum `|g,0⟩` and the two-dimensional excitation manifolds
//! `{|e,n⟩, |g,n+1⟩}`. Starting from `ρ_a(0) ⊗ ρ_b(0)` with both factors
//! diagonal, each manifold carries a 2×2 block
//!
//! ```text
//! ⎡ A_n(t)   B_n(t) ⎤
//! ⎣ B_n*(t)  C_n(t) ⎦
//! ```
//!
//! whose entries oscillate at the generalized Rabi frequency δ_n.
//!
//! Photon numbers beyond the stored weights are not evolved. Their mass is
//! frozen at its initial split, `ε·tail` in the excited sector and
//! `(1-ε)·tail` in the ground sector. Because `A_n + C_n` is conserved in
//! every manifold, the error this introduces is bounded by the tail mass.

pub mod oracle;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::superstat::PhotonDistribution;

pub use oracle::{oracle_evolve, Oracle, OracleOutput};

/// Frequencies and coupling, in units with ħ = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, omega: f64, lambda: f64) -> Result<Self> {
        check_positive("omega", omega)?;
        if !omega0.is_finite() || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega0/lambda",
                value: if omega0.is_finite() { lambda } else { omega0 },
                reason: "must be finite",
            });
        }
        Ok(ModelParams { omega0, omega, lambda })
    }

    /// Builds parameters from the detuning `Δ = ω₀ - ω`.
    pub fn with_detuning(delta: f64, omega: f64, lambda: f64) -> Result<Self> {
        Self::new(omega + delta, omega, lambda)
    }

    #[inline]
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }
}

/// Excited-state weight ε of the diagonal atomic state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomInit {
    pub epsilon: f64,
}

impl AtomInit {
    pub fn new(epsilon: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&epsilon) {
            Ok(AtomInit { epsilon })
        } else {
            Err(Error::InvalidParameter {
                name: "epsilon",
                value: epsilon,
                reason: "must lie in [0, 1]",
            })
        }
    }

    /// `ε = (1 + r cos θ)/2` on the Bloch sphere.
    pub fn from_bloch(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "must lie in [0, 1]",
            });
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in [0, pi]",
            });
        }
        Self::new((0.5 * (1.0 + r * theta.cos())).clamp(0.0, 1.0))
    }
}

/// Dressed-state data of the n-th excitation manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifoldQuantities {
    pub n: usize,
    /// `δ_n = sqrt(Δ² + λ²(n+1))`.
    pub delta_n: f64,
    /// `Ω_± = (Δ ± δ_n)/(λ sqrt(n+1))`.
    pub omega_plus: f64,
    pub omega_minus: f64,
}

pub fn manifold(params: &ModelParams, n: usize) -> Result<ManifoldQuantities> {
    let coupling = params.lambda * ((n + 1) as f64).sqrt();
    if coupling == 0.0 {
        return Err(Error::DegenerateCoupling { n });
    }
    let delta = params.detuning();
    let delta_n = delta.hypot(coupling);
    // Ω₊Ω₋ = -1; take the non-cancelling root directly and invert for the other.
    let (omega_plus, omega_minus) = if delta >= 0.0 {
        let p = (delta + delta_n) / coupling;
        (p, -1.0 / p)
    } else {
        let m = (delta - delta_n) / coupling;
        (-1.0 / m, m)
    };
    Ok(ManifoldQuantities {
        n,
        delta_n,
        omega_plus,
        omega_minus,
    })
}

/// Joint-state coefficients at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolvedState {
    pub time: f64,
    pub epsilon: f64,
    pub coeff_a: Vec<f64>,
    pub coeff_b: Vec<Complex64>,
    pub coeff_c: Vec<f64>,
    /// `p_0 (1 - ε)` on the uncoupled state `|g,0⟩`.
    pub uncoupled_weight: f64,
    /// Frozen probability of photon numbers beyond the evolved manifolds.
    pub tail_mass: f64,
}

impl EvolvedState {
    pub fn n_max(&self) -> usize {
        self.coeff_a.len().saturating_sub(1)
    }

    /// Total probability, which must equal one.
    pub fn total(&self) -> f64 {
        let mut acc = crate::specfun::Neumaier::default();
        acc.add(self.uncoupled_weight);
        acc.add(self.tail_mass);
        for (a, c) in self.coeff_a.iter().zip(&self.coeff_c) {
            acc.add(*a);
            acc.add(*c);
        }
        acc.value()
    }
}

/// Reduced field populations with the frozen tail kept separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldPopulations {
    pub weights: Vec<f64>,
    pub tail_mass: f64,
}

/// Time-independent parts of one manifold's block.
#[derive(Clone, Copy, Debug)]
struct BlockTerms {
    rabi: f64,
    excited: f64,
    ground: f64,
    /// `(A(0) - C(0)) λ²(n+1)/δ²`, the population moved at full Rabi transfer.
    transfer: f64,
    b_const: f64,
    /// Coefficients of `e^{-iδt}` and `e^{iδt}` in B_n.
    b_neg: f64,
    b_pos: f64,
}

impl BlockTerms {
    fn frozen(excited: f64, ground: f64) -> Self {
        BlockTerms {
            rabi: 0.0,
            excited,
            ground,
            transfer: 0.0,
            b_const: 0.0,
            b_neg: 0.0,
            b_pos: 0.0,
        }
    }

    fn new(m: &ManifoldQuantities, excited: f64, ground: f64) -> Self {
        let (op, om) = (m.omega_plus, m.omega_minus);
        let kp = 1.0 / (1.0 + op * op);
        let km = 1.0 / (1.0 + om * om);
        let tp = (excited + op * op * ground) * kp * kp;
        let tm = (excited + om * om * ground) * km * km;
        let cross = (excited + op * om * ground) * kp * km;
        // λ²(n+1)/δ² = 4/(Ω₊ - Ω₋)², and Ω₊, Ω₋ have opposite signs.
        let mixing = 4.0 / ((op - om) * (op - om));
        BlockTerms {
            rabi: m.delta_n,
            excited,
            ground,
            transfer: (excited - ground) * mixing,
            // Coherence ⟨e,n|ρ(t)|g,n+1⟩ generated by exp(-iHt).
            b_const: -(op * tp + om * tm),
            b_neg: -cross * op,
            b_pos: -cross * om,
        }
    }

    /// `(A_n, C_n)`. Written as a transfer `sin²(δt/2)` away from the
    /// initial populations, so empty levels stay exactly empty at t = 0 and
    /// no large terms cancel. Identical to the dressed-state sum
    /// `T₊ + T₋ + 2X cos δt`.
    #[inline]
    fn populations(&self, t: f64) -> (f64, f64) {
        let s = (0.5 * self.rabi * t).sin();
        let moved = self.transfer * s * s;
        (self.excited - moved, self.ground + moved)
    }

    #[inline]
    fn coherence(&self, t: f64) -> Complex64 {
        let (s, c) = (self.rabi * t).sin_cos();
        Complex64::new(
            self.b_const + (self.b_neg + self.b_pos) * c,
            (self.b_pos - self.b_neg) * s,
        )
    }
}

/// Precomputed closed-form evolution for fixed parameters and initial state.
#[derive(Clone, Debug)]
pub struct Propagator {
    epsilon: f64,
    uncoupled_weight: f64,
    tail_mass: f64,
    blocks: Vec<BlockTerms>,
}

impl Propagator {
    pub fn new(params: &ModelParams, atom: &AtomInit, dist: &PhotonDistribution) -> Result<Self> {
        let eps = atom.epsilon;
        let blocks = (0..dist.weights.len())
            .map(|n| {
                let excited = eps * dist.get(n);
                let ground = (1.0 - eps) * dist.get(n + 1);
                if params.lambda == 0.0 {
                    Ok(BlockTerms::frozen(excited, ground))
                } else {
                    Ok(BlockTerms::new(&manifold(params, n)?, excited, ground))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Propagator {
            epsilon: eps,
            uncoupled_weight: dist.get(0) * (1.0 - eps),
            tail_mass: dist.tail_mass,
            blocks,
        })
    }

    pub fn manifolds(&self) -> usize {
        self.blocks.len()
    }

    pub fn state_at(&self, t: f64) -> EvolvedState {
        let mut coeff_a = Vec::with_capacity(self.blocks.len());
        let mut coeff_c = Vec::with_capacity(self.blocks.len());
        let mut coeff_b = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (a, c) = b.populations(t);
            coeff_a.push(a);
            coeff_c.push(c);
            coeff_b.push(b.coherence(t));
        }
        EvolvedState {
            time: t,
            epsilon: self.epsilon,
            coeff_a,
            coeff_b,
            coeff_c,
            uncoupled_weight: self.uncoupled_weight,
            tail_mass: self.tail_mass,
        }
    }

    /// Reduced atom and field populations at time `t`, without materializing B_n.
    pub fn reduced_at(&self, t: f64) -> ((f64, f64), FieldPopulations) {
        let len = self.blocks.len();
        let mut field = vec![0.0; len + 1];
        field[0] = self.uncoupled_weight;
        let mut excited = crate::specfun::Neumaier::default();
        let mut ground = crate::specfun::Neumaier::default();
        for (n, b) in self.blocks.iter().enumerate() {
            let (a, c) = b.populations(t);
            excited.add(a);
            ground.add(c);
            field[n] += a;
            field[n + 1] += c;
        }
        excited.add(self.epsilon * self.tail_mass);
        ground.add(self.uncoupled_weight);
        ground.add((1.0 - self.epsilon) * self.tail_mass);
        (
            (excited.value(), ground.value()),
            FieldPopulations {
                weights: field,
                tail_mass: self.tail_mass,
            },
        )
    }
}

/// Closed-form joint-state coefficients at time `t`.
pub fn coefficients_at(
    params: &ModelParams,
    atom: &AtomInit,
    dist: &PhotonDistribution,
    t: f64,
) -> Result<EvolvedState> {
    Ok(Propagator::new(params, atom, dist)?.state_at(t))
}

/// `(p_e, p_g)` of `Tr_b ρ(t)`, with the frozen tail split by ε.
pub fn reduced_atom(state: &EvolvedState) -> (f64, f64) {
    let mut excited: crate::specfun::Neumaier = state.coeff_a.iter().copied().collect();
    excited.add(state.epsilon * state.tail_mass);
    let mut ground: crate::specfun::Neumaier = state.coeff_c.iter().copied().collect();
    ground.add(state.uncoupled_weight);
    ground.add((1.0 - state.epsilon) * state.tail_mass);
    (excited.value(), ground.value())
}

/// Diagonal of `Tr_a ρ(t)`: `[p_0(1-ε) + A_0, A_1 + C_0, ..., C_{n_max}]`.
pub fn reduced_field(state: &EvolvedState) -> FieldPopulations {
    let len = state.coeff_a.len();
    let mut weights = vec![0.0; len + 1];
    weights[0] = state.uncoupled_weight;
    for n in 0..len {
        weights[n] += state.coeff_a[n];
        weights[n + 1] += state.coeff_c[n];
    }
    FieldPopulations {
        weights,
        tail_mass: state.tail_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superstat::{photon_weights_gibbs, TailPolicy};

    fn thermal() -> PhotonDistribution {
        photon_weights_gibbs(11f64.ln(), 1.0, &TailPolicy::new(1e-14, 1000).unwrap()).unwrap()
    }

    #[test]
    fn manifold_examples() {
        let p = ModelParams::with_detuning(0.0, 1.0, 2.0).unwrap();
        let m = manifold(&p, 0).unwrap();
        assert_eq!(m.delta_n, 2.0);
        assert_eq!((m.omega_plus, m.omega_minus), (1.0, -1.0));
        assert_eq!(manifold(&p, 3).unwrap().delta_n, 4.0);

        let p = ModelParams::with_detuning(3.0, 1.0, 2.0).unwrap();
        let m = manifold(&p, 0).unwrap();
        assert!((m.delta_n - 13f64.sqrt()).abs() < 1e-15);
        assert!((m.omega_plus * m.omega_minus + 1.0).abs() < 1e-12);

        let p = ModelParams::with_detuning(-1e6, 1.0, 0.5).unwrap();
        let m = manifold(&p, 2).unwrap();
        assert!((m.omega_plus * m.omega_minus + 1.0).abs() < 1e-12);
        assert!(m.omega_plus.is_finite() && m.omega_minus.is_finite());
    }

    #[test]
    fn zero_coupling_is_degenerate() {
        let p = ModelParams::with_detuning(0.0, 1.0, 0.0).unwrap();
        assert!(matches!(manifold(&p, 0), Err(Error::DegenerateCoupling { n: 0 })));
        let d = thermal();
        let s0 = coefficients_at(&p, &AtomInit::new(0.3).unwrap(), &d, 0.0).unwrap();
        let s1 = coefficients_at(&p, &AtomInit::new(0.3).unwrap(), &d, 7.3).unwrap();
        assert_eq!(s0.coeff_a, s1.coeff_a);
        assert_eq!(s0.coeff_c, s1.coeff_c);
    }

    #[test]
    fn resonant_initial_state() {
        let p = ModelParams::with_detuning(0.0, 1.0, 2.0).unwrap();
        let d = thermal();
        let eps = 0.35;
        let s = coefficients_at(&p, &AtomInit::new(eps).unwrap(), &d, 0.0).unwrap();
        for n in 0..s.coeff_a.len() {
            assert!((s.coeff_a[n] - eps * d.get(n)).abs() < 1e-16);
            assert!((s.coeff_c[n] - (1.0 - eps) * d.get(n + 1)).abs() < 1e-16);
        }
    }

    #[test]
    fn resonant_rabi_from_ground() {
        let p = ModelParams::with_detuning(0.0, 1.0, 2.0).unwrap();
        let d = thermal();
        let t = 0.93;
        let s = coefficients_at(&p, &AtomInit::new(0.0).unwrap(), &d, t).unwrap();
        for n in 0..s.coeff_a.len() {
            let rabi = 2.0 * ((n + 1) as f64).sqrt();
            let expected = d.get(n + 1) * (0.5 * rabi * t).sin().powi(2);
            assert!((s.coeff_a[n] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn reduced_states_at_t0() {
        let p = ModelParams::with_detuning(0.0, 1.0, 2.0).unwrap();
        let d = thermal();
        let excited = coefficients_at(&p, &AtomInit::new(1.0).unwrap(), &d, 0.0).unwrap();
        let (pe, pg) = reduced_atom(&excited);
        assert!((pe - 1.0).abs() < 1e-14 && pg.abs() < 1e-14);
        let ground = coefficients_at(&p, &AtomInit::new(0.0).unwrap(), &d, 0.0).unwrap();
        let (pe, pg) = reduced_atom(&ground);
        assert!(pe.abs() < 1e-14 && (pg - 1.0).abs() < 1e-14);

        let f = reduced_field(&ground);
        for (n, w) in f.weights.iter().enumerate() {
            assert!((w - d.get(n)).abs() < 1e-16);
        }
    }

    #[test]
    fn single_photon_truncated_field() {
        // Vacuum-only field, excited atom: weight(1) = sin²(δ_0 t/2).
        let p = ModelParams::with_detuning(0.0, 1.0, 2.0).unwrap();
        let d = PhotonDistribution {
            weights: vec![0.8],
            tail_mass: 0.2,
            source: crate::superstat::DistributionSource::Gibbs,
            tail_limited: false,
        };
        let atom = AtomInit::new(1.0).unwrap();
        let t = std::f64::consts::PI / 2.0;
        let before = reduced_field(&coefficients_at(&p, &atom, &d, 0.0).unwrap());
        let after = reduced_field(&coefficients_at(&p, &atom, &d, t).unwrap());
        let gain = 0.8 * (0.5 * 2.0 * t).sin().powi(2);
        assert!((after.weights[1] - before.weights[1] - gain).abs() < 1e-15);
    }

    #[test]
    fn bloch_mapping() {
        use std::f64::consts::PI;
        assert_eq!(AtomInit::from_bloch(1.0, PI).unwrap().epsilon, 0.0);
        assert_eq!(AtomInit::from_bloch(0.0, 1.1).unwrap().epsilon, 0.5);
        assert_eq!(AtomInit::from_bloch(1.0, 0.0).unwrap().epsilon, 1.0);
        assert!(AtomInit::from_bloch(1.5, 0.0).is_err());
        assert!(AtomInit::new(-0.1).is_err());
    }

    #[test]
    fn reduced_at_matches_state() {
        let p = ModelParams::with_detuning(0.7, 1.0, 1.3).unwrap();
        let d = thermal();
        let prop = Propagator::new(&p, &AtomInit::new(0.4).unwrap(), &d).unwrap();
        let st = prop.state_at(2.2);
        let ((pe, pg), f) = prop.reduced_at(2.2);
        let (pe2, pg2) = reduced_atom(&st);
        assert_eq!((pe, pg), (pe2, pg2));
        assert_eq!(f, reduced_field(&st));
    }
}
