//! Brute-force evolution used to check the closed-form coefficients.
//!
//! The Hamiltonian is assembled as a dense real symmetric matrix on the
//! truncated basis `{|g,0⟩, |e,n⟩, |g,n+1⟩ : n < n_cut}`, diagonalized
//! numerically, and used to propagate `ρ(0)` as `U ρ(0) U†`. Nothing here
//! reuses the dressed-state algebra of the parent module.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{AtomInit, ModelParams};
use crate::error::{Error, Result};
use crate::superstat::PhotonDistribution;

/// Mass the truncated basis cannot represent above this triggers a warning.
pub const CUTOFF_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub p_e: f64,
    pub p_g: f64,
    pub field: Vec<f64>,
    pub coeff_a: Vec<f64>,
    pub coeff_b: Vec<Complex64>,
    pub coeff_c: Vec<f64>,
    /// Largest off-diagonal magnitude of the reduced field matrix.
    pub max_field_coherence: f64,
    /// Probability outside the truncated basis, frozen at its initial split.
    pub unrepresented_mass: f64,
    pub cutoff_warning: bool,
}

#[derive(Clone, Debug)]
pub struct Oracle {
    n_cut: usize,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
    rho0: Vec<f64>,
    frozen_excited: f64,
    frozen_ground: f64,
    unrepresented: f64,
}

#[inline]
fn excited_index(n: usize) -> usize {
    1 + 2 * n
}

#[inline]
fn ground_index(m: usize) -> usize {
    if m == 0 {
        0
    } else {
        2 * m
    }
}

impl Oracle {
    pub fn new(params: &ModelParams, atom: &AtomInit, dist: &PhotonDistribution, n_cut: usize) -> Result<Self> {
        if n_cut == 0 {
            return Err(Error::InvalidParameter {
                name: "n_cut",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let dim = 2 * n_cut + 1;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for m in 0..=n_cut {
            h[(ground_index(m), ground_index(m))] = -0.5 * params.omega0 + params.omega * m as f64;
        }
        for n in 0..n_cut {
            let e = excited_index(n);
            let g = ground_index(n + 1);
            h[(e, e)] = 0.5 * params.omega0 + params.omega * n as f64;
            let coupling = 0.5 * params.lambda * ((n + 1) as f64).sqrt();
            h[(e, g)] = coupling;
            h[(g, e)] = coupling;
        }
        let eig = SymmetricEigen::new(h);

        let eps = atom.epsilon;
        let mut rho0 = vec![0.0; dim];
        for m in 0..=n_cut {
            rho0[ground_index(m)] = (1.0 - eps) * dist.get(m);
        }
        for n in 0..n_cut {
            rho0[excited_index(n)] = eps * dist.get(n);
        }
        let beyond_excited: f64 = dist.weights.iter().skip(n_cut).sum();
        let beyond_ground: f64 = dist.weights.iter().skip(n_cut + 1).sum();
        let frozen_excited = eps * (dist.tail_mass + beyond_excited);
        let frozen_ground = (1.0 - eps) * (dist.tail_mass + beyond_ground);
        Ok(Oracle {
            n_cut,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
            rho0,
            frozen_excited,
            frozen_ground,
            unrepresented: frozen_excited + frozen_ground,
        })
    }

    /// Full density matrix `U(t) ρ(0) U†(t)` on the truncated basis.
    pub fn density_matrix(&self, t: f64) -> DMatrix<Complex64> {
        let dim = self.energies.len();
        let v = self.vectors.map(|x| Complex64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            self.energies.iter().map(|e| Complex64::from_polar(1.0, -e * t)),
        ));
        let u = &v * phases * v.transpose();
        let rho0 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            self.rho0.iter().map(|&p| Complex64::new(p, 0.0)),
        ));
        &u * rho0 * u.adjoint()
    }

    pub fn at(&self, t: f64) -> OracleOutput {
        let rho = self.density_matrix(t);
        let n_cut = self.n_cut;
        let coeff_a: Vec<f64> = (0..n_cut).map(|n| rho[(excited_index(n), excited_index(n))].re).collect();
        let coeff_c: Vec<f64> = (0..n_cut)
            .map(|n| rho[(ground_index(n + 1), ground_index(n + 1))].re)
            .collect();
        let coeff_b: Vec<Complex64> = (0..n_cut)
            .map(|n| rho[(excited_index(n), ground_index(n + 1))])
            .collect();

        // Tr_a: ⟨m|ρ_b|m'⟩ = ⟨g,m|ρ|g,m'⟩ + ⟨e,m|ρ|e,m'⟩.
        let field_elem = |m: usize, k: usize| -> Complex64 {
            let mut v = rho[(ground_index(m), ground_index(k))];
            if m < n_cut && k < n_cut {
                v += rho[(excited_index(m), excited_index(k))];
            }
            v
        };
        let field: Vec<f64> = (0..=n_cut).map(|m| field_elem(m, m).re).collect();
        let mut max_field_coherence = 0.0f64;
        for m in 0..=n_cut {
            for k in 0..=n_cut {
                if m != k {
                    max_field_coherence = max_field_coherence.max(field_elem(m, k).norm());
                }
            }
        }

        let p_e = coeff_a.iter().sum::<f64>() + self.frozen_excited;
        let p_g = rho[(0, 0)].re + coeff_c.iter().sum::<f64>() + self.frozen_ground;
        OracleOutput {
            p_e,
            p_g,
            field,
            coeff_a,
            coeff_b,
            coeff_c,
            max_field_coherence,
            unrepresented_mass: self.unrepresented,
            cutoff_warning: self.unrepresented > CUTOFF_TOLERANCE,
        }
    }
}

/// Evolves `ρ_a(0) ⊗ ρ_b(0)` by exact diagonalization and traces out each side.
pub fn oracle_evolve(
    params: &ModelParams,
    atom: &AtomInit,
    dist: &PhotonDistribution,
    t: f64,
    n_cut: usize,
) -> Result<OracleOutput> {
    Ok(Oracle::new(params, atom, dist, n_cut)?.at(t))
}
