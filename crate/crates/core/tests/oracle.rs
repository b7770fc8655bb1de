//! Reference values from independent evaluations: high-precision values
//! computed offline, and direct sums done here without the library's
//! special-function code.

use jcm_entropy::entropy::{entropy_of, EntropyKind};
use jcm_entropy::specfun::{hurwitz_zeta, Deformation, SeriesAccuracy, TailMethod};
use jcm_entropy::superstat::{
    calibrate_beta_star, physical_beta, photon_weights_gamma, q_internal_energy, q_log_partition, q_partition,
    q_trace, GammaSuperstat, MultiLevelSuperstat, TailPolicy,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Σ_{n<N} f(n) + ∫_N^∞ f + f(N)/2 for f(n) = (1 + a n)^{-p}.
fn power_sum(a: f64, p: f64, moment: u32) -> f64 {
    let n_terms = 400_000usize;
    let f = |n: f64| n.powi(moment as i32) * (1.0 + a * n).powf(-p);
    let mut s = 0.0;
    for n in (0..n_terms).rev() {
        s += f(n as f64);
    }
    let nn = n_terms as f64;
    let u = 1.0 + a * nn;
    let integral = match moment {
        0 => u.powf(1.0 - p) / (a * (p - 1.0)),
        1 => (u.powf(2.0 - p) / (p - 2.0) - u.powf(1.0 - p) / (p - 1.0)) / (a * a),
        _ => unreachable!(),
    };
    s + integral + 0.5 * f(nn)
}

#[test]
fn hurwitz_zeta_high_precision_values() {
    let acc = SeriesAccuracy::default();
    assert!((hurwitz_zeta(1.667, 3.2, &acc).unwrap() - 0.768_219_797_647_375_7).abs() < 1e-10);
    assert!((hurwitz_zeta(1.25, 0.8, &acc).unwrap() - 5.041_734_815_793_947).abs() < 1e-10);
}

#[test]
fn zeta_tail_methods_agree() {
    // Plain truncation is only practical for lighter tails.
    for (s, x) in [(3.5, 3.2), (2.5, 0.3), (6.0, 11.0)] {
        let mut values = Vec::new();
        for m in [TailMethod::EulerMaclaurin, TailMethod::ClosedFormZeta, TailMethod::PlainTruncation] {
            let acc = SeriesAccuracy {
                abs_tol: 1e-9,
                max_terms: 50_000_000,
                tail_method: m,
            };
            values.push(hurwitz_zeta(s, x, &acc).unwrap());
        }
        assert!((values[0] - values[2]).abs() < 2e-9, "{values:?}");
        assert!((values[0] - values[1]).abs() < 1e-12);
    }
}

#[test]
fn physical_beta_high_precision_value() {
    let g = GammaSuperstat::with_q(1.4, 1.0, 1.0).unwrap();
    assert!(rel(physical_beta(&g).unwrap(), 0.371_447_171_260_789_36) < 1e-10);
}

#[test]
fn calibrated_beta_star_values() {
    for (q, want) in [(1.2, 2.752_627_135), (1.4, 3.335_691_574), (1.6, 4.403_965_605)] {
        let got = calibrate_beta_star(Deformation::Q(q), 11f64.ln(), 1.0).unwrap();
        assert!((got - want).abs() < 2e-9, "q={q}: {got}");
    }
}

#[test]
fn gamma_closed_forms_match_direct_sums() {
    for (q, bs) in [(1.3, 0.7), (1.5, 2.0), (1.7, 4.0)] {
        let g = GammaSuperstat::with_q(q, bs, 1.0).unwrap();
        let a = (q - 1.0) * bs;
        let z = power_sum(a, 1.0 / (q - 1.0), 0);
        let zq = power_sum(a, q / (q - 1.0), 0);
        let nzq = power_sum(a, q / (q - 1.0), 1);
        assert!(rel(q_partition(&g).unwrap(), z) < 1e-9);
        assert!(rel(q_trace(&g).unwrap(), zq / z.powf(q)) < 1e-9);
        assert!(rel(q_internal_energy(&g).unwrap(), nzq / z.powf(q)) < 1e-9);

        // p_0 𝒵 = 1
        let d = photon_weights_gamma(&g, &TailPolicy::new(1e-4, 100_000).unwrap()).unwrap();
        assert!((d.weights[0] * z - 1.0).abs() < 1e-9);
    }
}

#[test]
fn internal_energy_is_minus_derivative_of_q_log_partition() {
    for (q, bs) in [(1.2, 1.0), (1.5, 2.5), (1.8, 0.6)] {
        let h = 1e-5 * bs;
        let lp = |b: f64| q_log_partition(&GammaSuperstat::with_q(q, b, 1.0).unwrap()).unwrap();
        let fd = -(lp(bs + h) - lp(bs - h)) / (2.0 * h);
        let u = q_internal_energy(&GammaSuperstat::with_q(q, bs, 1.0).unwrap()).unwrap();
        assert!(rel(u, fd) < 1e-6, "q={q}: {u} vs {fd}");
    }
}

#[test]
fn multilevel_partition_is_sum_of_geometric_series() {
    let m = MultiLevelSuperstat::new(vec![1.0, 2.0], 1.0).unwrap();
    let direct: f64 = (0..200).map(|n| (-(n as f64)).exp() + (-2.0 * n as f64).exp()).sum();
    assert!((m.partition() - direct).abs() < 1e-14);
    assert!((direct - 2.738_494_349_6).abs() < 1e-10);
}

#[test]
fn thermal_entropy_closed_form() {
    // Gibbs weights (1-x) x^n with x = 1/11 have mean 0.1.
    let x: f64 = 1.0 / 11.0;
    let p: Vec<f64> = (0..60).map(|n| (1.0 - x) * x.powi(n)).collect();
    let s = entropy_of(&p, EntropyKind::VonNeumann).unwrap();
    let n = 0.1f64;
    assert!((s - ((1.0 + n) * (1.0 + n).ln() - n * n.ln())).abs() < 1e-13);
}
