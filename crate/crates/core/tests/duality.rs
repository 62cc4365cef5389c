//! Heisenberg-picture operators against expectations in evolved states.

use laserchan::heisenberg::{
    chi, evolved_exp_lambda_n, evolved_normal_moment, expected_n, g2, MomentCoefficients,
};
use laserchan::{
    coherent_state, evolve_diagonal, evolve_fock, number_state, thermal_state, Complex64, DensityMatrix,
    DiagonalState, LaserParams, PhotonStatistics,
};

const RATES: [(f64, f64); 4] = [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0), (0.0, 1.0)];

/// `<a^dag^k a^k>` from the populations.
fn factorial_moment(pops: &[f64], k: usize) -> f64 {
    pops.iter()
        .enumerate()
        .map(|(n, p)| {
            let falling: f64 = (0..k).map(|r| n as f64 - r as f64).product();
            if n >= k { p * falling } else { 0.0 }
        })
        .sum()
}

#[test]
fn exp_lambda_n_expectation_matches_evolved_state() {
    let rho0 = DiagonalState::new(vec![0.2, 0.1, 0.4, 0.3]).unwrap();
    for (g, kappa) in RATES {
        let p = LaserParams::new(g, kappa).unwrap();
        for t in [0.2, 0.7] {
            let rho = evolve_diagonal(&rho0, &p, t, 1 << 14).unwrap();
            for lambda in [-1.0, -0.3, 0.0, 0.1] {
                let op = match evolved_exp_lambda_n(&p, t, lambda) {
                    Ok(op) => op,
                    Err(_) => continue,
                };
                let heisenberg = op.expectation(rho0.probs());
                let schrodinger: f64 = rho
                    .probs()
                    .iter()
                    .enumerate()
                    .filter(|(_, q)| **q > 0.0)
                    .map(|(n, q)| q * (lambda * n as f64).exp())
                    .sum();
                let rel = (heisenberg - schrodinger).abs() / schrodinger;
                assert!(rel < 1e-10, "g={g} kappa={kappa} t={t} λ={lambda}: {rel:e}");
            }
        }
    }
}

#[test]
fn normal_moments_match_evolved_state() {
    let rho0 = coherent_state(Complex64::new(1.1, 0.4), 24).unwrap();
    let pops0 = rho0.populations();
    for (g, kappa) in RATES {
        let p = LaserParams::new(g, kappa).unwrap();
        let t = 0.4;
        let rho = evolve_fock(&rho0, &p, t, 256).unwrap();
        let pops = rho.populations();
        for m in 1..=4 {
            let coeffs = evolved_normal_moment(&p, t, m).unwrap();
            let heisenberg: f64 = coeffs.iter().enumerate().map(|(k, c)| c * factorial_moment(&pops0, k)).sum();
            let schrodinger = factorial_moment(&pops, m);
            let rel = (heisenberg - schrodinger).abs() / schrodinger.max(1e-300);
            assert!(rel < 1e-9, "g={g} kappa={kappa} m={m}: {rel:e}");
        }
    }
}

#[test]
fn low_order_coefficients_agree() {
    let p = LaserParams::new(1.7, 0.6).unwrap();
    let t = 0.9;
    let c = MomentCoefficients::new(&p, t).unwrap();
    let m1 = evolved_normal_moment(&p, t, 1).unwrap();
    let m2 = evolved_normal_moment(&p, t, 2).unwrap();
    assert!((m1[0] - c.beta).abs() < 1e-12 * c.beta);
    assert!((m1[1] - c.alpha).abs() < 1e-12 * c.alpha);
    for (a, b) in m2.iter().zip([c.c0, c.c1, c.c2]) {
        assert!((a - b).abs() < 1e-12 * b);
    }
}

#[test]
fn g2_matches_ratio_of_evolved_moments() {
    let states: Vec<DensityMatrix> = vec![
        number_state(2, 3).unwrap(),
        coherent_state(Complex64::new(0.0, 1.5), 30).unwrap(),
        DensityMatrix::from_diagonal(&thermal_state(0.8, 128).unwrap()).unwrap(),
    ];
    for (g, kappa) in RATES {
        let p = LaserParams::new(g, kappa).unwrap();
        for rho0 in &states {
            let n0 = rho0.expect_n();
            let g2_0 = rho0.g2().unwrap();
            for t in [0.1, 0.6] {
                let rho = evolve_fock(rho0, &p, t, 512).unwrap();
                let closed = g2(&p, t, n0, g2_0).unwrap();
                assert!((closed - rho.g2().unwrap()).abs() < 1e-8);
                let n = expected_n(&p, t, n0).unwrap();
                assert!((n - rho.expect_n()).abs() < 1e-8 * n.max(1.0));
                let x = chi(&p, t, n0).unwrap();
                assert!(x >= 0.0);
            }
        }
    }
}

#[test]
fn inconsistent_coherence_is_rejected() {
    let p = LaserParams::new(1.0, 2.0).unwrap();
    // g2_0 must be at least 1 - 1/n0
    assert!(g2(&p, 0.5, 2.0, 0.4).is_err());
    assert!(g2(&p, 0.5, 0.0, 1.0).is_err());
    assert!(g2(&p, 0.5, 2.0, 0.5).is_ok());
}
