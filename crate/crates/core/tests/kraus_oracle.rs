//! The band-factorized channel against the literal Kraus sum
//! `sum_ij M_ij rho M_ij^dag` built from explicit operator matrices.

use laserchan::channel::{kraus_operator, propagate_fock};
use laserchan::{coherent_mixture, coherent_state, number_state, t_coeffs, Complex64, DensityMatrix, LaserParams};
use nalgebra::DMatrix;

fn literal_kraus_sum(rho0: &DensityMatrix, params: &LaserParams, t: f64, out_dim: usize) -> DMatrix<Complex64> {
    let c = t_coeffs(params, t).unwrap();
    let d0 = rho0.dim();
    let mut out = DMatrix::<Complex64>::zeros(out_dim, out_dim);
    // M_ij maps |m> to |m - i + j>, so i < d0 and j < out_dim exhaust the sum.
    for i in 0..d0 {
        for j in 0..out_dim {
            let m = kraus_operator(params, &c, i, j, d0, out_dim).map(|x| Complex64::new(x, 0.0));
            out += &m * rho0.matrix() * m.adjoint();
        }
    }
    out
}

fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn factorized_sum_matches_operator_sum() {
    let states = [
        number_state(3, 5).unwrap(),
        coherent_state(Complex64::new(0.6, -0.3), 14).unwrap(),
        coherent_mixture(
            &[0.3, 0.7],
            &[Complex64::new(0.5, 0.5), Complex64::new(-0.4, 0.0)],
            14,
        )
        .unwrap(),
    ];
    for (g, kappa) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)] {
        let p = LaserParams::new(g, kappa).unwrap();
        for t in [0.05, 0.4, 1.1] {
            for rho0 in &states {
                let fast = propagate_fock(rho0, &p, t, 20).unwrap();
                let slow = literal_kraus_sum(rho0, &p, t, 20);
                let diff = max_diff(fast.matrix(), &slow);
                assert!(diff < 1e-13, "g={g} kappa={kappa} t={t}: {diff:e}");
            }
        }
    }
}

#[test]
fn output_basis_smaller_than_input() {
    let p = LaserParams::new(0.5, 1.5).unwrap();
    let rho0 = coherent_state(Complex64::new(1.2, 0.0), 20).unwrap();
    let fast = propagate_fock(&rho0, &p, 0.7, 6).unwrap();
    let slow = literal_kraus_sum(&rho0, &p, 0.7, 6);
    assert!(max_diff(fast.matrix(), &slow) < 1e-13);
}
