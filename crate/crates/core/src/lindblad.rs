//! Reference integrator for the laser master equation
//!
//! ```text
//! dρ/dt = g [2 a^dag ρ a - a a^dag ρ - ρ a a^dag] + κ [2 a ρ a^dag - a^dag a ρ - ρ a^dag a]
//! ```
//!
//! on a truncated Fock basis, by fixed-step classical Runge-Kutta. The ladder
//! operators act as on the infinite space, so population raised out of the
//! top level is lost; the only trace leak is through that boundary.
//!
//! This module is a validation oracle for [`crate::channel`] and does not use
//! any of it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::LaserParams;
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;

/// Largest `dt · max(g, κ)` accepted by [`IntegratorConfig::validate`].
pub const STABILITY_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Initial step; the integrator may start smaller for stability and then
    /// halves it until successive results agree.
    pub dt: f64,
    pub method: Method,
    /// Budget on the number of steps of a single pass.
    pub max_steps: usize,
    /// Frobenius distance between successive halvings that ends refinement.
    pub convergence_tol: f64,
    pub max_halvings: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            method: Method::Rk4,
            max_steps: 2_000_000,
            convergence_tol: 1e-9,
            max_halvings: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self, params: &LaserParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if self.max_steps == 0 {
            return Err(Error::Validation("max_steps must be positive".into()));
        }
        let rate = params.gain().max(params.loss());
        if self.dt * rate > STABILITY_GUARD {
            return Err(Error::Validation(format!(
                "dt * max(g, kappa) = {} exceeds the stability guard {STABILITY_GUARD}",
                self.dt * rate
            )));
        }
        Ok(())
    }
}

/// Diagnostics of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationReport {
    pub steps: usize,
    pub dt: f64,
    pub halvings: usize,
    /// Frobenius distance to the previous, coarser pass.
    pub last_change: f64,
}

/// `dρ/dt` for the laser master equation.
pub fn lindblad_rhs(rho: &DensityMatrix, params: &LaserParams) -> DMatrix<Complex64> {
    let d = rho.dim();
    let mut out = DMatrix::zeros(d, d);
    Rhs::new(d, params).apply(rho.matrix().as_slice(), out.as_mut_slice());
    out
}

struct Rhs {
    dim: usize,
    gain: f64,
    loss: f64,
    sqrt: Vec<f64>,
    /// Column-major indices of the entries that can be non-zero. The
    /// equation couples `rho_mn` only to `rho_{m±1, n±1}`, so every diagonal
    /// band evolves on its own and bands that start at zero stay there.
    active: Vec<usize>,
}

impl Rhs {
    fn new(dim: usize, params: &LaserParams) -> Self {
        Self::with_bands(dim, params, &(0..dim).collect::<Vec<_>>())
    }

    fn with_bands(dim: usize, params: &LaserParams, bands: &[usize]) -> Self {
        let mut active = Vec::new();
        for &k in bands {
            for m in 0..dim - k {
                active.push(m + (m + k) * dim);
                if k > 0 {
                    active.push(m + k + m * dim);
                }
            }
        }
        Self {
            dim,
            gain: params.gain(),
            loss: params.loss(),
            sqrt: (0..=dim).map(|k| (k as f64).sqrt()).collect(),
            active,
        }
    }

    /// Column-major `rho` in, column-major derivative out. Entries outside
    /// the active bands are left untouched.
    fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        let (g, kappa) = (self.gain, self.loss);
        for &idx in &self.active {
            let (m, n) = (idx % d, idx / d);
            let here = rho[idx];
            let mut v = here * -(g * (m + n + 2) as f64 + kappa * (m + n) as f64);
            if m > 0 && n > 0 {
                // 2 g (a^dag ρ a)_mn = 2 g sqrt(m n) ρ_{m-1, n-1}
                v += rho[idx - d - 1] * (2.0 * g * self.sqrt[m] * self.sqrt[n]);
            }
            if m + 1 < d && n + 1 < d {
                // 2 κ (a ρ a^dag)_mn = 2 κ sqrt((m+1)(n+1)) ρ_{m+1, n+1}
                v += rho[idx + d + 1] * (2.0 * kappa * self.sqrt[m + 1] * self.sqrt[n + 1]);
            }
            out[idx] = v;
        }
    }
}

struct Rk4 {
    rhs: Rhs,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(rhs: Rhs) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); rhs.dim * rhs.dim];
        Self { k1: zero.clone(), k2: zero.clone(), k3: zero.clone(), k4: zero.clone(), tmp: zero, rhs }
    }

    fn step(&mut self, rho: &mut [Complex64], dt: f64) {
        let half = 0.5 * dt;
        let active = &self.rhs.active;
        self.rhs.apply(rho, &mut self.k1);
        for &i in active {
            self.tmp[i] = rho[i] + self.k1[i] * half;
        }
        self.rhs.apply(&self.tmp, &mut self.k2);
        for &i in active {
            self.tmp[i] = rho[i] + self.k2[i] * half;
        }
        self.rhs.apply(&self.tmp, &mut self.k3);
        for &i in active {
            self.tmp[i] = rho[i] + self.k3[i] * dt;
        }
        self.rhs.apply(&self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for &i in active {
            rho[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
        hermitize(rho, self.rhs.dim, active);
    }
}

/// `(ρ + ρ^dag) / 2` on the given entries.
fn hermitize(rho: &mut [Complex64], d: usize, entries: &[usize]) {
    for &idx in entries {
        let (m, n) = (idx % d, idx / d);
        if m == n {
            rho[idx] = Complex64::new(rho[idx].re, 0.0);
        } else if m < n {
            let lower = n + m * d;
            let avg = (rho[idx] + rho[lower].conj()) * 0.5;
            rho[idx] = avg;
            rho[lower] = avg.conj();
        }
    }
}

/// Offsets `k >= 0` of the diagonal bands holding a non-zero entry.
fn occupied_bands(rho: &DMatrix<Complex64>) -> Vec<usize> {
    let d = rho.nrows();
    (0..d)
        .filter(|&k| (0..d - k).any(|m| rho[(m, m + k)] != Complex64::new(0.0, 0.0)))
        .collect()
}

/// Largest step for which RK4 stays inside its stability region on the
/// fastest decaying mode of a `dim`-level truncation.
fn stable_dt(dim: usize, params: &LaserParams) -> f64 {
    2.0 / ((params.gain() + params.loss()) * (2 * dim + 2) as f64)
}

/// One fixed-step pass of `steps` equal steps from 0 to `t`.
pub fn integrate_fixed(rho0: &DensityMatrix, params: &LaserParams, t: f64, steps: usize) -> Result<DensityMatrix> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let d = rho0.dim();
    let mut rho = rho0.matrix().clone();
    if t > 0.0 && steps > 0 {
        let dt = t / steps as f64;
        let mut rk = Rk4::new(Rhs::with_bands(d, params, &occupied_bands(&rho)));
        for _ in 0..steps {
            rk.step(rho.as_mut_slice(), dt);
        }
    }
    Ok(DensityMatrix::from_parts(rho))
}

/// Integrates to time `t`, halving the step until successive passes agree
/// within `config.convergence_tol` (Frobenius).
pub fn integrate(
    rho0: &DensityMatrix,
    params: &LaserParams,
    t: f64,
    config: &IntegratorConfig,
) -> Result<DensityMatrix> {
    integrate_with_report(rho0, params, t, config).map(|(rho, _)| rho)
}

pub fn integrate_with_report(
    rho0: &DensityMatrix,
    params: &LaserParams,
    t: f64,
    config: &IntegratorConfig,
) -> Result<(DensityMatrix, IntegrationReport)> {
    config.validate(params)?;
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    if t == 0.0 {
        let report = IntegrationReport { steps: 0, dt: 0.0, halvings: 0, last_change: 0.0 };
        return Ok((rho0.clone(), report));
    }
    let dt0 = config.dt.min(stable_dt(rho0.dim(), params));
    let mut steps = (t / dt0).ceil() as usize;
    let budget = |steps: usize| {
        if steps > config.max_steps {
            Err(Error::StepBudget { steps, max_steps: config.max_steps })
        } else {
            Ok(())
        }
    };
    budget(steps)?;
    let mut previous = integrate_fixed(rho0, params, t, steps)?;
    let mut change = f64::INFINITY;
    for halvings in 1..=config.max_halvings {
        steps *= 2;
        budget(steps)?;
        let next = integrate_fixed(rho0, params, t, steps)?;
        change = next.frobenius_distance(&previous);
        if change < config.convergence_tol {
            let report = IntegrationReport { steps, dt: t / steps as f64, halvings, last_change: change };
            return Ok((next, report));
        }
        previous = next;
    }
    Err(Error::NoConvergence { halvings: config.max_halvings, change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{number_state, thermal_state, PhotonStatistics};

    fn params(g: f64, kappa: f64) -> LaserParams {
        LaserParams::new(g, kappa).unwrap()
    }

    fn max_abs(m: &DMatrix<Complex64>, rows: usize) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..rows {
            for j in 0..rows {
                worst = worst.max(m[(i, j)].norm());
            }
        }
        worst
    }

    #[test]
    fn thermal_state_is_stationary() {
        let rho = DensityMatrix::from_diagonal(&thermal_state(1.0, 48).unwrap()).unwrap();
        let rhs = lindblad_rhs(&rho, &params(1.0, 2.0));
        // Only the last level sees the missing gain-out flux.
        assert!(max_abs(&rhs, 47) < 1e-10);
    }

    #[test]
    fn vacuum_is_dark_for_pure_loss() {
        let rhs = lindblad_rhs(&number_state(0, 6).unwrap(), &params(0.0, 1.0));
        assert_eq!(max_abs(&rhs, 6), 0.0);
    }

    #[test]
    fn right_hand_side_is_trace_free_inside() {
        let rho = DensityMatrix::from_diagonal(&thermal_state(0.5, 40).unwrap()).unwrap();
        for (g, kappa) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
            let rhs = lindblad_rhs(&rho, &params(g, kappa));
            let d = rho.dim();
            let tr: f64 = (0..d).map(|k| rhs[(k, k)].re).sum();
            // boundary leak is -2 g D ρ_{D-1, D-1}
            let leak = -2.0 * g * d as f64 * rho.get(d - 1, d - 1).re;
            assert!((tr - leak).abs() < 1e-12, "{tr} vs {leak}");
        }
    }

    #[test]
    fn time_zero_is_identity() {
        let rho0 = number_state(2, 5).unwrap();
        let rho = integrate(&rho0, &params(1.0, 2.0), 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(rho, rho0);
    }

    #[test]
    fn config_validation() {
        let p = params(2.0, 1.0);
        let mut cfg = IntegratorConfig::default();
        assert!(cfg.validate(&p).is_ok());
        cfg.dt = 0.03;
        assert!(cfg.validate(&p).is_err());
        cfg.dt = -1.0;
        assert!(cfg.validate(&p).is_err());
        let cfg = IntegratorConfig { max_steps: 10, ..IntegratorConfig::default() };
        assert!(matches!(
            integrate(&number_state(0, 4).unwrap(), &p, 1.0, &cfg),
            Err(Error::StepBudget { .. })
        ));
    }

    #[test]
    fn pure_loss_number_decay() {
        // <n>(t) = n0 e^{-2 κ t} for pure loss.
        let p = params(0.0, 1.0);
        let (rho, report) =
            integrate_with_report(&number_state(3, 6).unwrap(), &p, 0.5, &IntegratorConfig::default()).unwrap();
        assert!(report.last_change < 1e-9);
        assert!((rho.expect_n() - 3.0 * (-1.0f64).exp()).abs() < 1e-9);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn band_restriction_matches_full_right_hand_side() {
        let z = Complex64::new(0.7, -0.4);
        let rho = crate::fock::coherent_state(z, 12).unwrap().embed(16).unwrap();
        let p = params(1.5, 0.5);
        let full = lindblad_rhs(&rho, &p);
        let banded = Rhs::with_bands(16, &p, &occupied_bands(rho.matrix()));
        assert_eq!(occupied_bands(rho.matrix()), (0..12).collect::<Vec<_>>());
        let mut out = vec![Complex64::new(0.0, 0.0); 256];
        banded.apply(rho.matrix().as_slice(), &mut out);
        assert_eq!(out.as_slice(), full.as_slice());
    }

    #[test]
    fn hermitize_symmetrizes() {
        let mut m = vec![
            Complex64::new(1.0, 0.3),
            Complex64::new(0.2, 0.1),
            Complex64::new(0.4, 0.1),
            Complex64::new(2.0, -0.1),
        ];
        hermitize(&mut m, 2, &[0, 1, 2, 3]);
        assert_eq!(m[0], Complex64::new(1.0, 0.0));
        assert_eq!(m[1], m[2].conj());
        assert!((m[2] - Complex64::new(0.3, 0.0)).norm() < 1e-15);
    }
}
