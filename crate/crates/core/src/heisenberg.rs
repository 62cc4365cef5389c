//! Evolving operators `A_t = sum_ij M_ij^dag A M_ij`, so that
//! `Tr(A rho(t)) = Tr(A_t rho_0)` without evolving the state.
//!
//! Everything here follows from the generating function
//!
//! ```text
//! (e^{λ a^dag a})_t = T3 / (1 - g T1 e^λ) · exp[a^dag a · ln(T2² e^λ / (1 - g T1 e^λ) + κ T1)]
//! ```
//!
//! Writing `A = (T2/T3)^2` and `B = g T1 / T3`, the normally ordered moments
//! evolve as
//!
//! ```text
//! (a^dag^m a^m)_t = m! sum_k C(m, k) A^k B^(m-k) / k! · a^dag^k a^k
//! ```
//!
//! which gives `(a^dag a)_t = A a^dag a + B` and
//! `(a^dag^2 a^2)_t = 2B² + 4AB a^dag a + A² a^dag^2 a^2`.

use crate::channel::{t_coeffs, LaserParams, Regime};
use crate::error::{Error, Result};
use crate::lnfact::{ln_binomial, ln_factorial};

/// Below this `|2(g - kappa) t|` the balanced-limit series is used for
/// `expm1(x) / x`.
const SERIES_SWITCH: f64 = 1e-7;
const MAX_MOMENT_ORDER: usize = 64;

/// The diagonal operator `prefactor · exponent_coeff^(a^dag a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedDiagonalOperator {
    pub prefactor: f64,
    pub exponent_coeff: f64,
}

impl EvolvedDiagonalOperator {
    /// Eigenvalue on `|n>`.
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.prefactor * self.exponent_coeff.powi(n as i32)
    }

    /// `Tr(op · rho)` for a state with populations `pops`.
    pub fn expectation(&self, pops: &[f64]) -> f64 {
        let mut power = self.prefactor;
        let mut acc = 0.0;
        for &p in pops {
            acc += p * power;
            power *= self.exponent_coeff;
        }
        acc
    }
}

/// `(a^dag a)_t = alpha a^dag a + beta` and
/// `(a^dag^2 a^2)_t = c0 + c1 a^dag a + c2 a^dag^2 a^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MomentCoefficients {
    pub fn new(params: &LaserParams, t: f64) -> Result<Self> {
        let (a, b) = growth_and_offset(params, t)?;
        Ok(Self { alpha: a, beta: b, c0: 2.0 * b * b, c1: 4.0 * a * b, c2: a * a })
    }

    /// `<a^dag a>_t` from `<a^dag a>_0`.
    pub fn mean(&self, n0: f64) -> f64 {
        self.alpha * n0 + self.beta
    }

    /// `<a^dag^2 a^2>_t` from `<a^dag a>_0` and `<a^dag^2 a^2>_0`.
    pub fn second_factorial(&self, n0: f64, f2_0: f64) -> f64 {
        self.c0 + self.c1 * n0 + self.c2 * f2_0
    }

    /// `<a^dag^2 a^2>_t / <a^dag a>_t^2`.
    pub fn g2(&self, n0: f64, g2_0: f64) -> f64 {
        let n = self.mean(n0);
        self.second_factorial(n0, g2_0 * n0 * n0) / (n * n)
    }
}

/// `expm1(x) / x`, continuous through `x = 0`.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `(A, B) = (e^{2(g-κ)t}, g (e^{2(g-κ)t} - 1) / (g - κ))`, with `B -> 2 g t`
/// as `g -> κ`.
fn growth_and_offset(params: &LaserParams, t: f64) -> Result<(f64, f64)> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let (g, kappa) = (params.gain(), params.loss());
    if t == f64::INFINITY {
        return Ok(match params.regime() {
            Regime::LossDominated => (0.0, g / (kappa - g)),
            _ => (f64::INFINITY, f64::INFINITY),
        });
    }
    let x = 2.0 * (g - kappa) * t;
    Ok((x.exp(), 2.0 * g * t * expm1_ratio(x)))
}

/// Closed form of `(e^{λ a^dag a})_t`, valid for `g T1 e^λ < 1`.
pub fn evolved_exp_lambda_n(params: &LaserParams, t: f64, lambda: f64) -> Result<EvolvedDiagonalOperator> {
    let c = t_coeffs(params, t)?;
    let y = c.gain_ratio(params);
    let e = lambda.exp();
    let den = 1.0 - y * e;
    if !(den > 0.0) {
        return Err(Error::Divergence { lambda, bound: -y.ln() });
    }
    Ok(EvolvedDiagonalOperator {
        prefactor: c.t3 / den,
        exponent_coeff: c.t2 * c.t2 * e / den + c.loss_ratio(params),
    })
}

/// Coefficients of `(a^dag^m a^m)_t` in the basis
/// `{1, a^dag a, a^dag^2 a^2, ..., a^dag^m a^m}`.
pub fn evolved_normal_moment(params: &LaserParams, t: f64, m: usize) -> Result<Vec<f64>> {
    if m > MAX_MOMENT_ORDER {
        return Err(Error::UnsupportedOrder(m));
    }
    let (a, b) = growth_and_offset(params, t)?;
    let ln_mf = ln_factorial(m);
    Ok((0..=m)
        .map(|k| {
            let mag = ln_mf - ln_factorial(k) + ln_binomial(m, k);
            let pow = |v: f64, e: usize| if e == 0 { 1.0 } else { v.powi(e as i32) };
            mag.exp() * pow(a, k) * pow(b, m - k)
        })
        .collect())
}

/// `<a^dag a>_t = e^{2(g-κ)t} (n0 + g/(g-κ)) - g/(g-κ)`, or `n0 + 2 g t` when
/// balanced.
pub fn expected_n(params: &LaserParams, t: f64, n0: f64) -> Result<f64> {
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::Validation(format!("initial mean {n0} must be finite and >= 0")));
    }
    let (a, b) = growth_and_offset(params, t)?;
    Ok(if a.is_infinite() { a } else { a * n0 + b })
}

fn check_g2_inputs(n0: f64, g2_0: f64) -> Result<()> {
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(Error::UndefinedObservable(format!(
            "second-degree coherence needs a positive initial mean photon number, got {n0}"
        )));
    }
    let bound = 1.0 - 1.0 / n0;
    if !(g2_0 >= bound - 1e-12) || !g2_0.is_finite() {
        return Err(Error::InconsistentInput(format!(
            "g2_0 = {g2_0} is below the physical bound 1 - 1/n0 = {bound}"
        )));
    }
    Ok(())
}

/// `χ(t) = g T1 / (e^{2(g-κ)t} n0 T3)`.
pub fn chi(params: &LaserParams, t: f64, n0: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == f64::INFINITY {
        return Ok(match params.regime() {
            Regime::GainDominated => {
                params.gain() / ((params.gain() - params.loss()) * n0)
            }
            _ => f64::INFINITY,
        });
    }
    // B / (A n0) = 2 g t (1 - e^{-x}) / (x n0) with x = 2(g - κ)t
    let x = 2.0 * (params.gain() - params.loss()) * t;
    Ok(2.0 * params.gain() * t * expm1_ratio(-x) / n0)
}

/// `g2(t) = 2 + (g2_0 - 2) / (1 + χ(t))^2`.
pub fn g2(params: &LaserParams, t: f64, n0: f64, g2_0: f64) -> Result<f64> {
    check_g2_inputs(n0, g2_0)?;
    let chi = chi(params, t, n0)?;
    if chi.is_infinite() {
        return Ok(2.0);
    }
    Ok(2.0 + (g2_0 - 2.0) / ((1.0 + chi) * (1.0 + chi)))
}

/// Long-time coherence for `g > κ`, with `χ∞ = g / ((g - κ) n0)`. Exceeds one
/// for every physical `(n0, g2_0)`.
pub fn g2_infinity(params: &LaserParams, n0: f64, g2_0: f64) -> Result<f64> {
    if params.regime() != Regime::GainDominated {
        return Err(Error::Regime { expected: "gain-dominated", found: params.regime() });
    }
    g2(params, f64::INFINITY, n0, g2_0)
}

/// Asymptotic growth exponent `2 δ (g - κ)` of `<(a^dag a)^δ>`.
pub fn moment_growth_rate(params: &LaserParams, delta: usize) -> Result<f64> {
    if params.regime() != Regime::GainDominated {
        return Err(Error::Regime { expected: "gain-dominated", found: params.regime() });
    }
    if delta == 0 {
        return Err(Error::UnsupportedOrder(0));
    }
    Ok(2.0 * delta as f64 * (params.gain() - params.loss()))
}
