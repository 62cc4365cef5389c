//! The laser channel: closed-form Kraus evolution of a single field mode
//! under gain `g` and loss `kappa`.
//!
//! The Kraus operators are
//!
//! ```text
//! M_ij = sqrt(T3 kappa^i g^j T1^(i+j) / (i! j! T2^(2j))) exp(a^dag a ln T2) a^dag^j a^i
//! ```
//!
//! with time-dependent coefficients `T1, T2, T3`. Acting on a Fock matrix the
//! sum `sum_ij M_ij rho M_ij^dag` factorizes into a loss pass over `i`, a
//! `T2^(m+n)` damping and a gain pass over `j`, and each diagonal band
//! `rho_{m, m+k}` evolves independently of the others. [`propagate_fock`]
//! exploits both facts; its cost is `O(d0^2 D)` for an input basis of `d0`
//! levels and an output basis of `D` levels.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{thermal_state, DensityMatrix, DiagonalState, PhotonStatistics, MAX_DENSE_DIM};
use crate::lnfact::{ln_binomial, ln_factorial, ln_pow};

/// Below this value of `|kappa - g| t` the balanced-limit forms replace the
/// direct expressions for `T1, T2, T3`.
pub const BALANCED_SWITCH: f64 = 1e-7;

/// Gain and loss rates of the channel (inverse time units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    gain: f64,
    loss: f64,
}

impl LaserParams {
    pub fn new(gain: f64, loss: f64) -> Result<Self> {
        let ok = |r: f64| r.is_finite() && r >= 0.0;
        if !ok(gain) || !ok(loss) {
            return Err(Error::Validation(format!(
                "rates must be finite and non-negative (g = {gain}, kappa = {loss})"
            )));
        }
        if gain == 0.0 && loss == 0.0 {
            return Err(Error::Validation("g and kappa cannot both be zero".into()));
        }
        Ok(Self { gain, loss })
    }

    /// `g`
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// `kappa`
    pub fn loss(&self) -> f64 {
        self.loss
    }

    pub fn regime(&self) -> Regime {
        if self.loss > self.gain {
            Regime::LossDominated
        } else if self.gain > self.loss {
            Regime::GainDominated
        } else {
            Regime::Balanced
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `kappa > g`: the field thermalizes.
    LossDominated,
    /// `g > kappa`: the photon number grows without bound.
    GainDominated,
    /// `kappa == g`
    Balanced,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::LossDominated => "loss-dominated",
            Regime::GainDominated => "gain-dominated",
            Regime::Balanced => "balanced",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(T1, T2, T3)` at one instant. They satisfy `T3 = 1 - g T1` and
/// `T2^2 / T3 = 1 - kappa T1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TCoefficients {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub regime: Regime,
}

impl TCoefficients {
    /// `(|T3 - (1 - g T1)|, |T2^2/T3 - (1 - kappa T1)|)`
    pub fn identity_residuals(&self, params: &LaserParams) -> (f64, f64) {
        let first = (self.t3 - (1.0 - params.gain * self.t1)).abs();
        let second = if self.t3 > 0.0 {
            (self.t2 * self.t2 / self.t3 - (1.0 - params.loss * self.t1)).abs()
        } else {
            0.0
        };
        (first, second)
    }

    /// `g T1`, the geometric ratio of the gain pass.
    pub fn gain_ratio(&self, params: &LaserParams) -> f64 {
        params.gain * self.t1
    }

    /// `kappa T1`, the argument of the population generating function.
    pub fn loss_ratio(&self, params: &LaserParams) -> f64 {
        params.loss * self.t1
    }
}

/// Evaluates `T1, T2, T3` at time `t` (`t = +inf` gives the long-time limit).
pub fn t_coeffs(params: &LaserParams, t: f64) -> Result<TCoefficients> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let (g, kappa) = (params.gain, params.loss);
    let regime = params.regime();
    let s = (kappa - g).abs();

    if t == f64::INFINITY && s == 0.0 {
        return Ok(TCoefficients { t1: 1.0 / g, t2: 0.0, t3: 0.0, regime });
    }

    let (t1, t2, t3) = if s * t > BALANCED_SWITCH {
        direct_coeffs(g, kappa, t)
    } else {
        balanced_coeffs(g, kappa, t)
    };
    Ok(TCoefficients { t1, t2, t3, regime })
}

/// The defining ratios, written with `exp(-|kappa - g| t)` only so nothing
/// overflows when `g > kappa`.
fn direct_coeffs(g: f64, kappa: f64, t: f64) -> (f64, f64, f64) {
    let s = (kappa - g).abs();
    let st = s * t;
    let decay = (-2.0 * st).exp();
    let rise = -(-2.0 * st).exp_m1();
    let half = (-st).exp();
    if kappa > g {
        let den = s + g * rise;
        (rise / den, s * half / den, s / den)
    } else {
        let den = s + kappa * rise;
        (rise / den, s * half / den, s * decay / den)
    }
}

/// Symmetric balanced limit: exact at `kappa == g`, second order in
/// `|kappa - g| t` otherwise, and both identities hold by construction.
fn balanced_coeffs(g: f64, kappa: f64, t: f64) -> (f64, f64, f64) {
    let t1 = 2.0 * t / (1.0 + (g + kappa) * t);
    let t3 = 1.0 - g * t1;
    let t2 = (t3 * (1.0 - kappa * t1)).sqrt();
    (t1, t2, t3)
}

/// Natural log of the scalar weight `T3 kappa^i g^j T1^(i+j) / (i! j! T2^(2j))`
/// multiplying `M_ij`'s operator part (squared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausWeight {
    pub i: usize,
    pub j: usize,
    pub log_weight: f64,
}

pub fn kraus_weight(params: &LaserParams, coeffs: &TCoefficients, i: usize, j: usize) -> KrausWeight {
    let log_weight = coeffs.t3.ln() + ln_pow(params.loss, i) + ln_pow(params.gain, j)
        + ln_pow(coeffs.t1, i + j)
        - ln_factorial(i)
        - ln_factorial(j)
        - 2.0 * ln_pow(coeffs.t2, j);
    KrausWeight { i, j, log_weight }
}

/// Matrix of `M_ij` from an `in_dim`-level basis to an `out_dim`-level basis.
/// Outputs beyond `out_dim` are dropped.
pub fn kraus_operator(
    params: &LaserParams,
    coeffs: &TCoefficients,
    i: usize,
    j: usize,
    in_dim: usize,
    out_dim: usize,
) -> DMatrix<f64> {
    let w = kraus_weight(params, coeffs, i, j).log_weight;
    let mut op = DMatrix::zeros(out_dim, in_dim);
    for m in i..in_dim {
        let out = m - i + j;
        if out >= out_dim {
            continue;
        }
        // exp(N ln T2) a^dag^j a^i |m> = T2^out sqrt(m!/(m-i)!) sqrt(out!/(m-i)!) |out>
        let ln_elem = 0.5 * w + ln_pow(coeffs.t2, out)
            + 0.5 * (ln_factorial(m) + ln_factorial(out))
            - ln_factorial(m - i);
        op[(out, m)] = ln_elem.exp();
    }
    op
}

/// Acceptance thresholds applied to an evolved state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPolicy {
    /// Upper bound on the population of the last retained level.
    pub max_last_population: f64,
    /// Upper bound on `|Tr rho - 1|`.
    pub max_defect: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { max_last_population: 1e-8, max_defect: 1e-10 }
    }
}

impl TailPolicy {
    pub fn check<S: PhotonStatistics>(&self, state: &S, predicted_mean: f64) -> Result<()> {
        let pops = state.populations();
        let out_dim = pops.len();
        let tail = *pops.last().unwrap_or(&0.0);
        let defect = state.trace_defect();
        if tail < self.max_last_population && defect <= self.max_defect {
            return Ok(());
        }
        let by_mean = if predicted_mean.is_finite() {
            (23.0 * (predicted_mean + 1.0)).ceil().min(usize::MAX as f64 / 4.0) as usize
        } else {
            usize::MAX / 4
        };
        Err(Error::TruncationOverflow {
            out_dim,
            tail,
            defect,
            suggested_dim: by_mean.max(2 * out_dim),
        })
    }
}

/// `|Tr rho - 1|`, the truncation-quality metric of an evolved state.
pub fn trace_defect<S: PhotonStatistics>(state: &S) -> f64 {
    state.trace_defect()
}

/// `<n>_t` predicted from `<n>_0` through `(a^dag a)_t = g T1/T3 + (T2/T3)^2 a^dag a`.
fn predicted_mean(params: &LaserParams, c: &TCoefficients, n0: f64) -> f64 {
    let ratio = c.t2 / c.t3;
    params.gain * c.t1 / c.t3 + ratio * ratio * n0
}

fn check_finite_channel(params: &LaserParams, c: &TCoefficients, t: f64) -> Result<()> {
    if c.t3 > 0.0 && c.t3.is_finite() {
        return Ok(());
    }
    if t.is_infinite() {
        Err(Error::Regime { expected: "loss-dominated", found: params.regime() })
    } else {
        Err(Error::Overflow(format!(
            "T3 underflows at t = {t} (g = {}, kappa = {}); the photon number is beyond representable range",
            params.gain, params.loss
        )))
    }
}

/// Kraus evolution of an arbitrary state onto `out_dim` levels, followed by
/// the default [`TailPolicy`] check.
pub fn evolve_fock(rho0: &DensityMatrix, params: &LaserParams, t: f64, out_dim: usize) -> Result<DensityMatrix> {
    let rho = propagate_fock(rho0, params, t, out_dim)?;
    let c = t_coeffs(params, t)?;
    TailPolicy::default().check(&rho, predicted_mean(params, &c, rho0.expect_n()))?;
    Ok(rho)
}

/// Kraus evolution without the tail check: whatever leaks beyond `out_dim`
/// shows up as trace defect.
pub fn propagate_fock(rho0: &DensityMatrix, params: &LaserParams, t: f64, out_dim: usize) -> Result<DensityMatrix> {
    if out_dim == 0 || out_dim > MAX_DENSE_DIM {
        return Err(Error::Dimension { dim: out_dim, max: MAX_DENSE_DIM });
    }
    let c = t_coeffs(params, t)?;
    check_finite_channel(params, &c, t)?;

    let ln_x = ln_or_neg_inf(c.loss_ratio(params));
    let ln_y = ln_or_neg_inf(c.gain_ratio(params));
    let ln_t2 = ln_or_neg_inf(c.t2);
    let ln_t3 = c.t3.ln();
    let pow = |ln_base: f64, k: usize| if k == 0 { 0.0 } else { k as f64 * ln_base };

    let d0 = rho0.dim();
    let src = rho0.matrix();
    let mut out = DMatrix::<Complex64>::zeros(out_dim, out_dim);
    let zero = Complex64::new(0.0, 0.0);

    for k in 0..d0.min(out_dim) {
        let len = d0 - k;
        let band: Vec<Complex64> = (0..len).map(|a| src[(a, a + k)]).collect();
        if band.iter().all(|v| *v == zero) {
            continue;
        }

        // Loss pass: sigma_b = T2^(2b+k) sum_i (x^i / i!) sqrt((b+i)!(b+k+i)! / (b!(b+k)!)) rho_{b+i, b+k+i}
        let mut sigma = vec![zero; len];
        for (b, slot) in sigma.iter_mut().enumerate() {
            let base = pow(ln_t2, 2 * b + k) - 0.5 * (ln_factorial(b) + ln_factorial(b + k));
            let mut acc = zero;
            for i in 0..len - b {
                let v = band[b + i];
                if v == zero {
                    continue;
                }
                let lw = base + pow(ln_x, i) - ln_factorial(i)
                    + 0.5 * (ln_factorial(b + i) + ln_factorial(b + k + i));
                if lw > -745.0 {
                    acc += v * lw.exp();
                }
            }
            *slot = acc;
        }

        // Gain pass: tau_p = T3 sum_j (y^j / j!) sqrt(p!(p+k)! / ((p-j)!(p+k-j)!)) sigma_{p-j}
        for p in 0..out_dim - k {
            let base = ln_t3 + 0.5 * (ln_factorial(p) + ln_factorial(p + k));
            let lowest = p.saturating_sub(len - 1);
            let mut acc = zero;
            for j in lowest..=p {
                let v = sigma[p - j];
                if v == zero {
                    continue;
                }
                let lw = base + pow(ln_y, j) - ln_factorial(j)
                    - 0.5 * (ln_factorial(p - j) + ln_factorial(p + k - j));
                if lw > -745.0 {
                    acc += v * lw.exp();
                }
            }
            if k == 0 {
                out[(p, p)] = Complex64::new(acc.re, 0.0);
            } else {
                out[(p, p + k)] = acc;
                out[(p + k, p)] = acc.conj();
            }
        }
    }
    Ok(DensityMatrix::from_parts(out))
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Population evolution of a number-diagonal state,
///
/// ```text
/// p_k(t) = sum_{m<=k} T3 (g T1)^(k-m) T2^(2m) k! / ((k-m)! m!^2) f^(m)(kappa T1),
/// ```
///
/// where `f(x) = sum_i p_i x^i`. Followed by the default [`TailPolicy`] check.
pub fn evolve_diagonal(p0: &DiagonalState, params: &LaserParams, t: f64, out_dim: usize) -> Result<DiagonalState> {
    let p = propagate_diagonal(p0, params, t, out_dim)?;
    let c = t_coeffs(params, t)?;
    TailPolicy::default().check(&p, predicted_mean(params, &c, p0.expect_n()))?;
    Ok(p)
}

/// [`evolve_diagonal`] without the tail check.
pub fn propagate_diagonal(p0: &DiagonalState, params: &LaserParams, t: f64, out_dim: usize) -> Result<DiagonalState> {
    if out_dim == 0 || out_dim > crate::fock::MAX_DIAGONAL_DIM {
        return Err(Error::Dimension { dim: out_dim, max: crate::fock::MAX_DIAGONAL_DIM });
    }
    let c = t_coeffs(params, t)?;
    check_finite_channel(params, &c, t)?;
    let x = c.loss_ratio(params);
    let y = c.gain_ratio(params);
    let probs = p0.probs();
    let d0 = probs.len();

    // derivs[m] = T2^(2m) f^(m)(x) / m!, the m-th derivative from the
    // term-wise differentiated series.
    let derivs: Vec<f64> = (0..d0)
        .map(|m| {
            let mut acc = 0.0;
            for i in 0..d0 - m {
                let pi = probs[m + i];
                if pi == 0.0 {
                    continue;
                }
                let lw = ln_binomial(m + i, i) + ln_pow(x, i) + 2.0 * ln_pow(c.t2, m);
                acc += pi * lw.exp();
            }
            acc
        })
        .collect();

    let ln_t3 = c.t3.ln();
    let out = (0..out_dim)
        .map(|k| {
            let mut acc = 0.0;
            for (m, &dm) in derivs.iter().enumerate().take(k + 1) {
                if dm == 0.0 {
                    continue;
                }
                acc += dm * (ln_t3 + ln_pow(y, k - m) + ln_binomial(k, m)).exp();
            }
            acc
        })
        .collect();
    Ok(DiagonalState::from_parts(out))
}

/// Retries `evolve` with a doubled basis while it reports truncation
/// overflow, up to `ceiling` levels. Returns the result and the basis used.
pub fn grow_until_fits<T>(
    start_dim: usize,
    ceiling: usize,
    mut evolve: impl FnMut(usize) -> Result<T>,
) -> Result<(T, usize)> {
    let mut dim = start_dim.max(1);
    loop {
        match evolve(dim) {
            Ok(v) => return Ok((v, dim)),
            Err(e @ Error::TruncationOverflow { .. }) => {
                if dim >= ceiling {
                    return Err(e);
                }
                dim = (2 * dim).min(ceiling);
            }
            Err(e) => return Err(e),
        }
    }
}

/// The `t -> inf` state for `kappa > g`: geometric populations
/// `(1 - g/kappa) (g/kappa)^j`, i.e. a thermal state of mean `g / (kappa - g)`.
pub fn steady_state(params: &LaserParams, dim: usize) -> Result<DiagonalState> {
    if params.regime() != Regime::LossDominated {
        return Err(Error::Regime { expected: "loss-dominated", found: params.regime() });
    }
    thermal_state(params.gain / (params.loss - params.gain), dim)
}

/// Temperature of the steady state, `1 / ln(kappa / g)` with `ħω = k_B = 1`.
pub fn equivalent_temperature(params: &LaserParams) -> Result<f64> {
    if params.regime() != Regime::LossDominated {
        return Err(Error::Regime { expected: "loss-dominated", found: params.regime() });
    }
    Ok(1.0 / (params.loss / params.gain).ln())
}
