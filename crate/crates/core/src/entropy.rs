//! Closed-form entropy results for the laser channel, in nats.

use crate::channel::{t_coeffs, LaserParams, Regime};
use crate::error::{Error, Result};

/// Long-time sandwich `lower <= S(t) <= upper` for a number-diagonal input
/// when `g > kappa`; both bounds grow with `slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBounds {
    pub lower: f64,
    pub upper: f64,
    pub slope: f64,
}

impl EntropyBounds {
    pub fn contains(&self, s: f64, slack: f64) -> bool {
        s >= self.lower - slack && s <= self.upper + slack
    }
}

/// Entropy of an evolved coherent state,
/// `-(ln T3 + (g T1 / (1 - g T1)) ln(g T1))`. The amplitude drops out.
pub fn coherent_entropy(params: &LaserParams, t: f64) -> Result<f64> {
    let c = t_coeffs(params, t)?;
    let y = c.gain_ratio(params);
    let geometric = if y > 0.0 { y / c.t3 * y.ln() } else { 0.0 };
    Ok((-(c.t3.ln() + geometric)).max(0.0))
}

/// Entropy of the steady state, `(g/(κ-g)) ln(κ/g) + ln(κ/(κ-g))`.
pub fn steady_entropy(params: &LaserParams) -> Result<f64> {
    if params.regime() != Regime::LossDominated {
        return Err(Error::Regime { expected: "loss-dominated", found: params.regime() });
    }
    let (g, kappa) = (params.gain(), params.loss());
    let thermal = if g > 0.0 { g / (kappa - g) * (kappa / g).ln() } else { 0.0 };
    Ok(thermal + (kappa / (kappa - g)).ln())
}

/// Lower bound on the entropy of any evolved state with a non-negative
/// P function: concavity puts it above the coherent-state entropy.
pub fn p_mixture_entropy_lower_bound(params: &LaserParams, t: f64) -> Result<f64> {
    coherent_entropy(params, t)
}

/// Asymptotic bounds for a number-diagonal input with mean `n0` and
/// population generating function value `f_at = f(κ/g)`:
///
/// ```text
/// 2(g-κ)t + ln(g/(g-κ))  <=  S  <=  2(g-κ)t + ln(g/((g-κ) f_at)) + 1 + (g-κ) n0 / g
/// ```
pub fn entropy_asymptote(params: &LaserParams, t: f64, n0: f64, f_at: f64) -> Result<EntropyBounds> {
    if params.regime() != Regime::GainDominated {
        return Err(Error::Regime { expected: "gain-dominated", found: params.regime() });
    }
    if !(f_at > 0.0 && f_at <= 1.0) {
        return Err(Error::Domain(format!("f(kappa/g) = {f_at} must lie in (0, 1]")));
    }
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::Domain(format!("initial mean {n0} must be finite and >= 0")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    let (g, kappa) = (params.gain(), params.loss());
    let slope = 2.0 * (g - kappa);
    let offset = (g / (g - kappa)).ln();
    Ok(EntropyBounds {
        lower: slope * t + offset,
        upper: slope * t + offset - f_at.ln() + 1.0 + (g - kappa) / g * n0,
        slope,
    })
}

/// Entropy per photon, `S / n`.
pub fn specific_entropy(entropy: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::Domain(format!("mean photon number {n} must be positive")));
    }
    Ok(entropy / n)
}
