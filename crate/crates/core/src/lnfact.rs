//! Logarithms of factorials and binomial coefficients.
//!
//! Fock-space weights such as `sqrt(m! n!)` overflow `f64` for `m` in the
//! low hundreds, so every combinatorial factor is carried as a logarithm.
//! Small arguments come from a table built by compensated summation of
//! `ln k`; large arguments use the Stirling series for `ln Γ(n + 1)`.

use std::sync::OnceLock;

const TABLE_LEN: usize = 8192;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(TABLE_LEN);
        let mut sum = 0.0_f64;
        let mut carry = 0.0_f64;
        out.push(0.0);
        for k in 1..TABLE_LEN {
            // Kahan summation keeps the table accurate to a few ulps of ln(k!).
            let y = (k as f64).ln() - carry;
            let t = sum + y;
            carry = (t - sum) - y;
            sum = t;
            out.push(sum);
        }
        out
    })
}

fn stirling(n: f64) -> f64 {
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n * n.ln() - n
        + 0.5 * (std::f64::consts::TAU * n).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        table()[n]
    } else {
        stirling(n as f64)
    }
}

/// `ln C(n, k)`; `-inf` when `k > n`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `k * ln(x)` with the convention `0 * ln(0) = 0`, so that `x^0 = 1` also
/// holds for `x = 0` in log space.
pub(crate) fn ln_pow(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values_are_exact() {
        let mut f = 1.0_f64;
        for n in 0..=20 {
            if n > 0 {
                f *= n as f64;
            }
            assert!((ln_factorial(n) - f.ln()).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn stirling_matches_table_at_the_seam() {
        for n in [1000usize, 4000, 8191] {
            let rel = (stirling(n as f64) - table()[n]).abs() / table()[n];
            assert!(rel < 1e-15, "n = {n}: rel {rel:e}");
        }
    }

    #[test]
    fn binomial() {
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-13);
        assert_eq!(ln_binomial(5, 0), 0.0);
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
    }

    #[test]
    fn ln_pow_zero_exponent() {
        assert_eq!(ln_pow(0.0, 0), 0.0);
        assert_eq!(ln_pow(0.0, 2), f64::NEG_INFINITY);
        assert!((ln_pow(2.0, 3) - 8f64.ln()).abs() < 1e-15);
    }
}
