//! Truncated Fock space: basis, single-mode states, photon statistics and
//! von Neumann entropy.
//!
//! A state on the truncated basis `|0>, ..., |dim-1>` is either a dense
//! [`DensityMatrix`] or, when it is diagonal in the number basis, a
//! [`DiagonalState`] holding only the occupation probabilities.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lnfact::ln_factorial;

/// Largest supported dense basis.
pub const MAX_DENSE_DIM: usize = 4096;
/// Largest supported diagonal (population-only) basis.
pub const MAX_DIAGONAL_DIM: usize = 1 << 20;
/// Probability mass a constructor may drop beyond the basis edge.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below this contribute nothing to the entropy.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;
/// Eigenvalues below `-NEGATIVE_EIGENVALUE_LIMIT` are a positivity violation.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = 1e-8;

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const TRACE_TOLERANCE: f64 = 1e-10;
const PSD_TOLERANCE: f64 = 1e-10;
const WEIGHT_TOLERANCE: f64 = 1e-12;
/// Successively coarser cut-offs below which entries are zeroed before the
/// eigensolver runs. Entries near the underflow range can turn the
/// tridiagonal reduction into NaN; anything below `1e-30` moves the
/// spectrum of a unit-trace matrix by far less than its rounding error.
const UNDERFLOW_FLUSH: [f64; 3] = [1e-100, 1e-60, 1e-30];

/// The retained number states `|0>, ..., |dim-1>`.
///
/// Ladder operators act as `a|m> = sqrt(m)|m-1>` and
/// `a^dag|m> = sqrt(m+1)|m+1>`; raising out of the top level leaves the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    dim: usize,
}

impl FockBasis {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim, MAX_DENSE_DIM)?;
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, n: usize) -> bool {
        n < self.dim
    }

    /// `a|m>` as `(m - 1, sqrt(m))`, or `None` for the vacuum.
    pub fn lower(&self, m: usize) -> Option<(usize, f64)> {
        (m > 0 && m < self.dim).then(|| (m - 1, (m as f64).sqrt()))
    }

    /// `a^dag|m>` as `(m + 1, sqrt(m + 1))`, or `None` at the basis edge.
    pub fn raise(&self, m: usize) -> Option<(usize, f64)> {
        (m + 1 < self.dim).then(|| (m + 1, ((m + 1) as f64).sqrt()))
    }
}

fn check_dim(dim: usize, max: usize) -> Result<()> {
    if dim == 0 || dim > max {
        Err(Error::Dimension { dim, max })
    } else {
        Ok(())
    }
}

/// Moments of the photon-number distribution. Everything here depends only
/// on the populations `rho_kk`.
pub trait PhotonStatistics {
    fn populations(&self) -> Vec<f64>;

    /// `<a^dag a>`
    fn expect_n(&self) -> f64 {
        self.populations().iter().enumerate().map(|(m, p)| m as f64 * p).sum()
    }

    /// `<(a^dag a)^2>`
    fn expect_n2(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(m, p)| (m * m) as f64 * p)
            .sum()
    }

    /// `<a^dag^2 a^2>`
    fn expect_a2dag_a2(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .skip(2)
            .map(|(m, p)| (m as f64) * (m as f64 - 1.0) * p)
            .sum()
    }

    /// Second-degree coherence, `None` when `<n>` is below `1e-12`.
    fn g2(&self) -> Option<f64> {
        let n = self.expect_n();
        (n >= 1e-12).then(|| self.expect_a2dag_a2() / (n * n))
    }

    /// `|Tr rho - 1|`.
    fn trace_defect(&self) -> f64 {
        (self.populations().iter().sum::<f64>() - 1.0).abs()
    }
}

/// Complex Hermitian, unit-trace, positive semidefinite matrix on a truncated
/// Fock basis.
///
/// Matrices produced by the laser channel are also represented by this type;
/// they may have lost a little trace through the basis edge, which is what
/// [`PhotonStatistics::trace_defect`] reports.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates every density-matrix invariant, including positivity.
    pub fn from_matrix(elements: DMatrix<Complex64>) -> Result<Self> {
        if elements.nrows() != elements.ncols() {
            return Err(Error::Validation(format!(
                "density matrix must be square, got {}x{}",
                elements.nrows(),
                elements.ncols()
            )));
        }
        check_dim(elements.nrows(), MAX_DENSE_DIM)?;
        let rho = Self { elements };
        let herm = rho.hermiticity_error();
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::Validation(format!("trace is {tr}, expected 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            return Err(Error::Positivity { eigenvalue: min });
        }
        Ok(rho)
    }

    /// Wraps a matrix the caller has built Hermitian and positive by
    /// construction. Trace is not checked.
    pub(crate) fn from_parts(elements: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(elements.nrows(), elements.ncols());
        Self { elements }
    }

    pub fn from_diagonal(state: &DiagonalState) -> Result<Self> {
        let dim = state.dim();
        check_dim(dim, MAX_DENSE_DIM)?;
        let mut elements = DMatrix::zeros(dim, dim);
        for (k, &p) in state.probs().iter().enumerate() {
            elements[(k, k)] = Complex64::new(p, 0.0);
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn basis(&self) -> FockBasis {
        FockBasis { dim: self.dim() }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.elements
    }

    /// `rho_mn`; zero outside the stored block.
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        if m < self.dim() && n < self.dim() {
            self.elements[(m, n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.elements[(k, k)].re).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for m in 0..d {
            for n in m..d {
                let dev = (self.elements[(m, n)] - self.elements[(n, m)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// True when every off-diagonal element is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|m| (0..d).all(|n| m == n || self.elements[(m, n)] == Complex64::new(0.0, 0.0)))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = if self.is_diagonal() {
            self.populations()
        } else {
            hermitian_eigenvalues(&self.elements)
        };
        vals.sort_by(f64::total_cmp);
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Frobenius distance; a smaller matrix is zero-padded to the larger basis.
    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        let d = self.dim().max(other.dim());
        let mut acc = 0.0;
        for m in 0..d {
            for n in 0..d {
                acc += (self.get(m, n) - other.get(m, n)).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Zero-pads to a larger basis.
    pub fn embed(&self, dim: usize) -> Result<Self> {
        check_dim(dim, MAX_DENSE_DIM)?;
        if dim < self.dim() {
            return Err(Error::Validation(format!(
                "cannot embed a {}-level state into {dim} levels",
                self.dim()
            )));
        }
        let mut elements = DMatrix::zeros(dim, dim);
        elements
            .view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.elements);
        Ok(Self { elements })
    }

    /// `max_{m != n} |rho_mn| / max_k rho_kk`.
    pub fn offdiag_ratio(&self) -> f64 {
        let d = self.dim();
        let mut off = 0.0_f64;
        let mut diag = 0.0_f64;
        for m in 0..d {
            for n in 0..d {
                let v = self.elements[(m, n)].norm();
                if m == n {
                    diag = diag.max(v);
                } else {
                    off = off.max(v);
                }
            }
        }
        if diag > 0.0 {
            off / diag
        } else {
            0.0
        }
    }

    /// `-Tr(rho ln rho)` in nats.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        entropy_of_spectrum(&self.eigenvalues())
    }
}

impl PhotonStatistics for DensityMatrix {
    fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.elements[(k, k)].re).collect()
    }
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let zero = Complex64::new(0.0, 0.0);
    let mut vals = Vec::new();
    for cut in UNDERFLOW_FLUSH {
        let flushed = m.map(|z| if z.norm() < cut { zero } else { z });
        vals = flushed.symmetric_eigenvalues().iter().copied().collect::<Vec<f64>>();
        if vals.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    vals
}

/// `-sum λ ln λ` with the floor and clamping conventions of this crate.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lambda in eigenvalues {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("non-finite eigenvalue {lambda}")));
        }
        if lambda < -NEGATIVE_EIGENVALUE_LIMIT {
            return Err(Error::Positivity { eigenvalue: lambda });
        }
        if lambda >= EIGENVALUE_FLOOR {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Occupation probabilities of a state diagonal in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalState {
    probs: Vec<f64>,
}

impl DiagonalState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_dim(probs.len(), MAX_DIAGONAL_DIM)?;
        if let Some((k, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::Validation(format!("probability p[{k}] = {p} is not a non-negative number")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::Validation(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Non-negative populations whose sum may fall short of one.
    pub(crate) fn from_parts(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Shannon entropy of the populations, which is the von Neumann entropy
    /// of the diagonal density matrix.
    pub fn entropy(&self) -> f64 {
        entropy_of_spectrum(&self.probs).expect("populations are non-negative")
    }

    /// `f(x) = sum_i p_i x^i`.
    pub fn generating_function(&self, x: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, &p| acc * x + p)
    }
}

impl PhotonStatistics for DiagonalState {
    fn populations(&self) -> Vec<f64> {
        self.probs.clone()
    }
}

/// `|n><n|`.
pub fn number_state(n: usize, dim: usize) -> Result<DensityMatrix> {
    let basis = FockBasis::new(dim)?;
    if !basis.contains(n) {
        return Err(Error::OutOfBasis { n, dim });
    }
    let mut elements = DMatrix::zeros(dim, dim);
    elements[(n, n)] = Complex64::new(1.0, 0.0);
    Ok(DensityMatrix { elements })
}

/// Poisson mass `sum_{k >= from} e^{-mean} mean^k / k!`, summed directly.
pub fn poisson_tail(mean: f64, from: usize) -> f64 {
    if mean == 0.0 {
        return if from == 0 { 1.0 } else { 0.0 };
    }
    let ln_mean = mean.ln();
    let mut sum = 0.0;
    let mut k = from;
    loop {
        let term = (-mean + k as f64 * ln_mean - ln_factorial(k)).exp();
        sum += term;
        if (k as f64 > mean && term <= sum * 1e-18) || (term == 0.0 && k as f64 > mean) {
            break sum;
        }
        k += 1;
    }
}

/// Smallest basis holding a coherent state of amplitude `|z|` with at most
/// [`TAIL_TOLERANCE`] of its mass outside.
pub fn required_dim_coherent(z: Complex64) -> usize {
    let mean = z.norm_sqr();
    if poisson_tail(mean, 1) <= TAIL_TOLERANCE {
        return 1;
    }
    let mut d = (mean.floor() as usize).max(2);
    while poisson_tail(mean, d) > TAIL_TOLERANCE {
        d += 1;
    }
    d
}

/// Fock amplitudes `<m|z>` on the truncated basis, renormalized after the
/// tail check.
pub fn coherent_amplitudes(z: Complex64, dim: usize) -> Result<Vec<Complex64>> {
    check_dim(dim, MAX_DENSE_DIM)?;
    let mean = z.norm_sqr();
    let tail = poisson_tail(mean, dim);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Truncation {
            tail,
            tolerance: TAIL_TOLERANCE,
            required_dim: required_dim_coherent(z),
        });
    }
    let (r, theta) = z.to_polar();
    let ln_r = r.ln();
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|k| {
            let ln_mag = if k == 0 {
                -0.5 * mean
            } else {
                -0.5 * mean + k as f64 * ln_r - 0.5 * ln_factorial(k)
            };
            Complex64::from_polar(ln_mag.exp(), k as f64 * theta)
        })
        .collect();
    let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut amps {
        *c /= norm;
    }
    Ok(amps)
}

fn outer(amps: &[Complex64]) -> DMatrix<Complex64> {
    let d = amps.len();
    DMatrix::from_fn(d, d, |m, n| amps[m] * amps[n].conj())
}

/// `|z><z|` for the coherent state `|z> = exp(-|z|^2/2 + z a^dag)|0>`.
pub fn coherent_state(z: Complex64, dim: usize) -> Result<DensityMatrix> {
    let amps = coherent_amplitudes(z, dim)?;
    Ok(DensityMatrix { elements: outer(&amps) })
}

/// Smallest basis holding a thermal state of mean `nbar` within
/// [`TAIL_TOLERANCE`].
pub fn required_dim_thermal(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 1;
    }
    let q = nbar / (1.0 + nbar);
    (TAIL_TOLERANCE.ln() / q.ln()).ceil().max(1.0) as usize
}

/// Geometric distribution `p_j ∝ q^j`, `q = nbar / (1 + nbar)`.
pub fn thermal_state(nbar: f64, dim: usize) -> Result<DiagonalState> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::Validation(format!("mean occupation {nbar} must be finite and >= 0")));
    }
    check_dim(dim, MAX_DIAGONAL_DIM)?;
    let q = nbar / (1.0 + nbar);
    let tail = q.powf(dim as f64);
    if tail > TAIL_TOLERANCE {
        return Err(Error::Truncation {
            tail,
            tolerance: TAIL_TOLERANCE,
            required_dim: required_dim_thermal(nbar),
        });
    }
    let mut probs = Vec::with_capacity(dim);
    let mut p = 1.0 - q;
    for _ in 0..dim {
        probs.push(p);
        p *= q;
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(DiagonalState { probs })
}

/// Convex mixture `sum_k w_k |z_k><z_k|`: a state with a non-negative
/// Glauber-Sudarshan P function.
pub fn coherent_mixture(weights: &[f64], amps: &[Complex64], dim: usize) -> Result<DensityMatrix> {
    if weights.is_empty() || weights.len() != amps.len() {
        return Err(Error::Validation(format!(
            "need matching non-empty weights and amplitudes, got {} and {}",
            weights.len(),
            amps.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Validation(format!("mixture weight {w} is negative")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::Validation(format!("mixture weights sum to {total}, expected 1")));
    }
    let mut elements = DMatrix::zeros(dim, dim);
    for (&w, &z) in weights.iter().zip(amps) {
        let component = outer(&coherent_amplitudes(z, dim)?);
        elements += component * Complex64::new(w, 0.0);
    }
    Ok(DensityMatrix { elements })
}
