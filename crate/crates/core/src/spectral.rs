//! Periodograms, tapers, empirical covariances, spectral-matrix arithmetic
//! on frequency grids, and partial spectral coherence.
//!
//! All grids live on the `N` Fourier frequencies `lambda_j = 2 pi j / N`,
//! `j = 0..N`, and every integral over the frequency circle is the Riemann
//! sum `(2 pi / N) sum_j`. For the smooth rational spectra of stable
//! autoregressions these sums converge geometrically in `N`, and for
//! periodograms they reproduce the empirical covariances exactly once
//! `N >= 2 T`.

use nalgebra::DMatrix;
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GiParams;

pub type Complex64 = Complex<f64>;

/// Condition-number estimate above which a frequency is reported singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative imaginary residue tolerated when reading real covariances off a
/// conjugate-symmetric grid. Exceeding it signals a bug, not data to truncate.
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;

/// Grid size used when transforming data of length `T`: the smallest power
/// of two at least `4 T`, floored at 512.
pub fn data_grid_size(t: usize) -> usize {
    (4 * t).next_power_of_two().max(512)
}

/// Grid size used when evaluating model spectra of order `p`.
pub fn model_grid_size(p: usize) -> usize {
    (64 * (p + 1)).next_power_of_two().max(512)
}

/// A `T x d` block of observations with one column per component.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    labels: Vec<String>,
    demeaned: bool,
}

impl TimeSeries {
    /// Wraps raw observations (rows are time points). Requires `T >= 2`,
    /// finite entries, and one label per column.
    pub fn new(data: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        Self::build(data, labels, false)
    }

    /// Wraps observations that are already centered; each column sum must
    /// vanish within `1e-9 * T * scale`.
    pub fn new_demeaned(data: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let ts = Self::build(data, labels, true)?;
        let t = ts.len() as f64;
        for (j, col) in ts.data.column_iter().enumerate() {
            let scale = col.abs().max().max(1.0);
            if col.sum().abs() > 1e-9 * t * scale {
                return Err(Error::InvalidData(format!(
                    "column {j} ({}) is not centered (sum {:.3e})",
                    ts.labels[j],
                    col.sum()
                )));
            }
        }
        Ok(ts)
    }

    fn build(data: DMatrix<f64>, labels: Vec<String>, demeaned: bool) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InvalidData("need at least two time points".into()));
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidData("need at least one component".into()));
        }
        if labels.len() != data.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} columns",
                labels.len(),
                data.ncols()
            )));
        }
        if let Some((i, j)) = (0..data.nrows())
            .flat_map(|i| (0..data.ncols()).map(move |j| (i, j)))
            .find(|&(i, j)| !data[(i, j)].is_finite())
        {
            return Err(Error::InvalidData(format!(
                "non-finite value at row {i}, column {j}"
            )));
        }
        Ok(Self {
            data,
            labels,
            demeaned,
        })
    }

    /// Default labels `x0..x{d-1}`.
    pub fn default_labels(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("x{j}")).collect()
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_demeaned(&self) -> bool {
        self.demeaned
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn value(&self, t: usize, a: usize) -> f64 {
        self.data[(t, a)]
    }

    /// Subtracts each column's sample mean and marks the series as centered.
    pub fn demean(&self) -> TimeSeries {
        let t = self.len() as f64;
        let mut data = self.data.clone();
        for mut col in data.column_iter_mut() {
            let mean = col.sum() / t;
            col.add_scalar_mut(-mean);
        }
        TimeSeries {
            data,
            labels: self.labels.clone(),
            demeaned: true,
        }
    }

    /// The single-component series of column `a`.
    pub fn component(&self, a: usize) -> TimeSeries {
        TimeSeries {
            data: DMatrix::from_column_slice(self.len(), 1, self.data.column(a).as_slice()),
            labels: vec![self.labels[a].clone()],
            demeaned: self.demeaned,
        }
    }

    /// Reorders columns: component `a` of the result is component `perm[a]`
    /// of `self`.
    pub fn select_components(&self, perm: &[usize]) -> Result<TimeSeries> {
        let mut data = DMatrix::zeros(self.len(), perm.len());
        let mut labels = Vec::with_capacity(perm.len());
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.dim() {
                return Err(Error::InvalidArgument(format!(
                    "component index {old} out of range"
                )));
            }
            data.set_column(new, &self.data.column(old));
            labels.push(self.labels[old].clone());
        }
        Ok(TimeSeries {
            data,
            labels,
            demeaned: self.demeaned,
        })
    }
}

/// Covariance matrices at lags `0..=L`. The lag `-u` matrix is the
/// transpose of the lag `u` matrix and is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSeq {
    gamma: Vec<DMatrix<f64>>,
}

impl CovSeq {
    pub fn new(gamma: Vec<DMatrix<f64>>) -> Result<Self> {
        let lag0 = gamma
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least lag 0".into()))?;
        let d = lag0.nrows();
        if d == 0 || gamma.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::InvalidArgument(
                "covariance matrices must be square of equal dimension".into(),
            ));
        }
        let asym = (lag0 - lag0.transpose()).abs().max();
        if asym > 1e-8 * lag0.abs().max().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "lag-0 covariance is not symmetric (residual {asym:.3e})"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn dim(&self) -> usize {
        self.gamma[0].nrows()
    }

    /// Maximum stored lag.
    pub fn max_lag(&self) -> usize {
        self.gamma.len() - 1
    }

    /// Covariance at lag `u`, `0 <= u <= L`.
    pub fn lag(&self, u: usize) -> &DMatrix<f64> {
        &self.gamma[u]
    }

    /// Covariance at a signed lag: `lag(-u) = lag(u)'`.
    pub fn lag_signed(&self, u: i64) -> DMatrix<f64> {
        if u >= 0 {
            self.gamma[u as usize].clone()
        } else {
            self.gamma[(-u) as usize].transpose()
        }
    }

    /// Truncates to lags `0..=l`.
    pub fn truncated(&self, l: usize) -> Result<CovSeq> {
        if l > self.max_lag() {
            return Err(Error::InvalidArgument(format!(
                "lag {l} exceeds stored maximum {}",
                self.max_lag()
            )));
        }
        Ok(CovSeq {
            gamma: self.gamma[..=l].to_vec(),
        })
    }
}

/// Data taper applied before the discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaperSpec {
    /// No taper: `h_t = 1`, `H2 = T`.
    None,
    /// Cosine bell over `fraction` of each end of the series. Tapering
    /// improves the small-sample behaviour of Whittle estimates; the default
    /// fraction is 0.1.
    CosineBell { fraction: f64 },
}

impl Default for TaperSpec {
    fn default() -> Self {
        TaperSpec::CosineBell { fraction: 0.1 }
    }
}

impl TaperSpec {
    pub fn cosine(fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "taper fraction {fraction} outside [0, 1]"
            )));
        }
        Ok(TaperSpec::CosineBell { fraction })
    }

    /// Taper weights `h_1..h_T`.
    pub fn weights(&self, t_len: usize) -> Vec<f64> {
        match *self {
            TaperSpec::None => vec![1.0; t_len],
            TaperSpec::CosineBell { fraction } => {
                let ell = ((fraction * t_len as f64).floor() as usize).min(t_len / 2);
                let mut h = vec![1.0; t_len];
                for i in 0..ell {
                    let w =
                        0.5 * (1.0 - (std::f64::consts::PI * (i as f64 + 0.5) / ell as f64).cos());
                    h[i] = w;
                    h[t_len - 1 - i] = w;
                }
                h
            }
        }
    }

    /// Normalizer `H2 = sum_t h_t^2`.
    pub fn h2(&self, t_len: usize) -> f64 {
        match *self {
            TaperSpec::None => t_len as f64,
            _ => self.weights(t_len).iter().map(|h| h * h).sum(),
        }
    }
}

/// Hermitian `d x d` matrices on the `N` Fourier frequencies
/// `lambda_j = 2 pi j / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    d: usize,
    values: Vec<DMatrix<Complex64>>,
}

impl SpectralGrid {
    pub fn new(values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid size {n} must be even and at least 2"
            )));
        }
        let d = values[0].nrows();
        if d == 0 || values.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::InvalidArgument(
                "grid matrices must be square of equal dimension".into(),
            ));
        }
        Ok(Self { d, values })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of grid frequencies.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Frequency `lambda_j = 2 pi j / N`.
    pub fn freq(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.len() as f64
    }

    pub fn value(&self, j: usize) -> &DMatrix<Complex64> {
        &self.values[j]
    }

    pub fn values(&self) -> &[DMatrix<Complex64>] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [DMatrix<Complex64>] {
        &mut self.values
    }

    /// Largest absolute deviation from Hermitian symmetry, relative to the
    /// largest entry magnitude.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for m in &self.values {
            for a in 0..self.d {
                for b in a..self.d {
                    let diff = (m[(a, b)] - m[(b, a)].conj()).norm();
                    worst = worst.max(diff);
                    scale = scale.max(m[(a, b)].norm());
                }
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Largest deviation from the conjugate symmetry `M_{N-j} = conj(M_j)`,
    /// relative to the largest entry magnitude.
    pub fn conjugate_symmetry_residual(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for j in 1..n {
            let m = &self.values[j];
            let partner = &self.values[n - j];
            for a in 0..self.d {
                for b in 0..self.d {
                    worst = worst.max((m[(a, b)] - partner[(a, b)].conj()).norm());
                    scale = scale.max(m[(a, b)].norm());
                }
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Smallest eigenvalue over all frequencies (Hermitian input assumed).
    pub fn min_eigenvalue(&self) -> f64 {
        self.values
            .iter()
            .map(|m| {
                m.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(f64::INFINITY, |acc, &e| acc.min(e))
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Builds the inverse-spectrum grid of a parameter set:
/// `g(lambda) = 2 pi sum_{|u| <= p} gamma_inv(u) e^{-i lambda u}`.
pub fn inv_spectrum_from_gi(theta: &GiParams, n: usize) -> Result<SpectralGrid> {
    let d = theta.dim();
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = two_pi * j as f64 / n as f64;
        let mut g = theta.gamma_inv(0).map(|x| Complex64::new(x, 0.0));
        for u in 1..=theta.order() {
            let z = Complex64::from_polar(1.0, -lambda * u as f64);
            let gu = theta.gamma_inv(u);
            for a in 0..d {
                for b in 0..d {
                    // gamma_inv(-u) = gamma_inv(u)' contributes the conjugate
                    // phase on the transposed entry.
                    g[(a, b)] += z * gu[(a, b)] + z.conj() * gu[(b, a)];
                }
            }
        }
        values.push(g * Complex64::new(two_pi, 0.0));
    }
    SpectralGrid::new(values)
}

/// Spectrum implied by a parameter set: the frequency-wise inverse of
/// [`inv_spectrum_from_gi`]. Fails if the implied spectrum is not positive
/// definite on the grid.
pub fn spectrum_from_gi(theta: &GiParams, n: usize) -> Result<SpectralGrid> {
    invert_grid(&inv_spectrum_from_gi(theta, n)?)
}

/// Biased empirical covariances
/// `Gamma_hat(u) = (1/T) sum_{t=1}^{T-u} X(t+u) X(t)'` for `u = 0..=L`.
///
/// The `1/T` normalization keeps the implied block-Toeplitz matrix positive
/// semidefinite and matches the untapered periodogram transform exactly.
pub fn empirical_covariances(x: &TimeSeries, max_lag: usize) -> Result<CovSeq> {
    if !x.is_demeaned() {
        return Err(Error::InvalidArgument(
            "series must be demeaned before covariance estimation".into(),
        ));
    }
    let t_len = x.len();
    if max_lag >= t_len {
        return Err(Error::InvalidArgument(format!(
            "lag {max_lag} requires more than {t_len} observations"
        )));
    }
    let d = x.dim();
    let data = x.data();
    let mut gamma = Vec::with_capacity(max_lag + 1);
    for u in 0..=max_lag {
        let mut m = DMatrix::zeros(d, d);
        for t in 0..t_len - u {
            // rank-one update X(t+u) X(t)'
            for a in 0..d {
                let xa = data[(t + u, a)];
                for b in 0..d {
                    m[(a, b)] += xa * data[(t, b)];
                }
            }
        }
        gamma.push(m / t_len as f64);
    }
    CovSeq::new(gamma)
}

/// Tapered periodogram on `n >= T` frequencies:
/// `I(lambda_j) = d(lambda_j) d(lambda_j)^* / (2 pi H2)` where `d` is the
/// discrete Fourier transform of the tapered data, zero-padded to `n`.
pub fn periodogram(x: &TimeSeries, taper: &TaperSpec, n: usize) -> Result<SpectralGrid> {
    if !x.is_demeaned() {
        return Err(Error::InvalidArgument(
            "series must be demeaned before the periodogram".into(),
        ));
    }
    let t_len = x.len();
    if n < t_len {
        return Err(Error::InvalidArgument(format!(
            "grid size {n} is below the series length {t_len}"
        )));
    }
    let d = x.dim();
    let h = taper.weights(t_len);
    let h2 = taper.h2(t_len);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut dft: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for t in 0..t_len {
            buf[t] = Complex64::new(h[t] * x.value(t, a), 0.0);
        }
        fft.process(&mut buf);
        dft.push(buf);
    }

    let scale = 1.0 / (2.0 * std::f64::consts::PI * h2);
    let values = (0..n)
        .map(|j| DMatrix::from_fn(d, d, |a, b| dft[a][j] * dft[b][j].conj() * scale))
        .collect();
    SpectralGrid::new(values)
}

/// Circular moving average across frequencies with a symmetric triangular
/// kernel of total width `bandwidth` (odd). `bandwidth = 1` is the identity.
pub fn smooth_periodogram(grid: &SpectralGrid, bandwidth: usize) -> Result<SpectralGrid> {
    if bandwidth.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {bandwidth} must be odd"
        )));
    }
    if bandwidth >= grid.len() {
        return Err(Error::InvalidArgument(format!(
            "bandwidth {bandwidth} must be below the grid size {}",
            grid.len()
        )));
    }
    if bandwidth == 1 {
        return Ok(grid.clone());
    }
    let half = (bandwidth / 2) as i64;
    let weights: Vec<f64> = (-half..=half)
        .map(|k| (half + 1 - k.abs()) as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    let n = grid.len() as i64;
    let values = (0..n)
        .map(|j| {
            let mut m = DMatrix::zeros(grid.dim(), grid.dim());
            for (k, w) in (-half..=half).zip(&weights) {
                let idx = (j + k).rem_euclid(n) as usize;
                m += grid.value(idx) * Complex64::new(w / total, 0.0);
            }
            m
        })
        .collect();
    SpectralGrid::new(values)
}

/// Cholesky of a Hermitian positive definite matrix together with its log
/// determinant and inverse. Checks Hermitian symmetry before factorizing.
fn hermitian_inverse(m: &DMatrix<Complex64>, j: usize) -> Result<(f64, DMatrix<Complex64>)> {
    let d = m.nrows();
    let scale = m
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let herm_residual = (0..d)
        .flat_map(|a| (a..d).map(move |b| (a, b)))
        .map(|(a, b)| (m[(a, b)] - m[(b, a)].conj()).norm())
        .fold(0.0f64, f64::max);
    if herm_residual > 1e-8 * scale {
        return Err(Error::Inconsistent(format!(
            "matrix at frequency index {j} is not Hermitian (residual {herm_residual:.3e})"
        )));
    }
    // Work on the Hermitian average; the asymmetry is within tolerance.
    let sym = DMatrix::from_fn(d, d, |a, b| (m[(a, b)] + m[(b, a)].conj()) * 0.5);
    let chol = sym
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularFrequency {
            index: j,
            detail: "not positive definite".into(),
        })?;
    // The factor of a Hermitian pd matrix has a real positive diagonal;
    // complex square roots of negative pivots slip through otherwise.
    let l = chol.l();
    if (0..d).any(|i| {
        let z = l[(i, i)];
        z.re.is_nan() || z.re <= 0.0 || z.im.abs() > 1e-12 * z.re.abs()
    }) {
        return Err(Error::SingularFrequency {
            index: j,
            detail: "not positive definite".into(),
        });
    }
    let logdet = 2.0 * (0..d).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    let inv = chol.inverse();
    let cond = sym.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        * inv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if cond > CONDITION_LIMIT {
        return Err(Error::SingularFrequency {
            index: j,
            detail: format!("condition estimate {cond:.3e} above {CONDITION_LIMIT:.0e}"),
        });
    }
    Ok((logdet, inv))
}

pub(crate) fn hermitian_inverse_at(
    m: &DMatrix<Complex64>,
    j: usize,
) -> Result<(f64, DMatrix<Complex64>)> {
    hermitian_inverse(m, j)
}

/// Frequency-wise inverse of a Hermitian positive definite grid.
///
/// A frequency whose Frobenius condition estimate exceeds
/// [`CONDITION_LIMIT`] is reported as singular, naming the index.
pub fn invert_grid(grid: &SpectralGrid) -> Result<SpectralGrid> {
    let values = grid
        .values()
        .iter()
        .enumerate()
        .map(|(j, m)| hermitian_inverse(m, j).map(|(_, inv)| inv))
        .collect::<Result<Vec<_>>>()?;
    SpectralGrid::new(values)
}

/// Partial spectral coherences `R_{ab|rest}` (or plain coherencies) for all
/// pairs `a < b` on a frequency grid.
#[derive(Debug, Clone)]
pub struct PairGrid {
    pub d: usize,
    pub n: usize,
    pairs: Vec<(usize, usize)>,
    values: Vec<Vec<Complex64>>,
}

impl PairGrid {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&[Complex64]> {
        let key = (a.min(b), a.max(b));
        self.pairs
            .iter()
            .position(|&p| p == key)
            .map(|i| self.values[i].as_slice())
    }

    pub fn max_abs(&self, a: usize, b: usize) -> f64 {
        self.pair(a, b)
            .map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .unwrap_or(0.0)
    }
}

fn pairwise_from(
    grid_fn: impl Fn(usize, usize, usize) -> Complex64,
    d: usize,
    n: usize,
) -> PairGrid {
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let values = pairs
        .iter()
        .map(|&(a, b)| (0..n).map(|j| grid_fn(a, b, j)).collect())
        .collect();
    PairGrid {
        d,
        n,
        pairs,
        values,
    }
}

/// Partial spectral coherence from a spectrum:
/// `R_{ab|rest}(lambda) = -g_ab(lambda) / sqrt(g_aa(lambda) g_bb(lambda))`
/// with `g = f^-1`. For Gaussian processes `R_{ab|rest} = 0` at all
/// frequencies exactly when components a and b are conditionally independent
/// given the rest.
pub fn partial_coherence(f: &SpectralGrid) -> Result<PairGrid> {
    let g = invert_grid(f)?;
    Ok(partial_coherence_from_inverse(&g))
}

/// Partial coherence computed from an inverse-spectrum grid directly.
/// Structural zeros in `g` stay exact zeros in the output.
pub fn partial_coherence_from_inverse(g: &SpectralGrid) -> PairGrid {
    pairwise_from(
        |a, b, j| {
            let m = g.value(j);
            let denom = (m[(a, a)].re * m[(b, b)].re).sqrt();
            let r = -m[(a, b)] / denom;
            // keep structural zeros positive (no "-0" in exports)
            Complex64::new(r.re + 0.0, r.im + 0.0)
        },
        g.dim(),
        g.len(),
    )
}

/// Ordinary coherency `f_ab / sqrt(f_aa f_bb)` for all pairs `a < b`.
pub fn coherency(f: &SpectralGrid) -> PairGrid {
    pairwise_from(
        |a, b, j| {
            let m = f.value(j);
            let denom = (m[(a, a)].re * m[(b, b)].re).sqrt();
            m[(a, b)] / denom
        },
        f.dim(),
        f.len(),
    )
}

fn fourier_coefficients(
    grid: &SpectralGrid,
    max_lag: usize,
    prefactor: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let n = grid.len();
    let d = grid.dim();
    if max_lag >= n / 2 {
        return Err(Error::InvalidArgument(format!(
            "lag {max_lag} needs a grid larger than {}",
            2 * max_lag
        )));
    }
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut sums = vec![DMatrix::<Complex64>::zeros(d, d); max_lag + 1];
    for j in 0..n {
        let m = grid.value(j);
        for (u, sum) in sums.iter_mut().enumerate() {
            let z = Complex64::from_polar(1.0, step * (j * u) as f64);
            for a in 0..d {
                for b in 0..d {
                    sum[(a, b)] += m[(a, b)] * z;
                }
            }
        }
    }
    let scale = prefactor * step;
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut real_scale = 0.0f64;
    for sum in &sums {
        real_scale = real_scale.max(sum.iter().map(|z| z.re.abs() * scale).fold(0.0, f64::max));
    }
    for (u, sum) in sums.into_iter().enumerate() {
        let imag = sum.iter().map(|z| z.im.abs() * scale).fold(0.0, f64::max);
        if imag > IMAG_RESIDUE_TOL * real_scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Inconsistent(format!(
                "imaginary residue {imag:.3e} at lag {u}; grid is not conjugate-symmetric"
            )));
        }
        out.push(sum.map(|z| z.re * scale));
    }
    // Lag 0 of a Hermitian grid is symmetric up to rounding.
    out[0] = (&out[0] + out[0].transpose()) / 2.0;
    Ok(out)
}

/// Covariances from a spectrum:
/// `Gamma(u) = (2 pi / N) sum_j f(lambda_j) e^{i lambda_j u}` for
/// `u = 0..=L`. The imaginary residue must stay below
/// [`IMAG_RESIDUE_TOL`] relative to the result.
pub fn cov_from_spectrum(f: &SpectralGrid, max_lag: usize) -> Result<CovSeq> {
    CovSeq::new(fourier_coefficients(f, max_lag, 1.0)?)
}

/// Inverse covariances from a spectrum:
/// `gamma_inv(u) = 1/(4 pi^2) * (2 pi / N) sum_j f(lambda_j)^-1 e^{i lambda_j u}`.
pub fn inv_cov_from_spectrum(f: &SpectralGrid, max_lag: usize) -> Result<CovSeq> {
    let g = invert_grid(f)?;
    let pre = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    CovSeq::new(fourier_coefficients(&g, max_lag, pre)?)
}
