//! VAR machinery: Yule-Walker solving, spectra, inverse covariances,
//! stability checks and simulation.
//!
//! Conventions: the process is `X(t) = sum_{v=1}^p a(v) X(t-v) + eps(t)`
//! with `Gamma(u) = E X(t) X(t-u)'`, so the Yule-Walker relations read
//! `Gamma(u) = sum_v a(v) Gamma(u-v) + Sigma delta_{u0}`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::params::{GiParams, VarParams};
use crate::spectral::{Complex64, CovSeq, SpectralGrid, TimeSeries};

/// Fits below `1 - DEFAULT_STABILITY_MARGIN` in companion spectral radius
/// count as stable; anything closer to the unit circle is treated as an
/// error rather than a warning.
pub const DEFAULT_STABILITY_MARGIN: f64 = 1e-8;

/// Result of a stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Largest eigenvalue modulus of the `dp x dp` companion matrix.
    pub spectral_radius: f64,
    pub stable: bool,
}

/// Solves the Yule-Walker equations for order `p` given covariances at lags
/// `0..=p`, returning coefficients and innovation covariance.
///
/// The system is solved as one dense symmetric block system of size `d p`;
/// a singular or indefinite block-Toeplitz matrix (constant or collinear
/// series) is a degeneracy error. When the input covariances are those of a
/// stationary process, the fitted VAR reproduces them exactly at lags
/// `0..=p`.
pub fn yule_walker(gammahat: &CovSeq, p: usize) -> Result<VarParams> {
    if gammahat.max_lag() < p {
        return Err(Error::InvalidArgument(format!(
            "need covariances up to lag {p}, have {}",
            gammahat.max_lag()
        )));
    }
    let d = gammahat.dim();
    if p == 0 {
        let sigma = symmetrize(gammahat.lag(0));
        return VarParams::new(vec![], sigma).map_err(degeneracy);
    }

    // Block (u, v) is Gamma(v - u); the right-hand side stacks Gamma(u)'.
    let mut system = DMatrix::zeros(d * p, d * p);
    for u in 1..=p {
        for v in 1..=p {
            let block = gammahat.lag_signed(v as i64 - u as i64);
            system
                .view_mut(((u - 1) * d, (v - 1) * d), (d, d))
                .copy_from(&block);
        }
    }
    let mut rhs = DMatrix::zeros(d * p, d);
    for u in 1..=p {
        rhs.view_mut(((u - 1) * d, 0), (d, d))
            .copy_from(&gammahat.lag(u).transpose());
    }

    let system = symmetrize(&system);
    let chol = system.cholesky().ok_or_else(|| {
        Error::Degenerate(
            "block-Toeplitz covariance matrix is not positive definite \
             (constant or collinear series?)"
                .into(),
        )
    })?;
    let stacked = chol.solve(&rhs);

    let a: Vec<DMatrix<f64>> = (1..=p)
        .map(|v| {
            stacked
                .view(((v - 1) * d, 0), (d, d))
                .transpose()
                .into_owned()
        })
        .collect();

    let mut sigma = gammahat.lag(0).clone();
    for (v, av) in a.iter().enumerate() {
        sigma -= av * gammahat.lag(v + 1).transpose();
    }
    let sigma = symmetrize(&sigma);
    VarParams::new(a, sigma).map_err(degeneracy)
}

fn degeneracy(e: Error) -> Error {
    match e {
        Error::Degenerate(m) => Error::Degenerate(m),
        other => Error::Degenerate(other.to_string()),
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) / 2.0
}

/// `A(e^{-i lambda}) = I - sum_u a(u) e^{-i lambda u}` evaluated in place.
fn char_poly_at(params: &VarParams, lambda: f64, out: &mut DMatrix<Complex64>) {
    let d = params.dim();
    out.fill(Complex64::new(0.0, 0.0));
    for i in 0..d {
        out[(i, i)] = Complex64::new(1.0, 0.0);
    }
    for u in 1..=params.order() {
        let z = Complex64::from_polar(1.0, -lambda * u as f64);
        let au = params.coeff(u);
        for a in 0..d {
            for b in 0..d {
                out[(a, b)] -= z * au[(a, b)];
            }
        }
    }
}

/// Spectral density of a stable VAR on `n` grid frequencies:
/// `f(lambda) = (1/2pi) A(e^{-i lambda})^-1 Sigma A(e^{-i lambda})^-H`,
/// the inverse of `f^-1 = 2 pi A(e^{i lambda})' K A(e^{-i lambda})`.
pub fn var_spectrum(params: &VarParams, n: usize) -> Result<SpectralGrid> {
    let report = stability_check(params);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    let d = params.dim();
    let sigma_c = params.sigma().map(|x| Complex64::new(x, 0.0));
    let scale = Complex64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0);
    let mut b = DMatrix::<Complex64>::zeros(d, d);
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        char_poly_at(params, lambda, &mut b);
        let binv = b.clone().try_inverse().ok_or(Error::SingularFrequency {
            index: j,
            detail: "characteristic polynomial is singular".into(),
        })?;
        let f = &binv * &sigma_c * binv.adjoint() * scale;
        values.push(f);
    }
    SpectralGrid::new(values)
}

/// Direct evaluation of the inverse spectrum
/// `f^-1(lambda) = 2 pi A(e^{i lambda})' K A(e^{-i lambda})` on `n`
/// frequencies, without inverting anything frequency-wise.
pub fn var_inverse_spectrum(params: &VarParams, n: usize) -> Result<SpectralGrid> {
    let d = params.dim();
    let k = params
        .sigma()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("innovation covariance is singular".into()))?
        .inverse()
        .map(|x| Complex64::new(x, 0.0));
    let two_pi = Complex64::new(2.0 * std::f64::consts::PI, 0.0);
    let mut b = DMatrix::<Complex64>::zeros(d, d);
    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        char_poly_at(params, lambda, &mut b);
        values.push(b.adjoint() * &k * &b * two_pi);
    }
    SpectralGrid::new(values)
}

/// Inverse covariances of a VAR:
/// `gamma_inv(u) = sum_{v=0}^{p-u} a(v)' K a(v+u)` with `a(0) = -I` and
/// `K = Sigma^-1`. Inverse covariances of a VAR(p) vanish beyond lag `p`,
/// so the result is complete.
pub fn inv_cov_from_var(params: &VarParams) -> Result<GiParams> {
    let d = params.dim();
    let p = params.order();
    let k = params
        .sigma()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("innovation covariance is singular".into()))?
        .inverse();

    // a(0) = -I, a(1..p) from the parameters.
    let a0 = -DMatrix::<f64>::identity(d, d);
    let coeff = |v: usize| -> &DMatrix<f64> {
        if v == 0 {
            &a0
        } else {
            params.coeff(v)
        }
    };

    let mut lags = Vec::with_capacity(p + 1);
    for u in 0..=p {
        let mut sum = DMatrix::zeros(d, d);
        for v in 0..=(p - u) {
            sum += coeff(v).transpose() * &k * coeff(v + u);
        }
        lags.push(sum);
    }
    lags[0] = symmetrize(&lags[0]);
    GiParams::new(lags)
}

/// Companion spectral radius and stability at [`DEFAULT_STABILITY_MARGIN`].
pub fn stability_check(params: &VarParams) -> StabilityReport {
    stability_check_with_margin(params, DEFAULT_STABILITY_MARGIN)
}

pub fn stability_check_with_margin(params: &VarParams, margin: f64) -> StabilityReport {
    let d = params.dim();
    let p = params.order();
    if p == 0 {
        return StabilityReport {
            spectral_radius: 0.0,
            stable: true,
        };
    }
    let mut companion = DMatrix::zeros(d * p, d * p);
    for v in 1..=p {
        companion
            .view_mut((0, (v - 1) * d), (d, d))
            .copy_from(params.coeff(v));
    }
    for v in 1..p {
        companion
            .view_mut((v * d, (v - 1) * d), (d, d))
            .copy_from(&DMatrix::identity(d, d));
    }
    let radius = companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max);
    StabilityReport {
        spectral_radius: radius,
        stable: radius < 1.0 - margin,
    }
}

/// Default number of warm-up samples discarded by the simulation CLI:
/// `10 p + 100`.
pub fn default_burnin(p: usize) -> usize {
    10 * p + 100
}

/// Simulates `t_len` observations of a stable VAR with Gaussian innovations.
///
/// Innovations are `S z` with `S` the symmetric positive definite square
/// root of `Sigma` (eigendecomposition, so the draw does not depend on
/// factorization pivoting) and `z` standard normal from a ChaCha stream
/// seeded with `seed`. The recursion starts from zero state; the first
/// `burnin` samples are discarded. Identical `(seed, params, t_len)` give
/// bit-identical output.
pub fn simulate_var(
    params: &VarParams,
    t_len: usize,
    burnin: usize,
    seed: u64,
) -> Result<TimeSeries> {
    let report = stability_check(params);
    if !report.stable {
        return Err(Error::Unstable {
            radius: report.spectral_radius,
        });
    }
    if t_len < 1 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let d = params.dim();
    let p = params.order();

    let eig = params.sigma().clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
        return Err(Error::Degenerate(
            "innovation covariance is not positive definite".into(),
        ));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let total = burnin + t_len;
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut kept = DMatrix::zeros(t_len, d);
    for t in 0..total {
        let z: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        let mut x = vec![0.0; d];
        for a in 0..d {
            for b in 0..d {
                x[a] += root[(a, b)] * z[b];
            }
        }
        for v in 1..=p.min(t) {
            let av = params.coeff(v);
            let past = &history[t - v];
            for a in 0..d {
                for b in 0..d {
                    x[a] += av[(a, b)] * past[b];
                }
            }
        }
        if t >= burnin {
            for a in 0..d {
                kept[(t - burnin, a)] = x[a];
            }
        }
        history.push(x);
    }
    TimeSeries::new(kept, TimeSeries::default_labels(d))
}
