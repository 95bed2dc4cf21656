//! Whittle likelihood, its gradient, estimating-equation residuals and the
//! asymptotic covariance of the estimator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::params::{theta_coords, GiParams, ZeroPattern};
use crate::spectral::{
    cov_from_spectrum, hermitian_inverse_at, model_grid_size, spectrum_from_gi, Complex64, CovSeq,
    SpectralGrid,
};

/// Whittle's likelihood
/// `(1/4pi) int [log det f_theta + tr(I f_theta^-1)] dlambda`
/// evaluated by the grid Riemann sum. Lower is better; the value is real and
/// the imaginary residue of the trace term must stay below 1e-10.
pub fn whittle_loglik(f_theta: &SpectralGrid, periodogram: &SpectralGrid) -> Result<f64> {
    if f_theta.dim() != periodogram.dim() || f_theta.len() != periodogram.len() {
        return Err(Error::InvalidArgument(format!(
            "grids disagree: model {}x{} on {} frequencies, periodogram {}x{} on {}",
            f_theta.dim(),
            f_theta.dim(),
            f_theta.len(),
            periodogram.dim(),
            periodogram.dim(),
            periodogram.len()
        )));
    }
    let d = f_theta.dim();
    let n = f_theta.len();
    let mut total = 0.0;
    let mut imag = 0.0f64;
    let mut real_scale = 0.0f64;
    for j in 0..n {
        let (logdet, finv) = hermitian_inverse_at(f_theta.value(j), j)?;
        let mut trace = Complex64::new(0.0, 0.0);
        let i_j = periodogram.value(j);
        for a in 0..d {
            for b in 0..d {
                trace += i_j[(a, b)] * finv[(b, a)];
            }
        }
        total += logdet + trace.re;
        imag += trace.im;
        real_scale = real_scale.max(trace.re.abs()).max(logdet.abs());
    }
    if imag.abs() > 1e-10 * real_scale.max(1.0) * n as f64 {
        return Err(Error::Inconsistent(format!(
            "imaginary residue {imag:.3e} in the Whittle likelihood trace"
        )));
    }
    Ok(total / (2.0 * n as f64))
}

/// Checks that constrained coordinates of `theta` vanish (within rounding).
fn check_pattern(theta: &GiParams, graph: &UndirectedGraph) -> Result<()> {
    if theta.dim() != graph.vertex_count() {
        return Err(Error::InvalidArgument(format!(
            "parameter dimension {} does not match graph dimension {}",
            theta.dim(),
            graph.vertex_count()
        )));
    }
    let scale = theta
        .lags()
        .iter()
        .map(|m| m.abs().max())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for (a, b) in graph.missing_edges() {
        for u in 0..=theta.order() {
            let v = theta.gamma_inv(u)[(a, b)]
                .abs()
                .max(theta.gamma_inv(u)[(b, a)].abs());
            if v > 1e-10 * scale {
                return Err(Error::InvalidArgument(format!(
                    "theta violates the zero pattern at (a={a}, b={b}, u={u}): {v:.3e}"
                )));
            }
        }
    }
    Ok(())
}

/// Gradient of the Whittle likelihood over the free coordinates of `theta`
/// in canonical order.
///
/// With `D(u) = int (I(lambda) - f_theta(lambda)) e^{i lambda u} dlambda`,
/// the component for coordinate `(a, b, u)` is `Re D_ab(u)`, halved on the
/// diagonal lag-0 coordinates (where theta enters the inverse spectrum once
/// instead of in a symmetric pair). These factors make the gradient agree
/// with finite differences of [`whittle_loglik`]; the components' zero set
/// is the moment half of the estimating equations.
pub fn whittle_gradient(
    theta: &GiParams,
    graph: &UndirectedGraph,
    periodogram: &SpectralGrid,
) -> Result<Vec<f64>> {
    check_pattern(theta, graph)?;
    let n = periodogram.len();
    let f_theta = spectrum_from_gi(theta, n)?;
    if f_theta.dim() != periodogram.dim() {
        return Err(Error::InvalidArgument(
            "periodogram dimension does not match theta".into(),
        ));
    }
    let d = theta.dim();
    let p = theta.order();

    // D(u) = (2 pi / N) sum_j (I_j - f_j) e^{i lambda_j u}
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let mut diff = vec![DMatrix::<Complex64>::zeros(d, d); p + 1];
    for j in 0..n {
        let i_j = periodogram.value(j);
        let f_j = f_theta.value(j);
        for (u, acc) in diff.iter_mut().enumerate() {
            let z = Complex64::from_polar(1.0, step * (j * u) as f64);
            for a in 0..d {
                for b in 0..d {
                    acc[(a, b)] += (i_j[(a, b)] - f_j[(a, b)]) * z;
                }
            }
        }
    }
    for acc in diff.iter_mut() {
        *acc *= Complex64::new(step, 0.0);
    }

    let pattern = ZeroPattern::new(p, graph);
    let grad = theta_coords(d, p)
        .enumerate()
        .filter(|&(k, _)| pattern.is_free(k))
        .map(|(_, (a, b, u))| {
            let factor = if a == b && u == 0 { 0.5 } else { 1.0 };
            factor * diff[u][(a, b)].re
        })
        .collect();
    Ok(grad)
}

/// One scaled estimating equation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationResidual {
    pub a: usize,
    pub b: usize,
    pub u: usize,
    /// True for zero-constraint equations, false for moment equations.
    pub constrained: bool,
    pub residual: f64,
}

/// Scaled residuals of the likelihood equations: at a Whittle optimum the
/// model covariances match the empirical covariances on free index triples
/// (moment equations) and the model inverse covariances vanish on
/// constrained triples (constraint equations).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest moment-equation residual, scaled by
    /// `sqrt(gammahat_aa(0) gammahat_bb(0))`.
    pub moment_residual: f64,
    /// Largest constraint-equation residual, scaled by
    /// `sqrt(gamma_inv_aa(0) gamma_inv_bb(0))`.
    pub constraint_residual: f64,
    /// Per-equation table.
    pub rows: Vec<EquationResidual>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.moment_residual.max(self.constraint_residual)
    }
}

/// Builds the residual report from precomputed model covariances. Shared by
/// [`likelihood_residuals`] and the fitting loop (which evaluates model
/// covariances on its own grid).
pub(crate) fn residual_report(
    gamma_model: &CovSeq,
    theta: &GiParams,
    graph: &UndirectedGraph,
    gammahat: &CovSeq,
) -> ResidualReport {
    let d = theta.dim();
    let p = theta.order();
    let cov_scale: Vec<f64> = (0..d)
        .map(|a| gammahat.lag(0)[(a, a)].max(f64::MIN_POSITIVE).sqrt())
        .collect();
    let inv_scale: Vec<f64> = (0..d)
        .map(|a| theta.gamma_inv(0)[(a, a)].max(f64::MIN_POSITIVE).sqrt())
        .collect();

    let mut rows = Vec::new();
    let mut moment = 0.0f64;
    let mut constraint = 0.0f64;
    for u in 0..=p {
        for a in 0..d {
            for b in 0..d {
                if u == 0 && b > a {
                    continue; // lag 0 is symmetric
                }
                let free = a == b || graph.has_edge(a, b);
                if free {
                    let r = (gamma_model.lag(u)[(a, b)] - gammahat.lag(u)[(a, b)]).abs()
                        / (cov_scale[a] * cov_scale[b]);
                    moment = moment.max(r);
                    rows.push(EquationResidual {
                        a,
                        b,
                        u,
                        constrained: false,
                        residual: r,
                    });
                } else {
                    let r = theta.gamma_inv(u)[(a, b)].abs() / (inv_scale[a] * inv_scale[b]);
                    constraint = constraint.max(r);
                    rows.push(EquationResidual {
                        a,
                        b,
                        u,
                        constrained: true,
                        residual: r,
                    });
                }
            }
        }
    }
    ResidualReport {
        moment_residual: moment,
        constraint_residual: constraint,
        rows,
    }
}

/// Evaluates both residual families for `theta` against empirical
/// covariances. Model covariances are computed from the implied spectrum on
/// the default model grid; a converged fit at tolerance `tau` keeps both
/// families at or below `tau`.
pub fn likelihood_residuals(
    theta: &GiParams,
    graph: &UndirectedGraph,
    p: usize,
    gammahat: &CovSeq,
) -> Result<ResidualReport> {
    if p != theta.order() {
        return Err(Error::InvalidArgument(format!(
            "order {p} does not match theta order {}",
            theta.order()
        )));
    }
    if gammahat.max_lag() < p {
        return Err(Error::InvalidArgument(format!(
            "need empirical covariances up to lag {p}, have {}",
            gammahat.max_lag()
        )));
    }
    if theta.dim() != graph.vertex_count() || theta.dim() != gammahat.dim() {
        return Err(Error::InvalidArgument(
            "theta, graph and covariances must share the dimension".into(),
        ));
    }
    let f_theta = spectrum_from_gi(theta, model_grid_size(p))?;
    let gamma_model = cov_from_spectrum(&f_theta, p)?;
    Ok(residual_report(&gamma_model, theta, graph, gammahat))
}

/// Phase terms of `d f^-1 / d theta_k`: the derivative is
/// `2 pi sum (E_{ab} e^{-i lambda e})` over the listed `(a, b, e)`.
fn derivative_terms(a: usize, b: usize, u: usize) -> Vec<(usize, usize, i64)> {
    if a == b && u == 0 {
        vec![(a, a, 0)]
    } else {
        vec![(a, b, u as i64), (b, a, -(u as i64))]
    }
}

/// Information-style matrix `Xi` over the full theta layout:
/// `xi_ij = (1/4pi) int tr[f (df^-1/dtheta_i) f (df^-1/dtheta_j)] dlambda`,
/// using the closed-form derivative of the linear parameterization.
///
/// The quadrature grid starts at the default model grid and doubles until
/// entries move by less than 1e-8.
pub fn whittle_information(theta: &GiParams) -> Result<DMatrix<f64>> {
    let mut n = model_grid_size(theta.order());
    let mut xi = information_on_grid(theta, n)?;
    for _ in 0..6 {
        n *= 2;
        let finer = information_on_grid(theta, n)?;
        let delta = (&finer - &xi).abs().max();
        xi = finer;
        if delta < 1e-8 {
            return Ok(xi);
        }
    }
    Err(Error::Inconsistent(
        "information-matrix quadrature did not settle while doubling the grid".into(),
    ))
}

fn information_on_grid(theta: &GiParams, n: usize) -> Result<DMatrix<f64>> {
    let d = theta.dim();
    let p = theta.order();
    let f = spectrum_from_gi(theta, n)?;
    let coords: Vec<(usize, usize, usize)> = theta_coords(d, p).collect();
    let terms: Vec<Vec<(usize, usize, i64)>> = coords
        .iter()
        .map(|&(a, b, u)| derivative_terms(a, b, u))
        .collect();
    let r = coords.len();
    let step = 2.0 * std::f64::consts::PI / n as f64;

    let mut xi = DMatrix::zeros(r, r);
    for j in 0..n {
        let fj = f.value(j);
        let lambda = step * j as f64;
        // tr[f E_{a1 b1} f E_{a2 b2}] = f_{b1 a2} f_{b2 a1}
        for i in 0..r {
            for k in i..r {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(a1, b1, e1) in &terms[i] {
                    for &(a2, b2, e2) in &terms[k] {
                        let phase = Complex64::from_polar(1.0, -lambda * (e1 + e2) as f64);
                        acc += phase * fj[(b1, a2)] * fj[(b2, a1)];
                    }
                }
                xi[(i, k)] += acc.re;
            }
        }
    }
    // (1/4pi) * step * (2 pi)^2 from the two derivative factors.
    let scale = std::f64::consts::PI * step;
    for i in 0..r {
        for k in i..r {
            let v = xi[(i, k)] * scale;
            xi[(i, k)] = v;
            xi[(k, i)] = v;
        }
    }
    Ok(xi)
}

/// Asymptotic covariance `Lambda = P' (P Xi P')^-1 P` of the Whittle
/// estimator, where `P` projects onto the free coordinates of the graph's
/// zero pattern. `sqrt(T) (theta_hat - theta_0)` is asymptotically normal
/// with this covariance. Rows and columns of constrained coordinates are
/// zero.
pub fn asymptotic_covariance(theta: &GiParams, graph: &UndirectedGraph) -> Result<DMatrix<f64>> {
    check_pattern(theta, graph)?;
    let xi = whittle_information(theta)?;
    let pattern = ZeroPattern::new(theta.order(), graph);
    let free = pattern.free_indices();
    let m = free.len();
    let mut sub = DMatrix::zeros(m, m);
    for (i, &fi) in free.iter().enumerate() {
        for (k, &fk) in free.iter().enumerate() {
            sub[(i, k)] = xi[(fi, fk)];
        }
    }
    let inv = sub.cholesky().map(|c| c.inverse()).ok_or_else(|| {
        Error::Unidentifiable("free-coordinate information matrix is singular".into())
    })?;
    let r = pattern.len();
    let mut lambda = DMatrix::zeros(r, r);
    for (i, &fi) in free.iter().enumerate() {
        for (k, &fk) in free.iter().enumerate() {
            lambda[(fi, fk)] = inv[(i, k)];
        }
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{apply_zero_pattern, param_count, VarParams};
    use crate::spectral::{empirical_covariances, periodogram, TaperSpec};
    use crate::var::{inv_cov_from_var, simulate_var, var_spectrum, yule_walker};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn flat_grid(value: f64, n: usize) -> SpectralGrid {
        SpectralGrid::new(vec![
            DMatrix::from_element(1, 1, Complex64::new(value, 0.0));
            n
        ])
        .unwrap()
    }

    #[test]
    fn constant_univariate_value() {
        let inv_two_pi = 1.0 / (2.0 * std::f64::consts::PI);
        let f = flat_grid(inv_two_pi, 64);
        let i = flat_grid(inv_two_pi, 64);
        let expect = 0.5 * (1.0 + inv_two_pi.ln());
        assert_abs_diff_eq!(whittle_loglik(&f, &i).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn loglik_rejects_mismatched_grids() {
        let f = flat_grid(1.0, 64);
        let i = flat_grid(1.0, 128);
        assert!(matches!(
            whittle_loglik(&f, &i),
            Err(Error::InvalidArgument(_))
        ));
        let f2 = SpectralGrid::new(vec![DMatrix::identity(2, 2); 64]).unwrap();
        assert!(whittle_loglik(&f2, &flat_grid(1.0, 64)).is_err());
    }

    #[test]
    fn loglik_rejects_non_pd_model_spectrum() {
        let f = flat_grid(-1.0, 64);
        let i = flat_grid(1.0, 64);
        assert!(matches!(
            whittle_loglik(&f, &i),
            Err(Error::SingularFrequency { .. })
        ));
    }

    #[test]
    fn white_noise_variance_minimizes_at_lag0_covariance() {
        let truth = VarParams::new(vec![], DMatrix::from_element(1, 1, 2.0)).unwrap();
        let x = simulate_var(&truth, 512, 0, 21).unwrap().demean();
        let i = periodogram(&x, &TaperSpec::None, 2048).unwrap();
        let gamma0 = empirical_covariances(&x, 0).unwrap().lag(0)[(0, 0)];

        let loglik_at = |s2: f64| {
            let f = flat_grid(s2 / (2.0 * std::f64::consts::PI), 2048);
            whittle_loglik(&f, &i).unwrap()
        };
        let at_min = loglik_at(gamma0);
        assert!(at_min < loglik_at(gamma0 * 1.01));
        assert!(at_min < loglik_at(gamma0 * 0.99));
        // closed form: l = 0.5 log(s2/2pi) + gamma0/(2 s2)
        let expect = 0.5 * (gamma0 / (2.0 * std::f64::consts::PI)).ln() + 0.5;
        assert_abs_diff_eq!(at_min, expect, epsilon = 1e-10);
    }

    #[test]
    fn value_stable_under_grid_refinement() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.1, 0.3]);
        let a2 = DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.05, 0.1]);
        let params = VarParams::new(vec![a1, a2], DMatrix::identity(2, 2)).unwrap();
        let x = simulate_var(&params, 64, 50, 5).unwrap().demean();

        let n = 512;
        let coarse = whittle_loglik(
            &var_spectrum(&params, n).unwrap(),
            &periodogram(&x, &TaperSpec::None, n).unwrap(),
        )
        .unwrap();
        let fine = whittle_loglik(
            &var_spectrum(&params, 4 * n).unwrap(),
            &periodogram(&x, &TaperSpec::None, 4 * n).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(coarse, fine, epsilon = 1e-6);
    }

    #[test]
    fn gradient_univariate_white_noise() {
        // Single coordinate theta = 1/sigma2; the derivative of the likelihood
        // is (gammahat(0) - sigma2) / 2.
        let truth = VarParams::new(vec![], DMatrix::from_element(1, 1, 1.5)).unwrap();
        let x = simulate_var(&truth, 256, 0, 33).unwrap().demean();
        let i = periodogram(&x, &TaperSpec::None, 1024).unwrap();
        let gamma0 = empirical_covariances(&x, 0).unwrap().lag(0)[(0, 0)];

        let sigma2 = 1.3;
        let theta = GiParams::new(vec![DMatrix::from_element(1, 1, 1.0 / sigma2)]).unwrap();
        let g = UndirectedGraph::complete(1).unwrap();
        let grad = whittle_gradient(&theta, &g, &i).unwrap();
        assert_eq!(grad.len(), 1);
        assert_abs_diff_eq!(grad[0], 0.5 * (gamma0 - sigma2), epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a1 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.3, 0.1, 0.0, //
                0.1, 0.2, -0.1, //
                0.0, 0.2, 0.3,
            ],
        );
        let params = VarParams::new(vec![a1], DMatrix::identity(3, 3)).unwrap();
        let x = simulate_var(&params, 128, 50, 77).unwrap().demean();
        let n = 512;
        let i = periodogram(&x, &TaperSpec::None, n).unwrap();
        let g = UndirectedGraph::complete(3).unwrap();
        let theta = inv_cov_from_var(&params).unwrap();

        let grad = whittle_gradient(&theta, &g, &i).unwrap();
        for (k, &analytic) in grad.iter().enumerate() {
            let h = 1e-6 * theta.theta()[k].abs().max(1.0);
            let plus = spectrum_from_gi(&theta.perturb_coord(k, h), n).unwrap();
            let minus = spectrum_from_gi(&theta.perturb_coord(k, -h), n).unwrap();
            let fd = (whittle_loglik(&plus, &i).unwrap() - whittle_loglik(&minus, &i).unwrap())
                / (2.0 * h);
            assert!(
                (analytic - fd).abs() <= 1e-5 * fd.abs().max(1.0),
                "coordinate {k}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn gradient_rejects_pattern_violations() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.1, 0.2]);
        let params = VarParams::new(vec![a1], DMatrix::identity(2, 2)).unwrap();
        let theta = inv_cov_from_var(&params).unwrap();
        let x = simulate_var(&params, 64, 10, 1).unwrap().demean();
        let i = periodogram(&x, &TaperSpec::None, 256).unwrap();
        let empty = UndirectedGraph::empty(2).unwrap();
        assert!(whittle_gradient(&theta, &empty, &i).is_err());
    }

    #[test]
    fn residuals_of_yule_walker_fit() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]);
        let params = VarParams::new(vec![a1], DMatrix::identity(2, 2)).unwrap();
        let gammahat = cov_from_spectrum(&var_spectrum(&params, 2048).unwrap(), 1).unwrap();
        let fitted = yule_walker(&gammahat, 1).unwrap();
        let theta = inv_cov_from_var(&fitted).unwrap();
        let complete = UndirectedGraph::complete(2).unwrap();
        let report = likelihood_residuals(&theta, &complete, 1, &gammahat).unwrap();
        assert!(report.moment_residual < 1e-8, "{}", report.moment_residual);
        assert_eq!(report.constraint_residual, 0.0);

        // Perturbing a free coordinate moves the moment residual off zero.
        let bumped = theta.perturb_coord(0, 0.05);
        let report = likelihood_residuals(&bumped, &complete, 1, &gammahat).unwrap();
        assert!(report.moment_residual > 1e-4);
    }

    #[test]
    fn residual_table_covers_all_equations() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.2]);
        let params = VarParams::new(vec![a1], DMatrix::identity(2, 2)).unwrap();
        let gammahat = cov_from_spectrum(&var_spectrum(&params, 1024).unwrap(), 1).unwrap();
        let theta = apply_zero_pattern(
            &inv_cov_from_var(&params).unwrap(),
            &UndirectedGraph::empty(2).unwrap(),
        )
        .unwrap();
        let empty = UndirectedGraph::empty(2).unwrap();
        let report = likelihood_residuals(&theta, &empty, 1, &gammahat).unwrap();
        // lag 0: 3 equations (2 moment diagonal + 1 constrained), lag 1: 4.
        assert_eq!(report.rows.len(), 7);
        assert_eq!(report.rows.iter().filter(|r| r.constrained).count(), 3);
    }

    #[test]
    fn information_univariate_white_noise() {
        // theta = 1/sigma2; Xi = 1/(2 theta^2) and Lambda = 2 theta^2.
        let theta_val = 0.8;
        let theta = GiParams::new(vec![DMatrix::from_element(1, 1, theta_val)]).unwrap();
        let xi = whittle_information(&theta).unwrap();
        assert_abs_diff_eq!(
            xi[(0, 0)],
            1.0 / (2.0 * theta_val * theta_val),
            epsilon = 1e-10
        );

        let g = UndirectedGraph::complete(1).unwrap();
        let lambda = asymptotic_covariance(&theta, &g).unwrap();
        assert_abs_diff_eq!(lambda[(0, 0)], 2.0 * theta_val * theta_val, epsilon = 1e-8);
    }

    #[test]
    fn information_is_symmetric() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.15, -0.1, 0.25]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7]);
        let params = VarParams::new(vec![a1], sigma).unwrap();
        let theta = inv_cov_from_var(&params).unwrap();
        let xi = whittle_information(&theta).unwrap();
        assert!((&xi - xi.transpose()).abs().max() < 1e-10);
    }

    #[test]
    fn covariance_zeroes_constrained_rows() {
        // d = 3 VAR(1) Markov for the chain 0-1-2 (entries (0,2) vanish).
        let a1 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.4, 0.3, 0.0, //
                0.3, 0.4, 0.0, //
                0.0, 0.35, 0.4,
            ],
        );
        let params = VarParams::new(vec![a1], DMatrix::identity(3, 3)).unwrap();
        let theta = inv_cov_from_var(&params).unwrap();
        let chain = UndirectedGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let lambda = asymptotic_covariance(&theta, &chain).unwrap();
        let pattern = ZeroPattern::new(1, &chain);
        for k in 0..pattern.len() {
            if !pattern.is_free(k) {
                assert!(lambda.row(k).amax() == 0.0 && lambda.column(k).amax() == 0.0);
            }
        }
        // Lambda is symmetric psd on the free block.
        assert!((&lambda - lambda.transpose()).abs().max() < 1e-12);
        assert_eq!(pattern.free_count(), param_count(1, &chain));
    }

    #[test]
    fn covariance_is_permutation_equivariant() {
        let a1 = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.4, 0.2, 0.1, //
                0.1, 0.3, 0.2, //
                0.0, 0.1, 0.35,
            ],
        );
        let sigma = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 0.9, 0.2, 0.1, 0.2, 1.1]);
        let params = VarParams::new(vec![a1], sigma).unwrap();
        let theta = inv_cov_from_var(&params).unwrap();
        let complete = UndirectedGraph::complete(3).unwrap();
        let lambda = asymptotic_covariance(&theta, &complete).unwrap();

        // Relabel vertices by perm: new index i holds old index perm[i].
        let perm = [2usize, 0, 1];
        let permuted_lags: Vec<DMatrix<f64>> = theta
            .lags()
            .iter()
            .map(|m| DMatrix::from_fn(3, 3, |i, j| m[(perm[i], perm[j])]))
            .collect();
        let theta_p = GiParams::new(permuted_lags).unwrap();
        let lambda_p = asymptotic_covariance(&theta_p, &complete).unwrap();

        // Coordinate map induced on theta indices by the relabeling.
        let coords: Vec<_> = theta_coords(3, 1).collect();
        let index_of = |a: usize, b: usize, u: usize| {
            coords
                .iter()
                .position(|&(ca, cb, cu)| {
                    if u == 0 {
                        cu == 0 && ((ca, cb) == (a.max(b), a.min(b)))
                    } else {
                        (ca, cb, cu) == (a, b, u)
                    }
                })
                .unwrap()
        };
        for (k, &(a, b, u)) in coords.iter().enumerate() {
            for (l, &(c, e, v)) in coords.iter().enumerate() {
                let kp = index_of(perm[a], perm[b], u);
                let lp = index_of(perm[c], perm[e], v);
                assert_abs_diff_eq!(lambda_p[(k, l)], lambda[(kp, lp)], epsilon = 1e-9);
            }
        }
    }
}
