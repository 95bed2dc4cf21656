//! Alternating-projection fitting: cycle between the order-constraint step
//! (Yule-Walker) and one partial-regression step per missing edge until the
//! likelihood equations hold.
//!
//! Starting from the empirical covariances, each cycle first enforces the
//! missing-edge constraints (zeroing the corresponding inverse-spectrum
//! entries one pair at a time) and then the order constraint (projecting
//! onto VAR(p) spectra via Yule-Walker). Ending every cycle on the order
//! step keeps the iterate an exact VAR(p) spectrum, so the dual
//! autoregressive parameters always come from a Yule-Walker solve.
//! Convergence is measured by the scaled estimating-equation residuals, not
//! by iterate change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::params::{apply_zero_pattern, GiParams, ModelSpec, VarParams};
use crate::spectral::{
    cov_from_spectrum, data_grid_size, periodogram, spectrum_from_gi, Complex64, CovSeq,
    SpectralGrid, TaperSpec, TimeSeries,
};
use crate::var::{inv_cov_from_var, var_spectrum, yule_walker};
use crate::whittle::{residual_report, whittle_loglik, ResidualReport};

/// The zero-constraint structure of a model: the order constraint (inverse
/// covariances vanish beyond lag `p`) plus one constraint set per missing
/// edge, in lexicographic pair order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSets {
    pub p: usize,
    /// Missing edges `{a_i, b_i}`, `a_i < b_i`, lexicographically ordered.
    pub missing_edges: Vec<(usize, usize)>,
}

impl ConstraintSets {
    /// Number of edge-constraint sets `m`.
    pub fn edge_set_count(&self) -> usize {
        self.missing_edges.len()
    }
}

/// Enumerates the constraint sets of the order-`p` model for `graph`.
pub fn constraint_sets(p: usize, graph: &UndirectedGraph) -> ConstraintSets {
    ConstraintSets {
        p,
        missing_edges: graph.missing_edges(),
    }
}

/// Options controlling a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence tolerance on the scaled estimating-equation residuals.
    pub tolerance: f64,
    pub max_cycles: usize,
    /// Frequency grid size; `None` picks [`data_grid_size`] for the series.
    pub grid_size: Option<usize>,
    pub taper: TaperSpec,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_cycles: 1000,
            grid_size: None,
            taper: TaperSpec::default(),
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.max_cycles < 1 {
            return Err(Error::InvalidArgument(
                "max_cycles must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted model in both parameterizations.
///
/// `gi` carries the zero pattern of the graph exactly; `var` is its
/// autoregressive dual, recovered from the final Yule-Walker solve, and the
/// two describe the same spectrum up to rounding. `converged = false` is a
/// reported state with diagnostics, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub gi: GiParams,
    pub var: VarParams,
    /// Whittle likelihood of the returned model against the periodogram.
    pub loglik: f64,
    pub residuals: ResidualReport,
    pub cycles: usize,
    pub converged: bool,
    pub grid_size: usize,
    pub taper: TaperSpec,
    /// Whittle likelihood after each cycle, for diagnostics only; the
    /// algorithm does not guarantee monotone decrease.
    pub loglik_trace: Vec<f64>,
}

/// Serialized form of a fit:
/// `{spec, var, gamma_inv, loglik, residuals, cycles, converged, N, taper}`
/// plus the optional asymptotic covariance over the theta layout with its
/// index legend.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResultFile {
    pub spec: ModelSpec,
    pub var: VarParams,
    pub gamma_inv: Vec<Vec<Vec<f64>>>,
    pub loglik: f64,
    pub residuals: ResidualSummary,
    pub cycles: usize,
    pub converged: bool,
    #[serde(rename = "N")]
    pub n: usize,
    pub taper: TaperSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_index: Option<Vec<(usize, usize, usize)>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub moment: f64,
    pub constraint: f64,
}

impl FitResult {
    /// File form of the result; `lambda` is the optional asymptotic
    /// covariance over the full theta layout.
    pub fn to_file(&self, lambda: Option<nalgebra::DMatrix<f64>>) -> FitResultFile {
        let d = self.gi.dim();
        let gamma_inv = self
            .gi
            .lags()
            .iter()
            .map(|m| {
                (0..d)
                    .map(|i| (0..d).map(|j| m[(i, j)]).collect())
                    .collect()
            })
            .collect();
        let theta_index = lambda
            .as_ref()
            .map(|_| crate::params::theta_coords(d, self.gi.order()).collect());
        FitResultFile {
            spec: self.spec.clone(),
            var: self.var.clone(),
            gamma_inv,
            loglik: self.loglik,
            residuals: ResidualSummary {
                moment: self.residuals.moment_residual,
                constraint: self.residuals.constraint_residual,
            },
            cycles: self.cycles,
            converged: self.converged,
            n: self.grid_size,
            taper: self.taper,
            lambda: lambda.map(|m| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                    .collect()
            }),
            theta_index,
        }
    }
}

impl FitResultFile {
    /// Rebuilds the inverse-covariance parameters stored in the file.
    pub fn gi_params(&self) -> Result<GiParams> {
        let d = self.var.dim();
        let lags = self
            .gamma_inv
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidArgument(
                        "gamma_inv matrices must be d x d".into(),
                    ));
                }
                Ok(nalgebra::DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        GiParams::new(lags)
    }
}

/// Projects a spectrum onto the VAR(p) class: covariances at lags `0..=p`
/// are read off the grid, Yule-Walker is solved, and the solution's spectrum
/// is returned together with its parameters. Covariances at lags `0..=p`
/// are preserved; inverse covariances of the output vanish beyond lag `p`.
pub fn order_projection_step(f: &SpectralGrid, p: usize) -> Result<(SpectralGrid, VarParams)> {
    let gamma = cov_from_spectrum(f, p)?;
    let var = yule_walker(&gamma, p)?;
    let grid = var_spectrum(&var, f.len())?;
    Ok((grid, var))
}

/// Replaces the (a, b) cross-spectrum by the partial regression
/// `f_aS f_SS^-1 f_Sb` with `S` the remaining components, which zeroes the
/// (a, b) entry of the inverse spectrum at every frequency. Only the (a, b)
/// and (b, a) entries change; the grid stays Hermitian positive definite.
pub fn edge_projection_step(f: &SpectralGrid, pair: (usize, usize)) -> Result<SpectralGrid> {
    let mut out = f.clone();
    edge_projection_in_place(&mut out, pair)?;
    Ok(out)
}

pub(crate) fn edge_projection_in_place(
    grid: &mut SpectralGrid,
    (a, b): (usize, usize),
) -> Result<()> {
    let d = grid.dim();
    if a == b || a >= d || b >= d {
        return Err(Error::InvalidArgument(format!(
            "invalid pair ({a}, {b}) for dimension {d}"
        )));
    }
    let rest: Vec<usize> = (0..d).filter(|&v| v != a && v != b).collect();
    let s = rest.len();
    for (j, m) in grid.values_mut().iter_mut().enumerate() {
        let new_val = if s == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let f_ss = nalgebra::DMatrix::from_fn(s, s, |i, k| m[(rest[i], rest[k])]);
            let f_sb = nalgebra::DVector::from_fn(s, |i, _| m[(rest[i], b)]);
            let chol = f_ss.cholesky().ok_or(Error::SingularFrequency {
                index: j,
                detail: "conditioning block is not positive definite".into(),
            })?;
            let x = chol.solve(&f_sb);
            (0..s).map(|i| m[(a, rest[i])] * x[i]).sum()
        };
        m[(a, b)] = new_val;
        m[(b, a)] = new_val.conj();
    }
    Ok(())
}

/// Empirical statistics shared by every model fitted to the same series:
/// the tapered periodogram and the covariances it transforms into.
pub(crate) struct EmpiricalStats {
    pub periodogram: SpectralGrid,
    pub gammahat: CovSeq,
    pub t_len: usize,
}

impl EmpiricalStats {
    pub fn compute(
        x: &TimeSeries,
        taper: &TaperSpec,
        grid_size: Option<usize>,
        max_p: usize,
    ) -> Result<Self> {
        let centered;
        let x = if x.is_demeaned() {
            x
        } else {
            centered = x.demean();
            &centered
        };
        let n = grid_size.unwrap_or_else(|| data_grid_size(x.len()));
        let periodogram = periodogram(x, taper, n)?;
        let gammahat = cov_from_spectrum(&periodogram, max_p)?;
        Ok(Self {
            periodogram,
            gammahat,
            t_len: x.len(),
        })
    }
}

/// Fits the order-`p` model for `spec.graph` to `x` by alternating
/// projections on the Whittle likelihood equations.
///
/// The series is demeaned (unless already centered), the tapered
/// periodogram and its implied covariances are computed, and the iteration
/// starts from the Yule-Walker solution on those covariances. Each cycle
/// applies one partial-regression step per missing edge followed by the
/// order projection, then evaluates the scaled estimating-equation
/// residuals; it stops once their maximum is at or below the tolerance.
/// Non-convergence within `max_cycles` is reported, never silent.
pub fn fit_gi(x: &TimeSeries, spec: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    if x.dim() != spec.dim() {
        return Err(Error::InvalidArgument(format!(
            "series dimension {} does not match graph dimension {}",
            x.dim(),
            spec.dim()
        )));
    }
    let stats = EmpiricalStats::compute(x, &opts.taper, opts.grid_size, spec.p)?;
    fit_with_stats(&stats, spec, opts)
}

pub(crate) fn fit_with_stats(
    stats: &EmpiricalStats,
    spec: &ModelSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    let d = spec.dim();
    let p = spec.p;
    if stats.t_len <= d * (p + 1) {
        return Err(Error::InvalidArgument(format!(
            "series length {} too short to identify a d = {d}, p = {p} model",
            stats.t_len
        )));
    }
    let n = stats.periodogram.len();
    let gammahat = stats.gammahat.truncated(p)?;
    let constraints = constraint_sets(p, &spec.graph);

    // First order-constraint step: Yule-Walker on the empirical covariances.
    let mut var = yule_walker(&gammahat, p)?;
    let mut grid = var_spectrum(&var, n)?;

    let mut loglik_trace = Vec::new();
    let mut converged = false;
    let mut cycles = 0;
    let mut report = None;
    for cycle in 1..=opts.max_cycles {
        for &pair in &constraints.missing_edges {
            edge_projection_in_place(&mut grid, pair)?;
        }
        let (projected, refit) = order_projection_step(&grid, p)?;
        grid = projected;
        var = refit;

        let gi_raw = inv_cov_from_var(&var)?;
        let gamma_model = cov_from_spectrum(&grid, p)?;
        let cycle_report = residual_report(&gamma_model, &gi_raw, &spec.graph, &gammahat);
        loglik_trace.push(whittle_loglik(&grid, &stats.periodogram)?);
        cycles = cycle;
        let done = cycle_report.max_residual() <= opts.tolerance;
        report = Some(cycle_report);
        if done {
            converged = true;
            break;
        }
    }
    let residuals = report.expect("at least one cycle runs");

    // Return the model inside GI(p, G): project the tiny constraint
    // violations to exact zeros and refactor the autoregressive dual from
    // the projected parameters, so both parameterizations describe the same
    // spectrum up to rounding.
    let gi = apply_zero_pattern(&inv_cov_from_var(&var)?, &spec.graph)?;
    let final_var = if constraints.edge_set_count() == 0 {
        var
    } else {
        let f_gi = spectrum_from_gi(&gi, n)?;
        let gamma_gi = cov_from_spectrum(&f_gi, p)?;
        yule_walker(&gamma_gi, p)?
    };
    let final_grid = var_spectrum(&final_var, n)?;
    let loglik = whittle_loglik(&final_grid, &stats.periodogram)?;

    Ok(FitResult {
        spec: spec.clone(),
        gi,
        var: final_var,
        loglik,
        residuals,
        cycles,
        converged,
        grid_size: n,
        taper: opts.taper,
        loglik_trace,
    })
}
