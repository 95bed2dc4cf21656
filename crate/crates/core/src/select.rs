//! Exhaustive (order, graph) model search scored by BIC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_with_stats, EmpiricalStats, FitOptions, FitResult};
use crate::graph::{enumerate_graphs_capped, UndirectedGraph, DEFAULT_ENUMERATION_CAP};
use crate::params::{param_count, ModelSpec};
use crate::spectral::TimeSeries;

/// Models whose BIC is within this margin of the best are reported as
/// statistically indistinguishable from it.
pub const BIC_INDISTINGUISHABLE_MARGIN: f64 = 2.0;

/// BIC score of a converged fit: `T log det Sigma_hat + log(T) q` with `q`
/// the free-parameter count.
///
/// `literal = true` switches to the `T det Sigma_hat + log(T) q` variant.
/// That form is not invariant under rescaling the data and exists only for
/// comparison.
pub fn bic_with_formula(fit: &FitResult, t_len: usize, literal: bool) -> Result<f64> {
    if !fit.converged {
        return Err(Error::InvalidArgument(
            "BIC is only defined for converged fits".into(),
        ));
    }
    if t_len < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let chol = fit.var.sigma().clone().cholesky().ok_or_else(|| {
        Error::Degenerate("fitted innovation covariance not positive definite".into())
    })?;
    let logdet: f64 = 2.0
        * (0..fit.var.dim())
            .map(|i| chol.l()[(i, i)].ln())
            .sum::<f64>();
    let q = param_count(fit.spec.p, &fit.spec.graph) as f64;
    let t = t_len as f64;
    let goodness = if literal {
        t * logdet.exp()
    } else {
        t * logdet
    };
    Ok(goodness + t.ln() * q)
}

/// BIC with the default (log-determinant) formula.
pub fn bic(fit: &FitResult, t_len: usize) -> Result<f64> {
    bic_with_formula(fit, t_len, false)
}

/// Options for [`select_models`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectOptions {
    pub fit: FitOptions,
    /// Use the literal `T det Sigma` BIC formula instead of the default.
    pub bic_literal: bool,
    /// Worker threads for independent model fits; 1 means sequential.
    /// The report is byte-identical regardless of this setting.
    pub jobs: usize,
    /// Cap on `d` when enumerating all graphs.
    pub enumeration_cap: usize,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            bic_literal: false,
            jobs: 1,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// One scored model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionRow {
    pub graph: UndirectedGraph,
    pub p: usize,
    /// Free-parameter count `q`.
    pub q: usize,
    /// `None` when the fit failed or did not converge.
    pub bic: Option<f64>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub cycles: usize,
    /// Diagnostic for fits that errored out.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Position in the requested (p, graph) lattice; the tie-break of last
    /// resort.
    #[serde(skip)]
    pub lattice_index: usize,
}

/// Summary of the data the search ran on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSummary {
    #[serde(rename = "T")]
    pub t_len: usize,
    pub d: usize,
    pub labels: Vec<String>,
}

/// Ranked report over the requested (order, graph) lattice.
///
/// Rows are sorted by ascending BIC with ties broken by fewer parameters,
/// then lattice order; rows without a BIC (failed or non-converged fits)
/// are flagged and placed last, and are never designated best.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub data: DataSummary,
    pub rows: Vec<SelectionRow>,
    /// Index (into `rows`) of every converged model within
    /// [`BIC_INDISTINGUISHABLE_MARGIN`] of the best.
    pub within_two_bic: Vec<usize>,
}

impl SelectionReport {
    /// The best (first) row; selection fails before constructing a report
    /// with no converged rows, so this is always present.
    pub fn best(&self) -> &SelectionRow {
        &self.rows[0]
    }
}

/// Fits every (p, graph) pair in `p_range` x `graphs` and ranks the
/// converged fits by BIC. When `graphs` is `None` all graphs on the series
/// dimension are enumerated (subject to the cap). Fits may run in parallel;
/// the report does not depend on the schedule.
pub fn select_models(
    x: &TimeSeries,
    p_range: (usize, usize),
    graphs: Option<Vec<UndirectedGraph>>,
    opts: &SelectOptions,
) -> Result<SelectionReport> {
    let (p_min, p_max) = p_range;
    if p_min > p_max {
        return Err(Error::InvalidArgument(format!(
            "empty order range {p_min}..={p_max}"
        )));
    }
    let d = x.dim();
    let graphs = match graphs {
        Some(g) => {
            if g.is_empty() {
                return Err(Error::InvalidArgument("graph list is empty".into()));
            }
            if let Some(bad) = g.iter().find(|g| g.vertex_count() != d) {
                return Err(Error::InvalidArgument(format!(
                    "graph on {} vertices does not match series dimension {d}",
                    bad.vertex_count()
                )));
            }
            g
        }
        None => enumerate_graphs_capped(d, opts.enumeration_cap)?,
    };

    let centered;
    let x = if x.is_demeaned() {
        x
    } else {
        centered = x.demean();
        &centered
    };
    let stats = EmpiricalStats::compute(x, &opts.fit.taper, opts.fit.grid_size, p_max)?;

    let lattice: Vec<(usize, &UndirectedGraph)> = (p_min..=p_max)
        .flat_map(|p| graphs.iter().map(move |g| (p, g)))
        .collect();

    let run_one = |(index, &(p, graph)): (usize, &(usize, &UndirectedGraph))| -> SelectionRow {
        let spec = ModelSpec::new(p, graph.clone());
        let q = param_count(p, graph);
        match fit_with_stats(&stats, &spec, &opts.fit) {
            Ok(fit) => {
                let bic_value = if fit.converged {
                    bic_with_formula(&fit, stats.t_len, opts.bic_literal).ok()
                } else {
                    None
                };
                SelectionRow {
                    graph: graph.clone(),
                    p,
                    q,
                    bic: bic_value,
                    loglik: Some(fit.loglik),
                    converged: fit.converged,
                    cycles: fit.cycles,
                    note: (!fit.converged).then(|| {
                        format!(
                            "no convergence in {} cycles (residual {:.3e})",
                            fit.cycles,
                            fit.residuals.max_residual()
                        )
                    }),
                    lattice_index: index,
                }
            }
            Err(e) => SelectionRow {
                graph: graph.clone(),
                p,
                q,
                bic: None,
                loglik: None,
                converged: false,
                cycles: 0,
                note: Some(e.to_string()),
                lattice_index: index,
            },
        }
    };

    let mut rows: Vec<SelectionRow> = if opts.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            lattice
                .iter()
                .enumerate()
                .par_bridge()
                .map(run_one)
                .collect()
        })
    } else {
        lattice.iter().enumerate().map(run_one).collect()
    };

    // Deterministic ranking regardless of the execution schedule: converged
    // rows by (bic, q, lattice order), the rest by lattice order at the end.
    rows.sort_by(|a, b| match (a.bic, b.bic) {
        (Some(x), Some(y)) => x
            .partial_cmp(&y)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.q.cmp(&b.q))
            .then(a.lattice_index.cmp(&b.lattice_index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.lattice_index.cmp(&b.lattice_index),
    });

    let best_bic = rows
        .first()
        .and_then(|r| r.bic)
        .ok_or_else(|| Error::SelectionFailed(selection_diagnostics(&rows)))?;
    let within_two_bic = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.bic
                .map(|b| b <= best_bic + BIC_INDISTINGUISHABLE_MARGIN)
                .unwrap_or(false)
        })
        .map(|(i, _)| i)
        .collect();

    Ok(SelectionReport {
        data: DataSummary {
            t_len: stats.t_len,
            d,
            labels: x.labels().to_vec(),
        },
        rows,
        within_two_bic,
    })
}

fn selection_diagnostics(rows: &[SelectionRow]) -> String {
    let mut notes: Vec<String> = rows
        .iter()
        .take(5)
        .map(|r| {
            format!(
                "p={} |E|={}: {}",
                r.p,
                r.graph.edge_count(),
                r.note.as_deref().unwrap_or("no diagnostic")
            )
        })
        .collect();
    if rows.len() > 5 {
        notes.push(format!("... and {} more models", rows.len() - 5));
    }
    format!("no model converged; {}", notes.join("; "))
}
