//! Randomized property batteries over the public API.

mod common;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::{chain_system, rand_stable_var};
use givar::fit::{fit_gi, FitOptions};
use givar::graph::enumerate_graphs;
use givar::params::{theta_coords, ModelSpec, ZeroPattern};
use givar::spectral::{
    cov_from_spectrum, inv_cov_from_spectrum, inv_spectrum_from_gi, invert_grid, periodogram,
    spectrum_from_gi, TaperSpec,
};
use givar::var::{inv_cov_from_var, simulate_var, var_spectrum, yule_walker};
use givar::whittle::{asymptotic_covariance, whittle_gradient};
use givar::UndirectedGraph;

/// Separation agrees with brute-force path enumeration on every graph with
/// five vertices, for all singleton pairs and all conditioning sets.
#[test]
fn separation_matches_path_enumeration_d5() {
    fn has_path(g: &UndirectedGraph, from: usize, to: usize, blocked: &[usize]) -> bool {
        fn dfs(
            g: &UndirectedGraph,
            v: usize,
            to: usize,
            blocked: &[usize],
            seen: &mut Vec<usize>,
        ) -> bool {
            if v == to {
                return true;
            }
            for w in 0..g.vertex_count() {
                if g.has_edge(v, w) && !blocked.contains(&w) && !seen.contains(&w) {
                    seen.push(w);
                    if dfs(g, w, to, blocked, seen) {
                        return true;
                    }
                    seen.pop();
                }
            }
            false
        }
        dfs(g, from, to, blocked, &mut vec![from])
    }

    for g in enumerate_graphs(5).unwrap() {
        for a in 0..5usize {
            for b in (a + 1)..5 {
                let rest: Vec<usize> = (0..5).filter(|&v| v != a && v != b).collect();
                for mask in 0..(1usize << rest.len()) {
                    let s: Vec<usize> = rest
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, &v)| v)
                        .collect();
                    let expect = !has_path(&g, a, b, &s);
                    assert_eq!(g.separates(&[a], &[b], &s).unwrap(), expect);
                }
            }
        }
    }
}

/// Yule-Walker on exact covariances recovers the generating VAR, and the
/// inverse covariances beyond lag p vanish, over 100 random stable draws.
#[test]
fn yule_walker_round_trip_and_inverse_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let d = rng.random_range(1..=4usize);
        let p = rng.random_range(1..=3usize);
        let truth = rand_stable_var(d, p, &mut rng);
        let f = var_spectrum(&truth, 1024).unwrap();
        let cov = cov_from_spectrum(&f, p).unwrap();
        let refit = yule_walker(&cov, p).unwrap();
        for v in 1..=p {
            assert!(
                (refit.coeff(v) - truth.coeff(v)).abs().max() < 1e-8,
                "coefficient mismatch at lag {v}"
            );
        }
        assert!((refit.sigma() - truth.sigma()).abs().max() < 1e-8);

        let tail = inv_cov_from_spectrum(&f, p + 2).unwrap();
        assert!(tail.lag(p + 1).abs().max() < 1e-8);
        assert!(tail.lag(p + 2).abs().max() < 1e-8);
    }
}

/// Time-domain oracle for VAR covariances: embed the process in companion
/// form over p+1 lags and sum the convergent series
/// `sum_k C^k E (C^k)'` for the stationary state covariance, whose first
/// block row holds `Gamma(0..p)`.
fn analytic_var_covariances(
    params: &givar::params::VarParams,
    max_lag: usize,
) -> Vec<DMatrix<f64>> {
    let d = params.dim();
    let p = params.order();
    let blocks = max_lag.max(p) + 1;
    let m = d * blocks;
    let mut companion = DMatrix::<f64>::zeros(m, m);
    for v in 1..=p {
        companion
            .view_mut((0, (v - 1) * d), (d, d))
            .copy_from(params.coeff(v));
    }
    for b in 1..blocks {
        companion
            .view_mut((b * d, (b - 1) * d), (d, d))
            .copy_from(&DMatrix::identity(d, d));
    }
    let mut noise = DMatrix::<f64>::zeros(m, m);
    noise.view_mut((0, 0), (d, d)).copy_from(params.sigma());

    let mut state_cov = DMatrix::<f64>::zeros(m, m);
    let mut term = noise.clone();
    for _ in 0..600 {
        state_cov += &term;
        term = &companion * term * companion.transpose();
    }
    (0..=max_lag)
        .map(|u| state_cov.view((0, u * d), (d, d)).into_owned())
        .collect()
}

/// The grid transform of a VAR spectrum reproduces the analytic covariances
/// computed entirely in the time domain.
#[test]
fn spectrum_covariances_match_time_domain_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let d = rng.random_range(1..=3usize);
        let truth = rand_stable_var(d, 2, &mut rng);
        let f = var_spectrum(&truth, 1024).unwrap();
        let from_grid = cov_from_spectrum(&f, 3).unwrap();
        let direct = analytic_var_covariances(&truth, 3);
        for (u, oracle) in direct.iter().enumerate() {
            assert!(
                (from_grid.lag(u) - oracle).abs().max() < 1e-8,
                "lag {u} disagrees with the companion-series oracle"
            );
        }
    }
}

/// The finite inverse-covariance expansion reproduces the inverse spectrum,
/// and the spectrum -> inverse covariance round trip recovers the
/// parameters.
#[test]
fn gi_transform_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let d = rng.random_range(1..=4usize);
        let p = rng.random_range(0..=3usize);
        let truth = rand_stable_var(d, p, &mut rng);
        let gi = inv_cov_from_var(&truth).unwrap();

        let n = 512;
        let f = spectrum_from_gi(&gi, n).unwrap();
        // 2 pi sum gamma_inv(u) e^{-i lambda u} equals f^-1 on the grid.
        let g_direct = inv_spectrum_from_gi(&gi, n).unwrap();
        let g_inv = invert_grid(&f).unwrap();
        for j in 0..n {
            let diff = (g_direct.value(j) - g_inv.value(j))
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
            assert!(diff < 1e-8, "inverse spectrum mismatch {diff:.3e}");
        }

        // cov_from_spectrum then inv_cov_from_spectrum recovers the
        // parameters.
        let icov = inv_cov_from_spectrum(&f, p).unwrap();
        for u in 0..=p {
            assert!((gi.gamma_inv(u) - icov.lag(u)).abs().max() < 1e-8);
        }
    }
}

/// At a converged fit the Whittle gradient max-norm stays within a small
/// multiple of the tolerance (its components are the moment residuals).
#[test]
fn gradient_small_at_converged_fits() {
    let (truth, graph) = chain_system();
    let x = simulate_var(&truth, 2000, 110, 21).unwrap().demean();
    let opts = FitOptions::default();
    for g in [graph, UndirectedGraph::complete(3).unwrap()] {
        let fit = fit_gi(&x, &ModelSpec::new(1, g.clone()), &opts).unwrap();
        assert!(fit.converged);
        let i = periodogram(&x, &opts.taper, fit.grid_size).unwrap();
        let grad = whittle_gradient(&fit.gi, &g, &i).unwrap();
        let max = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            max <= 10.0 * opts.tolerance,
            "gradient max-norm {max:.3e} above 10 tolerance for |E| = {}",
            g.edge_count()
        );
    }
}

/// Fitted free coordinates sit within three asymptotic standard errors of
/// the truth on chain data.
#[test]
fn fitted_coefficients_within_three_sigma() {
    let (truth, graph) = chain_system();
    let t_len = 2000;
    let x = simulate_var(&truth, t_len, 110, 22).unwrap();
    let fit = fit_gi(
        &x,
        &ModelSpec::new(1, graph.clone()),
        &FitOptions::default(),
    )
    .unwrap();
    assert!(fit.converged);

    let theta_hat = fit.gi.theta();
    let theta_true = inv_cov_from_var(&truth).unwrap().theta();
    let lambda = asymptotic_covariance(&fit.gi, &graph).unwrap();
    let pattern = ZeroPattern::new(1, &graph);
    for (k, _) in theta_coords(3, 1).enumerate() {
        if !pattern.is_free(k) {
            continue;
        }
        let se = (lambda[(k, k)] / t_len as f64).sqrt();
        let dev = (theta_hat[k] - theta_true[k]).abs();
        assert!(
            dev <= 3.0 * se,
            "coordinate {k}: deviation {dev:.4} exceeds 3 se = {:.4}",
            3.0 * se
        );
    }
}

/// Whittle likelihood decreases (up to slack) along nested graphs at a
/// fixed order.
#[test]
fn nested_graph_loglik_monotonicity() {
    let (truth, graph) = chain_system();
    let x = simulate_var(&truth, 2000, 110, 23).unwrap();
    let chain: Vec<UndirectedGraph> = vec![
        UndirectedGraph::empty(3).unwrap(),
        UndirectedGraph::new(3, &[(1, 2)]).unwrap(),
        graph,
        UndirectedGraph::complete(3).unwrap(),
    ];
    let opts = FitOptions::default();
    let logliks: Vec<f64> = chain
        .iter()
        .map(|g| {
            let fit = fit_gi(&x, &ModelSpec::new(1, g.clone()), &opts).unwrap();
            assert!(fit.converged);
            fit.loglik
        })
        .collect();
    for (pair, w) in chain.windows(2).zip(logliks.windows(2)) {
        assert!(pair[1].contains(&pair[0]));
        assert!(
            w[1] <= w[0] + 10.0 * opts.tolerance,
            "loglik rose from {:.8} to {:.8} on a larger graph",
            w[0],
            w[1]
        );
    }
}

/// Every grid produced along the standard pipeline satisfies the Hermitian
/// and conjugate-symmetry invariants.
#[test]
fn produced_grids_satisfy_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10 {
        let d = rng.random_range(1..=4usize);
        let p = rng.random_range(0..=2usize);
        let truth = rand_stable_var(d, p, &mut rng);
        let f = var_spectrum(&truth, 256).unwrap();
        assert!(f.hermitian_residual() < 1e-10);
        assert!(f.conjugate_symmetry_residual() < 1e-10);
        assert!(f.min_eigenvalue() > 0.0);

        let g = invert_grid(&f).unwrap();
        assert!(g.hermitian_residual() < 1e-10);
        assert!(g.conjugate_symmetry_residual() < 1e-10);

        let x = simulate_var(&truth, 300, 60, rng.random())
            .unwrap()
            .demean();
        let i = periodogram(&x, &TaperSpec::default(), 2048).unwrap();
        assert!(i.hermitian_residual() < 1e-10);
        assert!(i.conjugate_symmetry_residual() < 1e-10);
    }
}

/// Enumerated graphs are distinct and complete for d <= 5.
#[test]
fn enumeration_yields_all_distinct_graphs() {
    for d in 1..=5usize {
        let graphs = enumerate_graphs(d).unwrap();
        let expect = 1usize << (d * (d - 1) / 2);
        assert_eq!(graphs.len(), expect);
        let distinct: std::collections::BTreeSet<Vec<(usize, usize)>> = graphs
            .iter()
            .map(|g| g.edges().collect::<Vec<_>>())
            .collect();
        assert_eq!(distinct.len(), expect);
    }
}

/// The fitted chain spectrum reproduces the spectral-domain zero: the
/// partial coherence computed through inversion stays below 1e-8 on the
/// missing edge (the Eq-consistency oracle for the coherence formula).
#[test]
fn fitted_chain_partial_coherence_vanishes_via_inversion() {
    let (truth, graph) = chain_system();
    let x = simulate_var(&truth, 2000, 110, 25).unwrap();
    let fit = fit_gi(&x, &ModelSpec::new(1, graph), &FitOptions::default()).unwrap();
    assert!(fit.converged);
    let f = spectrum_from_gi(&fit.gi, 1024).unwrap();
    let r = givar::spectral::partial_coherence(&f).unwrap();
    assert!(r.max_abs(0, 2) < 1e-8);
    // present edges carry visible dependence
    assert!(r.max_abs(0, 1) > 0.3);
    assert!(r.max_abs(1, 2) > 0.3);

    let direct = givar::spectral::partial_coherence_from_inverse(
        &inv_spectrum_from_gi(&fit.gi, 1024).unwrap(),
    );
    assert_eq!(direct.max_abs(0, 2), 0.0);
}

/// Double application of the taper-free periodogram/covariance identity:
/// model covariances of the dual parameterizations agree on the fit grid.
#[test]
fn fit_dual_parameterizations_share_covariances() {
    let (truth, graph) = chain_system();
    let x = simulate_var(&truth, 1500, 110, 26).unwrap();
    let fit = fit_gi(&x, &ModelSpec::new(1, graph), &FitOptions::default()).unwrap();
    let f_gi = spectrum_from_gi(&fit.gi, 512).unwrap();
    let f_var = var_spectrum(&fit.var, 512).unwrap();
    let c_gi = cov_from_spectrum(&f_gi, 1).unwrap();
    let c_var = cov_from_spectrum(&f_var, 1).unwrap();
    for u in 0..=1 {
        assert!((c_gi.lag(u) - c_var.lag(u)).abs().max() < 1e-8);
    }
}
