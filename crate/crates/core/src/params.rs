//! Model specifications, parameter containers and zero-pattern bookkeeping.
//!
//! A model of order `p` for a graph `G` is parameterized by the inverse
//! covariances `gamma_inv(0..p)`: the inverse spectral matrix is the finite
//! expansion `f(lambda)^-1 = 2 pi sum_{|u| <= p} gamma_inv(u) e^{-i lambda u}`
//! with `gamma_inv(-u) = gamma_inv(u)'`. Missing edges force the
//! corresponding entries to zero at every lag; the free entries form the
//! parameter vector theta, laid out as the stacked lower triangle of
//! `gamma_inv(0)` followed by the column-stacked `gamma_inv(1..p)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

/// An (order, graph) model specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Autoregressive order; `p = 0` is the white-noise covariance-selection
    /// case.
    pub p: usize,
    pub graph: UndirectedGraph,
}

impl ModelSpec {
    pub fn new(p: usize, graph: UndirectedGraph) -> Self {
        Self { p, graph }
    }

    pub fn dim(&self) -> usize {
        self.graph.vertex_count()
    }
}

/// Inverse-covariance parameters `gamma_inv(0..p)` of a model of order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GiParams {
    d: usize,
    p: usize,
    gamma_inv: Vec<DMatrix<f64>>,
}

impl GiParams {
    /// Wraps `gamma_inv(0..p)`; `gamma_inv[0]` must be symmetric and all
    /// matrices square of equal dimension.
    pub fn new(gamma_inv: Vec<DMatrix<f64>>) -> Result<Self> {
        let lag0 = gamma_inv
            .first()
            .ok_or_else(|| Error::InvalidArgument("gamma_inv must contain lag 0".into()))?;
        let d = lag0.nrows();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (u, m) in gamma_inv.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidArgument(format!(
                    "gamma_inv({u}) is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let asym = (lag0 - lag0.transpose()).abs().max();
        let scale = lag0.abs().max().max(1.0);
        if asym > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "gamma_inv(0) is not symmetric (residual {asym:.3e})"
            )));
        }
        let p = gamma_inv.len() - 1;
        Ok(Self { d, p, gamma_inv })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Inverse covariance at lag `u`, `0 <= u <= p`.
    pub fn gamma_inv(&self, u: usize) -> &DMatrix<f64> {
        &self.gamma_inv[u]
    }

    pub fn lags(&self) -> &[DMatrix<f64>] {
        &self.gamma_inv
    }

    /// Parameter vector in the canonical layout (see [`theta_coords`]).
    pub fn theta(&self) -> Vec<f64> {
        theta_coords(self.d, self.p)
            .map(|(a, b, u)| self.gamma_inv[u][(a, b)])
            .collect()
    }

    /// Rebuilds parameters from a theta vector.
    pub fn from_theta(d: usize, p: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() != theta_len(d, p) {
            return Err(Error::InvalidArgument(format!(
                "theta has length {}, expected {}",
                theta.len(),
                theta_len(d, p)
            )));
        }
        let mut gamma_inv = vec![DMatrix::zeros(d, d); p + 1];
        for (&value, (a, b, u)) in theta.iter().zip(theta_coords(d, p)) {
            gamma_inv[u][(a, b)] = value;
            if u == 0 {
                gamma_inv[0][(b, a)] = value;
            }
        }
        Self::new(gamma_inv)
    }

    /// Adds `delta` to the theta coordinate `k` (symmetrically for lag-0
    /// off-diagonal coordinates).
    pub fn perturb_coord(&self, k: usize, delta: f64) -> Self {
        let (a, b, u) = theta_coords(self.d, self.p).nth(k).expect("coord in range");
        let mut out = self.clone();
        out.gamma_inv[u][(a, b)] += delta;
        if u == 0 && a != b {
            out.gamma_inv[0][(b, a)] += delta;
        }
        out
    }
}

/// Coordinates `(a, b, u)` of the parameter vector in canonical order:
/// the lower triangle of lag 0 stacked by columns (`a >= b`), then each
/// lag `1..=p` stacked by columns in full.
pub fn theta_coords(d: usize, p: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    let lag0 = (0..d).flat_map(move |b| (b..d).map(move |a| (a, b, 0)));
    let lags = (1..=p).flat_map(move |u| (0..d).flat_map(move |b| (0..d).map(move |a| (a, b, u))));
    lag0.chain(lags)
}

/// Total number of theta coordinates: `d(d+1)/2 + p d^2`.
pub fn theta_len(d: usize, p: usize) -> usize {
    d * (d + 1) / 2 + p * d * d
}

/// Free/constrained flags over the theta coordinates of a model.
///
/// A coordinate `(a, b, u)` is constrained exactly when `a != b` and
/// `{a,b}` is not an edge of the graph.
#[derive(Debug, Clone)]
pub struct ZeroPattern {
    d: usize,
    p: usize,
    free: Vec<bool>,
}

impl ZeroPattern {
    pub fn new(p: usize, graph: &UndirectedGraph) -> Self {
        let d = graph.vertex_count();
        let free = theta_coords(d, p)
            .map(|(a, b, _)| a == b || graph.has_edge(a, b))
            .collect();
        Self { d, p, free }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn is_free(&self, k: usize) -> bool {
        self.free[k]
    }

    /// Positions of the free coordinates, i.e. the rows of the projector
    /// that maps theta to its unconstrained part.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.free.len()).filter(|&k| self.free[k]).collect()
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }
}

/// Number of free parameters of the order-`p` model for `graph`:
/// `d + |E| + p (d + 2 |E|)`.
pub fn param_count(p: usize, graph: &UndirectedGraph) -> usize {
    let d = graph.vertex_count();
    let e = graph.edge_count();
    d + e + p * (d + 2 * e)
}

/// Returns a copy of `theta` with every coordinate constrained by `graph`
/// set to zero. Free coordinates are untouched; idempotent.
pub fn apply_zero_pattern(theta: &GiParams, graph: &UndirectedGraph) -> Result<GiParams> {
    if theta.dim() != graph.vertex_count() {
        return Err(Error::InvalidArgument(format!(
            "parameter dimension {} does not match graph dimension {}",
            theta.dim(),
            graph.vertex_count()
        )));
    }
    let mut out = theta.clone();
    for (a, b) in graph.missing_edges() {
        for u in 0..=theta.p {
            out.gamma_inv[u][(a, b)] = 0.0;
            out.gamma_inv[u][(b, a)] = 0.0;
        }
    }
    Ok(out)
}

/// Autoregressive parameters: coefficients `a(1..p)` and innovation
/// covariance `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarParamsDto", into = "VarParamsDto")]
pub struct VarParams {
    d: usize,
    p: usize,
    a: Vec<DMatrix<f64>>,
    sigma: DMatrix<f64>,
}

/// JSON form: `{"d":2,"p":1,"a":[[[...],[...]]],"sigma":[[...],[...]]}` with
/// matrices as row-major nested arrays.
#[derive(Serialize, Deserialize)]
struct VarParamsDto {
    d: usize,
    p: usize,
    a: Vec<Vec<Vec<f64>>>,
    sigma: Vec<Vec<f64>>,
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidArgument(format!("{what} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl TryFrom<VarParamsDto> for VarParams {
    type Error = Error;
    fn try_from(dto: VarParamsDto) -> Result<Self> {
        if dto.a.len() != dto.p {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficient matrices, got {}",
                dto.p,
                dto.a.len()
            )));
        }
        let a = dto
            .a
            .iter()
            .enumerate()
            .map(|(u, rows)| matrix_from_rows(rows, dto.d, &format!("a({})", u + 1)))
            .collect::<Result<Vec<_>>>()?;
        let sigma = matrix_from_rows(&dto.sigma, dto.d, "sigma")?;
        VarParams::new(a, sigma)
    }
}

impl From<VarParams> for VarParamsDto {
    fn from(v: VarParams) -> Self {
        VarParamsDto {
            d: v.d,
            p: v.p,
            a: v.a.iter().map(matrix_to_rows).collect(),
            sigma: matrix_to_rows(&v.sigma),
        }
    }
}

impl VarParams {
    /// Wraps coefficients `a(1..p)` (possibly empty for `p = 0`) and a
    /// symmetric positive definite innovation covariance.
    pub fn new(a: Vec<DMatrix<f64>>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = sigma.nrows();
        if d == 0 || sigma.ncols() != d {
            return Err(Error::InvalidArgument(
                "sigma must be square and nonempty".into(),
            ));
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-9 * sigma.abs().max().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma is not symmetric (residual {asym:.3e})"
            )));
        }
        for (u, m) in a.iter().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidArgument(format!(
                    "a({}) is {}x{}, expected {d}x{d}",
                    u + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if sigma.clone().cholesky().is_none() {
            return Err(Error::Degenerate(
                "innovation covariance is not positive definite".into(),
            ));
        }
        let p = a.len();
        Ok(Self { d, p, a, sigma })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.p
    }

    /// Coefficient at lag `u`, `1 <= u <= p`.
    pub fn coeff(&self, u: usize) -> &DMatrix<f64> {
        &self.a[u - 1]
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_gi(d: usize, p: usize, rng: &mut ChaCha8Rng) -> GiParams {
        let mut lag0 = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        lag0 = (&lag0 + lag0.transpose()) / 2.0;
        let mut lags = vec![lag0];
        for _ in 1..=p {
            lags.push(DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)));
        }
        GiParams::new(lags).unwrap()
    }

    #[test]
    fn param_count_examples() {
        let complete5 = UndirectedGraph::complete(5).unwrap();
        assert_eq!(param_count(3, &complete5), 90);
        let empty5 = UndirectedGraph::empty(5).unwrap();
        assert_eq!(param_count(3, &empty5), 20);
        // |E| = 6 out of 10 possible edges.
        let g = UndirectedGraph::new(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (1, 4)]).unwrap();
        assert_eq!(param_count(3, &g), 62);
    }

    #[test]
    fn param_count_matches_free_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let d = rng.random_range(1..=5usize);
            let p = rng.random_range(0..=4usize);
            let all: Vec<(usize, usize)> = (0..d)
                .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
                .collect();
            let edges: Vec<_> = all.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            let g = UndirectedGraph::new(d, &edges).unwrap();
            let pattern = ZeroPattern::new(p, &g);
            assert_eq!(param_count(p, &g), pattern.free_count());
            assert_eq!(pattern.len(), theta_len(d, p));
        }
    }

    #[test]
    fn zero_pattern_complete_graph_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = rand_gi(4, 2, &mut rng);
        let g = UndirectedGraph::complete(4).unwrap();
        assert_eq!(apply_zero_pattern(&theta, &g).unwrap(), theta);
    }

    #[test]
    fn zero_pattern_empty_graph_zeroes_off_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = rand_gi(3, 1, &mut rng);
        let g = UndirectedGraph::empty(3).unwrap();
        let out = apply_zero_pattern(&theta, &g).unwrap();
        for u in 0..=1 {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        assert_eq!(out.gamma_inv(u)[(a, b)], 0.0);
                    } else {
                        assert_eq!(out.gamma_inv(u)[(a, b)], theta.gamma_inv(u)[(a, b)]);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_pattern_is_idempotent_and_preserves_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = rng.random_range(2..=5usize);
            let p = rng.random_range(0..=3usize);
            let theta = rand_gi(d, p, &mut rng);
            let all: Vec<(usize, usize)> = (0..d)
                .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
                .collect();
            let edges: Vec<_> = all.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            let g = UndirectedGraph::new(d, &edges).unwrap();
            let once = apply_zero_pattern(&theta, &g).unwrap();
            let twice = apply_zero_pattern(&once, &g).unwrap();
            assert_eq!(once, twice);
            for (k, (a, b, u)) in theta_coords(d, p).enumerate() {
                if ZeroPattern::new(p, &g).is_free(k) {
                    assert_eq!(once.gamma_inv(u)[(a, b)], theta.gamma_inv(u)[(a, b)]);
                }
            }
        }
    }

    #[test]
    fn zero_pattern_dimension_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta = rand_gi(3, 1, &mut rng);
        let g = UndirectedGraph::complete(4).unwrap();
        assert!(apply_zero_pattern(&theta, &g).is_err());
    }

    #[test]
    fn theta_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta = rand_gi(3, 2, &mut rng);
        let v = theta.theta();
        assert_eq!(v.len(), theta_len(3, 2));
        let back = GiParams::from_theta(3, 2, &v).unwrap();
        assert_eq!(back, theta);
    }

    #[test]
    fn theta_layout_order() {
        // d = 2, p = 1: vech(lag 0) = [(0,0),(1,0),(1,1)], then vec(lag 1).
        let coords: Vec<_> = theta_coords(2, 1).collect();
        assert_eq!(
            coords,
            vec![
                (0, 0, 0),
                (1, 0, 0),
                (1, 1, 0),
                (0, 0, 1),
                (1, 0, 1),
                (0, 1, 1),
                (1, 1, 1)
            ]
        );
    }

    #[test]
    fn gi_params_requires_symmetric_lag0() {
        let bad = vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0])];
        assert!(GiParams::new(bad).is_err());
    }

    #[test]
    fn var_params_json_round_trip() {
        let a = vec![DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.0, 0.3])];
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.5]);
        let v = VarParams::new(a, sigma).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: VarParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(s.contains("\"sigma\""));
    }

    #[test]
    fn var_params_rejects_indefinite_sigma() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(VarParams::new(vec![], sigma).is_err());
    }

    #[test]
    fn send_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<ModelSpec>();
        assert_send_sync::<GiParams>();
        assert_send_sync::<VarParams>();
        assert_send_sync::<ZeroPattern>();
        assert_send_sync::<UndirectedGraph>();
    }
}
