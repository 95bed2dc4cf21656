//! Shared generators for the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use givar::params::VarParams;
use givar::spectral::{Complex64, SpectralGrid};
use givar::var::stability_check;
use givar::UndirectedGraph;

/// Random stable VAR with companion spectral radius at most 0.9 and a
/// well-conditioned innovation covariance.
pub fn rand_stable_var(d: usize, p: usize, rng: &mut ChaCha8Rng) -> VarParams {
    let scale = 0.5 / (p.max(1) as f64);
    let mut a: Vec<DMatrix<f64>> = (0..p)
        .map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-scale..scale)))
        .collect();
    let c = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    let sigma = &c * c.transpose() + DMatrix::identity(d, d) * 0.3;

    let mut params = VarParams::new(a.clone(), sigma.clone()).unwrap();
    while stability_check(&params).spectral_radius > 0.9 {
        for m in a.iter_mut() {
            *m *= 0.9;
        }
        params = VarParams::new(a.clone(), sigma.clone()).unwrap();
    }
    params
}

/// Random Hermitian positive definite grid with conjugate symmetry, built
/// as `Q(z) Q(z)^H + I` for a random degree-2 matrix polynomial `Q`.
pub fn rand_pd_grid(d: usize, n: usize, rng: &mut ChaCha8Rng) -> SpectralGrid {
    let q: Vec<DMatrix<f64>> = (0..3)
        .map(|_| DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.4..0.4)))
        .collect();
    let values = (0..n)
        .map(|j| {
            let lambda = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let mut qz = DMatrix::<Complex64>::zeros(d, d);
            for (k, qi) in q.iter().enumerate() {
                let z = Complex64::from_polar(1.0, -lambda * k as f64);
                qz += qi.map(|x| Complex64::new(x, 0.0)) * z;
            }
            let mut m = &qz * qz.adjoint();
            for i in 0..d {
                m[(i, i)] += Complex64::new(1.0, 0.0);
            }
            m
        })
        .collect();
    SpectralGrid::new(values).unwrap()
}

/// The d = 3 VAR(1) test system Markov for the chain 0-1-2, with both
/// present partial coherencies peaking above 0.4.
pub fn chain_system() -> (VarParams, UndirectedGraph) {
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
    let graph = UndirectedGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
    (params, graph)
}
