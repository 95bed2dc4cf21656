//! Graph-constrained vector autoregressions for stationary multivariate
//! time series.
//!
//! A missing edge {a,b} in an undirected graph over the series components
//! encodes conditional independence of `X_a` and `X_b` given the remaining
//! components, which for Gaussian processes is equivalent to the (a,b) entry
//! of the inverse spectral matrix vanishing at every frequency. Models are
//! parameterized by inverse covariances with the graph's zero pattern and are
//! in one-to-one correspondence with VAR(p) processes that are Markov for the
//! graph.
//!
//! The crate provides:
//! - graphs, model specifications and zero-pattern bookkeeping ([`graph`],
//!   [`params`]),
//! - periodograms, tapering, spectral-matrix arithmetic and partial spectral
//!   coherence ([`spectral`]),
//! - VAR machinery: Yule-Walker solving, spectra, inverse covariances,
//!   stability checks and simulation ([`var`]),
//! - the Whittle likelihood, its gradient, estimating-equation residuals and
//!   asymptotic covariances ([`whittle`]),
//! - the alternating-projection fitting algorithm ([`fit`]),
//! - exhaustive BIC model search over (order, graph) pairs ([`select`]).

pub mod error;
pub mod fit;
pub mod graph;
pub mod params;
pub mod select;
pub mod spectral;
pub mod var;
pub mod whittle;

pub use error::{Error, Result};
pub use fit::{fit_gi, FitOptions, FitResult};
pub use graph::UndirectedGraph;
pub use params::{GiParams, ModelSpec, VarParams, ZeroPattern};
pub use select::{select_models, SelectOptions, SelectionReport};
pub use spectral::{CovSeq, SpectralGrid, TaperSpec, TimeSeries};
