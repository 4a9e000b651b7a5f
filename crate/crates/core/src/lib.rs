//! Graph-based Pólya urns: exact simulation of the reinforcement process,
//! the associated gradient-like vector field, and the equilibrium analysis
//! that predicts where the proportion vector converges.
//!
//! Place a bin with at least one ball at each vertex of a finite connected
//! graph. At every step each edge awards one ball to one of its endpoints,
//! with probability proportional to the endpoint's current count. The
//! proportion vector is a stochastic approximation of a vector field whose
//! equilibria are the maximizers of a concave Lyapunov function on the
//! faces of a constrained simplex; the proportions converge almost surely
//! to a single point, except on balanced bipartite graphs where the limit
//! can range over a closed interval and the landing spot depends on the
//! realization.
//!
//! Module map:
//! - [`graph`]: edge-list parsing, bipartiteness, vertex covers.
//! - [`dynamics`]: the Lyapunov function, gradient, field, and flow.
//! - [`equilibria`]: face maximization, stability, spectra, limit sets.
//! - [`urn`]: the stochastic process, Monte Carlo, shadowing diagnostics.
//! - [`verify`]: the fixed-seed verification suite behind `urngraph --cmd
//!   verify` and the acceptance tests.

pub mod cli;
pub mod dynamics;
pub mod equilibria;
pub mod graph;
pub mod report;
pub mod urn;
pub mod verify;

pub use dynamics::{DomainParams, SimplexPoint};
pub use equilibria::{Equilibrium, LimitKind, LimitSet, SpectrumReport, Stability};
pub use graph::{parse_edge_list, BipartiteClass, Graph};
pub use urn::{TrialConfig, TrialResult, UrnState};
