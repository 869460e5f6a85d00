//! D-optimal approximate designs on finite design spaces.
//!
//! Given candidate points `x_1, ..., x_n` in `R^m`, find weights `w` on the
//! probability simplex maximizing `log det sum_i w_i x_i x_i^T`. The crate
//! provides the multiplicative algorithm, the vertex exchange method and the
//! cocktail algorithm (vertex direction step, nearest-neighbour exchanges,
//! multiplicative step), all monotone in the log-determinant, together with
//! the equivalence-theorem certificate `max_i d(i, w) / m` used for stopping
//! and for checking designs produced elsewhere.
//!
//! ```
//! use cocktail_core::{build_x1, solve, Algorithm, SolverConfig};
//!
//! let space = build_x1(50).unwrap();
//! let result = solve(&space, &SolverConfig::new(Algorithm::Cocktail).with_seed(1)).unwrap();
//! assert!(result.is_converged());
//! assert!(result.certificate <= 1.0 + 1e-6);
//! ```

pub mod benchmark;
pub mod error;
pub mod information;
pub mod kernels;
pub mod report;
pub mod solver;
pub mod space;
pub mod weights;

pub use benchmark::{run_benchmark, BenchmarkSpec, BenchmarkTable, CellResult};
pub use error::{Error, Result};
pub use information::{make_state, InformationState};
pub use kernels::{Certificate, StepDetail, StepOutcome};
pub use report::{ResultDocument, WeightsDocument};
pub use solver::{
    certify, cluster_support, init_random_support, init_uniform, solve, solve_from_weights,
    Algorithm, CertificateReport, ClusterRadius, DesignResult, InitStrategy, SolverConfig,
    SolverTrace, SupportCluster, TerminationStatus,
};
pub use space::{build_x1, build_x2, build_x3, build_x4, load_csv, DesignSpace, SpaceFamily, SpaceSource};
pub use weights::DesignWeights;
