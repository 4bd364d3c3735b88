//! Robust estimation of matrix factor models `X_t = R F_t C^T + E_t` through
//! the row and column matrix Kendall's tau.
//!
//! The crate provides:
//!
//! * [`kendall`]: sample and Monte-Carlo matrix Kendall's tau.
//! * [`estimator`]: Kendall-based loadings (`mrts`), least-squares factor
//!   scores, eigenvalue-ratio rank selection, and a second-moment PCA baseline
//!   (`apca`).
//! * [`sim`]: matrix normal / jointly-t simulators with AR(1) dynamics.
//! * [`metrics`]: subspace distance, common-component MSE and rolling
//!   validation statistics.
//! * [`io`]: the `long-csv` / `mkt-binary` series formats and CSV reports.
//! * [`harness`]: the Monte-Carlo, estimation, rank, rolling and benchmark
//!   drivers behind the `mkfactor` binary.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod kendall;
pub mod metrics;
pub mod rng;
pub mod series;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use estimator::{
    apca_loadings, apca_ranks, mker_ranks, mrts_factors, mrts_loadings, FactorFit,
    LoadingEstimate, Method, RankConfig, Scatter,
};
pub use kendall::{kendall, pair_kernel, population_kendall_mc, KendallTau, Side};
pub use metrics::{loading_variation, mse_common, pricing_errors, subspace_distance};
pub use series::MatrixSeries;
pub use sim::{generate_scenario, Dist, GroundTruth, ScenarioSpec};
pub use spectral::{ratio_rank, sym_eigen, EigenDecomp, RankSelection};
