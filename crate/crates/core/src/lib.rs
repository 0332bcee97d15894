//! Sequential design for locating the common root of several black-box
//! functions.
//!
//! Independent surrogates (exact GPs or two-layer deep GPs) are fitted to
//! each response. Each acquisition either maximizes the joint probability
//! that every response lands within an adaptive tolerance of its target, or,
//! when that probability is too low everywhere, explores the Pareto front of
//! posterior standard deviations over triangulation candidates.

pub mod benchmarks;
pub mod design;
pub mod dgp;
pub mod acquisition;
pub mod error;
pub mod explore;
pub mod gp;
pub mod io;
pub mod kernel;
pub mod lhs;
pub mod normal;
pub mod optim;
pub mod seed;
pub mod surrogate;

pub use error::{Error, Result};
pub use gp::{fit_gp, interval_probability, log_interval_probability, Dataset, FittedGp, PosteriorSummary};
pub use kernel::{matern52, GpHyperparameters, NUGGET};
pub use acquisition::{compute_tolerance, decide, joint_log_probability, maximize_joint_probability, JclConfig, Mode};
pub use benchmarks::{make_problem, run_campaign, BenchmarkName, BenchmarkSpec};
pub use design::{best_distance, run_jcl, run_method, JclSession, Method, Problem, RunRecord, Status, Step};
pub use dgp::{fit_dgp, DgpPosterior, McmcSettings};
pub use explore::{delaunay, pareto_front, select_exploration, tricands};
pub use surrogate::{Surrogate, SurrogateKind};
