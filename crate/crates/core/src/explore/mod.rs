//! Exploration geometry: Delaunay candidates and Pareto filtering of the
//! per-response uncertainty.

pub mod delaunay;
pub mod pareto;
pub mod tricands;

pub use delaunay::{delaunay, Triangulation};
pub use pareto::pareto_front;
pub use tricands::{tricands, CandidateSet, Provenance};
pub mod select;

pub use select::{exploration_candidates, select_exploration, Exploration};
