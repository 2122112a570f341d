//! Alternating minimization solvers for the smoothed range objective.

mod ag;
mod am;
mod criticality;
mod objective;
mod updates;

pub use ag::{ag_warmstart, ag_warmstart_observed, lipschitz_bound, lipschitz_constant};
pub use am::{solve, AmSolver, RunTrace, SolverConfig, SolverState, SweepRecord};
pub use criticality::{criticality, CriticalityReport};
pub use objective::{g_decrease_u, g_decrease_x, objective_g, objective_orig, squared_distance_sum};
pub use updates::{update_u, update_u_with, update_x_centralized, update_x_cluster, update_x_sensor, BlockSolver, ZERO_NORM};
