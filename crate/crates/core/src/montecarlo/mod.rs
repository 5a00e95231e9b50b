//! Simulation and exhaustive-enumeration oracles.

mod brute;
mod mapping;
mod pool;
mod sim;

pub use brute::{brute_force_survival, BRUTE_FORCE_LIMIT};
pub use mapping::{
    cyclic_points, enumerate_fixed_indegree, rho_length, sample_fixed_indegree, self_map_indegrees,
    FixedIndegreeDistribution, ENUMERATION_LIMIT,
};
pub use pool::THREADS_ENV;
pub use sim::{
    sample_multinomial, simulate_cell_counts, simulate_two_stage, simulate_waiting_times, OccupancyState,
    SimulationExtras, SimulationReport,
};
