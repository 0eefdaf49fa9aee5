//! Shared fixtures for the criterion benches.

use antsim_core::{generate_waxman, CostRange, SimConfig, Topology, WaxmanCostMode};

/// Mid-sized connected random graph used across benches.
pub fn bench_topology(nodes: usize, seed: u64) -> Topology {
    generate_waxman(nodes, 0.3, 0.25, 1000.0, WaxmanCostMode::Uniform, CostRange::UNIT, seed)
        .expect("bench topology parameters are valid")
}

/// Short exploration config so a bench iteration stays in the tens of
/// milliseconds.
pub fn bench_sim_config(seed: u64) -> SimConfig {
    SimConfig {
        duration: 500_000,
        ant_period: 5_000,
        link_delay: 100,
        seed,
        ..SimConfig::default()
    }
}
