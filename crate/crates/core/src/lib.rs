//! Ant-driven reachability routing at desk scale.
//!
//! The crate simulates a routing scheme where lightweight probes (ants)
//! wander a network, carry back path costs, and reinforce per-destination
//! next-hop probabilities at every node they cross. A per-source loop model
//! counts which first hops keep sending probes home and filters them out of
//! future exploration. On top of the converged tables sit a packet-level
//! traffic experiment, a shortest-path oracle, operating-curve sweeps over
//! the eligibility threshold, and a closed-form path-length fit.
//!
//! Entry points:
//! - [`topology`]: graph types, generators and the file format
//! - [`sim::run_exploration`]: the discrete-event ant run
//! - [`traffic::run_traffic_experiment`]: packet routing over converged tables
//! - [`analytics`]: oracle, operating curve, fitting
//! - [`dump`]: CSV encodings for all artifacts

pub mod analytics;
pub mod ant;
pub mod dump;
pub mod error;
pub mod rng;
pub mod sim;
pub mod topology;
pub mod traffic;

pub use analytics::{
    dijkstra, fit_kappa, kappa_from_length, measure_avg_shortest_path, operating_curve,
    theoretical_path_length, FitResult, OperatingPoint, PathLengthMeasurement, PathMeasure,
};
pub use ant::{
    compute_delta_p, CostFn, ReinforcementParams, RoutingTable, SelectionCase, StatModel,
};
pub use error::{Error, Result};
pub use sim::{run_exploration, AntPolicy, Exploration, ExplorationStats, SimConfig};
pub use topology::{
    generate_clique_grid, generate_tree, generate_velcro, generate_waxman, parse_topology,
    serialize_topology, CostRange, Link, NodeId, Topology, WaxmanCostMode,
};
pub use traffic::{
    route_packet, run_traffic_experiment, top_phi, traffic_decile_buckets, Outcome, Packet,
    PathRecord, TrafficConfig, TrafficMetrics, DEFAULT_TTL,
};
