//! Discrete-event exploration run.
//!
//! Every node emits one ant per period toward a random destination. Ants
//! carry the cost of walking back the way they came; each node they visit
//! reinforces the arrival interface for the ant's source, so routes firm up
//! from both ends of every walk. An ant dies when it reaches its destination
//! or stumbles back into its source, and the source's send/return counters
//! are the loop model later used to filter interfaces.

mod queue;

pub use queue::{EventQueue, SimEvent};

use rand::Rng;

use crate::ant::{
    compute_delta_p, select_controlled, select_uncontrolled, ReinforcementParams, RoutingTable,
    SelectionCase, StatModel,
};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::topology::{NodeId, Topology};

/// Exploration probe. `cost` accumulates reverse-direction link costs, so at
/// any node it equals the cost of the path from there back to the source.
#[derive(Debug, Clone)]
pub struct Ant {
    pub source: NodeId,
    pub destination: NodeId,
    pub cost: f64,
    /// Interface the source pushed this ant out of; never reassigned.
    pub origin_interface: usize,
}

#[derive(Debug)]
pub enum EventKind {
    /// A node emits its next ant.
    Generate(NodeId),
    /// An ant lands on `node` through local interface `iface`.
    Arrival { ant: Ant, node: NodeId, iface: usize },
}

/// How moving ants pick interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntPolicy {
    /// Uncontrolled warm-up, then loop-model-guided selection.
    ModelBased,
    /// Uncontrolled for the whole run.
    UniformAnts,
    /// Sample the routing table itself, no exclusions.
    RegularAnts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Simulated run length in µs. Events at or after this instant never fire.
    pub duration: u64,
    /// Gap between consecutive ants from one node, µs.
    pub ant_period: u64,
    /// Leading fraction of the run that uses uncontrolled selection.
    pub uncontrolled_fraction: f64,
    pub params: ReinforcementParams,
    pub ant_policy: AntPolicy,
    /// Reinforce at intermediate nodes, not just the destination.
    pub subpath_reinforcement: bool,
    /// In controlled mode, skip the arrival interface when another eligible
    /// interface exists.
    pub controlled_no_return: bool,
    /// One-hop transit time, µs.
    pub link_delay: u64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            duration: 10_000_000,
            ant_period: 10_000,
            uncontrolled_fraction: 1.0 / 8.0,
            params: ReinforcementParams::default(),
            ant_policy: AntPolicy::ModelBased,
            subpath_reinforcement: true,
            controlled_no_return: true,
            link_delay: 100,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.uncontrolled_fraction > 0.0 && self.uncontrolled_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "uncontrolled_fraction must be in (0, 1), got {}",
                self.uncontrolled_fraction
            )));
        }
        if self.ant_period == 0 {
            return Err(Error::InvalidParameter("ant_period must be positive".into()));
        }
        if self.duration <= self.ant_period {
            return Err(Error::InvalidParameter(format!(
                "duration {} must exceed ant_period {}",
                self.duration, self.ant_period
            )));
        }
        if self.link_delay == 0 {
            // zero transit time would let an ant hop forever without the
            // clock moving, so the run could never terminate
            return Err(Error::InvalidParameter("link_delay must be positive".into()));
        }
        Ok(())
    }

    /// Instant where selection switches from uncontrolled to controlled.
    pub fn phase_boundary(&self) -> u64 {
        (self.duration as f64 * self.uncontrolled_fraction) as u64
    }
}

/// Counters describing one exploration run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplorationStats {
    pub ants_generated: u64,
    pub absorbed_at_destination: u64,
    pub returned_to_source: u64,
    /// Ants still traveling when the run ended.
    pub discarded_in_flight: u64,
    pub uncontrolled_decisions: u64,
    pub controlled_decisions: u64,
    pub regular_decisions: u64,
    /// Controlled selections that bounced off a leaf.
    pub leaf_returns: u64,
    /// Controlled selections that retreated from a dead end.
    pub dead_end_returns: u64,
    /// Controlled selections at a source that degraded to a blind pick.
    pub uncontrolled_fallbacks: u64,
    pub last_uncontrolled_decision: Option<u64>,
    pub first_controlled_decision: Option<u64>,
}

impl ExplorationStats {
    /// Share of all forwarding decisions where the model had nothing to offer
    /// (dead ends and source fallbacks). Low values mean the model, not the
    /// escape hatches, is steering.
    pub fn fallback_fraction(&self) -> f64 {
        let decisions =
            self.uncontrolled_decisions + self.controlled_decisions + self.regular_decisions;
        if decisions == 0 {
            0.0
        } else {
            (self.dead_end_returns + self.uncontrolled_fallbacks) as f64 / decisions as f64
        }
    }
}

/// Converged state of one exploration run.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub tables: Vec<RoutingTable>,
    pub models: Vec<StatModel>,
    pub stats: ExplorationStats,
}

pub fn run_exploration(topology: &Topology, config: &SimConfig) -> Result<Exploration> {
    config.validate()?;
    let mut sim = Sim {
        topology,
        config,
        boundary: config.phase_boundary(),
        tables: topology
            .nodes()
            .map(|n| RoutingTable::uniform(topology.node_count(), topology.degree(n)))
            .collect(),
        models: topology
            .nodes()
            .map(|n| StatModel::new(topology.node_count(), topology.degree(n)))
            .collect(),
        stats: ExplorationStats::default(),
        rng: rng_from_seed(config.seed),
        queue: EventQueue::new(),
    };
    sim.run()?;
    Ok(Exploration { tables: sim.tables, models: sim.models, stats: sim.stats })
}

struct Sim<'a> {
    topology: &'a Topology,
    config: &'a SimConfig,
    boundary: u64,
    tables: Vec<RoutingTable>,
    models: Vec<StatModel>,
    stats: ExplorationStats,
    rng: SimRng,
    queue: EventQueue,
}

impl Sim<'_> {
    fn run(&mut self) -> Result<()> {
        for node in self.topology.nodes() {
            // stagger first emissions so nodes do not fire in lockstep
            let offset = node.index() as u64 % self.config.ant_period;
            self.queue.schedule(offset, EventKind::Generate(node))?;
        }
        while let Some(ev) = self.queue.pop() {
            if ev.fire >= self.config.duration {
                // hard stop: whatever is still traveling is lost
                if matches!(ev.kind, EventKind::Arrival { .. }) {
                    self.stats.discarded_in_flight += 1;
                }
                continue;
            }
            match ev.kind {
                EventKind::Generate(node) => self.generate(node)?,
                EventKind::Arrival { ant, node, iface } => self.arrive(ant, node, iface)?,
            }
        }
        Ok(())
    }

    fn generate(&mut self, node: NodeId) -> Result<()> {
        let n = self.topology.node_count();
        let draw = self.rng.random_range(0..n - 1);
        let dest = NodeId(if draw >= node.index() { draw + 1 } else { draw } as u32);
        let iface = self.choose(node, dest, None);
        self.models[node.index()].record_send(dest, iface);
        self.stats.ants_generated += 1;
        let ant = Ant { source: node, destination: dest, cost: 0.0, origin_interface: iface };
        self.forward(ant, node, iface)?;

        let next = self.queue.now() + self.config.ant_period;
        if next < self.config.duration {
            self.queue.schedule(next, EventKind::Generate(node))?;
        }
        Ok(())
    }

    fn arrive(&mut self, mut ant: Ant, node: NodeId, iface: usize) -> Result<()> {
        if node == ant.source {
            // the walk looped all the way home: count it against the
            // interface it originally left through, then drop the ant
            self.models[node.index()].record_return(ant.destination, ant.origin_interface)?;
            self.stats.returned_to_source += 1;
            return Ok(());
        }
        // pay the reverse direction: cost of going from here back the way
        // the ant came, so the total is the cost of the path home
        ant.cost += self.topology.cost_from(node, iface);
        if node == ant.destination {
            let dp = compute_delta_p(ant.cost, &self.config.params);
            self.tables[node.index()].reinforce(ant.source, iface, dp);
            self.stats.absorbed_at_destination += 1;
            return Ok(());
        }
        if self.config.subpath_reinforcement {
            let dp = compute_delta_p(ant.cost, &self.config.params);
            self.tables[node.index()].reinforce(ant.source, iface, dp);
        }
        let out = self.choose(node, ant.destination, Some(iface));
        self.forward(ant, node, out)
    }

    fn choose(&mut self, node: NodeId, dest: NodeId, arrival: Option<usize>) -> usize {
        let degree = self.topology.degree(node);
        let now = self.queue.now();
        match self.config.ant_policy {
            AntPolicy::RegularAnts => {
                self.stats.regular_decisions += 1;
                self.tables[node.index()].sample(dest, &mut self.rng)
            }
            AntPolicy::UniformAnts => {
                self.stats.uncontrolled_decisions += 1;
                self.stats.last_uncontrolled_decision = Some(now);
                select_uncontrolled(degree, arrival, &mut self.rng)
            }
            AntPolicy::ModelBased => {
                if now < self.boundary {
                    self.stats.uncontrolled_decisions += 1;
                    self.stats.last_uncontrolled_decision = Some(now);
                    select_uncontrolled(degree, arrival, &mut self.rng)
                } else {
                    let (k, case) = select_controlled(
                        degree,
                        dest,
                        arrival,
                        &self.models[node.index()],
                        self.config.params.tau,
                        self.config.controlled_no_return,
                        &mut self.rng,
                    );
                    self.stats.controlled_decisions += 1;
                    if self.stats.first_controlled_decision.is_none() {
                        self.stats.first_controlled_decision = Some(now);
                    }
                    match case {
                        SelectionCase::Eligible => {}
                        SelectionCase::LeafReturn => self.stats.leaf_returns += 1,
                        SelectionCase::DeadEndReturn => self.stats.dead_end_returns += 1,
                        SelectionCase::UncontrolledFallback => {
                            self.stats.uncontrolled_fallbacks += 1
                        }
                    }
                    k
                }
            }
        }
    }

    fn forward(&mut self, ant: Ant, node: NodeId, iface: usize) -> Result<()> {
        let entry = self.topology.interfaces(node)[iface];
        self.queue.schedule(
            self.queue.now() + self.config.link_delay,
            EventKind::Arrival { ant, node: entry.neighbor, iface: entry.peer },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_velcro, Link};

    fn nid(i: u32) -> NodeId {
        NodeId(i)
    }

    fn star4() -> Topology {
        Topology::new(
            4,
            vec![Link::new(0, 1, 1.0, 1.0), Link::new(0, 2, 1.0, 1.0), Link::new(0, 3, 1.0, 1.0)],
        )
        .unwrap()
    }

    fn quick(duration: u64, policy: AntPolicy, seed: u64) -> SimConfig {
        SimConfig {
            duration,
            ant_period: 1_000,
            link_delay: 10,
            ant_policy: policy,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn ant_conservation() {
        let topo = star4();
        let out = run_exploration(&topo, &quick(200_000, AntPolicy::ModelBased, 1)).unwrap();
        let s = &out.stats;
        assert!(s.ants_generated > 0);
        assert_eq!(
            s.ants_generated,
            s.absorbed_at_destination + s.returned_to_source + s.discarded_in_flight
        );
    }

    #[test]
    fn leaves_produce_returns_and_model_stays_consistent() {
        let topo = star4();
        let out = run_exploration(&topo, &quick(200_000, AntPolicy::ModelBased, 2)).unwrap();
        // detours over the wrong leaf bounce back and eventually find home
        assert!(out.stats.returned_to_source > 0);
        for node in topo.nodes() {
            let m = &out.models[node.index()];
            for dest in topo.nodes() {
                for k in 0..topo.degree(node) {
                    assert!(m.returned(dest, k) <= m.sent(dest, k));
                }
            }
        }
    }

    #[test]
    fn rows_stay_stochastic_after_full_run() {
        let topo = generate_velcro(10.0, 3.0, 2, 4).unwrap();
        let out = run_exploration(&topo, &quick(400_000, AntPolicy::ModelBased, 3)).unwrap();
        for (n, table) in out.tables.iter().enumerate() {
            for dest in topo.nodes() {
                if dest.index() == n {
                    continue;
                }
                let row = table.row(dest);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|p| *p >= 0.0));
            }
        }
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let topo = generate_velcro(10.0, 3.0, 2, 4).unwrap();
        let cfg = quick(300_000, AntPolicy::ModelBased, 7);
        let a = run_exploration(&topo, &cfg).unwrap();
        let b = run_exploration(&topo, &cfg).unwrap();
        assert_eq!(a.stats, b.stats);
        for (ta, tb) in a.tables.iter().zip(&b.tables) {
            for dest in topo.nodes() {
                let (ra, rb) = (ta.row(dest), tb.row(dest));
                assert_eq!(ra.len(), rb.len());
                for (x, y) in ra.iter().zip(rb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        let c = run_exploration(&topo, &quick(300_000, AntPolicy::ModelBased, 8)).unwrap();
        assert_ne!(a.stats, c.stats);
    }

    #[test]
    fn phase_boundary_is_respected() {
        let topo = star4();
        let cfg = quick(400_000, AntPolicy::ModelBased, 4);
        let boundary = cfg.phase_boundary();
        let out = run_exploration(&topo, &cfg).unwrap();
        assert!(out.stats.last_uncontrolled_decision.unwrap() < boundary);
        assert!(out.stats.first_controlled_decision.unwrap() >= boundary);
        assert!(out.stats.controlled_decisions > 0);
    }

    #[test]
    fn uniform_policy_never_goes_controlled() {
        let topo = star4();
        let out = run_exploration(&topo, &quick(100_000, AntPolicy::UniformAnts, 5)).unwrap();
        assert_eq!(out.stats.controlled_decisions, 0);
        assert!(out.stats.uncontrolled_decisions > 0);
    }

    #[test]
    fn regular_policy_samples_tables() {
        let topo = star4();
        let out = run_exploration(&topo, &quick(100_000, AntPolicy::RegularAnts, 6)).unwrap();
        assert_eq!(out.stats.controlled_decisions, 0);
        assert_eq!(out.stats.uncontrolled_decisions, 0);
        assert!(out.stats.regular_decisions > 0);
    }

    #[test]
    fn reverse_cost_tilts_toward_cheap_return_paths() {
        // triangle where 2 -> 1 -> 0 costs 2 and 2 -> 0 direct costs 4:
        // at node 2 the row for destination 0 must favor the hop to 1
        let topo = Topology::new(
            3,
            vec![Link::new(0, 1, 1.0, 1.0), Link::new(0, 2, 4.0, 4.0), Link::new(1, 2, 1.0, 1.0)],
        )
        .unwrap();
        let cfg = SimConfig {
            duration: 2_000_000,
            ant_period: 1_000,
            link_delay: 10,
            ant_policy: AntPolicy::UniformAnts,
            seed: 9,
            ..SimConfig::default()
        };
        let out = run_exploration(&topo, &cfg).unwrap();
        let row = out.tables[2].row(nid(0));
        let to0 = topo.interface_to(nid(2), nid(0)).unwrap();
        let to1 = topo.interface_to(nid(2), nid(1)).unwrap();
        assert!(
            row[to1] > 0.55 && row[to1] > row[to0],
            "expected cheap two-hop direction to dominate, row = {row:?}"
        );
    }

    #[test]
    fn subpath_toggle_changes_intermediate_updates() {
        let topo = generate_velcro(10.0, 3.0, 1, 3).unwrap();
        let on = run_exploration(
            &topo,
            &SimConfig {
                subpath_reinforcement: true,
                ..quick(200_000, AntPolicy::UniformAnts, 11)
            },
        )
        .unwrap();
        let off = run_exploration(
            &topo,
            &SimConfig {
                subpath_reinforcement: false,
                ..quick(200_000, AntPolicy::UniformAnts, 11)
            },
        )
        .unwrap();
        // same ants walk the same way; only table contents differ
        assert_eq!(on.stats.ants_generated, off.stats.ants_generated);
        let differ = topo.nodes().any(|d| on.tables[0].row(d) != off.tables[0].row(d));
        assert!(differ);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let base = SimConfig::default();
        assert!(base.validate().is_ok());
        assert!(SimConfig { uncontrolled_fraction: 0.0, ..base.clone() }.validate().is_err());
        assert!(SimConfig { uncontrolled_fraction: 1.0, ..base.clone() }.validate().is_err());
        assert!(SimConfig { ant_period: 0, ..base.clone() }.validate().is_err());
        assert!(SimConfig { duration: 5_000, ..base.clone() }.validate().is_err());
        assert!(SimConfig { link_delay: 0, ..base.clone() }.validate().is_err());
    }

    #[test]
    fn fulcrum_cycle_interfaces_get_poisoned() {
        // single-fulcrum velcro: ants the fulcrum sends into its own cycle
        // can only march around and come home, so the loop model must
        // condemn both cycle entries for the sink destination
        let topo = generate_velcro(10.0, 3.0, 1, 3).unwrap();
        let sink = nid((topo.node_count() - 1) as u32);
        let cfg = SimConfig {
            duration: 2_000_000,
            ant_period: 1_000,
            link_delay: 10,
            seed: 13,
            ..SimConfig::default()
        };
        let out = run_exploration(&topo, &cfg).unwrap();
        let fulcrum = nid(1);
        let model = &out.models[fulcrum.index()];
        for (k, iface) in topo.interfaces(fulcrum).iter().enumerate() {
            let in_cycle = (2..=4).contains(&iface.neighbor.0);
            if in_cycle && model.sent(sink, k) >= 5 {
                assert!(
                    model.loop_ratio(sink, k) > 0.8,
                    "cycle interface {k} ratio {}",
                    model.loop_ratio(sink, k)
                );
            }
        }
    }
}
