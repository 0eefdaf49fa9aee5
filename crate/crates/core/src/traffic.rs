//! Data-packet experiments over converged routing tables.
//!
//! Packets forward probabilistically among the top-φ interfaces of each
//! row. A visited stack detects loops: revisiting a node pops the stack back
//! to it and counts one loop, so the stack always holds a simple path from
//! the source. Loops are survivable (TTL permitting); the experiment reports
//! how often they happen, how often packets saw a real choice, and which
//! paths traffic actually took.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ant::RoutingTable;
use crate::error::{Error, Result};
use crate::rng::{derive_stream, SimRng};
use crate::topology::{NodeId, Topology};

pub const DEFAULT_TTL: u32 = 255;

/// Candidates below this renormalized probability do not count as a real
/// forwarding choice.
pub const MULTIPATH_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    /// Per-hop cap on how many highest-probability interfaces compete.
    pub phi: usize,
    /// Destroy packets that walk back into their source.
    pub source_absorption: bool,
    pub packets_per_pair: u32,
    pub ttl: u32,
    pub seed: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            phi: 1,
            source_absorption: false,
            packets_per_pair: 100,
            ttl: DEFAULT_TTL,
            seed: 0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phi == 0 {
            return Err(Error::InvalidParameter("phi must be at least 1".into()));
        }
        if self.packets_per_pair == 0 {
            return Err(Error::InvalidParameter("packets_per_pair must be positive".into()));
        }
        if self.ttl == 0 {
            return Err(Error::InvalidParameter("ttl must be positive".into()));
        }
        Ok(())
    }
}

/// A traveling packet and everything measured about its walk.
#[derive(Debug, Clone)]
pub struct Packet {
    pub source: NodeId,
    pub destination: NodeId,
    pub ttl: u32,
    /// Simple path from the source to the current node.
    pub visited_stack: Vec<NodeId>,
    pub loop_count: u32,
    /// True once any hop offered two or more live candidates.
    pub multipath: bool,
    /// Every node in visit order, loops included.
    pub path_trace: Vec<NodeId>,
}

impl Packet {
    pub fn new(source: NodeId, destination: NodeId, ttl: u32) -> Self {
        Packet {
            source,
            destination,
            ttl,
            visited_stack: Vec::new(),
            loop_count: 0,
            multipath: false,
            path_trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Delivered,
    AbsorbedAtSource,
    TtlExpired,
}

/// Marks `node` visited. A revisit counts one loop and pops the stack back
/// to the earlier occurrence, so the stack stays a simple path.
pub fn record_visit(packet: &mut Packet, node: NodeId) {
    packet.path_trace.push(node);
    if let Some(pos) = packet.visited_stack.iter().position(|&v| v == node) {
        packet.loop_count += 1;
        packet.visited_stack.truncate(pos + 1);
    } else {
        packet.visited_stack.push(node);
    }
}

/// The φ highest-probability interfaces of `row` with probabilities
/// renormalized over the kept set. Ties broken by interface index, so the
/// result is stable. Returns (interfaces, renormalized probabilities).
pub fn top_phi(row: &[f64], phi: usize) -> (Vec<usize>, Vec<f64>) {
    debug_assert!(phi >= 1);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        row[b].partial_cmp(&row[a]).expect("probabilities are ordered").then(a.cmp(&b))
    });
    order.truncate(phi.min(row.len()));
    let total: f64 = order.iter().map(|&k| row[k]).sum();
    debug_assert!(total > 0.0, "a routing row cannot be all zeros");
    let probs = order.iter().map(|&k| row[k] / total).collect();
    (order, probs)
}

fn sample_candidate(probs: &[f64], rng: &mut SimRng) -> usize {
    if probs.len() == 1 {
        return 0;
    }
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// Walks one packet from source toward destination. The returned packet
/// carries the trace, loop count and multipath flag regardless of outcome.
pub fn route_packet(
    source: NodeId,
    destination: NodeId,
    topology: &Topology,
    tables: &[RoutingTable],
    config: &TrafficConfig,
    rng: &mut SimRng,
) -> (Outcome, Packet) {
    assert_ne!(source, destination, "a packet needs somewhere to go");
    let mut packet = Packet::new(source, destination, config.ttl);
    let mut at = source;
    let mut hops = 0u32;
    loop {
        if at == destination {
            packet.path_trace.push(at);
            return (Outcome::Delivered, packet);
        }
        if hops > 0 && at == source && config.source_absorption {
            // coming home is a loop; count it before the packet dies
            record_visit(&mut packet, at);
            return (Outcome::AbsorbedAtSource, packet);
        }
        if packet.ttl == 0 {
            return (Outcome::TtlExpired, packet);
        }
        record_visit(&mut packet, at);
        let row = tables[at.index()].row(destination);
        let (candidates, probs) = top_phi(row, config.phi);
        if probs.iter().filter(|p| **p > MULTIPATH_FLOOR).count() >= 2 {
            packet.multipath = true;
        }
        let pick = sample_candidate(&probs, rng);
        packet.ttl -= 1;
        hops += 1;
        at = topology.neighbor(at, candidates[pick]);
    }
}

/// Aggregate results of a traffic run. Percentages are over injected
/// packets; loop and multipath counts include absorbed packets since their
/// walks were real even though delivery failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrafficMetrics {
    pub injected: u64,
    pub delivered: u64,
    pub absorbed_at_source: u64,
    pub ttl_drops: u64,
    pub looped_packets: u64,
    pub multipath_packets: u64,
    pub total_loops: u64,
    /// loop_count -> packets (delivered or absorbed) with that count.
    pub loop_histogram: BTreeMap<u32, u64>,
    pub pairs_with_no_delivery: u64,
}

impl TrafficMetrics {
    pub fn success_pct(&self) -> f64 {
        percentage(self.delivered, self.injected)
    }

    pub fn loop_pct(&self) -> f64 {
        percentage(self.looped_packets, self.injected)
    }

    pub fn multipath_pct(&self) -> f64 {
        percentage(self.multipath_packets, self.injected)
    }

    pub fn ttl_drop_pct(&self) -> f64 {
        percentage(self.ttl_drops, self.injected)
    }

    fn merge(&mut self, other: TrafficMetrics) {
        self.injected += other.injected;
        self.delivered += other.delivered;
        self.absorbed_at_source += other.absorbed_at_source;
        self.ttl_drops += other.ttl_drops;
        self.looped_packets += other.looped_packets;
        self.multipath_packets += other.multipath_packets;
        self.total_loops += other.total_loops;
        for (k, v) in other.loop_histogram {
            *self.loop_histogram.entry(k).or_default() += v;
        }
        self.pairs_with_no_delivery += other.pairs_with_no_delivery;
    }
}

fn percentage(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Delivered-path tally: for each ordered pair, how often each exact node
/// sequence carried a packet. BTree keys keep iteration deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathRecord {
    pub per_pair: BTreeMap<(NodeId, NodeId), BTreeMap<Vec<NodeId>, u64>>,
}

impl PathRecord {
    fn merge(&mut self, other: PathRecord) {
        for (pair, paths) in other.per_pair {
            let slot = self.per_pair.entry(pair).or_default();
            for (path, count) in paths {
                *slot.entry(path).or_default() += count;
            }
        }
    }

    /// Forward cost of a recorded trace.
    pub fn path_cost(topology: &Topology, path: &[NodeId]) -> f64 {
        path.windows(2)
            .map(|w| {
                let iface =
                    topology.interface_to(w[0], w[1]).expect("recorded traces only use real links");
                topology.cost_from(w[0], iface)
            })
            .sum()
    }
}

/// Runs `packets_per_pair` packets over every ordered (source, destination)
/// pair. Each pair gets its own derived random stream, so the aggregate is
/// independent of scheduling order and the pair loop can run in parallel.
pub fn run_traffic_experiment(
    topology: &Topology,
    tables: &[RoutingTable],
    config: &TrafficConfig,
) -> Result<(TrafficMetrics, PathRecord)> {
    config.validate()?;
    if tables.len() != topology.node_count() {
        return Err(Error::Validation(format!(
            "{} routing tables for {} nodes",
            tables.len(),
            topology.node_count()
        )));
    }
    for node in topology.nodes() {
        if tables[node.index()].degree() != topology.degree(node) {
            return Err(Error::Validation(format!(
                "table at node {node} has {} interfaces, topology has {}",
                tables[node.index()].degree(),
                topology.degree(node)
            )));
        }
    }

    let n = topology.node_count() as u32;
    let pairs: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (NodeId(s), NodeId(d))))
        .collect();

    let (metrics, record) = pairs
        .par_iter()
        .map(|&(s, d)| {
            let mut rng = derive_stream(config.seed, s.0 as u64, d.0 as u64);
            let mut metrics = TrafficMetrics::default();
            let mut record = PathRecord::default();
            let mut delivered_here = 0u64;
            for _ in 0..config.packets_per_pair {
                let (outcome, packet) = route_packet(s, d, topology, tables, config, &mut rng);
                metrics.injected += 1;
                let walk_counts = match outcome {
                    Outcome::Delivered => {
                        metrics.delivered += 1;
                        delivered_here += 1;
                        record
                            .per_pair
                            .entry((s, d))
                            .or_default()
                            .entry(packet.path_trace.clone())
                            .and_modify(|c| *c += 1)
                            .or_insert(1);
                        true
                    }
                    Outcome::AbsorbedAtSource => {
                        metrics.absorbed_at_source += 1;
                        true
                    }
                    Outcome::TtlExpired => {
                        metrics.ttl_drops += 1;
                        false
                    }
                };
                if walk_counts {
                    if packet.loop_count > 0 {
                        metrics.looped_packets += 1;
                    }
                    if packet.multipath {
                        metrics.multipath_packets += 1;
                    }
                    metrics.total_loops += packet.loop_count as u64;
                    *metrics.loop_histogram.entry(packet.loop_count).or_default() += 1;
                }
            }
            if delivered_here == 0 {
                metrics.pairs_with_no_delivery += 1;
            }
            (metrics, record)
        })
        .reduce(
            || (TrafficMetrics::default(), PathRecord::default()),
            |(mut am, mut ar), (bm, br)| {
                am.merge(bm);
                ar.merge(br);
                (am, ar)
            },
        );
    Ok((metrics, record))
}

/// Sums delivered-path frequencies into ten cost deciles per pair. Paths for
/// a pair are ranked cheapest first (ties by node sequence); rank r of P
/// lands in bucket floor(10 (r-1) / P). Bucket 0 always holds the cheapest
/// observed path of every pair that delivered anything.
pub fn traffic_decile_buckets(topology: &Topology, record: &PathRecord) -> [u64; 10] {
    let mut buckets = [0u64; 10];
    for paths in record.per_pair.values() {
        let mut ranked: Vec<(f64, &Vec<NodeId>, u64)> = paths
            .iter()
            .map(|(path, count)| (PathRecord::path_cost(topology, path), path, *count))
            .collect();
        ranked.sort_by(|a, b| {
            a.0.partial_cmp(&b.0).expect("costs are finite").then_with(|| a.1.cmp(b.1))
        });
        let total = ranked.len() as u64;
        for (rank0, (_, _, count)) in ranked.into_iter().enumerate() {
            let bucket = (10 * rank0 as u64 / total) as usize;
            buckets[bucket] += count;
        }
    }
    buckets
}
