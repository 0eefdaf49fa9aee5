//! Measurement and theory side: shortest-path oracle, the closed-form
//! expected path length for plane-random graphs, least-squares recovery of
//! its shape parameter, and the tau operating curve that trades loops
//! against multipath.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::ant::RoutingTable;
use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::sim::{run_exploration, SimConfig};
use crate::topology::{NodeId, Topology};
use crate::traffic::{route_packet, run_traffic_experiment, Outcome, PathRecord, TrafficConfig};

/// Cheapest forward route from one node to another, with its hop count.
/// Ties in cost resolve to the fewest hops, so the oracle is deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathMeasure {
    pub cost: f64,
    pub hops: u32,
}

struct HeapState {
    cost: f64,
    hops: u32,
    node: usize,
}

impl PartialEq for HeapState {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapState {}

impl PartialOrd for HeapState {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapState {
    fn cmp(&self, other: &Self) -> Ordering {
        // inverted: BinaryHeap is a max-heap, we want the cheapest state
        other
            .cost
            .partial_cmp(&self.cost)
            .expect("costs are finite")
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

/// Single-source shortest paths over directed link costs.
pub fn dijkstra(topology: &Topology, source: NodeId) -> Vec<PathMeasure> {
    let n = topology.node_count();
    let mut best = vec![PathMeasure { cost: f64::INFINITY, hops: u32::MAX }; n];
    best[source.index()] = PathMeasure { cost: 0.0, hops: 0 };
    let mut heap = BinaryHeap::new();
    heap.push(HeapState { cost: 0.0, hops: 0, node: source.index() });
    while let Some(HeapState { cost, hops, node }) = heap.pop() {
        let current = best[node];
        if cost > current.cost || (cost == current.cost && hops > current.hops) {
            continue; // stale entry
        }
        for (k, iface) in topology.interfaces(NodeId(node as u32)).iter().enumerate() {
            let next = iface.neighbor.index();
            let ncost = cost + topology.cost_from(NodeId(node as u32), k);
            let nhops = hops + 1;
            let incumbent = best[next];
            if ncost < incumbent.cost || (ncost == incumbent.cost && nhops < incumbent.hops) {
                best[next] = PathMeasure { cost: ncost, hops: nhops };
                heap.push(HeapState { cost: ncost, hops: nhops, node: next });
            }
        }
    }
    best
}

/// Expected path length in an N-node plane-random graph whose degree
/// distribution falls off with shape parameter `kappa`:
///
///   l = 1 + (ln N + ln E) / (ln 2 - ln E),  E = e^(1/kappa) - 1
///
/// Only defined while E < 2; flatter distributions put the formula outside
/// its derivation and are a domain error.
pub fn theoretical_path_length(n: usize, kappa: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let e = (1.0 / kappa).exp_m1();
    if e >= 2.0 {
        return Err(Error::Domain(format!(
            "kappa {kappa} puts e^(1/kappa) - 1 = {e} outside [0, 2)"
        )));
    }
    Ok(1.0 + ((n as f64).ln() + e.ln()) / (2f64.ln() - e.ln()))
}

/// Exact inverse of `theoretical_path_length` in kappa:
///
///   kappa = 1 / ln(1 + 2^((l-1)/l) * N^(-1/l))
///
/// Round-tripping through `theoretical_path_length` reproduces l.
pub fn kappa_from_length(n: usize, l: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::Domain(format!("path length must be positive, got {l}")));
    }
    let e = 2f64.powf((l - 1.0) / l) * (n as f64).powf(-1.0 / l);
    Ok(1.0 / e.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub n: usize,
    pub measured: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kappa: f64,
    pub r_squared: f64,
    pub samples: Vec<FitSample>,
}

// golden-section search bounds for kappa; the lower end sits just above
// the domain wall where e^(1/kappa) - 1 reaches 2
const KAPPA_LO: f64 = 0.910_240;
const KAPPA_HI: f64 = 64.0;
const KAPPA_TOL: f64 = 1e-10;

/// Least-squares fit of kappa to measured (N, average path length) samples
/// by golden-section search over the valid kappa interval.
pub fn fit_kappa(samples: &[(usize, f64)]) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 samples to fit, got {}",
            samples.len()
        )));
    }
    for &(n, l) in samples {
        if n < 2 || !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!("bad sample (n = {n}, length = {l})")));
        }
    }
    let mut ns: Vec<usize> = samples.iter().map(|s| s.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != samples.len() {
        return Err(Error::InvalidParameter("duplicate node counts in samples".into()));
    }

    let sse = |kappa: f64| -> f64 {
        samples
            .iter()
            .map(|&(n, l)| {
                let t = theoretical_path_length(n, kappa).expect("kappa kept in domain");
                (t - l) * (t - l)
            })
            .sum()
    };

    // golden-section: keep the bracket third with the smaller error
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (KAPPA_LO, KAPPA_HI);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = sse(x1);
    let mut f2 = sse(x2);
    while hi - lo > KAPPA_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = sse(x2);
        }
    }
    let kappa = 0.5 * (lo + hi);
    if kappa - KAPPA_LO < 1e-6 || KAPPA_HI - kappa < 1e-6 {
        return Err(Error::FitFailure(format!(
            "optimum pinned to the search boundary at kappa = {kappa}; \
             measured lengths do not look like this family"
        )));
    }

    let fitted: Vec<FitSample> = samples
        .iter()
        .map(|&(n, l)| FitSample {
            n,
            measured: l,
            theoretical: theoretical_path_length(n, kappa).expect("kappa in domain"),
        })
        .collect();
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64;
    let ss_tot: f64 = samples.iter().map(|&(_, l)| (l - mean) * (l - mean)).sum();
    let ss_res: f64 =
        fitted.iter().map(|s| (s.measured - s.theoretical) * (s.measured - s.theoretical)).sum();
    let r_squared = if ss_tot == 0.0 {
        if ss_res < 1e-12 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(FitResult { kappa, r_squared, samples: fitted })
}

/// One tau sample of the operating curve.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub tau: f64,
    pub loop_pct: f64,
    pub multipath_pct: f64,
    pub success_pct: f64,
    /// True when controlled selection almost never fell back to an escape
    /// rule, i.e. the loop model was actually steering at this tau.
    pub model_in_force: bool,
    pub fallback_fraction: f64,
}

/// Fallback share below which a tau point counts as model-in-force.
pub const MODEL_IN_FORCE_EPSILON: f64 = 1e-3;

/// Explores the topology once per tau and runs the same traffic experiment
/// over each converged table set. Points are computed in parallel; output
/// order follows the grid.
pub fn operating_curve(
    topology: &Topology,
    tau_grid: &[f64],
    base_sim: &SimConfig,
    base_traffic: &TrafficConfig,
) -> Result<Vec<OperatingPoint>> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidParameter("tau grid is empty".into()));
    }
    for w in tau_grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(format!(
                "tau grid must be strictly increasing, saw {} then {}",
                w[0], w[1]
            )));
        }
    }
    for &tau in tau_grid {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau {tau} outside [0, 1]")));
        }
    }
    base_sim.validate()?;
    base_traffic.validate()?;

    tau_grid
        .par_iter()
        .map(|&tau| {
            let mut sim = base_sim.clone();
            sim.params.tau = tau;
            let exploration = run_exploration(topology, &sim)?;
            let (metrics, _) = run_traffic_experiment(topology, &exploration.tables, base_traffic)?;
            Ok(OperatingPoint {
                tau,
                loop_pct: metrics.loop_pct(),
                multipath_pct: metrics.multipath_pct(),
                success_pct: metrics.success_pct(),
                model_in_force: exploration.stats.fallback_fraction() < MODEL_IN_FORCE_EPSILON,
                fallback_fraction: exploration.stats.fallback_fraction(),
            })
        })
        .collect()
}

/// Result of measuring converged tables against the shortest-path oracle at
/// phi = 1: the average hop count over delivered pairs, and how many pairs
/// fell short of true shortest-path routing (failed to deliver, or delivered
/// over a path costlier than the oracle's).
#[derive(Debug, Clone, PartialEq)]
pub struct PathLengthMeasurement {
    pub average_hops: f64,
    pub pair_count: u64,
    /// Pairs whose phi = 1 walk matched the oracle's cost exactly.
    pub matched_pairs: u64,
    /// pair_count - matched_pairs.
    pub deficient_pairs: u64,
}

/// Routes one phi = 1 packet per ordered pair and compares each walk
/// against the oracle. Walk costs can never beat the oracle, so any
/// difference beyond float noise is a convergence deficiency.
pub fn measure_avg_shortest_path(
    topology: &Topology,
    tables: &[RoutingTable],
) -> Result<PathLengthMeasurement> {
    let config = TrafficConfig { phi: 1, ttl: crate::traffic::DEFAULT_TTL, ..Default::default() };
    if tables.len() != topology.node_count() {
        return Err(Error::Validation(format!(
            "{} routing tables for {} nodes",
            tables.len(),
            topology.node_count()
        )));
    }
    let oracle: Vec<Vec<PathMeasure>> = topology.nodes().map(|s| dijkstra(topology, s)).collect();

    let mut total_hops = 0u64;
    let mut pair_count = 0u64;
    let mut delivered_pairs = 0u64;
    let mut matched = 0u64;
    for s in topology.nodes() {
        for d in topology.nodes() {
            if s == d {
                continue;
            }
            pair_count += 1;
            // phi = 1 walks consume no randomness; the stream is inert
            let mut rng = derive_stream(0, s.0 as u64, d.0 as u64);
            let (outcome, packet) = route_packet(s, d, topology, tables, &config, &mut rng);
            if outcome != Outcome::Delivered {
                continue;
            }
            delivered_pairs += 1;
            total_hops += (packet.path_trace.len() - 1) as u64;
            let walked = PathRecord::path_cost(topology, &packet.path_trace);
            let best = oracle[s.index()][d.index()].cost;
            debug_assert!(walked > best - 1e-9, "a real walk cannot beat the oracle");
            if (walked - best).abs() <= 1e-9 {
                matched += 1;
            }
        }
    }
    let avg = if delivered_pairs == 0 { 0.0 } else { total_hops as f64 / delivered_pairs as f64 };
    Ok(PathLengthMeasurement {
        average_hops: avg,
        pair_count,
        matched_pairs: matched,
        deficient_pairs: pair_count - matched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Link;

    fn nid(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn dijkstra_prefers_cheap_detours() {
        // 0 -> 2 direct costs 5; 0 -> 1 -> 2 costs 3
        let topo = Topology::new(
            3,
            vec![Link::new(0, 1, 1.0, 1.0), Link::new(1, 2, 2.0, 2.0), Link::new(0, 2, 5.0, 5.0)],
        )
        .unwrap();
        let from0 = dijkstra(&topo, nid(0));
        assert_eq!(from0[2], PathMeasure { cost: 3.0, hops: 2 });
        assert_eq!(from0[1], PathMeasure { cost: 1.0, hops: 1 });
        assert_eq!(from0[0], PathMeasure { cost: 0.0, hops: 0 });
    }

    #[test]
    fn dijkstra_respects_direction() {
        let topo = Topology::new(2, vec![Link::new(0, 1, 1.0, 9.0)]).unwrap();
        assert_eq!(dijkstra(&topo, nid(0))[1].cost, 1.0);
        assert_eq!(dijkstra(&topo, nid(1))[0].cost, 9.0);
    }

    #[test]
    fn dijkstra_breaks_cost_ties_by_hops() {
        // both routes to 3 cost 2: direct link of cost 2 vs two unit hops
        let topo = Topology::new(
            4,
            vec![
                Link::new(0, 1, 1.0, 1.0),
                Link::new(1, 3, 1.0, 1.0),
                Link::new(0, 3, 2.0, 2.0),
                Link::new(2, 3, 1.0, 1.0),
            ],
        )
        .unwrap();
        let from0 = dijkstra(&topo, nid(0));
        assert_eq!(from0[3], PathMeasure { cost: 2.0, hops: 1 });
    }

    #[test]
    fn theoretical_length_matches_closed_form() {
        // frozen: l(40, 2.0)
        let l = theoretical_path_length(40, 2.0).unwrap();
        assert!((l - 3.892023554201373).abs() < 1e-12, "got {l}");
        // N = 2 keeps the formula tiny but defined
        assert!(theoretical_path_length(2, 5.0).is_ok());
    }

    #[test]
    fn theoretical_length_grows_with_n_and_shrinks_with_kappa() {
        let mut last = 0.0;
        for n in [10, 20, 40, 80, 160] {
            let l = theoretical_path_length(n, 1.5).unwrap();
            assert!(l > last);
            last = l;
        }
        // small kappa = light degree tail = few shortcuts = longer paths
        let steep = theoretical_path_length(64, 1.2).unwrap();
        let flat = theoretical_path_length(64, 3.0).unwrap();
        assert!(steep > flat);
    }

    #[test]
    fn domain_wall_is_enforced() {
        // e^(1/kappa) - 1 >= 2 once kappa <= 1/ln 3
        let err = theoretical_path_length(40, 0.91).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(theoretical_path_length(40, 0.911).is_ok());
        assert!(theoretical_path_length(40, 0.0).is_err());
        assert!(theoretical_path_length(1, 1.0).is_err());
    }

    #[test]
    fn kappa_inversion_round_trips() {
        // frozen: kappa(40, 4.0)
        let k = kappa_from_length(40, 4.0).unwrap();
        assert!((k - 1.9528616939887546).abs() < 1e-12, "got {k}");
        for (n, l) in [(20usize, 2.5f64), (40, 4.0), (60, 3.3), (100, 7.0)] {
            let kappa = kappa_from_length(n, l).unwrap();
            let back = theoretical_path_length(n, kappa).unwrap();
            assert!((back - l).abs() < 1e-9, "n={n} l={l} back={back}");
        }
        assert!(kappa_from_length(40, 0.0).is_err());
        assert!(kappa_from_length(1, 3.0).is_err());
    }

    #[test]
    fn fit_recovers_noise_free_kappa() {
        let truth = 1.5;
        let samples: Vec<(usize, f64)> = [20, 40, 60, 80, 100]
            .iter()
            .map(|&n| (n, theoretical_path_length(n, truth).unwrap()))
            .collect();
        let fit = fit_kappa(&samples).unwrap();
        assert!((fit.kappa - truth).abs() < 1e-6, "kappa = {}", fit.kappa);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
        assert_eq!(fit.samples.len(), 5);
    }

    #[test]
    fn fit_handles_noise() {
        let truth = 2.0;
        let noise = [0.03, -0.04, 0.02, -0.01, 0.05];
        let samples: Vec<(usize, f64)> = [20usize, 40, 60, 80, 100]
            .iter()
            .zip(noise)
            .map(|(&n, eps)| (n, theoretical_path_length(n, truth).unwrap() + eps))
            .collect();
        let fit = fit_kappa(&samples).unwrap();
        assert!((fit.kappa - truth).abs() < 0.1);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_kappa(&[(20, 3.0), (40, 4.0)]).is_err());
        assert!(fit_kappa(&[(20, 3.0), (20, 3.5), (40, 4.0)]).is_err());
        assert!(fit_kappa(&[(20, 3.0), (40, -1.0), (60, 4.0)]).is_err());
    }

    #[test]
    fn absurd_lengths_pin_the_optimizer_and_fail() {
        // no in-domain kappa produces ten-million-hop averages, so the
        // optimum lands on the search boundary and is reported, not returned
        let err = fit_kappa(&[(20, 9e6), (40, 1e7), (60, 1.1e7)]).unwrap_err();
        assert!(matches!(err, Error::FitFailure(_)), "got {err:?}");
    }

    #[test]
    fn perfect_tables_measure_shortest_paths() {
        // line 0 - 1 - 2: uniform tables route phi = 1 deterministically
        // toward lower-id neighbors on ties; build biased tables instead
        let topo =
            Topology::new(3, vec![Link::new(0, 1, 1.0, 1.0), Link::new(1, 2, 1.0, 1.0)]).unwrap();
        let mut tables: Vec<RoutingTable> = topo
            .nodes()
            .map(|n| RoutingTable::uniform(topo.node_count(), topo.degree(n)))
            .collect();
        // node 1: send dest 0 left, dest 2 right
        tables[1].reinforce(nid(0), 0, 10.0);
        tables[1].reinforce(nid(2), 1, 10.0);
        let m = measure_avg_shortest_path(&topo, &tables).unwrap();
        assert_eq!(m.pair_count, 6);
        assert_eq!(m.deficient_pairs, 0);
        assert_eq!(m.matched_pairs, 6);
        // pairs: 4 one-hop + 2 two-hop = 8 hops over 6 pairs
        assert!((m.average_hops - 8.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn star_average_is_closed_form() {
        // hub 0 with 4 leaves: leaf-to-leaf 2 hops, hub pairs 1 hop;
        // average = 2 (n - 1) / n = 1.6 for n = 5
        let topo = Topology::new(5, (1..5).map(|i| Link::new(0, i, 1.0, 1.0)).collect()).unwrap();
        let mut tables: Vec<RoutingTable> = topo
            .nodes()
            .map(|n| RoutingTable::uniform(topo.node_count(), topo.degree(n)))
            .collect();
        // hub rows must point at the right leaf
        for leaf in 1..5u32 {
            let iface = topo.interface_to(nid(0), nid(leaf)).unwrap();
            tables[0].reinforce(nid(leaf), iface, 100.0);
        }
        let m = measure_avg_shortest_path(&topo, &tables).unwrap();
        assert_eq!(m.deficient_pairs, 0);
        assert!((m.average_hops - 1.6).abs() < 1e-12);
    }

    #[test]
    fn unconverged_tables_report_deficiencies() {
        // square ring with uniform tables: phi = 1 walks all tie-break
        // toward the lowest interface and some pairs never deliver
        let topo = Topology::new(
            4,
            vec![
                Link::new(0, 1, 1.0, 1.0),
                Link::new(1, 2, 1.0, 1.0),
                Link::new(2, 3, 1.0, 1.0),
                Link::new(0, 3, 1.0, 1.0),
            ],
        )
        .unwrap();
        let tables: Vec<RoutingTable> = topo
            .nodes()
            .map(|n| RoutingTable::uniform(topo.node_count(), topo.degree(n)))
            .collect();
        let m = measure_avg_shortest_path(&topo, &tables).unwrap();
        assert_eq!(m.pair_count, 12);
        assert!(m.deficient_pairs > 0);
    }
}
