//! Per-node routing state and the selection rules ants use to move.
//!
//! Each node keeps a row of next-hop probabilities per destination and, at
//! sources, send/return counters per (destination, interface). Ants walking
//! back toward their destination reinforce the interface they arrived on in
//! favor of the ant's source, so probability mass accumulates on cheap
//! directions without any node ever seeing the whole path.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::topology::NodeId;

/// Shape of the cost-to-reinforcement mapping. Larger accumulated cost must
/// never yield a larger probability bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostFn {
    Linear,
    Quadratic,
}

impl CostFn {
    pub fn apply(self, cost: f64) -> f64 {
        match self {
            CostFn::Linear => cost,
            CostFn::Quadratic => cost * cost,
        }
    }
}

/// Knobs shared by every reinforcement step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinforcementParams {
    /// Learning-rate numerator of the probability bump.
    pub lambda: f64,
    pub cost_fn: CostFn,
    /// Loop-ratio threshold above which an interface stops being eligible.
    pub tau: f64,
}

impl Default for ReinforcementParams {
    fn default() -> Self {
        ReinforcementParams { lambda: 0.1, cost_fn: CostFn::Linear, tau: 0.5 }
    }
}

impl ReinforcementParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tau.is_finite() && (0.0..=1.0).contains(&self.tau)) {
            return Err(Error::InvalidParameter(format!(
                "tau must be in [0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Probability bump for an ant that accumulated `cost` on its way here.
/// Accumulated cost over positive links is strictly positive, so a
/// non-positive value is a caller bug, not an input error.
pub fn compute_delta_p(cost: f64, params: &ReinforcementParams) -> f64 {
    assert!(cost > 0.0, "accumulated cost must be positive, got {cost}");
    params.lambda / params.cost_fn.apply(cost)
}

/// Next-hop probabilities: one row per destination, one column per local
/// interface. Rows always sum to 1. The row for the node itself is never
/// consulted but kept so rows index directly by destination.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    rows: Vec<Vec<f64>>,
}

impl RoutingTable {
    pub fn uniform(node_count: usize, degree: usize) -> Self {
        assert!(degree >= 1, "a node with no interfaces cannot route");
        let p = 1.0 / degree as f64;
        RoutingTable { rows: vec![vec![p; degree]; node_count] }
    }

    /// Rebuilds a table from raw rows, e.g. parsed from a dump.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Validation("routing table has no rows".into()));
        }
        let degree = rows[0].len();
        for (d, row) in rows.iter().enumerate() {
            if row.len() != degree {
                return Err(Error::Validation(format!(
                    "row {d} has {} entries, expected {degree}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!(
                    "row {d} is not a probability distribution (sum {sum})"
                )));
            }
        }
        Ok(RoutingTable { rows })
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.rows[0].len()
    }

    #[inline]
    pub fn row(&self, dest: NodeId) -> &[f64] {
        &self.rows[dest.index()]
    }

    /// Shifts probability toward `iface` for destination `dest`:
    /// the winner gets (p + dp) / (1 + dp), everyone else p / (1 + dp).
    pub fn reinforce(&mut self, dest: NodeId, iface: usize, delta_p: f64) {
        debug_assert!(delta_p >= 0.0);
        let row = &mut self.rows[dest.index()];
        let norm = 1.0 + delta_p;
        for p in row.iter_mut() {
            *p /= norm;
        }
        row[iface] += delta_p / norm;
        debug_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9, "row drifted off stochastic");
    }

    /// Samples an interface from the row for `dest`.
    pub fn sample(&self, dest: NodeId, rng: &mut SimRng) -> usize {
        let row = self.row(dest);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        row.len() - 1
    }
}

/// Send/return counters a source keeps per (destination, interface).
/// The ratio returned/sent estimates how often a first hop leads back home
/// instead of onward; interfaces start innocent at ratio 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StatModel {
    sent: Vec<Vec<u64>>,
    returned: Vec<Vec<u64>>,
}

impl StatModel {
    pub fn new(node_count: usize, degree: usize) -> Self {
        assert!(degree >= 1);
        StatModel {
            sent: vec![vec![0; degree]; node_count],
            returned: vec![vec![0; degree]; node_count],
        }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.sent[0].len()
    }

    pub fn record_send(&mut self, dest: NodeId, iface: usize) {
        self.sent[dest.index()][iface] += 1;
    }

    /// A return that was never sent means the bookkeeping is corrupt, which
    /// is fatal rather than recoverable.
    pub fn record_return(&mut self, dest: NodeId, iface: usize) -> Result<()> {
        let d = dest.index();
        if self.returned[d][iface] >= self.sent[d][iface] {
            return Err(Error::InternalConsistency(format!(
                "returns ({}) would exceed sends ({}) for destination {dest} interface {iface}",
                self.returned[d][iface] + 1,
                self.sent[d][iface]
            )));
        }
        self.returned[d][iface] += 1;
        Ok(())
    }

    #[inline]
    pub fn sent(&self, dest: NodeId, iface: usize) -> u64 {
        self.sent[dest.index()][iface]
    }

    #[inline]
    pub fn returned(&self, dest: NodeId, iface: usize) -> u64 {
        self.returned[dest.index()][iface]
    }

    /// Fraction of ants sent toward `dest` over `iface` that came back.
    /// Zero until the first send, so untried interfaces stay eligible.
    pub fn loop_ratio(&self, dest: NodeId, iface: usize) -> f64 {
        let s = self.sent[dest.index()][iface];
        if s == 0 {
            0.0
        } else {
            self.returned[dest.index()][iface] as f64 / s as f64
        }
    }
}

/// Which rule produced a controlled-phase selection. Anything but
/// `Eligible` means the loop model had nothing good to offer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionCase {
    /// Uniform choice among interfaces under the loop-ratio threshold.
    Eligible,
    /// Sole interface is the arrival interface; bounce back.
    LeafReturn,
    /// No eligible interface at an intermediate node; retreat the way we came.
    DeadEndReturn,
    /// No eligible interface at the source; fall back to a blind pick.
    UncontrolledFallback,
}

impl SelectionCase {
    /// True when the model failed to steer and a fallback rule fired.
    pub fn is_fallback(self) -> bool {
        matches!(self, SelectionCase::DeadEndReturn | SelectionCase::UncontrolledFallback)
    }
}

/// Blind exploration: uniform over all interfaces, except that the arrival
/// interface is excluded whenever there is any alternative. At a leaf the
/// only way out is back.
pub fn select_uncontrolled(degree: usize, arrival: Option<usize>, rng: &mut SimRng) -> usize {
    debug_assert!(degree >= 1);
    match arrival {
        None => rng.random_range(0..degree),
        Some(a) => {
            debug_assert!(a < degree);
            if degree == 1 {
                return a;
            }
            let k = rng.random_range(0..degree - 1);
            if k >= a {
                k + 1
            } else {
                k
            }
        }
    }
}

/// Model-guided exploration. Interfaces whose loop ratio toward `dest` is
/// under `tau` are eligible; one is picked uniformly, avoiding the arrival
/// interface when `no_return` is set and another eligible interface exists.
/// With nothing eligible, intermediate nodes retreat over the arrival
/// interface and sources degrade to uncontrolled selection.
pub fn select_controlled(
    degree: usize,
    dest: NodeId,
    arrival: Option<usize>,
    model: &StatModel,
    tau: f64,
    no_return: bool,
    rng: &mut SimRng,
) -> (usize, SelectionCase) {
    debug_assert!(degree >= 1);
    if let Some(a) = arrival {
        if degree == 1 {
            return (a, SelectionCase::LeafReturn);
        }
    }
    let mut eligible: Vec<usize> =
        (0..degree).filter(|&k| model.loop_ratio(dest, k) < tau).collect();
    if no_return {
        if let Some(a) = arrival {
            if eligible.len() >= 2 {
                if let Some(pos) = eligible.iter().position(|&k| k == a) {
                    eligible.remove(pos);
                }
            }
        }
    }
    if eligible.is_empty() {
        match arrival {
            Some(a) => (a, SelectionCase::DeadEndReturn),
            None => (select_uncontrolled(degree, None, rng), SelectionCase::UncontrolledFallback),
        }
    } else {
        let k = if eligible.len() == 1 {
            eligible[0]
        } else {
            eligible[rng.random_range(0..eligible.len())]
        };
        (k, SelectionCase::Eligible)
    }
}
