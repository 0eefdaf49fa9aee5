use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};
use crate::topology::{Link, Topology};

/// Inclusive range link costs are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostRange {
    pub min: f64,
    pub max: f64,
}

impl CostRange {
    pub const UNIT: CostRange = CostRange { min: 1.0, max: 1.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && min <= max) {
            return Err(Error::InvalidParameter(format!(
                "cost range [{min}, {max}] must be finite, positive and ordered"
            )));
        }
        Ok(CostRange { min, max })
    }

    fn sample(&self, rng: &mut SimRng) -> f64 {
        if self.min == self.max {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    /// Uniform integer draw, for topologies that want unit-style costs.
    fn sample_integer(&self, rng: &mut SimRng) -> Result<f64> {
        let lo = self.min.ceil() as i64;
        let hi = self.max.floor() as i64;
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "cost range [{}, {}] contains no integer",
                self.min, self.max
            )));
        }
        Ok(if lo == hi { lo as f64 } else { rng.random_range(lo..=hi) as f64 })
    }
}

/// How link costs are assigned on a plane-embedded graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaxmanCostMode {
    /// Draw costs from the range, independent of geometry.
    Uniform,
    /// Cost is the Euclidean edge length rounded up.
    Distance,
}

/// Random tree: node i > 0 picks a uniformly random parent among earlier
/// nodes that still have spare child slots. Node 0 is the root.
pub fn generate_tree(
    node_count: usize,
    max_children: usize,
    costs: CostRange,
    seed: u64,
) -> Result<Topology> {
    if node_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "tree needs at least 2 nodes, got {node_count}"
        )));
    }
    if max_children < 1 {
        return Err(Error::InvalidParameter("max_children must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut child_count = vec![0usize; node_count];
    let mut links = Vec::with_capacity(node_count - 1);
    for node in 1..node_count {
        let candidates: Vec<usize> = (0..node).filter(|&p| child_count[p] < max_children).collect();
        // with max_children >= 1 some earlier node always has a free slot
        let parent = candidates[rng.random_range(0..candidates.len())];
        child_count[parent] += 1;
        links.push(Link::new(
            parent as u32,
            node as u32,
            costs.sample(&mut rng),
            costs.sample(&mut rng),
        ));
    }
    Topology::new(node_count, links)
}

/// Rectangular lattice: node (r, c) is r * cols + c, linked to its right and
/// lower neighbors. Corners get degree 2, edges 3, interior 4.
pub fn generate_clique_grid(
    rows: usize,
    cols: usize,
    costs: CostRange,
    seed: u64,
) -> Result<Topology> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs both sides >= 2, got {rows}x{cols}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut links = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                links.push(Link::new(
                    id(r, c),
                    id(r, c + 1),
                    costs.sample(&mut rng),
                    costs.sample(&mut rng),
                ));
            }
            if r + 1 < rows {
                links.push(Link::new(
                    id(r, c),
                    id(r + 1, c),
                    costs.sample(&mut rng),
                    costs.sample(&mut rng),
                ));
            }
        }
    }
    Topology::new(rows * cols, links)
}

/// Two-route torture topology: a direct source-sink link of cost
/// `main_cost`, and a parallel chain of `fulcrum_count` hubs whose edges sum
/// to `chain_cost`, each hub carrying a unit-cost cycle of `loop_size`
/// extra nodes. The cycles are dead weight that tempts a random walker away
/// from the chain.
///
/// Node layout: source 0, then fulcrum i at 1 + i * (loop_size + 1) followed
/// by its cycle nodes, sink last.
pub fn generate_velcro(
    main_cost: f64,
    chain_cost: f64,
    fulcrum_count: usize,
    loop_size: usize,
) -> Result<Topology> {
    if !(main_cost.is_finite() && main_cost > 0.0 && chain_cost.is_finite() && chain_cost > 0.0) {
        return Err(Error::InvalidParameter("velcro costs must be positive and finite".into()));
    }
    if fulcrum_count < 1 {
        return Err(Error::InvalidParameter("need at least one fulcrum".into()));
    }
    if loop_size < 3 {
        return Err(Error::InvalidParameter(format!(
            "cycles need at least 3 nodes, got {loop_size}"
        )));
    }
    let node_count = 2 + fulcrum_count * (loop_size + 1);
    let source = 0u32;
    let sink = (node_count - 1) as u32;
    let fulcrum = |i: usize| (1 + i * (loop_size + 1)) as u32;
    let hop_cost = chain_cost / (fulcrum_count + 1) as f64;

    let mut links = Vec::new();
    links.push(Link::new(source, sink, main_cost, main_cost));
    let mut prev = source;
    for i in 0..fulcrum_count {
        let f = fulcrum(i);
        links.push(Link::new(prev, f, hop_cost, hop_cost));
        // unit-cost cycle hanging off the fulcrum
        let first = f + 1;
        let mut at = f;
        for j in 0..loop_size {
            let next = first + j as u32;
            links.push(Link::new(at, next, 1.0, 1.0));
            at = next;
        }
        links.push(Link::new(at, f, 1.0, 1.0));
        prev = f;
    }
    links.push(Link::new(prev, sink, hop_cost, hop_cost));
    Topology::new(node_count, links)
}

/// Plane-embedded random graph. Nodes get uniform positions in a square of
/// side `plane_size`; each pair (i, j) is linked with probability
/// alpha * exp(-d / (beta * L)) where L is the plane diagonal. If the result
/// is disconnected, the closest inter-component pairs are linked until it
/// is not. Costs are assigned after the link set is final.
pub fn generate_waxman(
    node_count: usize,
    alpha: f64,
    beta: f64,
    plane_size: f64,
    cost_mode: WaxmanCostMode,
    costs: CostRange,
    seed: u64,
) -> Result<Topology> {
    if node_count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {node_count}")));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must be in (0, 1], got {v}")));
        }
    }
    if !(plane_size.is_finite() && plane_size > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "plane_size must be positive, got {plane_size}"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let positions: Vec<(f64, f64)> = (0..node_count)
        .map(|_| (rng.random::<f64>() * plane_size, rng.random::<f64>() * plane_size))
        .collect();
    let dist = |i: usize, j: usize| {
        let dx = positions[i].0 - positions[j].0;
        let dy = positions[i].1 - positions[j].1;
        (dx * dx + dy * dy).sqrt()
    };
    let scale = beta * plane_size * std::f64::consts::SQRT_2;

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..node_count {
        for j in i + 1..node_count {
            if rng.random::<f64>() < alpha * (-dist(i, j) / scale).exp() {
                edges.push((i, j));
            }
        }
    }

    // connectivity repair: splice components together with the shortest
    // available cross edge, smallest pair on ties
    let mut dsu = Dsu::new(node_count);
    for &(i, j) in &edges {
        dsu.union(i, j);
    }
    while dsu.components > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..node_count {
            for j in i + 1..node_count {
                if dsu.find(i) == dsu.find(j) {
                    continue;
                }
                let d = dist(i, j);
                let better = match best {
                    None => true,
                    Some((bd, _, _)) => d < bd,
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("disconnected graph has a cross pair");
        edges.push((i, j));
        dsu.union(i, j);
    }

    let mut links = Vec::with_capacity(edges.len());
    for (i, j) in edges {
        let (cab, cba) = match cost_mode {
            WaxmanCostMode::Uniform => {
                (costs.sample_integer(&mut rng)?, costs.sample_integer(&mut rng)?)
            }
            WaxmanCostMode::Distance => {
                // positions can coincide; keep costs strictly positive
                let c = dist(i, j).ceil().max(1.0);
                (c, c)
            }
        };
        links.push(Link::new(i as u32, j as u32, cab, cba));
    }
    Topology::new(node_count, links)
}

struct Dsu {
    parent: Vec<usize>,
    components: usize,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect(), components: n }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
            self.components -= 1;
        }
    }
}
