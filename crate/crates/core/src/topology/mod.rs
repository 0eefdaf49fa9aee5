mod format;
mod generate;

pub use format::{parse_topology, serialize_topology};
pub use generate::{
    generate_clique_grid, generate_tree, generate_velcro, generate_waxman, CostRange,
    WaxmanCostMode,
};

use std::fmt;

use crate::error::{Error, Result};

/// Dense node index in `[0, node_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Bidirectional link with an independent cost per direction.
/// Stored normalized with `a < b`; flipping endpoints swaps the costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    /// Cost of traversing a -> b.
    pub cost_ab: f64,
    /// Cost of traversing b -> a.
    pub cost_ba: f64,
}

impl Link {
    pub fn new(a: u32, b: u32, cost_ab: f64, cost_ba: f64) -> Self {
        if a <= b {
            Link { a: NodeId(a), b: NodeId(b), cost_ab, cost_ba }
        } else {
            Link { a: NodeId(b), b: NodeId(a), cost_ab: cost_ba, cost_ba: cost_ab }
        }
    }
}

/// One attachment point of a node. Interface indices are local to the node
/// and dense in `[0, degree)`, ordered by neighbor id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interface {
    pub neighbor: NodeId,
    /// Index into `Topology::links`.
    pub link: usize,
    /// Interface index at the neighbor that refers back over the same link.
    pub peer: usize,
}

/// Validated, connected network graph. Construction is the only place
/// invariants are checked; the rest of the crate relies on them.
#[derive(Debug, Clone)]
pub struct Topology {
    node_count: usize,
    links: Vec<Link>,
    adjacency: Vec<Vec<Interface>>,
}

impl PartialEq for Topology {
    fn eq(&self, other: &Self) -> bool {
        // adjacency is derived from links, so structural equality is enough
        self.node_count == other.node_count && self.links == other.links
    }
}

impl Topology {
    /// Builds a topology from raw links, normalizing and sorting them into
    /// canonical `(a, b)` order. Rejects self-links, duplicate pairs,
    /// non-positive or non-finite costs, out-of-range endpoints, and
    /// disconnected graphs.
    pub fn new(node_count: usize, links: Vec<Link>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::Validation(format!("need at least 2 nodes, got {node_count}")));
        }
        let mut links: Vec<Link> =
            links.into_iter().map(|l| Link::new(l.a.0, l.b.0, l.cost_ab, l.cost_ba)).collect();
        links.sort_by_key(|l| (l.a, l.b));

        for l in &links {
            if l.a == l.b {
                return Err(Error::Validation(format!("self-link at node {}", l.a)));
            }
            if l.b.index() >= node_count {
                return Err(Error::Validation(format!(
                    "link {}-{} references a node outside 0..{node_count}",
                    l.a, l.b
                )));
            }
            for c in [l.cost_ab, l.cost_ba] {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Validation(format!(
                        "link {}-{} has non-positive cost {c}",
                        l.a, l.b
                    )));
                }
            }
        }
        for w in links.windows(2) {
            if w[0].a == w[1].a && w[0].b == w[1].b {
                return Err(Error::Validation(format!("duplicate link {}-{}", w[0].a, w[0].b)));
            }
        }

        let mut adjacency: Vec<Vec<Interface>> = vec![Vec::new(); node_count];
        for (idx, l) in links.iter().enumerate() {
            adjacency[l.a.index()].push(Interface { neighbor: l.b, link: idx, peer: 0 });
            adjacency[l.b.index()].push(Interface { neighbor: l.a, link: idx, peer: 0 });
        }
        for ifaces in &mut adjacency {
            ifaces.sort_by_key(|i| i.neighbor);
        }
        // resolve peer indices now that both sides are in final order
        let lookup: Vec<Vec<(usize, usize)>> = adjacency
            .iter()
            .map(|ifaces| ifaces.iter().enumerate().map(|(k, i)| (i.link, k)).collect())
            .collect();
        for ifaces in adjacency.iter_mut() {
            for iface in ifaces.iter_mut() {
                let peer_ifaces = &lookup[iface.neighbor.index()];
                iface.peer = peer_ifaces
                    .iter()
                    .find(|(link, _)| *link == iface.link)
                    .map(|(_, k)| *k)
                    .expect("link listed on both endpoints");
            }
        }

        let topo = Topology { node_count, links, adjacency };
        if !topo.is_connected() {
            return Err(Error::Validation("graph is not connected".into()));
        }
        Ok(topo)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(n) = stack.pop() {
            for iface in &self.adjacency[n] {
                let m = iface.neighbor.index();
                if !seen[m] {
                    seen[m] = true;
                    count += 1;
                    stack.push(m);
                }
            }
        }
        count == self.node_count
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count as u32).map(NodeId)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    #[inline]
    pub fn interfaces(&self, node: NodeId) -> &[Interface] {
        &self.adjacency[node.index()]
    }

    #[inline]
    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    #[inline]
    pub fn neighbor(&self, node: NodeId, iface: usize) -> NodeId {
        self.adjacency[node.index()][iface].neighbor
    }

    /// Cost of leaving `node` through local interface `iface`, i.e. the cost
    /// of the direction node -> neighbor.
    pub fn cost_from(&self, node: NodeId, iface: usize) -> f64 {
        let entry = self.adjacency[node.index()][iface];
        let link = &self.links[entry.link];
        if link.a == node {
            link.cost_ab
        } else {
            link.cost_ba
        }
    }

    /// Local interface at `from` that leads directly to `to`, if the two are
    /// adjacent. Adjacency lists are sorted by neighbor id, so this is a
    /// binary search.
    pub fn interface_to(&self, from: NodeId, to: NodeId) -> Option<usize> {
        self.adjacency[from.index()].binary_search_by_key(&to, |i| i.neighbor).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Topology {
        let links = (0..n - 1).map(|i| Link::new(i as u32, i as u32 + 1, 1.0, 2.0)).collect();
        Topology::new(n, links).unwrap()
    }

    #[test]
    fn canonical_order_and_peer_resolution() {
        // links given out of order and flipped; construction normalizes
        let topo =
            Topology::new(3, vec![Link::new(2, 1, 5.0, 7.0), Link::new(1, 0, 3.0, 4.0)]).unwrap();
        assert_eq!(topo.links()[0].a, NodeId(0));
        assert_eq!(topo.links()[0].b, NodeId(1));
        // Link::new(1, 0, 3, 4) means 1->0 costs 3, so 0->1 costs 4
        assert_eq!(topo.links()[0].cost_ab, 4.0);
        assert_eq!(topo.links()[0].cost_ba, 3.0);
        for node in topo.nodes() {
            for (k, iface) in topo.interfaces(node).iter().enumerate() {
                let back = topo.interfaces(iface.neighbor)[iface.peer];
                assert_eq!(back.neighbor, node);
                assert_eq!(back.link, iface.link);
                assert_eq!(topo.interfaces(iface.neighbor)[iface.peer].peer, k);
            }
        }
    }

    #[test]
    fn directional_costs_follow_orientation() {
        let topo = line(3);
        // every link stored as (i, i+1) with cost_ab = 1, cost_ba = 2
        let down = topo.interface_to(NodeId(1), NodeId(2)).unwrap();
        let up = topo.interface_to(NodeId(1), NodeId(0)).unwrap();
        assert_eq!(topo.cost_from(NodeId(1), down), 1.0);
        assert_eq!(topo.cost_from(NodeId(1), up), 2.0);
    }

    #[test]
    fn rejects_self_link() {
        let err = Topology::new(2, vec![Link::new(0, 0, 1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_duplicate_even_when_flipped() {
        let err = Topology::new(2, vec![Link::new(0, 1, 1.0, 1.0), Link::new(1, 0, 2.0, 2.0)])
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_disconnected() {
        let err = Topology::new(4, vec![Link::new(0, 1, 1.0, 1.0), Link::new(2, 3, 1.0, 1.0)])
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rejects_non_positive_costs() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(Topology::new(2, vec![Link::new(0, 1, bad, 1.0)]).is_err());
        }
    }

    #[test]
    fn rejects_out_of_range_endpoint() {
        assert!(Topology::new(2, vec![Link::new(0, 2, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn rejects_single_node() {
        assert!(Topology::new(1, vec![]).is_err());
    }

    #[test]
    fn interface_indices_are_dense_and_sorted() {
        let topo = Topology::new(
            4,
            vec![Link::new(0, 3, 1.0, 1.0), Link::new(0, 1, 1.0, 1.0), Link::new(0, 2, 1.0, 1.0)],
        )
        .unwrap();
        let neighbors: Vec<u32> = topo.interfaces(NodeId(0)).iter().map(|i| i.neighbor.0).collect();
        assert_eq!(neighbors, vec![1, 2, 3]);
        assert_eq!(topo.degree(NodeId(0)), 3);
        assert_eq!(topo.max_degree(), 3);
    }
}
