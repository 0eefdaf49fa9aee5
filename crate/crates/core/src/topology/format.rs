//! Plain-text topology files.
//!
//! ```text
//! # optional comments
//! nodes 4
//! link 0 1 5 5
//! link 1 2 1 2.5
//! ```
//!
//! `link a b cab cba` gives the two directional costs. Serialization writes
//! links in canonical order (smaller endpoint first, sorted), so a
//! parse/serialize round trip is byte-stable.

use crate::error::{Error, Result};
use crate::topology::{Link, Topology};

pub fn serialize_topology(topo: &Topology) -> String {
    let mut out = String::new();
    out.push_str(&format!("nodes {}\n", topo.node_count()));
    for l in topo.links() {
        out.push_str(&format!("link {} {} {} {}\n", l.a, l.b, l.cost_ab, l.cost_ba));
    }
    out
}

pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut node_count: Option<usize> = None;
    let mut links: Vec<Link> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let mut tokens = line.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        let err = |message: String| Error::Parse { line: line_no, message };

        match keyword {
            "nodes" => {
                if node_count.is_some() {
                    return Err(err("repeated nodes line".into()));
                }
                let n = tokens
                    .next()
                    .ok_or_else(|| err("nodes needs a count".into()))?
                    .parse::<usize>()
                    .map_err(|e| err(format!("bad node count: {e}")))?;
                if tokens.next().is_some() {
                    return Err(err("trailing tokens after node count".into()));
                }
                node_count = Some(n);
            }
            "link" => {
                if node_count.is_none() {
                    return Err(err("link before nodes line".into()));
                }
                let mut field = |name: &str| {
                    tokens
                        .next()
                        .ok_or_else(|| Error::Parse {
                            line: line_no,
                            message: format!("link is missing {name}"),
                        })
                        .map(str::to_owned)
                };
                let a = field("endpoint a")?;
                let b = field("endpoint b")?;
                let cab = field("cost a->b")?;
                let cba = field("cost b->a")?;
                if tokens.next().is_some() {
                    return Err(err("trailing tokens after link".into()));
                }
                let a = a.parse::<u32>().map_err(|e| err(format!("bad endpoint: {e}")))?;
                let b = b.parse::<u32>().map_err(|e| err(format!("bad endpoint: {e}")))?;
                let cab = cab.parse::<f64>().map_err(|e| err(format!("bad cost: {e}")))?;
                let cba = cba.parse::<f64>().map_err(|e| err(format!("bad cost: {e}")))?;
                links.push(Link::new(a, b, cab, cba));
            }
            other => {
                return Err(err(format!("unknown keyword {other:?}")));
            }
        }
    }

    let node_count =
        node_count.ok_or_else(|| Error::Validation("file has no nodes line".into()))?;
    Topology::new(node_count, links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_clique_grid, CostRange, NodeId};

    #[test]
    fn parses_minimal_file() {
        let topo = parse_topology("nodes 2\nlink 0 1 5 5\n").unwrap();
        assert_eq!(topo.node_count(), 2);
        assert_eq!(topo.cost_from(NodeId(0), 0), 5.0);
        assert_eq!(topo.cost_from(NodeId(1), 0), 5.0);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\nnodes 2  # inline\n   \nlink 0 1 5 5 # tail\n# end\n";
        assert!(parse_topology(text).is_ok());
    }

    #[test]
    fn asymmetric_costs_survive() {
        let topo = parse_topology("nodes 2\nlink 1 0 3 4\n").unwrap();
        // written as 1 -> 0 costing 3, so from node 0 the cost is 4
        assert_eq!(topo.cost_from(NodeId(0), 0), 4.0);
        assert_eq!(topo.cost_from(NodeId(1), 0), 3.0);
    }

    #[test]
    fn round_trip_is_identity() {
        let range = CostRange::new(0.5, 9.5).unwrap();
        let topo = generate_clique_grid(8, 5, range, 21).unwrap();
        let text = serialize_topology(&topo);
        let back = parse_topology(&text).unwrap();
        assert_eq!(topo, back);
        // and the text itself is stable
        assert_eq!(text, serialize_topology(&back));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_topology("nodes 2\nlink 0 1 five 5\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let err = parse_topology("nodes 2\nedge 0 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_topology("link 0 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn structural_problems_are_validation_errors() {
        assert!(matches!(
            parse_topology("nodes 2\nlink 0 0 1 1\n").unwrap_err(),
            Error::Validation(_)
        ));
        assert!(matches!(
            parse_topology("nodes 3\nlink 0 1 1 1\n").unwrap_err(),
            Error::Validation(_)
        ));
        assert!(matches!(parse_topology("# empty\n").unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn cost_formatting_round_trips_exactly() {
        let topo = parse_topology("nodes 2\nlink 0 1 0.30000000000000004 7\n").unwrap();
        let text = serialize_topology(&topo);
        assert!(text.contains("0.30000000000000004"));
        assert_eq!(parse_topology(&text).unwrap(), topo);
    }
}
