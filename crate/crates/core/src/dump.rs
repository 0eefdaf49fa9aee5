//! CSV encodings for tables, stats, metrics and curves. Everything is
//! plain text with a header row; `#` lines are comments and parsers skip
//! them, which is where run metadata lives.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analytics::{FitResult, OperatingPoint};
use crate::ant::{RoutingTable, StatModel};
use crate::error::{Error, Result};
use crate::sim::ExplorationStats;
use crate::topology::NodeId;
use crate::traffic::TrafficMetrics;

/// Routing tables and loop-model counters, one row per
/// (node, destination, interface). Self-destination rows are omitted.
pub fn tables_to_csv(tables: &[RoutingTable], models: &[StatModel], tau: Option<f64>) -> String {
    let mut out = String::new();
    if let Some(tau) = tau {
        let _ = writeln!(out, "# tau: {tau}");
    }
    let _ = writeln!(out, "node,destination,interface,probability,sent,returned");
    for (node, (table, model)) in tables.iter().zip(models).enumerate() {
        for dest in 0..tables.len() {
            if dest == node {
                continue;
            }
            let d = NodeId(dest as u32);
            for iface in 0..table.degree() {
                let _ = writeln!(
                    out,
                    "{node},{dest},{iface},{},{},{}",
                    table.row(d)[iface],
                    model.sent(d, iface),
                    model.returned(d, iface),
                );
            }
        }
    }
    out
}

/// Inverse of `tables_to_csv`. Node count and degrees are inferred from the
/// rows; self-destination rows come back uniform.
pub fn tables_from_csv(text: &str) -> Result<(Vec<RoutingTable>, Vec<StatModel>, Option<f64>)> {
    let mut tau = None;
    let mut cells: BTreeMap<(usize, usize, usize), (f64, u64, u64)> = BTreeMap::new();
    let mut header_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("tau:") {
                tau = Some(v.trim().parse::<f64>().map_err(|e| err(format!("bad tau: {e}")))?);
            }
            continue;
        }
        if !header_seen {
            if line != "node,destination,interface,probability,sent,returned" {
                return Err(err("missing table header".into()));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", fields.len())));
        }
        let node: usize = fields[0].parse().map_err(|e| err(format!("bad node: {e}")))?;
        let dest: usize = fields[1].parse().map_err(|e| err(format!("bad destination: {e}")))?;
        let iface: usize = fields[2].parse().map_err(|e| err(format!("bad interface: {e}")))?;
        let p: f64 = fields[3].parse().map_err(|e| err(format!("bad probability: {e}")))?;
        let sent: u64 = fields[4].parse().map_err(|e| err(format!("bad sent: {e}")))?;
        let returned: u64 = fields[5].parse().map_err(|e| err(format!("bad returned: {e}")))?;
        if returned > sent {
            return Err(Error::InternalConsistency(format!(
                "line {line_no}: returned {returned} exceeds sent {sent}"
            )));
        }
        if cells.insert((node, dest, iface), (p, sent, returned)).is_some() {
            return Err(err(format!("duplicate cell ({node}, {dest}, {iface})")));
        }
    }

    if cells.is_empty() {
        return Err(Error::Validation("table dump has no data rows".into()));
    }
    let node_count = 1 + cells.keys().map(|&(n, d, _)| n.max(d)).max().expect("cells is non-empty");
    let mut degrees = vec![0usize; node_count];
    for &(n, _, iface) in cells.keys() {
        degrees[n] = degrees[n].max(iface + 1);
    }
    if degrees.contains(&0) {
        return Err(Error::Validation("some nodes have no rows; table dump is incomplete".into()));
    }

    let mut rows: Vec<Vec<Vec<f64>>> =
        degrees.iter().map(|&deg| vec![vec![1.0 / deg as f64; deg]; node_count]).collect();
    let mut models: Vec<StatModel> =
        degrees.iter().map(|&deg| StatModel::new(node_count, deg)).collect();
    for (&(node, dest, iface), &(p, sent, returned)) in &cells {
        if iface >= degrees[node] {
            unreachable!("degrees derived from the same keys");
        }
        rows[node][dest][iface] = p;
        let d = NodeId(dest as u32);
        for _ in 0..sent {
            models[node].record_send(d, iface);
        }
        for _ in 0..returned {
            models[node].record_return(d, iface).expect("returned <= sent checked above");
        }
    }
    let tables = rows.into_iter().map(RoutingTable::from_rows).collect::<Result<Vec<_>>>()?;
    Ok((tables, models, tau))
}

pub fn stats_to_csv(stats: &ExplorationStats) -> String {
    let mut out = String::from("metric,value\n");
    let rows: [(&str, u64); 10] = [
        ("ants_generated", stats.ants_generated),
        ("absorbed_at_destination", stats.absorbed_at_destination),
        ("returned_to_source", stats.returned_to_source),
        ("discarded_in_flight", stats.discarded_in_flight),
        ("uncontrolled_decisions", stats.uncontrolled_decisions),
        ("controlled_decisions", stats.controlled_decisions),
        ("regular_decisions", stats.regular_decisions),
        ("leaf_returns", stats.leaf_returns),
        ("dead_end_returns", stats.dead_end_returns),
        ("uncontrolled_fallbacks", stats.uncontrolled_fallbacks),
    ];
    for (name, value) in rows {
        let _ = writeln!(out, "{name},{value}");
    }
    let _ = writeln!(out, "fallback_fraction,{}", stats.fallback_fraction());
    out
}

/// Headline numbers of one traffic run.
pub fn metrics_to_csv(phi: usize, tau: Option<f64>, metrics: &TrafficMetrics) -> String {
    let mut out =
        String::from("phi,tau,success_pct,loop_pct,multipath_pct,total_loops,ttl_drops\n");
    let tau = tau.map(|t| t.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        "{phi},{tau},{},{},{},{},{}",
        metrics.success_pct(),
        metrics.loop_pct(),
        metrics.multipath_pct(),
        metrics.total_loops,
        metrics.ttl_drops,
    );
    out
}

/// Loop-count frequencies, k = 0 always present.
pub fn histogram_to_csv(metrics: &TrafficMetrics) -> String {
    let mut out = String::from("loop_count,packets\n");
    let mut hist = metrics.loop_histogram.clone();
    hist.entry(0).or_insert(0);
    for (k, count) in hist {
        let _ = writeln!(out, "{k},{count}");
    }
    out
}

/// Per-decile delivered-traffic sums, cheapest decile first.
pub fn buckets_to_csv(buckets: &[u64; 10]) -> String {
    let mut out = String::from("decile,packets\n");
    for (i, count) in buckets.iter().enumerate() {
        let _ = writeln!(out, "{},{count}", i + 1);
    }
    out
}

pub fn curve_to_csv(points: &[OperatingPoint]) -> String {
    let mut out =
        String::from("tau,loop_pct,multipath_pct,success_pct,model_in_force,fallback_fraction\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.tau,
            p.loop_pct,
            p.multipath_pct,
            p.success_pct,
            p.model_in_force,
            p.fallback_fraction,
        );
    }
    out
}

pub fn fit_to_csv(fit: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kappa: {}", fit.kappa);
    let _ = writeln!(out, "# r_squared: {}", fit.r_squared);
    let _ = writeln!(out, "nodes,measured_length,theoretical_length,residual");
    for s in &fit.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.n,
            s.measured,
            s.theoretical,
            s.measured - s.theoretical
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_exploration, AntPolicy, SimConfig};
    use crate::topology::generate_velcro;

    #[test]
    fn tables_round_trip_exactly() {
        let topo = generate_velcro(10.0, 3.0, 1, 3).unwrap();
        let cfg = SimConfig {
            duration: 100_000,
            ant_period: 1_000,
            link_delay: 10,
            ant_policy: AntPolicy::ModelBased,
            seed: 42,
            ..SimConfig::default()
        };
        let out = run_exploration(&topo, &cfg).unwrap();
        let text = tables_to_csv(&out.tables, &out.models, Some(0.5));
        let (tables, models, tau) = tables_from_csv(&text).unwrap();
        assert_eq!(tau, Some(0.5));
        assert_eq!(models, out.models);
        for (node, (a, b)) in out.tables.iter().zip(&tables).enumerate() {
            assert_eq!(a.degree(), b.degree());
            for dest in topo.nodes() {
                if dest.index() == node {
                    continue; // self rows are not serialized
                }
                assert_eq!(a.row(dest), b.row(dest), "node {node} dest {dest}");
            }
        }
        // serialization of the parsed state is byte-identical
        assert_eq!(text, tables_to_csv(&tables, &models, tau));
    }

    #[test]
    fn table_parse_rejects_garbage() {
        assert!(tables_from_csv("").is_err());
        assert!(tables_from_csv("not,a,header\n1,2,3\n").is_err());
        let bad_count = "node,destination,interface,probability,sent,returned\n0,1,0,1.0,5\n";
        assert!(matches!(tables_from_csv(bad_count).unwrap_err(), Error::Parse { line: 2, .. }));
        let bad_ratio = "node,destination,interface,probability,sent,returned\n\
                         0,1,0,1.0,2,5\n1,0,0,1.0,1,0\n";
        assert!(matches!(tables_from_csv(bad_ratio).unwrap_err(), Error::InternalConsistency(_)));
    }

    #[test]
    fn table_parse_rejects_non_stochastic_rows() {
        let text = "node,destination,interface,probability,sent,returned\n\
                    0,1,0,0.4,0,0\n0,1,1,0.4,0,0\n\
                    1,0,0,1.0,0,0\n";
        assert!(matches!(tables_from_csv(text).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn metrics_csv_shape() {
        let metrics = TrafficMetrics {
            injected: 200,
            delivered: 150,
            ttl_drops: 50,
            looped_packets: 30,
            multipath_packets: 60,
            total_loops: 45,
            ..Default::default()
        };
        let text = metrics_to_csv(4, Some(0.5), &metrics);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "phi,tau,success_pct,loop_pct,multipath_pct,total_loops,ttl_drops"
        );
        assert_eq!(lines.next().unwrap(), "4,0.5,75,15,30,45,50");
        // without tau the column is empty, not zero
        let text = metrics_to_csv(1, None, &metrics);
        assert!(text.lines().nth(1).unwrap().starts_with("1,,75"));
    }

    #[test]
    fn histogram_includes_zero_bucket() {
        let metrics = TrafficMetrics::default();
        assert_eq!(histogram_to_csv(&metrics), "loop_count,packets\n0,0\n");
    }
}
