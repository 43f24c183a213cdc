//! Prices of a single cut.

use std::collections::BTreeMap;

use super::{IntraError, QueryDag};
use crate::cost_model::{migration_cost, per_byte_query_cost, PriceBook};
use crate::money::Money;

/// What a cut at one node costs before any upstream runtime is paid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutCosts {
    /// Per-byte scanning of the downstream part.
    pub scan: Money,
    /// Shipping the cut node's output plus every base table the downstream
    /// part still reads.
    pub migration: Money,
    /// Bytes moved across backends.
    pub shipped_bytes: u64,
    /// Distinct base tables read downstream, by name.
    pub downstream_tables: Vec<String>,
}

/// A cut at `v` is usable when it is not the root and `v` is the only
/// node of its upstream part with a consumer outside that part.
pub fn is_valid_cut(dag: &QueryDag, v: usize) -> bool {
    if v == dag.root() {
        return false;
    }
    (0..dag.nodes().len())
        .filter(|&u| u != v && dag.is_upstream(u, v))
        .all(|u| dag.parents(u).iter().all(|&p| dag.is_upstream(p, v)))
}

/// Scan and migration cost of cutting at `node`. With `scan_shipped_output`
/// the downstream part also pays to read the shipped intermediate.
pub fn cut_costs(
    dag: &QueryDag,
    node: &str,
    prices: &PriceBook,
    scan_shipped_output: bool,
) -> Result<CutCosts, IntraError> {
    let v = dag.node_idx(node)?;
    Ok(costs_at(dag, v, prices, scan_shipped_output))
}

pub(crate) fn costs_at(dag: &QueryDag, v: usize, prices: &PriceBook, scan_shipped_output: bool) -> CutCosts {
    let output = dag.node(v).output_bytes();
    let mut scanned: u64 = if scan_shipped_output { output } else { 0 };
    let mut tables = BTreeMap::new();
    for (u, n) in dag.nodes().iter().enumerate() {
        if dag.is_upstream(u, v) {
            continue;
        }
        if let Some(t) = &n.base_table {
            scanned = scanned.saturating_add(n.output_bytes());
            tables.entry(t.name.clone()).or_insert(t.size);
        }
    }
    let migration = migration_cost(output, prices)
        + tables.values().map(|&size| migration_cost(size, prices)).sum::<Money>();
    let shipped_bytes = tables.values().fold(output, |acc, &s| acc.saturating_add(s));
    CutCosts {
        scan: per_byte_query_cost(scanned, prices),
        migration,
        shipped_bytes,
        downstream_tables: tables.into_keys().collect(),
    }
}

/// Best case savings of a cut at `node`: the baseline minus everything but
/// the upstream runtime. Negative means the cut can never pay off.
pub fn opportunity(
    dag: &QueryDag,
    node: &str,
    prices: &PriceBook,
    scan_shipped_output: bool,
) -> Result<Money, IntraError> {
    let c = cut_costs(dag, node, prices, scan_shipped_output)?;
    Ok(dag.baseline_cost() - (c.migration + c.scan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intra::DagNode;
    use crate::workload::TableRef;
    use std::collections::BTreeSet;

    const TB: u64 = 1_000_000_000_000;

    fn node(id: &str, card: u64, row: u64, children: &[&str], table: Option<u64>) -> DagNode {
        DagNode {
            id: id.into(),
            op: "op".into(),
            card,
            row_size: row,
            children: children.iter().map(|c| c.to_string()).collect(),
            base_table: table.map(|size| TableRef { name: format!("tbl_{id}"), size }),
            upstream_runtime: None,
            downstream_runtime: None,
        }
    }

    /// a, b, c are scans; j joins a and b; r joins j and c.
    fn five() -> QueryDag {
        QueryDag::new(
            "five".into(),
            Money::dollars(50),
            100.0,
            vec![
                node("a", 1_000_000_000, 1_000, &[], Some(TB)),
                node("b", 2_000_000, 100, &[], Some(300_000_000)),
                node("c", 500_000_000, 400, &[], Some(2 * TB)),
                node("j", 10_000_000, 200, &["a", "b"], None),
                node("r", 10, 10, &["j", "c"], None),
            ],
        )
        .unwrap()
    }

    /// Term-by-term evaluation by walking the children lists directly.
    fn traversal_oracle(dag: &QueryDag, v: &str, prices: &PriceBook) -> (Money, Money) {
        let by_id = |id: &str| dag.nodes().iter().find(|n| n.id == id).unwrap();
        let mut upstream = BTreeSet::new();
        let mut stack = vec![v.to_string()];
        while let Some(id) = stack.pop() {
            if upstream.insert(id.clone()) {
                stack.extend(by_id(&id).children.iter().cloned());
            }
        }
        let out = by_id(v).card * by_id(v).row_size;
        let mut scan_bytes = out;
        let mut migration = migration_cost(out, prices);
        for n in dag.nodes() {
            if !upstream.contains(&n.id) {
                if let Some(t) = &n.base_table {
                    scan_bytes += n.card * n.row_size;
                    migration += migration_cost(t.size, prices);
                }
            }
        }
        (per_byte_query_cost(scan_bytes, prices), migration)
    }

    #[test]
    fn five_node_costs_match_traversal() {
        let dag = five();
        let prices = PriceBook::default();
        for id in ["a", "b", "c", "j", "r"] {
            let c = cut_costs(&dag, id, &prices, true).unwrap();
            assert_eq!((c.scan, c.migration), traversal_oracle(&dag, id, &prices), "{id}");
        }
    }

    #[test]
    fn hand_evaluated_cut_at_join() {
        // Egress only, $10/TB; per-byte $6.25/TB.
        let prices = PriceBook {
            blob_per_gb_month: Money::ZERO,
            read_per_10k_ops: Money::ZERO,
            write_per_10k_ops: Money::ZERO,
            egress_per_tb: Money::dollars(10),
            ..PriceBook::default()
        };
        let dag = five();
        let c = cut_costs(&dag, "j", &prices, true).unwrap();
        // Downstream scans c (200 GB) plus j's 2 GB output: 202 GB.
        assert_eq!(c.scan, Money::from_micros(1_262_500));
        // Ships j's 2 GB ($0.02) and table c, 2 TB ($20).
        assert_eq!(c.migration, Money::from_micros(20_020_000));
        assert_eq!(c.downstream_tables, ["tbl_c"]);
        assert_eq!(c.shipped_bytes, 2 * TB + 2_000_000_000);
        assert_eq!(
            opportunity(&dag, "j", &prices, true).unwrap(),
            Money::dollars(50) - Money::from_micros(21_282_500)
        );
        let literal = cut_costs(&dag, "j", &prices, false).unwrap();
        assert_eq!(literal.scan, Money::from_micros(1_250_000));
    }

    #[test]
    fn downstream_terabyte_costs_at_least_a_scan() {
        let dag = five();
        let c = cut_costs(&dag, "j", &PriceBook::default(), true).unwrap();
        assert!(c.scan >= Money::from_micros(1_250_000));
        let c = cut_costs(&dag, "c", &PriceBook::default(), false).unwrap();
        // a alone is 1 TB scanned downstream.
        assert!(c.scan >= Money::from_micros(6_250_000));
    }

    #[test]
    fn root_and_shared_nodes_are_not_cuts() {
        let dag = five();
        assert!(!is_valid_cut(&dag, dag.root()));
        assert!((0..4).all(|v| is_valid_cut(&dag, v)));

        // s feeds both x and y; cutting at x would leave s with a consumer
        // outside x's upstream part.
        let shared = QueryDag::new(
            "shared".into(),
            Money::dollars(1),
            1.0,
            vec![
                node("s", 1, 1, &[], Some(1)),
                node("x", 1, 1, &["s"], None),
                node("y", 1, 1, &["s"], None),
                node("r", 1, 1, &["x", "y"], None),
            ],
        )
        .unwrap();
        assert!(!is_valid_cut(&shared, shared.node_idx("x").unwrap()));
        assert!(is_valid_cut(&shared, shared.node_idx("s").unwrap()));
    }

    #[test]
    fn unknown_node() {
        assert_eq!(
            cut_costs(&five(), "zz", &PriceBook::default(), true),
            Err(IntraError::NotFound("zz".into()))
        );
    }
}
