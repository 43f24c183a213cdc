//! Operator DAGs of a single query.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::IntraError;
use crate::money::Money;
use crate::workload::{parse_bytes, TableRef, WorkloadError};

/// One operator. `children` are the operators it reads from.
#[derive(Debug, Clone, PartialEq)]
pub struct DagNode {
    pub id: String,
    pub op: String,
    /// Output cardinality in rows.
    pub card: u64,
    /// Bytes per output row.
    pub row_size: u64,
    pub children: Vec<String>,
    /// Set on leaves: the base table the leaf scans.
    pub base_table: Option<TableRef>,
    /// Recorded runtime of the subquery rooted here, in seconds.
    pub upstream_runtime: Option<f64>,
    /// Recorded runtime of what remains after a cut here, in seconds.
    pub downstream_runtime: Option<f64>,
}

impl DagNode {
    /// Bytes this operator emits.
    pub fn output_bytes(&self) -> u64 {
        self.card.saturating_mul(self.row_size)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A validated query plan: acyclic, a single root, every leaf bound to a base
/// table, and recorded upstream runtimes monotone along data flow.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDag {
    query_id: String,
    baseline_cost: Money,
    baseline_runtime: f64,
    nodes: Vec<DagNode>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    root: usize,
    /// `upstream[v][u]` is true when u feeds v, directly or transitively, or
    /// u == v.
    upstream: Vec<Vec<bool>>,
}

impl QueryDag {
    pub fn new(
        query_id: String,
        baseline_cost: Money,
        baseline_runtime: f64,
        nodes: Vec<DagNode>,
    ) -> Result<Self, IntraError> {
        if nodes.is_empty() {
            return Err(IntraError::Invalid("plan has no operators".into()));
        }
        if baseline_cost.is_negative() {
            return Err(IntraError::Invalid("baseline_cost_src is negative".into()));
        }
        if !baseline_runtime.is_finite() || baseline_runtime < 0.0 {
            return Err(IntraError::Invalid("baseline_runtime_src_s must be >= 0".into()));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(IntraError::Invalid(format!("duplicate node {:?}", n.id)));
            }
        }
        let mut children = Vec::with_capacity(nodes.len());
        let mut parents = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            let mut kids = Vec::with_capacity(n.children.len());
            for c in &n.children {
                let ci = *index.get(c).ok_or_else(|| {
                    IntraError::Invalid(format!("node {:?} reads unknown node {c:?}", n.id))
                })?;
                if kids.contains(&ci) {
                    return Err(IntraError::Invalid(format!("node {:?} lists {c:?} twice", n.id)));
                }
                kids.push(ci);
                parents[ci].push(i);
            }
            match (&n.base_table, n.is_leaf()) {
                (None, true) => {
                    return Err(IntraError::Invalid(format!("leaf {:?} has no base table", n.id)))
                }
                (Some(_), false) => {
                    return Err(IntraError::Invalid(format!(
                        "inner node {:?} carries a base table",
                        n.id
                    )))
                }
                _ => {}
            }
            for (field, value) in [("fr_s", n.upstream_runtime), ("downstream_runtime_s", n.downstream_runtime)] {
                if value.is_some_and(|v| !v.is_finite() || v < 0.0) {
                    return Err(IntraError::Invalid(format!("{field} of {:?} must be >= 0", n.id)));
                }
            }
            children.push(kids);
        }
        let roots: Vec<usize> = (0..nodes.len()).filter(|&i| parents[i].is_empty()).collect();
        let order = topological_order(&children).ok_or_else(|| IntraError::Invalid("plan has a cycle".into()))?;
        let root = match roots.as_slice() {
            [r] => *r,
            _ => {
                return Err(IntraError::Invalid(format!(
                    "plan must have exactly one root, found {}",
                    roots.len()
                )))
            }
        };

        let n = nodes.len();
        let mut upstream = vec![vec![false; n]; n];
        for &v in &order {
            upstream[v][v] = true;
            for &c in &children[v] {
                let from = upstream[c].clone();
                for (t, f) in upstream[v].iter_mut().zip(from) {
                    *t |= f;
                }
            }
        }

        let dag = QueryDag { query_id, baseline_cost, baseline_runtime, nodes, index, children, parents, root, upstream };
        dag.check_monotone()?;
        Ok(dag)
    }

    fn check_monotone(&self) -> Result<(), IntraError> {
        for v in 0..self.nodes.len() {
            let Some(fr_v) = self.nodes[v].upstream_runtime else { continue };
            for u in 0..self.nodes.len() {
                if u != v && self.upstream[v][u] {
                    if let Some(fr_u) = self.nodes[u].upstream_runtime {
                        if fr_u > fr_v {
                            return Err(IntraError::NonMonotoneRuntime {
                                upstream: self.nodes[u].id.clone(),
                                downstream: self.nodes[v].id.clone(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    /// Cost of running the whole query in the source backend.
    pub fn baseline_cost(&self) -> Money {
        self.baseline_cost
    }

    pub fn baseline_runtime(&self) -> f64 {
        self.baseline_runtime
    }

    pub fn nodes(&self) -> &[DagNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &DagNode {
        &self.nodes[i]
    }

    pub fn node_idx(&self, id: &str) -> Result<usize, IntraError> {
        self.index.get(id).copied().ok_or_else(|| IntraError::NotFound(id.to_string()))
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// True when `u` feeds `v` (or `u == v`).
    pub fn is_upstream(&self, u: usize, v: usize) -> bool {
        self.upstream[v][u]
    }

    /// True when every recorded upstream runtime is present.
    pub fn has_all_runtimes(&self) -> bool {
        self.nodes.iter().all(|n| n.upstream_runtime.is_some())
    }

    pub fn from_json(text: &str) -> Result<Self, IntraError> {
        let doc: QueryDagDoc =
            serde_json::from_str(text).map_err(|e| IntraError::Parse(e.to_string()))?;
        doc.into_dag()
    }

    pub fn to_doc(&self) -> QueryDagDoc {
        QueryDagDoc {
            query_id: self.query_id.clone(),
            baseline_cost_src: self.baseline_cost,
            baseline_runtime_src_s: self.baseline_runtime,
            nodes: self
                .nodes
                .iter()
                .map(|n| DagNodeDoc {
                    id: n.id.clone(),
                    op: n.op.clone(),
                    card: n.card.into(),
                    row_size_bytes: n.row_size.into(),
                    children: n.children.clone(),
                    base_table: n.base_table.as_ref().map(|t| BaseTableDoc {
                        name: t.name.clone(),
                        size_bytes: t.size.into(),
                    }),
                    fr_s: n.upstream_runtime,
                    downstream_runtime_s: n.downstream_runtime,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("dag serializes")
    }
}

fn topological_order(children: &[Vec<usize>]) -> Option<Vec<usize>> {
    // Children before parents.
    let n = children.len();
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut parents = vec![Vec::new(); n];
    for (v, kids) in children.iter().enumerate() {
        for &c in kids {
            parents[c].push(v);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &p in &parents[v] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(p);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDagDoc {
    pub query_id: String,
    pub baseline_cost_src: Money,
    pub baseline_runtime_src_s: f64,
    pub nodes: Vec<DagNodeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DagNodeDoc {
    pub id: String,
    pub op: String,
    pub card: serde_json::Number,
    pub row_size_bytes: serde_json::Number,
    #[serde(default)]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_table: Option<BaseTableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fr_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downstream_runtime_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseTableDoc {
    pub name: String,
    pub size_bytes: serde_json::Number,
}

impl QueryDagDoc {
    pub fn into_dag(self) -> Result<QueryDag, IntraError> {
        let invalid = |e: WorkloadError| IntraError::Invalid(e.to_string());
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in self.nodes {
            let card = parse_bytes(&n.card, "card", &n.id).map_err(invalid)?;
            let row_size = parse_bytes(&n.row_size_bytes, "row_size_bytes", &n.id).map_err(invalid)?;
            let base_table = match n.base_table {
                Some(t) => Some(TableRef {
                    size: parse_bytes(&t.size_bytes, "size_bytes", &t.name).map_err(invalid)?,
                    name: t.name,
                }),
                None => None,
            };
            nodes.push(DagNode {
                id: n.id,
                op: n.op,
                card,
                row_size,
                children: n.children,
                base_table,
                upstream_runtime: n.fr_s,
                downstream_runtime: n.downstream_runtime_s,
            });
        }
        QueryDag::new(self.query_id, self.baseline_cost_src, self.baseline_runtime_src_s, nodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: &str, card: u64) -> DagNode {
        DagNode {
            id: id.into(),
            op: "scan".into(),
            card,
            row_size: 10,
            children: vec![],
            base_table: Some(TableRef { name: id.into(), size: card * 10 }),
            upstream_runtime: None,
            downstream_runtime: None,
        }
    }

    fn inner(id: &str, children: &[&str]) -> DagNode {
        DagNode {
            id: id.into(),
            op: "join".into(),
            card: 5,
            row_size: 10,
            children: children.iter().map(|c| c.to_string()).collect(),
            base_table: None,
            upstream_runtime: None,
            downstream_runtime: None,
        }
    }

    fn build(nodes: Vec<DagNode>) -> Result<QueryDag, IntraError> {
        QueryDag::new("q".into(), Money::dollars(1), 1.0, nodes)
    }

    #[test]
    fn upstream_relation_is_transitive() {
        let dag = build(vec![leaf("a", 1), leaf("b", 1), inner("j", &["a", "b"]), inner("r", &["j"])]).unwrap();
        assert_eq!(dag.root(), 3);
        assert!(dag.is_upstream(0, 3));
        assert!(dag.is_upstream(2, 2));
        assert!(!dag.is_upstream(3, 0));
        assert!(!dag.is_upstream(0, 1));
    }

    #[test]
    fn rejects_structural_errors() {
        let invalid = |r: Result<QueryDag, IntraError>| matches!(r, Err(IntraError::Invalid(_)));
        assert!(invalid(build(vec![leaf("a", 1), leaf("b", 1)])));
        assert!(invalid(build(vec![leaf("a", 1), inner("x", &["a", "y"]), inner("y", &["x"]), inner("r", &["y"])])));
        assert!(invalid(build(vec![inner("r", &["ghost"])])));
        let mut bare = leaf("a", 1);
        bare.base_table = None;
        assert!(invalid(build(vec![bare, inner("r", &["a"])])));
        assert!(invalid(build(vec![leaf("a", 1), leaf("a", 2), inner("r", &["a"])])));
        assert!(invalid(build(vec![])));
    }

    #[test]
    fn rejects_runtime_shrinking_downstream() {
        let mut a = leaf("a", 1);
        a.upstream_runtime = Some(10.0);
        let mut j = inner("j", &["a"]);
        j.upstream_runtime = None;
        let mut r = inner("r", &["j"]);
        r.upstream_runtime = Some(5.0);
        assert_eq!(
            build(vec![a, j, r]),
            Err(IntraError::NonMonotoneRuntime { upstream: "a".into(), downstream: "r".into() })
        );
    }

    #[test]
    fn json_roundtrip() {
        let text = include_str!("../../tests/fixtures/q86_2tb.dag.json");
        let dag = QueryDag::from_json(text).unwrap();
        assert_eq!(dag.nodes().len(), 8);
        assert!(dag.has_all_runtimes());
        assert_eq!(QueryDag::from_json(&dag.to_json()).unwrap(), dag);
        assert!(matches!(QueryDag::from_json("[]"), Err(IntraError::Parse(_))));
    }
}
