//! Profiled workloads and their table/query bipartite structure.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::money::Money;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorkloadError {
    #[error("malformed workload document: {0}")]
    Parse(String),
    #[error("dangling edge: query {query:?} scans undeclared table {table:?}")]
    DanglingEdge { query: String, table: String },
    #[error("duplicate identifier {0:?}")]
    DuplicateIdentifier(String),
    #[error("negative measurement: {field} of {id:?}")]
    NegativeMeasurement { field: &'static str, id: String },
    #[error("query {0:?} scans no tables")]
    EmptyScans(String),
    #[error("not found: {0:?}")]
    NotFound(String),
}

/// Pricing model of the backend the data starts in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BackendKind {
    PerByte,
    PerCompute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRef {
    pub name: String,
    pub size: u64,
}

/// Measured cost and runtime of one query in both backends.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryProfile {
    pub id: String,
    pub cost_src: Money,
    pub cost_dest: Money,
    pub runtime_src: f64,
    pub runtime_dest: f64,
    pub scans: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Table,
    Query,
}

/// A validated workload: every scan edge resolves, identifiers are unique,
/// and all measurements are non-negative. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    tables: Vec<TableRef>,
    queries: Vec<QueryProfile>,
    source_backend: BackendKind,
    deadline: Option<f64>,
    table_index: HashMap<String, usize>,
    query_index: HashMap<String, usize>,
    /// N⁻¹(q): table indices per query, ascending.
    query_tables: Vec<Vec<usize>>,
    /// N(t): query indices per table, ascending.
    table_queries: Vec<Vec<usize>>,
}

impl WorkloadProfile {
    pub fn new(
        tables: Vec<TableRef>,
        queries: Vec<QueryProfile>,
        source_backend: BackendKind,
        deadline: Option<f64>,
    ) -> Result<Self, WorkloadError> {
        let mut table_index = HashMap::with_capacity(tables.len());
        for (i, t) in tables.iter().enumerate() {
            if table_index.insert(t.name.clone(), i).is_some() {
                return Err(WorkloadError::DuplicateIdentifier(t.name.clone()));
            }
        }
        let mut query_index = HashMap::with_capacity(queries.len());
        let mut query_tables = Vec::with_capacity(queries.len());
        let mut table_queries = vec![Vec::new(); tables.len()];
        for (qi, q) in queries.iter().enumerate() {
            if query_index.insert(q.id.clone(), qi).is_some() {
                return Err(WorkloadError::DuplicateIdentifier(q.id.clone()));
            }
            let negative = |field| WorkloadError::NegativeMeasurement { field, id: q.id.clone() };
            if q.cost_src.is_negative() {
                return Err(negative("cost_src"));
            }
            if q.cost_dest.is_negative() {
                return Err(negative("cost_dest"));
            }
            if !q.runtime_src.is_finite() || q.runtime_src < 0.0 {
                return Err(negative("runtime_src_s"));
            }
            if !q.runtime_dest.is_finite() || q.runtime_dest < 0.0 {
                return Err(negative("runtime_dest_s"));
            }
            if q.scans.is_empty() {
                return Err(WorkloadError::EmptyScans(q.id.clone()));
            }
            let mut idx = Vec::with_capacity(q.scans.len());
            for name in &q.scans {
                let ti = *table_index.get(name).ok_or_else(|| WorkloadError::DanglingEdge {
                    query: q.id.clone(),
                    table: name.clone(),
                })?;
                idx.push(ti);
                table_queries[ti].push(qi);
            }
            idx.sort_unstable();
            query_tables.push(idx);
        }
        if let Some(d) = deadline {
            if d.is_nan() || d < 0.0 {
                return Err(WorkloadError::NegativeMeasurement {
                    field: "deadline_seconds",
                    id: String::new(),
                });
            }
        }
        Ok(WorkloadProfile {
            tables,
            queries,
            source_backend,
            deadline,
            table_index,
            query_index,
            query_tables,
            table_queries,
        })
    }

    pub fn tables(&self) -> &[TableRef] {
        &self.tables
    }

    pub fn queries(&self) -> &[QueryProfile] {
        &self.queries
    }

    pub fn source_backend(&self) -> BackendKind {
        self.source_backend
    }

    /// Runtime constraint in seconds; `None` means unconstrained.
    pub fn deadline(&self) -> Option<f64> {
        self.deadline
    }

    pub fn with_deadline(mut self, deadline: Option<f64>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn table_idx(&self, name: &str) -> Option<usize> {
        self.table_index.get(name).copied()
    }

    pub fn query_idx(&self, id: &str) -> Option<usize> {
        self.query_index.get(id).copied()
    }

    /// Tables scanned by query `qi`, by index.
    pub fn tables_of(&self, qi: usize) -> &[usize] {
        &self.query_tables[qi]
    }

    /// Queries scanning table `ti`, by index.
    pub fn queries_of(&self, ti: usize) -> &[usize] {
        &self.table_queries[ti]
    }

    pub fn edge_count(&self) -> usize {
        self.query_tables.iter().map(Vec::len).sum()
    }

    /// N(t) for a table, N⁻¹(q) for a query.
    pub fn neighbors(&self, side: Side, id: &str) -> Result<BTreeSet<&str>, WorkloadError> {
        let not_found = || WorkloadError::NotFound(id.to_string());
        Ok(match side {
            Side::Table => {
                let ti = self.table_idx(id).ok_or_else(not_found)?;
                self.table_queries[ti].iter().map(|&q| self.queries[q].id.as_str()).collect()
            }
            Side::Query => {
                let qi = self.query_idx(id).ok_or_else(not_found)?;
                self.query_tables[qi].iter().map(|&t| self.tables[t].name.as_str()).collect()
            }
        })
    }

    pub fn baseline_cost(&self) -> Money {
        self.queries.iter().map(|q| q.cost_src).sum()
    }

    pub fn baseline_runtime(&self) -> f64 {
        self.queries.iter().map(|q| q.runtime_src).sum()
    }

    pub fn from_json(text: &str) -> Result<Self, WorkloadError> {
        let doc: WorkloadDoc =
            serde_json::from_str(text).map_err(|e| WorkloadError::Parse(e.to_string()))?;
        doc.into_profile()
    }

    pub fn to_doc(&self) -> WorkloadDoc {
        WorkloadDoc {
            source_backend: self.source_backend,
            deadline_seconds: self.deadline,
            tables: self
                .tables
                .iter()
                .map(|t| TableDoc { name: t.name.clone(), size_bytes: t.size.into() })
                .collect(),
            queries: self
                .queries
                .iter()
                .map(|q| QueryDoc {
                    id: q.id.clone(),
                    cost_src: q.cost_src.to_string(),
                    cost_dest: q.cost_dest.to_string(),
                    runtime_src_s: q.runtime_src,
                    runtime_dest_s: q.runtime_dest,
                    scans: q.scans.iter().cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("workload serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadDoc {
    pub source_backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_seconds: Option<f64>,
    pub tables: Vec<TableDoc>,
    pub queries: Vec<QueryDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDoc {
    pub name: String,
    pub size_bytes: serde_json::Number,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDoc {
    pub id: String,
    pub cost_src: String,
    pub cost_dest: String,
    pub runtime_src_s: f64,
    pub runtime_dest_s: f64,
    pub scans: Vec<String>,
}

/// Reads a non-negative integral byte count that may have been written as
/// an integer or an integral float.
pub(crate) fn parse_bytes(
    n: &serde_json::Number,
    field: &'static str,
    id: &str,
) -> Result<u64, WorkloadError> {
    if let Some(u) = n.as_u64() {
        return Ok(u);
    }
    let negative = || WorkloadError::NegativeMeasurement { field, id: id.to_string() };
    if n.as_i64().is_some() {
        return Err(negative());
    }
    match n.as_f64() {
        Some(f) if f < 0.0 => Err(negative()),
        Some(f) if f.fract() == 0.0 && f <= u64::MAX as f64 => Ok(f as u64),
        _ => Err(WorkloadError::Parse(format!("{field} of {id:?} must be a whole number of bytes"))),
    }
}

fn parse_cost(text: &str, field: &'static str, id: &str) -> Result<Money, WorkloadError> {
    let m: Money = text
        .parse()
        .map_err(|_| WorkloadError::Parse(format!("{field} of {id:?}: bad dollar amount {text:?}")))?;
    if m.is_negative() {
        return Err(WorkloadError::NegativeMeasurement { field, id: id.to_string() });
    }
    Ok(m)
}

impl WorkloadDoc {
    pub fn into_profile(self) -> Result<WorkloadProfile, WorkloadError> {
        let tables = self
            .tables
            .into_iter()
            .map(|t| {
                let size = parse_bytes(&t.size_bytes, "size_bytes", &t.name)?;
                Ok(TableRef { name: t.name, size })
            })
            .collect::<Result<Vec<_>, WorkloadError>>()?;
        let queries = self
            .queries
            .into_iter()
            .map(|q| {
                Ok(QueryProfile {
                    cost_src: parse_cost(&q.cost_src, "cost_src", &q.id)?,
                    cost_dest: parse_cost(&q.cost_dest, "cost_dest", &q.id)?,
                    runtime_src: q.runtime_src_s,
                    runtime_dest: q.runtime_dest_s,
                    scans: q.scans.into_iter().collect(),
                    id: q.id,
                })
            })
            .collect::<Result<Vec<_>, WorkloadError>>()?;
        WorkloadProfile::new(tables, queries, self.source_backend, self.deadline_seconds)
    }
}
