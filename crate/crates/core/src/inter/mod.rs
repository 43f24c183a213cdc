//! Inter-query placement: which tables and whole queries move to the
//! destination backend.
//!
//! Three solvers share one problem representation: the bound-driven greedy
//! search, an exact min-cut formulation, and an exhaustive subset oracle for
//! small instances.

mod brute;
mod flow;
mod greedy;
mod mincut;
mod reduce;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force_plan, BRUTE_FORCE_MAX_TABLES};
pub use flow::MaxFlow;
pub use greedy::{greedy_plan, greedy_trace};
pub use mincut::optimal_plan;
pub use reduce::{reduce_plan, ReduceOutcome};

use crate::cost_model::{migration_cost, query_savings, CostBreakdown, PriceBook};
use crate::money::Money;
use crate::workload::WorkloadProfile;

/// 1 Gbit/s.
pub const DEFAULT_BANDWIDTH_BYTES_PER_SEC: f64 = 125_000_000.0;

pub const WARN_BASELINE_OVER_DEADLINE: &str = "deadline exceeded by baseline";
pub const WARN_MINCUT_FALLBACK: &str = "min-cut plan violates deadline; fell back to greedy search";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("incoherent plan: {0}")]
    IncoherentPlan(String),
    #[error("instance too large for oracle: {tables} tables (limit {limit})")]
    TooLarge { tables: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSettings {
    /// Sustained cross-backend transfer rate used to time migrations.
    pub bandwidth_bytes_per_sec: f64,
}

impl Default for PlanSettings {
    fn default() -> Self {
        PlanSettings { bandwidth_bytes_per_sec: DEFAULT_BANDWIDTH_BYTES_PER_SEC }
    }
}

impl PlanSettings {
    pub fn with_bandwidth_gbps(gbps: f64) -> Self {
        PlanSettings { bandwidth_bytes_per_sec: gbps * 1e9 / 8.0 }
    }

    pub fn transfer_seconds(&self, bytes: u64) -> f64 {
        if bytes == 0 {
            0.0
        } else {
            bytes as f64 / self.bandwidth_bytes_per_sec
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanType {
    SourceOnly,
    DestOnly,
    Multi,
}

impl fmt::Display for PlanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanType::SourceOnly => "SOURCE_ONLY",
            PlanType::DestOnly => "DEST_ONLY",
            PlanType::Multi => "MULTI",
        })
    }
}

/// A placement decision and what it costs.
#[derive(Debug, Clone, PartialEq)]
pub struct InterPlan {
    pub migrate_tables: Vec<String>,
    pub migrate_queries: Vec<String>,
    pub cost: CostBreakdown,
    pub baseline_cost: Money,
    pub runtime: f64,
    pub baseline_runtime: f64,
    pub plan_type: PlanType,
    pub deadline: Option<f64>,
    pub deadline_met: bool,
    pub warnings: Vec<String>,
}

impl InterPlan {
    /// Net savings against running everything in the source.
    pub fn savings(&self) -> Money {
        self.baseline_cost - self.cost.total
    }

    pub fn savings_pct(&self) -> f64 {
        percent_change(self.baseline_cost.as_dollars_f64(), self.cost.total.as_dollars_f64())
    }

    /// Positive when the plan finishes sooner than the baseline.
    pub fn speedup_pct(&self) -> f64 {
        percent_change(self.baseline_runtime, self.runtime)
    }

    pub fn to_doc(&self) -> PlanDoc {
        PlanDoc {
            plan_type: self.plan_type,
            migrate_tables: self.migrate_tables.clone(),
            migrate_queries: self.migrate_queries.clone(),
            cost: self.cost,
            baseline_total: self.baseline_cost,
            savings_pct: self.savings_pct(),
            runtime_s: self.runtime,
            baseline_runtime_s: self.baseline_runtime,
            deadline_met: self.deadline_met,
        }
    }
}

/// `100 · (baseline − value) / baseline`, zero when the baseline is zero.
pub fn percent_change(baseline: f64, value: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - value) / baseline
    }
}

/// Wire form of an [`InterPlan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub plan_type: PlanType,
    pub migrate_tables: Vec<String>,
    pub migrate_queries: Vec<String>,
    pub cost: CostBreakdown,
    pub baseline_total: Money,
    pub savings_pct: f64,
    pub runtime_s: f64,
    pub baseline_runtime_s: f64,
    pub deadline_met: bool,
}

/// Which engine places the workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    #[default]
    Greedy,
    MinCut,
    BruteForce,
}

impl Solver {
    pub fn solve(self, problem: &InterProblem<'_>) -> Result<InterPlan, PlanError> {
        match self {
            Solver::Greedy => Ok(greedy_plan(problem)),
            Solver::MinCut => Ok(optimal_plan(problem)),
            Solver::BruteForce => brute_force_plan(problem),
        }
    }
}

/// v_t for a table or v_q for a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundValue {
    pub subject: String,
    pub value: Money,
}

/// A workload priced against one price book: per-query savings σ and
/// per-table migration cost μ, plus the runtime model settings.
#[derive(Debug, Clone)]
pub struct InterProblem<'a> {
    pub workload: &'a WorkloadProfile,
    pub sigma: Vec<Money>,
    pub mu: Vec<Money>,
    pub settings: PlanSettings,
    pub deadline: Option<f64>,
    /// Per-query runtimes in integer nanoseconds, so lane sums are exact and
    /// independent of summation order.
    pub(crate) src_nanos: Vec<u128>,
    pub(crate) dest_nanos: Vec<u128>,
    pub(crate) total_src_nanos: u128,
}

fn nanos(seconds: f64) -> u128 {
    (seconds * 1e9).round() as u128
}

impl<'a> InterProblem<'a> {
    pub fn new(workload: &'a WorkloadProfile, prices: &PriceBook, settings: PlanSettings) -> Self {
        let sigma = workload
            .queries()
            .iter()
            .map(|q| query_savings(q.cost_dest, q.cost_src))
            .collect();
        let mu = workload.tables().iter().map(|t| migration_cost(t.size, prices)).collect();
        let src_nanos: Vec<u128> = workload.queries().iter().map(|q| nanos(q.runtime_src)).collect();
        let dest_nanos = workload.queries().iter().map(|q| nanos(q.runtime_dest)).collect();
        let total_src_nanos = src_nanos.iter().sum();
        InterProblem {
            workload,
            sigma,
            mu,
            settings,
            deadline: workload.deadline(),
            src_nanos,
            dest_nanos,
            total_src_nanos,
        }
    }

    pub fn with_deadline(mut self, deadline: Option<f64>) -> Self {
        self.deadline = deadline;
        self
    }

    /// Queries that can ever be worth migrating (σ > 0).
    pub(crate) fn profitable(&self, qi: usize) -> bool {
        self.sigma[qi].is_positive()
    }

    /// Upper bounds v_t and lower bounds v_q on the full graph, counting only
    /// queries with σ > 0.
    pub fn bounds(&self) -> (Vec<BoundValue>, Vec<BoundValue>) {
        let w = self.workload;
        let tables = (0..w.tables().len())
            .map(|t| BoundValue {
                subject: w.tables()[t].name.clone(),
                value: w
                    .queries_of(t)
                    .iter()
                    .filter(|&&q| self.profitable(q))
                    .map(|&q| self.sigma[q])
                    .sum::<Money>()
                    - self.mu[t],
            })
            .collect();
        let queries = (0..w.queries().len())
            .filter(|&q| self.profitable(q))
            .map(|q| BoundValue {
                subject: w.queries()[q].id.clone(),
                value: self.sigma[q] - w.tables_of(q).iter().map(|&t| self.mu[t]).sum::<Money>(),
            })
            .collect();
        (tables, queries)
    }

    /// Cost and runtime of migrating exactly these tables and queries.
    pub(crate) fn evaluate(&self, tables: &[usize], queries: &[usize]) -> Candidate {
        let w = self.workload;
        let mut totals = PlacementTotals::default();
        for &t in tables {
            totals.add_table(self, t);
        }
        for &q in queries {
            totals.add_query(self, q);
        }
        Candidate {
            tables: tables.to_vec(),
            queries: queries.to_vec(),
            cost: totals.cost(w.baseline_cost()),
            runtime: totals.runtime(self),
        }
    }

    /// Runtime with nothing migrated.
    pub fn baseline_runtime(&self) -> f64 {
        self.total_src_nanos as f64 / 1e9
    }

    pub(crate) fn fits_deadline(&self, runtime: f64) -> bool {
        self.deadline.is_none_or(|d| runtime <= d)
    }

    /// Index of the cheapest candidate within the deadline. Ties go to the
    /// faster plan, then to the earlier candidate.
    pub(crate) fn select_index(&self, candidates: &[Candidate]) -> Option<usize> {
        candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| self.fits_deadline(c.runtime))
            .min_by(|(ia, a), (ib, b)| {
                a.cost
                    .total
                    .cmp(&b.cost.total)
                    .then(a.runtime.total_cmp(&b.runtime))
                    .then(ia.cmp(ib))
            })
            .map(|(i, _)| i)
    }

    /// Plan for the selected candidate, or the baseline, flagged, when
    /// nothing fits.
    pub(crate) fn select(&self, candidates: &[Candidate]) -> InterPlan {
        match self.select_index(candidates) {
            Some(i) => self.finish(&candidates[i], Vec::new()),
            None => {
                let baseline = self.evaluate(&[], &[]);
                self.finish(&baseline, vec![WARN_BASELINE_OVER_DEADLINE.to_string()])
            }
        }
    }

    pub(crate) fn finish(&self, c: &Candidate, warnings: Vec<String>) -> InterPlan {
        let w = self.workload;
        let mut migrate_tables: Vec<String> =
            c.tables.iter().map(|&t| w.tables()[t].name.clone()).collect();
        let mut migrate_queries: Vec<String> =
            c.queries.iter().map(|&q| w.queries()[q].id.clone()).collect();
        migrate_tables.sort();
        migrate_queries.sort();
        InterPlan {
            plan_type: classify(w, &c.tables, &c.queries),
            migrate_tables,
            migrate_queries,
            cost: c.cost,
            baseline_cost: w.baseline_cost(),
            runtime: c.runtime,
            baseline_runtime: self.baseline_runtime(),
            deadline: self.deadline,
            deadline_met: self.fits_deadline(c.runtime),
            warnings,
        }
    }
}

/// Running sums over a placement; every field is exact, so adding and
/// removing members in any order yields the same totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct PlacementTotals {
    pub tables: usize,
    pub queries: usize,
    pub migration: Money,
    pub moved_dest: Money,
    pub moved_src: Money,
    pub bytes: u64,
    pub moved_src_nanos: u128,
    pub dest_nanos: u128,
}

impl PlacementTotals {
    pub fn add_table(&mut self, p: &InterProblem<'_>, t: usize) {
        self.tables += 1;
        self.migration += p.mu[t];
        self.bytes += p.workload.tables()[t].size;
    }

    pub fn remove_table(&mut self, p: &InterProblem<'_>, t: usize) {
        self.tables -= 1;
        self.migration -= p.mu[t];
        self.bytes -= p.workload.tables()[t].size;
    }

    pub fn add_query(&mut self, p: &InterProblem<'_>, q: usize) {
        let query = &p.workload.queries()[q];
        self.queries += 1;
        self.moved_dest += query.cost_dest;
        self.moved_src += query.cost_src;
        self.moved_src_nanos += p.src_nanos[q];
        self.dest_nanos += p.dest_nanos[q];
    }

    pub fn remove_query(&mut self, p: &InterProblem<'_>, q: usize) {
        let query = &p.workload.queries()[q];
        self.queries -= 1;
        self.moved_dest -= query.cost_dest;
        self.moved_src -= query.cost_src;
        self.moved_src_nanos -= p.src_nanos[q];
        self.dest_nanos -= p.dest_nanos[q];
    }

    pub fn cost(&self, baseline: Money) -> CostBreakdown {
        CostBreakdown::new(self.migration, self.moved_dest, baseline - self.moved_src)
    }

    /// The source lane runs what stays behind; the destination lane waits
    /// for the transfer, then runs what moved.
    pub fn runtime(&self, p: &InterProblem<'_>) -> f64 {
        let src_lane = (p.total_src_nanos - self.moved_src_nanos) as f64 / 1e9;
        let dest_lane = if self.tables == 0 && self.queries == 0 {
            0.0
        } else {
            p.settings.transfer_seconds(self.bytes) + self.dest_nanos as f64 / 1e9
        };
        src_lane.max(dest_lane)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Candidate {
    pub tables: Vec<usize>,
    pub queries: Vec<usize>,
    pub cost: CostBreakdown,
    pub runtime: f64,
}

fn classify(w: &WorkloadProfile, tables: &[usize], queries: &[usize]) -> PlanType {
    if tables.is_empty() {
        return PlanType::SourceOnly;
    }
    let scanned = (0..w.tables().len()).filter(|&t| !w.queries_of(t).is_empty()).count();
    let all_scanned_tables = tables.len() == scanned
        && tables.iter().all(|&t| !w.queries_of(t).is_empty());
    if all_scanned_tables && queries.len() == w.queries().len() {
        PlanType::DestOnly
    } else {
        PlanType::Multi
    }
}

/// Cost breakdown and runtime of an explicit placement.
pub fn plan_cost_runtime(
    workload: &WorkloadProfile,
    prices: &PriceBook,
    settings: PlanSettings,
    migrate_tables: &[&str],
    migrate_queries: &[&str],
) -> Result<(CostBreakdown, f64), PlanError> {
    let problem = InterProblem::new(workload, prices, settings);
    let mut tables = BTreeSet::new();
    for name in migrate_tables {
        let t = workload
            .table_idx(name)
            .ok_or_else(|| PlanError::IncoherentPlan(format!("unknown table {name:?}")))?;
        tables.insert(t);
    }
    let mut queries = BTreeSet::new();
    for id in migrate_queries {
        let q = workload
            .query_idx(id)
            .ok_or_else(|| PlanError::IncoherentPlan(format!("unknown query {id:?}")))?;
        if let Some(&t) = workload.tables_of(q).iter().find(|t| !tables.contains(t)) {
            return Err(PlanError::IncoherentPlan(format!(
                "query {id:?} migrates without its table {:?}",
                workload.tables()[t].name
            )));
        }
        queries.insert(q);
    }
    let tables: Vec<usize> = tables.into_iter().collect();
    let queries: Vec<usize> = queries.into_iter().collect();
    let c = problem.evaluate(&tables, &queries);
    Ok((c.cost, c.runtime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{BackendKind, QueryProfile, TableRef};

    fn two_query() -> WorkloadProfile {
        let q = |id: &str, src: i64, dest: i64, rs: f64, rd: f64, t: &str| QueryProfile {
            id: id.into(),
            cost_src: Money::dollars(src),
            cost_dest: Money::dollars(dest),
            runtime_src: rs,
            runtime_dest: rd,
            scans: [t.to_string()].into(),
        };
        WorkloadProfile::new(
            vec![
                TableRef { name: "a".into(), size: 250_000_000_000 },
                TableRef { name: "b".into(), size: 500_000_000_000 },
            ],
            vec![q("qa", 10, 2, 1000.0, 300.0, "a"), q("qb", 20, 4, 3000.0, 100.0, "b")],
            BackendKind::PerByte,
            None,
        )
        .unwrap()
    }

    fn egress_only(per_tb: i64) -> PriceBook {
        PriceBook {
            blob_per_gb_month: Money::ZERO,
            read_per_10k_ops: Money::ZERO,
            write_per_10k_ops: Money::ZERO,
            egress_per_tb: Money::dollars(per_tb),
            ..PriceBook::default()
        }
    }

    #[test]
    fn nothing_migrated_is_baseline() {
        let w = two_query();
        let (cost, runtime) =
            plan_cost_runtime(&w, &egress_only(8), PlanSettings::default(), &[], &[]).unwrap();
        assert_eq!(cost, CostBreakdown::new(Money::ZERO, Money::ZERO, Money::dollars(30)));
        assert_eq!(runtime, 4000.0);
    }

    #[test]
    fn runtime_is_max_of_two_lanes() {
        // 1 Gbit/s = 125 MB/s: table a (250 GB) moves in 2000 s.
        let w = two_query();
        let (cost, runtime) =
            plan_cost_runtime(&w, &egress_only(8), PlanSettings::default(), &["a"], &["qa"])
                .unwrap();
        assert_eq!(cost.migration, Money::dollars(2));
        assert_eq!(cost.moved_queries, Money::dollars(2));
        assert_eq!(cost.remaining_queries, Money::dollars(20));
        // src lane: 3000 s; dest lane: 2000 + 300 = 2300 s.
        assert_eq!(runtime, 3000.0);

        let (_, runtime) =
            plan_cost_runtime(&w, &egress_only(8), PlanSettings::default(), &["b"], &["qb"])
                .unwrap();
        // src lane: 1000 s; dest lane: 4000 + 100 s.
        assert_eq!(runtime, 4100.0);
    }

    #[test]
    fn rejects_query_without_its_table() {
        let w = two_query();
        let err = plan_cost_runtime(&w, &egress_only(8), PlanSettings::default(), &["a"], &["qb"]);
        assert!(matches!(err, Err(PlanError::IncoherentPlan(_))));
    }

    #[test]
    fn bandwidth_conversion() {
        let s = PlanSettings::with_bandwidth_gbps(1.0);
        assert_eq!(s.bandwidth_bytes_per_sec, DEFAULT_BANDWIDTH_BYTES_PER_SEC);
        assert_eq!(s.transfer_seconds(0), 0.0);
        assert_eq!(s.transfer_seconds(250_000_000), 2.0);
    }

    #[test]
    fn percent_helpers() {
        assert_eq!(percent_change(200.0, 150.0), 25.0);
        assert_eq!(percent_change(0.0, 5.0), 0.0);
        assert_eq!(percent_change(100.0, 120.0), -20.0);
    }
}
