//! Bound-based pruning of the table/query graph.
//!
//! Two rules run to a fixpoint:
//! * a table whose best case `v_t = Σ σ_q − μ_t` is negative is pinned to the
//!   source together with every query scanning it;
//! * a query whose worst case `v_q = σ_q − Σ μ_t` is positive is forced into
//!   the destination together with its tables. Forced tables stop charging
//!   their migration cost to the other queries that scan them.
//!
//! Neither rule can undo the other, and each only ever makes its own rule
//! easier to fire again, so the fixpoint does not depend on the order in
//! which rules fire.

use crate::cost_model::PriceBook;
use crate::money::Money;
use crate::workload::WorkloadProfile;

use super::{InterProblem, PlanSettings, PlacementTotals};

/// Names left undecided, and names forced into the destination.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReduceOutcome {
    pub remaining_tables: Vec<String>,
    pub remaining_queries: Vec<String>,
    pub forced_tables: Vec<String>,
    pub forced_queries: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TableState {
    Active,
    Forced,
    Pinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum QueryState {
    Active,
    Forced,
    Dropped,
}

/// Mutable pruning state shared by the one-shot reduction and the greedy
/// search. Alongside the bounds it keeps exact totals for the placement it
/// implies, so recording a placement costs O(1).
pub(crate) struct ReduceState<'p, 'w> {
    problem: &'p InterProblem<'w>,
    pub tables: Vec<TableState>,
    pub queries: Vec<QueryState>,
    /// v_t, meaningful for active tables.
    pub table_bound: Vec<Money>,
    /// v_q, meaningful for active queries.
    pub query_bound: Vec<Money>,
    /// Non-dropped queries scanning each table.
    users: Vec<usize>,
    totals: PlacementTotals,
    pending_tables: Vec<usize>,
    pending_queries: Vec<usize>,
}

impl<'p, 'w> ReduceState<'p, 'w> {
    pub fn new(problem: &'p InterProblem<'w>) -> Self {
        let w = problem.workload;
        let n_tables = w.tables().len();
        let n_queries = w.queries().len();
        let mut queries = Vec::with_capacity(n_queries);
        let mut query_bound = Vec::with_capacity(n_queries);
        let mut table_bound: Vec<Money> = problem.mu.iter().map(|&mu| -mu).collect();
        let mut users = vec![0; n_tables];
        let mut totals = PlacementTotals::default();
        for q in 0..n_queries {
            let active = problem.profitable(q);
            let sigma = problem.sigma[q];
            let mut bound = sigma;
            if active {
                totals.add_query(problem, q);
            }
            for &t in w.tables_of(q) {
                bound -= problem.mu[t];
                if active {
                    table_bound[t] += sigma;
                    if users[t] == 0 {
                        totals.add_table(problem, t);
                    }
                    users[t] += 1;
                }
            }
            queries.push(if active { QueryState::Active } else { QueryState::Dropped });
            query_bound.push(bound);
        }
        ReduceState {
            problem,
            tables: vec![TableState::Active; n_tables],
            queries,
            table_bound,
            query_bound,
            users,
            totals,
            pending_tables: (0..n_tables).rev().collect(),
            pending_queries: (0..n_queries).rev().collect(),
        }
    }

    fn workload(&self) -> &'w WorkloadProfile {
        self.problem.workload
    }

    fn drop_query(&mut self, q: usize) {
        debug_assert_eq!(self.queries[q], QueryState::Active);
        self.queries[q] = QueryState::Dropped;
        let problem = self.problem;
        self.totals.remove_query(problem, q);
        let sigma = problem.sigma[q];
        for &t in problem.workload.tables_of(q) {
            self.users[t] -= 1;
            if self.users[t] == 0 {
                self.totals.remove_table(problem, t);
            }
            if self.tables[t] == TableState::Active {
                self.table_bound[t] -= sigma;
                self.pending_tables.push(t);
            }
        }
    }

    /// Keeps table `t` in the source, dropping every active query that
    /// needs it.
    pub fn pin(&mut self, t: usize) {
        debug_assert_eq!(self.tables[t], TableState::Active);
        self.tables[t] = TableState::Pinned;
        let w = self.workload();
        for &q in w.queries_of(t) {
            if self.queries[q] == QueryState::Active {
                self.drop_query(q);
            }
        }
    }

    fn force_query(&mut self, q: usize) {
        debug_assert_eq!(self.queries[q], QueryState::Active);
        self.queries[q] = QueryState::Forced;
        let w = self.workload();
        for &t in w.tables_of(q) {
            if self.tables[t] != TableState::Active {
                continue;
            }
            self.tables[t] = TableState::Forced;
            let mu = self.problem.mu[t];
            for &other in w.queries_of(t) {
                if self.queries[other] == QueryState::Active {
                    self.query_bound[other] += mu;
                    self.pending_queries.push(other);
                }
            }
        }
    }

    /// Applies both pruning rules until neither fires. Only elements whose
    /// bounds moved since the last check are re-examined.
    pub fn reduce(&mut self) {
        loop {
            if let Some(t) = self.pending_tables.pop() {
                if self.tables[t] == TableState::Active && self.table_bound[t].is_negative() {
                    self.pin(t);
                }
            } else if let Some(q) = self.pending_queries.pop() {
                if self.queries[q] == QueryState::Active && self.query_bound[q].is_positive() {
                    self.force_query(q);
                }
            } else {
                break;
            }
        }
    }

    pub fn active_tables(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tables.len()).filter(|&t| self.tables[t] == TableState::Active)
    }

    /// Totals of the implied placement: forced and still-active queries
    /// migrate along with the tables they scan.
    pub fn totals(&self) -> &PlacementTotals {
        &self.totals
    }

    /// The implied placement itself.
    pub fn placement(&self) -> (Vec<usize>, Vec<usize>) {
        let queries = (0..self.queries.len())
            .filter(|&q| self.queries[q] != QueryState::Dropped)
            .collect();
        let tables = (0..self.users.len()).filter(|&t| self.users[t] > 0).collect();
        (tables, queries)
    }

    pub fn outcome(&self) -> ReduceOutcome {
        let w = self.workload();
        let names_t = |state| {
            let mut v: Vec<String> = (0..self.tables.len())
                .filter(|&t| self.tables[t] == state)
                .map(|t| w.tables()[t].name.clone())
                .collect();
            v.sort();
            v
        };
        let names_q = |state| {
            let mut v: Vec<String> = (0..self.queries.len())
                .filter(|&q| self.queries[q] == state)
                .map(|q| w.queries()[q].id.clone())
                .collect();
            v.sort();
            v
        };
        ReduceOutcome {
            remaining_tables: names_t(TableState::Active),
            remaining_queries: names_q(QueryState::Active),
            forced_tables: names_t(TableState::Forced),
            forced_queries: names_q(QueryState::Forced),
        }
    }
}

/// One pass of bound pruning on the whole workload.
pub fn reduce_plan(
    workload: &WorkloadProfile,
    prices: &PriceBook,
    settings: PlanSettings,
) -> ReduceOutcome {
    let problem = InterProblem::new(workload, prices, settings);
    let mut state = ReduceState::new(&problem);
    state.reduce();
    state.outcome()
}
