//! Exact placement via minimum s-t cut.
//!
//! The table/query graph becomes a flow network: source → table with the
//! table's migration cost, query → sink with the query's savings, and
//! table → query with unbounded capacity for each scan. The sink side of a
//! minimum cut is a placement maximizing savings minus migration cost.

use super::flow::MaxFlow;
use super::greedy::greedy_plan;
use super::{InterPlan, InterProblem, WARN_MINCUT_FALLBACK};

pub fn optimal_plan(problem: &InterProblem<'_>) -> InterPlan {
    let w = problem.workload;
    let n_tables = w.tables().len();
    let profitable: Vec<usize> = (0..w.queries().len()).filter(|&q| problem.profitable(q)).collect();

    let source = 0;
    let sink = 1 + n_tables + profitable.len();
    let finite: i64 = problem.mu.iter().map(|m| m.micros()).sum::<i64>()
        + profitable.iter().map(|&q| problem.sigma[q].micros()).sum::<i64>();
    let unbounded = finite + 1;

    let mut net = MaxFlow::new(sink + 1);
    for (t, mu) in problem.mu.iter().enumerate() {
        if mu.is_positive() {
            net.add_edge(source, 1 + t, mu.micros());
        }
    }
    for (slot, &q) in profitable.iter().enumerate() {
        let node = 1 + n_tables + slot;
        net.add_edge(node, sink, problem.sigma[q].micros());
        for &t in w.tables_of(q) {
            net.add_edge(1 + t, node, unbounded);
        }
    }
    let cut = net.max_flow(source, sink);
    let side = net.sink_side(sink);

    let queries: Vec<usize> = profitable
        .iter()
        .enumerate()
        .filter(|(slot, _)| side[1 + n_tables + slot])
        .map(|(_, &q)| q)
        .collect();
    let tables: Vec<usize> = (0..n_tables).filter(|&t| side[1 + t]).collect();
    let candidate = problem.evaluate(&tables, &queries);
    debug_assert_eq!(
        (w.baseline_cost() - candidate.cost.total).micros(),
        profitable.iter().map(|&q| problem.sigma[q].micros()).sum::<i64>() - cut
    );

    if problem.fits_deadline(candidate.runtime) {
        problem.finish(&candidate, Vec::new())
    } else {
        let mut plan = greedy_plan(problem);
        plan.warnings.insert(0, WARN_MINCUT_FALLBACK.to_string());
        plan
    }
}
