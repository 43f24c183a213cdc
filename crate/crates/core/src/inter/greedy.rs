//! Bound-driven greedy search.
//!
//! After an initial reduction, the table with the smallest upper bound is
//! repeatedly pinned to the source and the graph re-reduced. Every
//! intermediate placement is recorded with its cost and runtime, and the
//! cheapest one that meets the deadline wins. The do-nothing baseline is
//! always among the recorded placements.

use super::reduce::ReduceState;
use super::{Candidate, InterPlan, InterProblem};

/// Which recorded placements keep their members.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Keep {
    /// Only placements that beat every earlier one within the deadline.
    Leaders,
    All,
}

/// Runs the search and returns every recorded placement in visiting order.
/// The final entry is always the baseline. Placements dropped by `keep`
/// carry cost and runtime but no members.
fn search(problem: &InterProblem<'_>, keep: Keep) -> Vec<Candidate> {
    let w = problem.workload;
    let baseline = w.baseline_cost();
    let mut state = ReduceState::new(problem);
    state.reduce();

    let mut steps: Vec<Candidate> = Vec::new();
    let mut leader: Option<usize> = None;
    let mut record = |state: &ReduceState<'_, '_>, steps: &mut Vec<Candidate>| {
        let totals = state.totals();
        let mut step = Candidate {
            tables: Vec::new(),
            queries: Vec::new(),
            cost: totals.cost(baseline),
            runtime: totals.runtime(problem),
        };
        let leads = problem.fits_deadline(step.runtime)
            && leader.is_none_or(|i| {
                let best: &Candidate = &steps[i];
                (step.cost.total, step.runtime) < (best.cost.total, best.runtime)
            });
        if leads {
            leader = Some(steps.len());
        }
        if leads || keep == Keep::All {
            (step.tables, step.queries) = state.placement();
        }
        steps.push(step);
    };

    record(&state, &mut steps);
    loop {
        // Minimum v_t; ties go to the lexicographically smallest name.
        let weakest = state.active_tables().min_by(|&a, &b| {
            state.table_bound[a]
                .cmp(&state.table_bound[b])
                .then_with(|| w.tables()[a].name.cmp(&w.tables()[b].name))
        });
        let Some(t) = weakest else { break };
        state.pin(t);
        state.reduce();
        record(&state, &mut steps);
    }
    if state.totals().tables > 0 || state.totals().queries > 0 {
        steps.push(problem.evaluate(&[], &[]));
    }
    steps
}

/// Cheapest recorded placement within the deadline.
pub fn greedy_plan(problem: &InterProblem<'_>) -> InterPlan {
    problem.select(&search(problem, Keep::Leaders))
}

/// All placements the greedy search considered, in visiting order, for
/// plotting the cost/runtime frontier.
pub fn greedy_trace(problem: &InterProblem<'_>) -> Vec<InterPlan> {
    search(problem, Keep::All)
        .iter()
        .map(|c| problem.finish(c, Vec::new()))
        .collect()
}
