//! Reference answer: price every usable cut with its recorded runtime.

use super::cut::{costs_at, is_valid_cut};
use super::planner::{fits, price_cut, CutPlan, IntraParams};
use super::{IntraError, QueryDag};
use crate::cost_model::PriceBook;

/// The cheapest usable cut within the deadline, or `None` when no cut beats
/// the baseline. Needs a recorded upstream runtime on every usable node.
pub fn exhaustive_cuts(
    dag: &QueryDag,
    prices: &PriceBook,
    params: &IntraParams,
) -> Result<Option<CutPlan>, IntraError> {
    let mut best: Option<CutPlan> = None;
    for v in 0..dag.nodes().len() {
        if !is_valid_cut(dag, v) {
            continue;
        }
        let node = dag.node(v);
        let fr = node.upstream_runtime.ok_or_else(|| IntraError::MissingRuntime(node.id.clone()))?;
        let costs = costs_at(dag, v, prices, params.scan_shipped_output);
        let plan = price_cut(dag, v, &costs, fr, prices, params);
        if !fits(params.deadline, plan.runtime_s) || !plan.savings.is_positive() {
            continue;
        }
        let better = best
            .as_ref()
            .is_none_or(|b| (plan.total, &plan.node) < (b.total, &b.node));
        if better {
            best = Some(plan);
        }
    }
    Ok(best)
}
