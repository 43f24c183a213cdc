//! Opportunity-guided cut search.
//!
//! Every node starts with an opportunity: the baseline cost minus the cut's
//! migration and scan costs. Upstream runtimes are expensive to obtain, so
//! candidates are visited from the largest opportunity down, and each
//! measurement prunes others:
//! * a candidate whose opportunity is below savings already achieved within
//!   the deadline cannot win;
//! * a candidate downstream of a measured node runs at least as long, so its
//!   opportunity shrinks by the measured node's compute cost.

use serde::Serialize;

use super::cut::{costs_at, is_valid_cut, CutCosts};
use super::{IntraError, QueryDag, RuntimeOracle, WARN_DOWNSTREAM_UNMODELED};
use crate::cost_model::{per_compute_query_cost, PriceBook};
use crate::inter::PlanSettings;
use crate::money::Money;

#[derive(Debug, Clone, PartialEq)]
pub struct IntraParams {
    pub deadline: Option<f64>,
    /// Cap on runtime measurements; `None` means one per node.
    pub max_iters: Option<usize>,
    pub transfer: PlanSettings,
    /// Charge the downstream part for reading the shipped intermediate.
    pub scan_shipped_output: bool,
}

impl Default for IntraParams {
    fn default() -> Self {
        IntraParams { deadline: None, max_iters: None, transfer: PlanSettings::default(), scan_shipped_output: true }
    }
}

/// One measured candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutEvaluation {
    pub node: String,
    /// Opportunity when the candidate was picked.
    pub opportunity: Money,
    pub fr_evaluated: bool,
    pub upstream_runtime_s: Option<f64>,
    pub actual_savings: Option<Money>,
    pub runtime_s: Option<f64>,
    pub feasible: bool,
}

/// A fully priced cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutPlan {
    pub node: String,
    pub upstream_cost: Money,
    pub migration_cost: Money,
    pub scan_cost: Money,
    pub total: Money,
    pub savings: Money,
    pub upstream_runtime_s: f64,
    pub runtime_s: f64,
    pub downstream_runtime_modeled: bool,
    pub migrated_tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntraPlan {
    pub query_id: String,
    pub baseline_cost: Money,
    /// `None` keeps the whole query in the source backend.
    pub cut: Option<CutPlan>,
    pub plan_cost: Money,
    pub evaluations: Vec<CutEvaluation>,
    /// Compute spent measuring upstream runtimes.
    pub search_cost: Money,
    pub warnings: Vec<String>,
}

impl IntraPlan {
    pub fn fr_evaluations(&self) -> usize {
        self.evaluations.iter().filter(|e| e.fr_evaluated).count()
    }
}

pub(crate) fn price_cut(
    dag: &QueryDag,
    v: usize,
    costs: &CutCosts,
    upstream_runtime: f64,
    prices: &PriceBook,
    params: &IntraParams,
) -> CutPlan {
    let node = dag.node(v);
    let upstream_cost = per_compute_query_cost(upstream_runtime, prices);
    let total = upstream_cost + costs.migration + costs.scan;
    let runtime_s = upstream_runtime
        + params.transfer.transfer_seconds(costs.shipped_bytes)
        + node.downstream_runtime.unwrap_or(0.0);
    CutPlan {
        node: node.id.clone(),
        upstream_cost,
        migration_cost: costs.migration,
        scan_cost: costs.scan,
        total,
        savings: dag.baseline_cost() - total,
        upstream_runtime_s: upstream_runtime,
        runtime_s,
        downstream_runtime_modeled: node.downstream_runtime.is_some(),
        migrated_tables: costs.downstream_tables.clone(),
    }
}

pub(crate) fn fits(deadline: Option<f64>, runtime: f64) -> bool {
    deadline.is_none_or(|d| runtime <= d)
}

/// Searches for the cheapest single cut, measuring at most
/// `params.max_iters` upstream runtimes through `oracle`. Never returns a
/// plan costlier than the baseline.
pub fn intra_plan(
    dag: &QueryDag,
    prices: &PriceBook,
    params: &IntraParams,
    oracle: &mut dyn RuntimeOracle,
) -> Result<IntraPlan, IntraError> {
    let n = dag.nodes().len();
    let cap = params.max_iters.unwrap_or(n);
    if cap == 0 {
        return Err(IntraError::ZeroIterations);
    }
    let costs: Vec<CutCosts> =
        (0..n).map(|v| costs_at(dag, v, prices, params.scan_shipped_output)).collect();
    let initial: Vec<Money> =
        costs.iter().map(|c| dag.baseline_cost() - (c.migration + c.scan)).collect();
    let mut current = initial.clone();
    let mut candidate: Vec<bool> =
        (0..n).map(|v| is_valid_cut(dag, v) && initial[v].is_positive()).collect();
    let mut floor_runtime = vec![0.0f64; n];
    let mut measured: Vec<Option<f64>> = vec![None; n];

    let mut evaluations = Vec::new();
    let mut priced: Vec<CutPlan> = Vec::new();
    let mut search_cost = Money::ZERO;
    let mut unmodeled = false;

    while evaluations.len() < cap {
        let pick = (0..n).filter(|&v| candidate[v]).max_by(|&a, &b| {
            current[a].cmp(&current[b]).then_with(|| dag.node(b).id.cmp(&dag.node(a).id))
        });
        let Some(u) = pick else { break };
        candidate[u] = false;

        let fr = oracle.upstream_runtime(dag.node(u))?;
        check_against_measured(dag, u, fr, &measured)?;
        measured[u] = Some(fr);

        let plan = price_cut(dag, u, &costs[u], fr, prices, params);
        search_cost += plan.upstream_cost;
        let actual = initial[u] - plan.upstream_cost;
        let feasible = fits(params.deadline, plan.runtime_s);
        unmodeled |= !plan.downstream_runtime_modeled;
        evaluations.push(CutEvaluation {
            node: plan.node.clone(),
            opportunity: current[u],
            fr_evaluated: true,
            upstream_runtime_s: Some(fr),
            actual_savings: Some(actual),
            runtime_s: Some(plan.runtime_s),
            feasible,
        });

        for v in 0..n {
            if !candidate[v] {
                continue;
            }
            if feasible && current[v] < actual {
                candidate[v] = false;
                continue;
            }
            if dag.is_upstream(u, v) && fr > floor_runtime[v] {
                floor_runtime[v] = fr;
                current[v] = initial[v] - per_compute_query_cost(fr, prices);
                if current[v].is_negative() {
                    candidate[v] = false;
                }
            }
        }
        if feasible {
            priced.push(plan);
        }
    }

    let best = priced
        .into_iter()
        .filter(|p| p.savings.is_positive())
        .min_by(|a, b| a.total.cmp(&b.total).then_with(|| a.node.cmp(&b.node)));
    let mut warnings = Vec::new();
    if unmodeled {
        warnings.push(WARN_DOWNSTREAM_UNMODELED.to_string());
    }
    Ok(IntraPlan {
        query_id: dag.query_id().to_string(),
        baseline_cost: dag.baseline_cost(),
        plan_cost: best.as_ref().map_or(dag.baseline_cost(), |p| p.total),
        cut: best,
        evaluations,
        search_cost,
        warnings,
    })
}

/// Rejects a measurement that contradicts an earlier one: data flow can only
/// add runtime.
fn check_against_measured(
    dag: &QueryDag,
    u: usize,
    fr: f64,
    measured: &[Option<f64>],
) -> Result<(), IntraError> {
    for (w, m) in measured.iter().enumerate() {
        let Some(m) = *m else { continue };
        if dag.is_upstream(w, u) && m > fr {
            return Err(IntraError::NonMonotoneRuntime {
                upstream: dag.node(w).id.clone(),
                downstream: dag.node(u).id.clone(),
            });
        }
        if dag.is_upstream(u, w) && fr > m {
            return Err(IntraError::NonMonotoneRuntime {
                upstream: dag.node(u).id.clone(),
                downstream: dag.node(w).id.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intra::{exhaustive_cuts, DagNode, PromptedRuntimes, RecordedRuntimes};
    use crate::simulator::{generate_query_dag, DagGeneratorConfig};
    use crate::workload::TableRef;
    use proptest::prelude::*;

    const GCP: &str = include_str!("../../tests/fixtures/gcp_intra.prices.json");
    const Q67: &str = include_str!("../../tests/fixtures/q67.dag.json");
    const Q86: &str = include_str!("../../tests/fixtures/q86_2tb.dag.json");

    fn gcp() -> PriceBook {
        PriceBook::from_json(GCP).unwrap()
    }

    fn run(dag: &QueryDag, prices: &PriceBook, params: &IntraParams) -> IntraPlan {
        intra_plan(dag, prices, params, &mut RecordedRuntimes).unwrap()
    }

    #[test]
    fn query_86_replay() {
        let dag = QueryDag::from_json(Q86).unwrap();
        let plan = run(&dag, &gcp(), &IntraParams::default());
        let cut = plan.cut.as_ref().unwrap();
        assert_eq!(cut.node, "rollup");
        assert_eq!(cut.upstream_cost, Money::from_micros(62_083));
        assert_eq!(cut.scan_cost, Money::from_micros(27_491));
        assert_eq!(cut.migration_cost, Money::ZERO);
        assert_eq!(plan.plan_cost.to_string(), "0.089574");
        assert_eq!(plan.baseline_cost.to_string(), "0.628530");
    }

    #[test]
    fn query_67_replay() {
        let dag = QueryDag::from_json(Q67).unwrap();
        let plan = run(&dag, &gcp(), &IntraParams::default());
        assert_eq!(plan.cut.as_ref().unwrap().node, "rollup");
        assert_eq!(plan.plan_cost.to_string(), "1.830000");
        assert_eq!(plan.baseline_cost.to_string(), "4.998100");
        assert_eq!(Some(plan.cut.clone().unwrap()), exhaustive_cuts(&dag, &gcp(), &IntraParams::default()).unwrap());
    }

    fn node(id: &str, children: &[&str], card: u64, fr: f64) -> DagNode {
        DagNode {
            id: id.into(),
            op: "op".into(),
            card,
            row_size: 1,
            children: children.iter().map(|c| c.to_string()).collect(),
            base_table: children.is_empty().then(|| TableRef { name: id.into(), size: card }),
            upstream_runtime: Some(fr),
            downstream_runtime: Some(0.0),
        }
    }

    #[test]
    fn nothing_profitable_means_no_measurements() {
        let dag = QueryDag::new(
            "q".into(),
            Money::ZERO,
            1.0,
            vec![node("a", &[], 1, 1.0), node("r", &["a"], 1, 2.0)],
        )
        .unwrap();
        let plan = run(&dag, &gcp(), &IntraParams::default());
        assert_eq!(plan.cut, None);
        assert_eq!(plan.fr_evaluations(), 0);
        assert_eq!(plan.search_cost, Money::ZERO);
    }

    /// Two scans feeding a join. Cutting at `big` is worth far more than
    /// anything `small` could ever save.
    fn two_candidates() -> QueryDag {
        let tb = 1_000_000_000_000;
        QueryDag::new(
            "pair".into(),
            Money::dollars(10),
            1.0,
            vec![node("big", &[], tb, 3600.0), node("small", &[], tb / 10, 60.0), node("r", &["big", "small"], 1, 7200.0)],
        )
        .unwrap()
    }

    #[test]
    fn one_measurement_settles_two_candidates() {
        let dag = two_candidates();
        let prices = gcp();
        let plan = run(&dag, &prices, &IntraParams { scan_shipped_output: false, ..IntraParams::default() });
        // Literal scan cost: big → 0.1 TB ($0.625), small → 1 TB ($6.25).
        assert_eq!(plan.fr_evaluations(), 1);
        let cut = plan.cut.as_ref().unwrap();
        assert_eq!(cut.node, "big");
        assert_eq!(cut.total, Money::from_micros(625_000 + 1_490_000));
        let exact = exhaustive_cuts(&dag, &prices, &IntraParams { scan_shipped_output: false, ..IntraParams::default() })
            .unwrap()
            .unwrap();
        assert_eq!(exact.node, "big");
    }

    #[test]
    fn iteration_cap_limits_measurements() {
        let dag = QueryDag::from_json(Q67).unwrap();
        let params = IntraParams { max_iters: Some(1), ..IntraParams::default() };
        let plan = run(&dag, &gcp(), &params);
        assert_eq!(plan.fr_evaluations(), 1);
        assert!(plan.plan_cost <= plan.baseline_cost);
        assert_eq!(
            intra_plan(&dag, &gcp(), &IntraParams { max_iters: Some(0), ..IntraParams::default() }, &mut RecordedRuntimes),
            Err(IntraError::ZeroIterations)
        );
    }

    #[test]
    fn deadline_excludes_slow_cuts() {
        let dag = QueryDag::from_json(Q86).unwrap();
        let params = IntraParams { deadline: Some(100.0), ..IntraParams::default() };
        let plan = run(&dag, &gcp(), &params);
        if let Some(cut) = &plan.cut {
            assert!(cut.runtime_s <= 100.0);
        }
        assert!(plan.evaluations.iter().any(|e| !e.feasible));
        assert!(plan.warnings.contains(&WARN_DOWNSTREAM_UNMODELED.to_string()));
    }

    #[test]
    fn prompted_runtimes() {
        let dag = two_candidates();
        let mut out = Vec::new();
        let mut oracle = PromptedRuntimes::new(&b"3600\n"[..], &mut out);
        let params = IntraParams { scan_shipped_output: false, ..IntraParams::default() };
        let plan = intra_plan(&dag, &gcp(), &params, &mut oracle).unwrap();
        assert_eq!(plan.cut.unwrap().node, "big");
        assert!(String::from_utf8(out).unwrap().contains("big"));

        let mut oracle = PromptedRuntimes::new(&b"soon\n"[..], Vec::new());
        assert!(matches!(intra_plan(&dag, &gcp(), &params, &mut oracle), Err(IntraError::Oracle(_))));
    }

    #[test]
    fn contradictory_measurements_are_rejected() {
        // `a` is measured first; the second answer claims `j`, which reads
        // from `a`, finishes sooner.
        let dag = QueryDag::new(
            "q".into(),
            Money::dollars(100),
            1.0,
            vec![
                DagNode { upstream_runtime: None, ..node("a", &[], 10, 0.0) },
                DagNode { upstream_runtime: None, ..node("j", &["a"], 10, 0.0) },
                DagNode { upstream_runtime: None, ..node("r", &["j"], 10, 0.0) },
            ],
        )
        .unwrap();
        let input = &b"50\n10\n"[..];
        let mut oracle = PromptedRuntimes::new(input, Vec::new());
        let params = IntraParams { scan_shipped_output: false, ..IntraParams::default() };
        let err = intra_plan(&dag, &gcp(), &params, &mut oracle).unwrap_err();
        assert!(matches!(err, IntraError::NonMonotoneRuntime { .. }), "{err:?}");
    }

    fn cheap_egress() -> PriceBook {
        PriceBook { egress_per_tb: Money::dollars(2), ..PriceBook::default() }
    }

    proptest! {
        #[test]
        fn full_budget_matches_exhaustive(seed in any::<u64>(), nodes in 1usize..=12, deadline in proptest::option::of(500.0f64..6000.0)) {
            let dag = generate_query_dag(seed, &DagGeneratorConfig { nodes, ..DagGeneratorConfig::default() });
            let params = IntraParams { deadline, ..IntraParams::default() };
            let prices = cheap_egress();
            let plan = run(&dag, &prices, &params);
            let exact = exhaustive_cuts(&dag, &prices, &params).unwrap();
            prop_assert_eq!(plan.cut.clone(), exact);
            prop_assert!(plan.plan_cost <= dag.baseline_cost());
            for e in &plan.evaluations {
                prop_assert!(e.actual_savings.unwrap() <= e.opportunity);
            }
        }

        #[test]
        fn capped_budget_is_never_worse_than_baseline(seed in any::<u64>(), nodes in 1usize..=12, cap in 1usize..12) {
            let dag = generate_query_dag(seed, &DagGeneratorConfig { nodes, ..DagGeneratorConfig::default() });
            let params = IntraParams { max_iters: Some(cap), ..IntraParams::default() };
            let plan = run(&dag, &cheap_egress(), &params);
            prop_assert!(plan.fr_evaluations() <= cap);
            prop_assert!(plan.plan_cost <= dag.baseline_cost());
        }
    }
}
