//! Exhaustive oracle: tries every subset of tables.

use super::{Candidate, InterPlan, InterProblem, PlanError};
use crate::money::Money;

pub const BRUTE_FORCE_MAX_TABLES: usize = 20;

/// For each table subset S, migrates every profitable query whose tables all
/// lie in S. Among subsets within the deadline, returns the one with the
/// largest savings (fewest tables, then smallest bitmask, on ties).
pub fn brute_force_plan(problem: &InterProblem<'_>) -> Result<InterPlan, PlanError> {
    let w = problem.workload;
    let n = w.tables().len();
    if n > BRUTE_FORCE_MAX_TABLES {
        return Err(PlanError::TooLarge { tables: n, limit: BRUTE_FORCE_MAX_TABLES });
    }
    let masks: Vec<(usize, u32)> = (0..w.queries().len())
        .filter(|&q| problem.profitable(q))
        .map(|q| (q, w.tables_of(q).iter().fold(0u32, |m, &t| m | (1 << t))))
        .collect();

    let mut best: Option<(Money, u32, Candidate)> = None;
    for subset in 0u32..(1u32 << n) {
        let tables: Vec<usize> = (0..n).filter(|&t| subset & (1 << t) != 0).collect();
        let queries: Vec<usize> =
            masks.iter().filter(|(_, m)| m & !subset == 0).map(|&(q, _)| q).collect();
        let objective = queries.iter().map(|&q| problem.sigma[q]).sum::<Money>()
            - tables.iter().map(|&t| problem.mu[t]).sum::<Money>();
        let better = match &best {
            None => true,
            Some((b, bmask, _)) => {
                objective > *b || (objective == *b && subset.count_ones() < bmask.count_ones())
            }
        };
        if !better {
            continue;
        }
        let c = problem.evaluate(&tables, &queries);
        if problem.fits_deadline(c.runtime) {
            best = Some((objective, subset, c));
        }
    }
    Ok(match best {
        Some((_, _, c)) => problem.finish(&c, Vec::new()),
        // Nothing fits, not even the baseline.
        None => problem.select(&[]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::PriceBook;
    use crate::inter::{greedy_plan, optimal_plan, PlanSettings};
    use crate::workload::{BackendKind, QueryProfile, TableRef, WorkloadProfile};
    use proptest::prelude::*;

    const OVERLAP: &str = include_str!("../../tests/fixtures/overlap.workload.json");
    const ALL_PROFITABLE: &str = include_str!("../../tests/fixtures/overlap_all_profitable.workload.json");
    const PRICES_1: &str = include_str!("../../tests/fixtures/egress_1_per_tb.prices.json");

    #[test]
    fn one_dollar_under_every_solver() {
        let w = WorkloadProfile::from_json(OVERLAP).unwrap();
        let p = PriceBook::from_json(PRICES_1).unwrap();
        let problem = InterProblem::new(&w, &p, PlanSettings::default());
        assert_eq!(brute_force_plan(&problem).unwrap().savings(), Money::dollars(1));
        assert_eq!(optimal_plan(&problem).savings(), Money::dollars(1));
        assert_eq!(greedy_plan(&problem).savings(), Money::dollars(1));
    }

    #[test]
    fn bounds_when_every_query_profits() {
        let w = WorkloadProfile::from_json(ALL_PROFITABLE).unwrap();
        let p = PriceBook::from_json(PRICES_1).unwrap();
        let (tables, queries) = InterProblem::new(&w, &p, PlanSettings::default()).bounds();
        let value = |list: &[crate::inter::BoundValue], name: &str| {
            list.iter().find(|b| b.subject == name).unwrap().value
        };
        assert_eq!(value(&tables, "t2"), Money::dollars(5));
        assert_eq!(value(&tables, "t3"), Money::dollars(3));
        assert_eq!(value(&queries, "q2"), Money::dollars(-1));
    }

    #[test]
    fn refuses_large_instances() {
        let tables: Vec<TableRef> = (0..=BRUTE_FORCE_MAX_TABLES)
            .map(|i| TableRef { name: format!("t{i}"), size: 1 })
            .collect();
        let w = WorkloadProfile::new(tables, vec![], BackendKind::PerByte, None).unwrap();
        let p = PriceBook::default();
        let err = brute_force_plan(&InterProblem::new(&w, &p, PlanSettings::default()));
        assert_eq!(err, Err(PlanError::TooLarge { tables: 21, limit: 20 }));
    }

    fn arb_instance() -> impl Strategy<Value = WorkloadProfile> {
        (1usize..7, 0usize..10).prop_flat_map(|(nt, nq)| {
            let sizes = proptest::collection::vec(0u64..20, nt);
            let queries = proptest::collection::vec(
                (0i64..30, 0i64..30, proptest::collection::btree_set(0..nt, 1..=nt.min(3))),
                nq,
            );
            (sizes, queries).prop_map(move |(sizes, queries)| {
                let tables = sizes
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| TableRef { name: format!("t{i}"), size: s * 100_000_000_000 })
                    .collect();
                let queries = queries
                    .into_iter()
                    .enumerate()
                    .map(|(i, (src, dest, scans))| QueryProfile {
                        id: format!("q{i}"),
                        cost_src: Money::dollars(src),
                        cost_dest: Money::dollars(dest),
                        runtime_src: 10.0,
                        runtime_dest: 5.0,
                        scans: scans.into_iter().map(|t| format!("t{t}")).collect(),
                    })
                    .collect();
                WorkloadProfile::new(tables, queries, BackendKind::PerByte, None).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn mincut_matches_exhaustive_and_greedy_never_beats_it(w in arb_instance()) {
            let p = PriceBook { egress_per_tb: Money::dollars(20), ..PriceBook::default() };
            let problem = InterProblem::new(&w, &p, PlanSettings::default());
            let exact = brute_force_plan(&problem).unwrap();
            let cut = optimal_plan(&problem);
            let greedy = greedy_plan(&problem);
            prop_assert_eq!(cut.savings(), exact.savings());
            prop_assert!(greedy.savings() <= exact.savings());
            prop_assert!(exact.savings() >= Money::ZERO);
            prop_assert!(exact.cost.is_consistent());
        }
    }
}
