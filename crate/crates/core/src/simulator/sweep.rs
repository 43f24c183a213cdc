//! Re-planning a workload across a grid of prices.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{CostError, PriceBook};
use crate::inter::{InterPlan, InterProblem, PlanError, PlanSettings, PlanType, Solver};
use crate::money::{div_round, Money};
use crate::workload::{BackendKind, QueryProfile, WorkloadProfile};

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "price",
    "plan_type",
    "savings_pct",
    "speedup_pct",
    "migrated_tables",
    "migrated_queries",
    "total_cost",
    "runtime_s",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VariedPrice {
    /// Per-byte scan price, dollars per TB.
    PByte,
    /// Egress price, dollars per TB.
    Egress,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("price grid is empty")]
    EmptyGrid,
    #[error("price grid must be strictly increasing")]
    NotIncreasing,
    #[error("price grid values must be finite and >= 0")]
    NegativePrice,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub varied: VariedPrice,
    /// Values of the varied price, dollars per TB.
    pub grid: Vec<f64>,
    /// Prices the profiles were measured under; also supplies every price
    /// not being varied.
    pub prices: PriceBook,
    pub solver: Solver,
    pub settings: PlanSettings,
    pub deadline: Option<f64>,
}

impl SweepSpec {
    pub fn new(varied: VariedPrice, grid: Vec<f64>, prices: PriceBook) -> Self {
        SweepSpec { varied, grid, prices, solver: Solver::Greedy, settings: PlanSettings::default(), deadline: None }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.grid.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if self.grid.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(SweepError::NegativePrice);
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::NotIncreasing);
        }
        if self.varied == VariedPrice::PByte && self.prices.scan_per_tb.micros() == 0 {
            return Err(CostError::ZeroBytePrice.into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub price: f64,
    pub plan_type: PlanType,
    pub savings_pct: f64,
    pub speedup_pct: f64,
    pub migrated_tables: usize,
    pub migrated_queries: usize,
    pub total_cost: Money,
    pub runtime_s: f64,
    pub baseline_cost: Money,
    pub baseline_runtime_s: f64,
}

impl SweepRow {
    fn from_plan(price: f64, plan: &InterPlan) -> Self {
        SweepRow {
            price,
            plan_type: plan.plan_type,
            savings_pct: plan.savings_pct(),
            speedup_pct: plan.speedup_pct(),
            migrated_tables: plan.migrate_tables.len(),
            migrated_queries: plan.migrate_queries.len(),
            total_cost: plan.cost.total,
            runtime_s: plan.runtime,
            baseline_cost: plan.baseline_cost,
            baseline_runtime_s: plan.baseline_runtime,
        }
    }
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
pub fn linear_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, SweepError> {
    if steps == 0 {
        return Err(SweepError::EmptyGrid);
    }
    if !from.is_finite() || !to.is_finite() || from < 0.0 || to < 0.0 {
        return Err(SweepError::NegativePrice);
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    if to <= from {
        return Err(SweepError::NotIncreasing);
    }
    let span = to - from;
    Ok((0..steps).map(|i| from + span * i as f64 / (steps - 1) as f64).collect())
}

/// Plans the workload once per grid point, rows in grid order.
pub fn run_sweep(workload: &WorkloadProfile, spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    spec.grid
        .par_iter()
        .map(|&price| {
            let value = Money::from_dollars_f64(price);
            let mut prices = spec.prices.clone();
            let rescaled;
            let profile = match spec.varied {
                VariedPrice::Egress => {
                    prices.egress_per_tb = value;
                    workload
                }
                VariedPrice::PByte => {
                    prices.scan_per_tb = value;
                    rescaled = rescale_per_byte(workload, spec.prices.scan_per_tb, value);
                    &rescaled
                }
            };
            let problem = InterProblem::new(profile, &prices, spec.settings).with_deadline(spec.deadline);
            let plan = spec.solver.solve(&problem)?;
            Ok(SweepRow::from_plan(price, &plan))
        })
        .collect()
}

/// Re-prices whichever side of each query runs on the per-byte backend.
fn rescale_per_byte(workload: &WorkloadProfile, measured: Money, target: Money) -> WorkloadProfile {
    let scale = |m: Money| {
        Money::from_micros(div_round(m.micros() as i128 * target.micros() as i128, measured.micros() as i128) as i64)
    };
    let per_byte_source = workload.source_backend() == BackendKind::PerByte;
    let queries: Vec<QueryProfile> = workload
        .queries()
        .iter()
        .map(|q| {
            let mut q = q.clone();
            if per_byte_source {
                q.cost_src = scale(q.cost_src);
            } else {
                q.cost_dest = scale(q.cost_dest);
            }
            q
        })
        .collect();
    WorkloadProfile::new(workload.tables().to_vec(), queries, workload.source_backend(), workload.deadline())
        .expect("rescaling keeps a valid workload")
}

/// Writes rows as CSV under [`SWEEP_CSV_HEADER`].
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.price.to_string(),
            r.plan_type.to_string(),
            format!("{:.6}", r.savings_pct),
            format!("{:.6}", r.speedup_pct),
            r.migrated_tables.to_string(),
            r.migrated_queries.to_string(),
            r.total_cost.to_string(),
            format!("{:.3}", r.runtime_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inter::{greedy_plan, percent_change};
    use crate::simulator::{generate_workload, GeneratorConfig};

    #[test]
    fn grid_construction() {
        assert_eq!(linear_grid(0.0, 10.0, 3).unwrap(), [0.0, 5.0, 10.0]);
        assert_eq!(linear_grid(4.0, 4.0, 1).unwrap(), [4.0]);
        assert_eq!(linear_grid(5.0, 1.0, 3), Err(SweepError::NotIncreasing));
        assert_eq!(linear_grid(0.0, 1.0, 0), Err(SweepError::EmptyGrid));
        assert_eq!(linear_grid(-1.0, 1.0, 2), Err(SweepError::NegativePrice));
    }

    #[test]
    fn single_point_equals_direct_plan() {
        let w = generate_workload(1, &GeneratorConfig::default());
        let prices = PriceBook::default();
        let spec = SweepSpec::new(VariedPrice::Egress, vec![120.0], prices.clone());
        let rows = run_sweep(&w, &spec).unwrap();
        let plan = greedy_plan(&InterProblem::new(&w, &prices, PlanSettings::default()));
        assert_eq!(rows, [SweepRow::from_plan(120.0, &plan)]);

        let spec = SweepSpec::new(VariedPrice::PByte, vec![6.25], prices);
        assert_eq!(run_sweep(&w, &spec).unwrap()[0].total_cost, plan.cost.total);
    }

    #[test]
    fn rows_recompute_from_raw_values() {
        let w = generate_workload(2, &GeneratorConfig::default());
        let spec = SweepSpec::new(VariedPrice::PByte, linear_grid(1.0, 20.0, 8).unwrap(), PriceBook::default());
        for r in run_sweep(&w, &spec).unwrap() {
            let s = percent_change(r.baseline_cost.as_dollars_f64(), r.total_cost.as_dollars_f64());
            assert_eq!(r.savings_pct, s);
            assert_eq!(r.speedup_pct, percent_change(r.baseline_runtime_s, r.runtime_s));
            assert_eq!(r.plan_type == PlanType::SourceOnly, r.migrated_tables == 0);
        }
    }

    #[test]
    fn cheap_scans_keep_io_bound_work_in_place() {
        let c = GeneratorConfig { cpu_bound_fraction: 0.0, ..GeneratorConfig::default() };
        let w = generate_workload(9, &c);
        let spec = SweepSpec::new(VariedPrice::PByte, vec![0.01, 6.25, 60.0], PriceBook::default());
        let rows = run_sweep(&w, &spec).unwrap();
        assert_eq!(rows[0].plan_type, PlanType::SourceOnly);
        assert_ne!(rows[2].plan_type, PlanType::SourceOnly);
    }

    #[test]
    fn rejects_bad_grids() {
        let w = generate_workload(1, &GeneratorConfig::default());
        let bad = |grid: Vec<f64>| run_sweep(&w, &SweepSpec::new(VariedPrice::Egress, grid, PriceBook::default()));
        assert_eq!(bad(vec![]), Err(SweepError::EmptyGrid));
        assert_eq!(bad(vec![2.0, 1.0]), Err(SweepError::NotIncreasing));
        assert_eq!(bad(vec![-2.0]), Err(SweepError::NegativePrice));
    }

    #[test]
    fn csv_layout() {
        let w = generate_workload(1, &GeneratorConfig::default());
        let rows = run_sweep(&w, &SweepSpec::new(VariedPrice::Egress, vec![0.0, 1.0], PriceBook::default())).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER.join(","));
        assert_eq!(lines.count(), 2);
    }
}
