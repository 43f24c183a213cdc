use serde::{Serialize, Serializer};

use crate::money::Money;

/// How many runs of a plan it takes to recoup the profiling spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payback {
    Iterations(u64),
    /// The plan saves nothing per run.
    NotApplicable,
}

impl Serialize for Payback {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Payback::Iterations(n) => serializer.serialize_u64(*n),
            Payback::NotApplicable => serializer.serialize_str("N/A"),
        }
    }
}

pub fn payback_iterations(profiling_cost: Money, baseline_cost: Money, plan_cost: Money) -> Payback {
    let savings = baseline_cost - plan_cost;
    if !savings.is_positive() {
        return Payback::NotApplicable;
    }
    let spent = profiling_cost.micros().max(0) as u64;
    Payback::Iterations(spent.div_ceil(savings.micros() as u64))
}
