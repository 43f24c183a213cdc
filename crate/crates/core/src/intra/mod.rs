//! Intra-query placement: split one query's operator DAG at a single node,
//! run the upstream part on the pay-per-compute backend and the rest on the
//! pay-per-byte backend.

mod cut;
mod dag;
mod exhaustive;
mod oracle;
mod planner;

pub use cut::{cut_costs, is_valid_cut, opportunity, CutCosts};
pub use dag::{BaseTableDoc, DagNode, DagNodeDoc, QueryDag, QueryDagDoc};
pub use exhaustive::exhaustive_cuts;
pub use oracle::{PromptedRuntimes, RecordedRuntimes, RuntimeOracle};
pub use planner::{intra_plan, CutEvaluation, CutPlan, IntraParams, IntraPlan};

pub const WARN_DOWNSTREAM_UNMODELED: &str = "downstream runtime unmodeled";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntraError {
    #[error("malformed query plan document: {0}")]
    Parse(String),
    #[error("invalid query plan: {0}")]
    Invalid(String),
    #[error("not found: {0:?}")]
    NotFound(String),
    #[error("runtime oracle violates monotonicity: {upstream:?} feeds {downstream:?} but runs longer")]
    NonMonotoneRuntime { upstream: String, downstream: String },
    #[error("no recorded upstream runtime for node {0:?}")]
    MissingRuntime(String),
    #[error("iteration cap must be at least 1")]
    ZeroIterations,
    #[error("runtime oracle failed: {0}")]
    Oracle(String),
}
