//! Cost-driven placement of analytical workloads across two cloud query
//! backends.

pub mod cli;
pub mod cost_model;
pub mod inter;
pub mod intra;
pub mod money;
pub mod simulator;
pub mod workload;
