//! What-if price sweeps, profiling payback, and synthetic inputs.

mod generate;
mod payback;
mod sweep;

pub use generate::{generate_query_dag, generate_workload, DagGeneratorConfig, GeneratorConfig};
pub use payback::{payback_iterations, Payback};
pub use sweep::{linear_grid, run_sweep, write_sweep_csv, SweepError, SweepRow, SweepSpec, VariedPrice, SWEEP_CSV_HEADER};
