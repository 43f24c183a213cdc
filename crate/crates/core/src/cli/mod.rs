//! The `cloudplan` command line.

mod report;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cost_model::{break_even_scan_bytes, PriceBook};
use crate::inter::{greedy_trace, InterProblem, PlanDoc, PlanError, PlanSettings, Solver};
use crate::intra::{intra_plan, IntraError, IntraParams, IntraPlan, PromptedRuntimes, QueryDag, RecordedRuntimes};
use crate::money::Money;
use crate::simulator::{
    generate_query_dag, generate_workload, linear_grid, run_sweep, write_sweep_csv, DagGeneratorConfig,
    GeneratorConfig, SweepError, SweepSpec, VariedPrice,
};
use crate::workload::WorkloadProfile;

pub use report::{InputDigest, RunReport};

pub const BANDWIDTH_ENV: &str = "CLOUDPLAN_BANDWIDTH_GBPS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Capability(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Capability(_) => EXIT_CAPABILITY,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::TooLarge { .. } => CliError::Capability(e.to_string()),
            PlanError::IncoherentPlan(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<IntraError> for CliError {
    fn from(e: IntraError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Plan(p) => p.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cloudplan", version, about = "Plan where analytical queries run across two cloud backends")]
pub struct Cli {
    /// Price book JSON; built-in list prices when omitted.
    #[arg(long, global = true)]
    pub prices: Option<PathBuf>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for synthetic inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write a JSON run report here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Write plot-ready CSV series into this directory.
    #[arg(long, global = true)]
    pub emit_plot_data: Option<PathBuf>,
    /// Transfer bandwidth between backends in Gbit/s.
    #[arg(long, global = true)]
    pub bandwidth_gbps: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Greedy,
    Mincut,
    Brute,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Greedy => Solver::Greedy,
            SolverArg::Mincut => Solver::MinCut,
            SolverArg::Brute => Solver::BruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    PByte,
    Egress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Workload,
    Dag,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose which tables and queries to migrate.
    PlanInter {
        workload: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Greedy)]
        solver: SolverArg,
        /// Runtime bound in seconds; overrides the workload file.
        #[arg(long)]
        deadline: Option<f64>,
    },
    /// Choose where to split a single query.
    PlanIntra {
        dag: PathBuf,
        #[arg(long)]
        deadline: Option<f64>,
        /// Most upstream runtimes to measure; defaults to the node count.
        #[arg(long)]
        max_iters: Option<usize>,
        /// Read upstream runtimes from stdin instead of the plan file.
        #[arg(long)]
        interactive: bool,
        /// Do not charge the downstream part for reading the shipped output.
        #[arg(long)]
        literal_scan_cost: bool,
    },
    /// Re-plan across a range of one price.
    Sweep {
        workload: PathBuf,
        #[arg(long, value_enum)]
        vary: VaryArg,
        /// First price, dollars per TB.
        #[arg(long)]
        from: f64,
        /// Last price, dollars per TB.
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = SolverArg::Greedy)]
        solver: SolverArg,
        #[arg(long)]
        deadline: Option<f64>,
    },
    /// Scan size at which both pricing models cost the same.
    Breakeven {
        /// Query runtime in seconds.
        #[arg(long)]
        runtime: f64,
    },
    /// Emit a synthetic workload or query plan.
    Gen {
        #[arg(long, value_enum, default_value_t = GenKind::Workload)]
        kind: GenKind,
        #[arg(long, default_value_t = 10)]
        tables: usize,
        #[arg(long, default_value_t = 20)]
        queries: usize,
        #[arg(long, default_value_t = 0.5)]
        cpu_fraction: f64,
        #[arg(long, default_value_t = 10_000_000_000)]
        min_size: u64,
        #[arg(long, default_value_t = 1_000_000_000_000)]
        max_size: u64,
        /// Operator count for `--kind dag`.
        #[arg(long, default_value_t = 10)]
        nodes: usize,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let echo = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, echo) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn read(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        self.digests.push(InputDigest::of(role, path, &bytes));
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{} is not UTF-8", path.display())))
    }
}

fn settings(cli: &Cli) -> Result<PlanSettings, CliError> {
    let gbps = match cli.bandwidth_gbps {
        Some(g) => Some(g),
        None => match std::env::var(BANDWIDTH_ENV) {
            Ok(text) => Some(
                text.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Input(format!("{BANDWIDTH_ENV} is not a number: {text:?}")))?,
            ),
            Err(_) => None,
        },
    };
    match gbps {
        None => Ok(PlanSettings::default()),
        Some(g) if g > 0.0 && g.is_finite() => Ok(PlanSettings::with_bandwidth_gbps(g)),
        Some(g) => Err(CliError::Input(format!("bandwidth must be > 0 Gbit/s, got {g}"))),
    }
}

fn check_deadline(deadline: Option<f64>) -> Result<Option<f64>, CliError> {
    match deadline {
        Some(d) if !d.is_finite() || d < 0.0 => Err(CliError::Input(format!("deadline must be >= 0, got {d}"))),
        other => Ok(other),
    }
}

#[derive(Serialize)]
struct InterOutput<'a> {
    solver: Solver,
    #[serde(flatten)]
    plan: &'a PlanDoc,
    savings: Money,
    speedup_pct: f64,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct IntraOutput<'a> {
    #[serde(flatten)]
    plan: &'a IntraPlan,
    fr_evaluations: usize,
}

#[derive(Serialize)]
struct BreakevenOutput {
    runtime_s: f64,
    break_even_scan_bytes: f64,
}

fn execute(cli: &Cli, echo: Vec<String>) -> Result<(), CliError> {
    let mut inputs = Inputs { digests: Vec::new() };
    let prices = match &cli.prices {
        Some(path) => {
            let text = inputs.read("prices", path)?;
            PriceBook::from_json(&text).map_err(|e| CliError::Input(e.to_string()))?
        }
        None => PriceBook::default(),
    };
    let settings = settings(cli)?;
    let mut report = RunReport::new(echo, cli.seed, &prices, settings);

    match &cli.command {
        Command::PlanInter { workload, solver, deadline } => {
            let text = inputs.read("workload", workload)?;
            let w = WorkloadProfile::from_json(&text).map_err(|e| CliError::Input(e.to_string()))?;
            let deadline = check_deadline(deadline.or(w.deadline()))?;
            let problem = InterProblem::new(&w, &prices, settings).with_deadline(deadline);
            let plan = Solver::from(*solver).solve(&problem)?;
            let doc = plan.to_doc();
            let out = InterOutput {
                solver: (*solver).into(),
                plan: &doc,
                savings: plan.savings(),
                speedup_pct: plan.speedup_pct(),
                warnings: &plan.warnings,
            };
            let json = to_json(&out);
            if let Some(dir) = &cli.emit_plot_data {
                let trace = greedy_trace(&problem);
                let mut rows = vec!["runtime_s,total_cost,plan_type,chosen".to_string()];
                for t in &trace {
                    let chosen = t.migrate_tables == plan.migrate_tables && t.migrate_queries == plan.migrate_queries;
                    rows.push(format!("{:.3},{},{},{}", t.runtime, t.cost.total, t.plan_type, chosen));
                }
                write_series(dir, "inter_candidates.csv", &rows)?;
            }
            report.warnings = plan.warnings.clone();
            report.result = serde_json::to_value(&out).expect("plan serializes");
            emit(cli, json.as_bytes())?;
        }
        Command::PlanIntra { dag, deadline, max_iters, interactive, literal_scan_cost } => {
            let text = inputs.read("dag", dag)?;
            let dag = QueryDag::from_json(&text)?;
            let params = IntraParams {
                deadline: check_deadline(*deadline)?,
                max_iters: *max_iters,
                transfer: settings,
                scan_shipped_output: !literal_scan_cost,
            };
            let plan = if *interactive {
                let stdin = io::stdin();
                let mut oracle = PromptedRuntimes::new(stdin.lock(), io::stderr());
                intra_plan(&dag, &prices, &params, &mut oracle)?
            } else {
                if !dag.has_all_runtimes() {
                    return Err(CliError::Input(
                        "plan lacks fr_s on some nodes; pass --interactive to supply runtimes".into(),
                    ));
                }
                intra_plan(&dag, &prices, &params, &mut RecordedRuntimes)?
            };
            let out = IntraOutput { plan: &plan, fr_evaluations: plan.fr_evaluations() };
            if let Some(dir) = &cli.emit_plot_data {
                let mut rows = vec!["node,opportunity,actual_savings,runtime_s,feasible".to_string()];
                for e in &plan.evaluations {
                    rows.push(format!(
                        "{},{},{},{:.3},{}",
                        e.node,
                        e.opportunity,
                        e.actual_savings.map(|m| m.to_string()).unwrap_or_default(),
                        e.runtime_s.unwrap_or(0.0),
                        e.feasible
                    ));
                }
                write_series(dir, "intra_evaluations.csv", &rows)?;
            }
            report.warnings = plan.warnings.clone();
            report.ledger = Some(report::Ledger { search_cost: plan.search_cost, fr_evaluations: plan.fr_evaluations() });
            report.result = serde_json::to_value(&out).expect("plan serializes");
            emit(cli, to_json(&out).as_bytes())?;
        }
        Command::Sweep { workload, vary, from, to, steps, solver, deadline } => {
            let text = inputs.read("workload", workload)?;
            let w = WorkloadProfile::from_json(&text).map_err(|e| CliError::Input(e.to_string()))?;
            let varied = match vary {
                VaryArg::PByte => VariedPrice::PByte,
                VaryArg::Egress => VariedPrice::Egress,
            };
            let mut spec = SweepSpec::new(varied, linear_grid(*from, *to, *steps)?, prices.clone());
            spec.solver = (*solver).into();
            spec.settings = settings;
            spec.deadline = check_deadline(deadline.or(w.deadline()))?;
            let rows = run_sweep(&w, &spec)?;
            let mut csv = Vec::new();
            write_sweep_csv(&rows, &mut csv).map_err(|e| CliError::Output(e.to_string()))?;
            if let Some(dir) = &cli.emit_plot_data {
                let series = |f: fn(&crate::simulator::SweepRow) -> f64, name: &str| {
                    let mut lines = vec![format!("price,{name}")];
                    lines.extend(rows.iter().map(|r| format!("{},{:.6}", r.price, f(r))));
                    lines
                };
                write_series(dir, "sweep_savings.csv", &series(|r| r.savings_pct, "savings_pct"))?;
                write_series(dir, "sweep_speedup.csv", &series(|r| r.speedup_pct, "speedup_pct"))?;
            }
            report.result = serde_json::to_value(&rows).expect("rows serialize");
            emit(cli, &csv)?;
        }
        Command::Breakeven { runtime } => {
            if !runtime.is_finite() || *runtime < 0.0 {
                return Err(CliError::Input(format!("runtime must be >= 0, got {runtime}")));
            }
            let bytes = break_even_scan_bytes(*runtime, &prices).map_err(|e| CliError::Input(e.to_string()))?;
            let out = BreakevenOutput { runtime_s: *runtime, break_even_scan_bytes: bytes };
            report.result = serde_json::to_value(&out).expect("result serializes");
            emit(cli, to_json(&out).as_bytes())?;
        }
        Command::Gen { kind, tables, queries, cpu_fraction, min_size, max_size, nodes } => {
            let json = match kind {
                GenKind::Workload => {
                    if *tables == 0 || !(0.0..=1.0).contains(cpu_fraction) || min_size > max_size {
                        return Err(CliError::Input(
                            "need --tables >= 1, --cpu-fraction in [0, 1] and --min-size <= --max-size".into(),
                        ));
                    }
                    let config = GeneratorConfig {
                        n_tables: *tables,
                        n_queries: *queries,
                        cpu_bound_fraction: *cpu_fraction,
                        size_range: (*min_size, *max_size),
                        prices: prices.clone(),
                    };
                    generate_workload(cli.seed, &config).to_json()
                }
                GenKind::Dag => {
                    if *nodes == 0 {
                        return Err(CliError::Input("need --nodes >= 1".into()));
                    }
                    let config = DagGeneratorConfig { nodes: *nodes, ..DagGeneratorConfig::default() };
                    generate_query_dag(cli.seed, &config).to_json()
                }
            };
            report.result = serde_json::Value::String(format!("{} bytes", json.len() + 1));
            emit(cli, format!("{json}\n").as_bytes())?;
        }
    }

    if let Some(path) = &cli.report {
        report.inputs = inputs.digests;
        fs::write(path, to_json(&report)).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn emit(cli: &Cli, bytes: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => fs::write(path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => io::stdout().lock().write_all(bytes).map_err(|e| CliError::Output(e.to_string())),
    }
}

fn write_series(dir: &Path, name: &str, lines: &[String]) -> Result<(), CliError> {
    let err = |e: io::Error| CliError::Output(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(err)?;
    let mut text = lines.join("\n");
    text.push('\n');
    fs::write(dir.join(name), text).map_err(err)
}
