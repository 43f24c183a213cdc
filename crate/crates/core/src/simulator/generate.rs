//! Seeded synthetic workloads and query plans.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost_model::{per_byte_query_cost, PriceBook};
use crate::intra::{DagNode, QueryDag};
use crate::money::Money;
use crate::workload::{BackendKind, QueryProfile, TableRef, WorkloadProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_tables: usize,
    pub n_queries: usize,
    /// Share of queries whose per-compute cost exceeds their per-byte cost.
    pub cpu_bound_fraction: f64,
    /// Inclusive table size bounds in bytes.
    pub size_range: (u64, u64),
    /// Prices the query costs are derived from.
    pub prices: PriceBook,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_tables: 10,
            n_queries: 20,
            cpu_bound_fraction: 0.5,
            size_range: (10_000_000_000, 1_000_000_000_000),
            prices: PriceBook::default(),
        }
    }
}

/// A per-byte-sourced workload. IO-bound queries cost 10–70% of their
/// per-byte price on the per-compute backend; CPU-bound ones 1.5–10×.
/// Each query stands for many runs over its tables, so savings are on the
/// same scale as migration costs.
pub fn generate_workload(seed: u64, config: &GeneratorConfig) -> WorkloadProfile {
    assert!(config.n_tables >= 1, "need at least one table");
    assert!((0.0..=1.0).contains(&config.cpu_bound_fraction), "fraction outside [0, 1]");
    let (lo, hi) = config.size_range;
    assert!(lo <= hi, "inverted size range");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = config.n_tables.max(config.n_queries).to_string().len();
    let tables: Vec<TableRef> = (0..config.n_tables)
        .map(|i| TableRef { name: format!("t{i:0width$}"), size: rng.gen_range(lo..=hi) })
        .collect();

    let n_cpu = (config.cpu_bound_fraction * config.n_queries as f64).round() as usize;
    let mut cpu_bound = vec![false; config.n_queries];
    for i in index::sample(&mut rng, config.n_queries, n_cpu.min(config.n_queries)) {
        cpu_bound[i] = true;
    }

    let per_second = config.prices.compute_price_per_second();
    let queries = (0..config.n_queries)
        .map(|i| {
            let fan = rng.gen_range(1..=3.min(config.n_tables));
            let scans: BTreeSet<usize> =
                index::sample(&mut rng, config.n_tables, fan).into_iter().collect();
            let read: u64 = scans.iter().map(|&t| tables[t].size).sum();
            let runs: f64 = rng.gen_range(1.0..40.0);
            let per_byte =
                per_byte_query_cost((read as f64 * runs) as u64, &config.prices).max(Money::from_micros(10));
            let ratio = if cpu_bound[i] { rng.gen_range(1.5..10.0) } else { rng.gen_range(0.1..0.7) };
            let per_compute = Money::from_micros((per_byte.micros() as f64 * ratio).round() as i64);
            let runtime_dest = if per_second > 0.0 { per_compute.as_dollars_f64() / per_second } else { 0.0 };
            let runtime_src = runtime_dest * rng.gen_range(0.3..1.5);
            QueryProfile {
                id: format!("q{i:0width$}"),
                cost_src: per_byte,
                cost_dest: per_compute,
                runtime_src,
                runtime_dest,
                scans: scans.into_iter().map(|t| tables[t].name.clone()).collect(),
            }
        })
        .collect();
    WorkloadProfile::new(tables, queries, BackendKind::PerByte, None).expect("generated workload is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DagGeneratorConfig {
    pub nodes: usize,
    /// Chance that a node feeds a second consumer.
    pub shared_output: f64,
    /// Chance that a node records a downstream runtime.
    pub downstream_recorded: f64,
}

impl Default for DagGeneratorConfig {
    fn default() -> Self {
        DagGeneratorConfig { nodes: 10, shared_output: 0.2, downstream_recorded: 0.5 }
    }
}

/// A single-root plan with recorded runtimes that only grow along data
/// flow. The baseline is priced from the leaf scans at default prices.
pub fn generate_query_dag(seed: u64, config: &DagGeneratorConfig) -> QueryDag {
    assert!(config.nodes >= 1, "need at least one node");
    let n = config.nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n.saturating_sub(1) {
        let mut parents: Vec<usize> = (v + 1..n).collect();
        parents.shuffle(&mut rng);
        let fan = if parents.len() > 1 && rng.gen_bool(config.shared_output) { 2 } else { 1 };
        for &p in &parents[..fan] {
            children[p].push(v);
        }
    }
    let table_pool = (n / 2).max(1);
    let mut runtimes = vec![0.0f64; n];
    let mut nodes = Vec::with_capacity(n);
    let mut leaf_bytes = 0u64;
    for v in 0..n {
        let card: u64 = rng.gen_range(1_000..5_000_000_000);
        let row_size: u64 = rng.gen_range(8..256);
        let own: f64 = rng.gen_range(1.0..900.0);
        let slowest_input = children[v].iter().map(|&c| runtimes[c]).fold(0.0, f64::max);
        runtimes[v] = (slowest_input + own).round();
        let base_table = children[v].is_empty().then(|| {
            leaf_bytes += card * row_size;
            TableRef {
                name: format!("tbl{}", rng.gen_range(0..table_pool)),
                size: card * row_size,
            }
        });
        let downstream = rng.gen_bool(config.downstream_recorded).then(|| rng.gen_range(0.0..600.0f64).round());
        let mut kids = children[v].clone();
        kids.sort_unstable();
        nodes.push(DagNode {
            id: format!("n{v:02}"),
            op: if base_table.is_some() { "scan".into() } else { "op".into() },
            card,
            row_size,
            children: kids.iter().map(|&c| format!("n{c:02}")).collect(),
            base_table,
            upstream_runtime: Some(runtimes[v]),
            downstream_runtime: downstream,
        });
    }
    let scans = per_byte_query_cost(leaf_bytes, &PriceBook::default());
    let baseline = Money::from_micros((scans.micros() as f64 * rng.gen_range(1.0..3.0)).round() as i64);
    let baseline_runtime = rng.gen_range(10.0..3600.0f64).round();
    QueryDag::new(format!("synthetic-{seed}"), baseline, baseline_runtime, nodes)
        .expect("generated plan is valid")
}
