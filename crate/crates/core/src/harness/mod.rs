//! Pipeline composition, evaluation, reports and sweeps. The CLI is a thin
//! layer over this module.

mod config;

pub use config::{InitMethod, NbpgMethod, PipelineConfig, PRESETS};

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Error, Result};
use crate::graph::KnnGraph;
use crate::hubness::{classify_value, data_hubness, node_hubness, HubClass};
use crate::init::{lsh_partition_knng, multiple_division, random_knng, rp_forest_knng};
use crate::io;
use crate::metrics::{estimated_recall, recall, reverse_recall, scan_rate_of};
use crate::nbpg::{deep_search, kgraph_refine, nndes, uniprop, NnDesParams, Observer};
use crate::oracle::{exact_knng, ExactKnng, SampledOracle};
use crate::smallworld::{build_hnsw_knng, build_sw_knng, LayeredGraph};

/// Reference for accuracy metrics.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    Exact(ExactKnng),
    /// Exact rows for sampled queries only; metrics are estimates.
    Sampled(SampledOracle),
}

impl Oracle {
    /// Exact oracle when `n <= oracle_cap`; above the cap, a sampled oracle
    /// if `estimate` is set, otherwise a refusal. An `oracle` file in the
    /// config is loaded when present and written after computing otherwise.
    pub fn prepare(data: &Dataset, cfg: &PipelineConfig) -> Result<Self> {
        let n = data.len();
        if let Some(path) = &cfg.oracle {
            if path.exists() {
                let g = io::load_graph(path, data)?;
                if g.k() != cfg.k {
                    return arg_err(format!("oracle file has k = {} but k = {}", g.k(), cfg.k));
                }
                return Ok(Oracle::Exact(ExactKnng::from_graph(g)));
            }
        }
        if n > cfg.oracle_cap {
            if !cfg.estimate {
                return Err(Error::OracleCap { n, cap: cfg.oracle_cap });
            }
            return Ok(Oracle::Sampled(SampledOracle::build(data, cfg.k, cfg.queries, cfg.seed)?));
        }
        let exact = in_pool(cfg.threads, || exact_knng(data, cfg.k, &mut Counters::new()))?;
        if let Some(path) = &cfg.oracle {
            io::save_graph(path, exact.graph())?;
        }
        Ok(Oracle::Exact(exact))
    }

    pub fn is_estimate(&self) -> bool {
        matches!(self, Oracle::Sampled(_))
    }

    pub fn recall(&self, g: &KnnGraph) -> Result<f64> {
        match self {
            Oracle::Exact(e) => recall(g, e),
            Oracle::Sampled(s) => estimated_recall(g, s),
        }
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {threads} threads: {e}")))?;
    pool.install(f)
}

/// Cost of one pipeline stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub total_dist: u64,
    pub expand_count: u64,
    pub prune_count: u64,
    pub queries: u64,
    pub mean_expand: f64,
    /// `mean_expand / ef` for the stage's search budget, if it searched.
    pub expand_ratio: Option<f64>,
    pub peak_aux_bytes: u64,
}

impl StageReport {
    fn new(c: &Counters, ef: Option<usize>) -> Self {
        let mean = c.mean_expand();
        Self {
            total_dist: c.total_dist,
            expand_count: c.expand_count,
            prune_count: c.prune_count,
            queries: c.queries,
            mean_expand: mean,
            expand_ratio: ef.filter(|_| c.queries > 0).map(|ef| mean / ef as f64),
            peak_aux_bytes: c.peak_aux_bytes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub method: String,
    pub params: BTreeMap<String, String>,
    pub n: usize,
    pub k: usize,
    pub recall: f64,
    #[serde(rename = "recall_R")]
    pub recall_r: Option<f64>,
    /// Metrics come from sampled queries.
    pub estimated: bool,
    pub scan_rate: f64,
    pub total_dist: u64,
    pub expand_count: u64,
    pub prune_count: u64,
    /// `prune_count / (n m_hnsw)` for HNSW initialization.
    pub prune_ratio: Option<f64>,
    pub init: StageReport,
    pub nbpg: StageReport,
    pub wall_seconds: f64,
    pub peak_aux_bytes: u64,
    pub hubness_class: Option<HubClass>,
    pub h_001: Option<f64>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Graph built by the INIT step plus the proximity graph a DeepSearch
/// refinement would search, if the builder produced one.
struct Initial {
    graph: KnnGraph,
    search_graph: Option<LayeredGraph>,
}

fn build_init(data: &Dataset, cfg: &PipelineConfig, counters: &mut Counters) -> Result<Initial> {
    let (k, seed) = (cfg.k, cfg.seed);
    let plain = |graph| Initial { graph, search_graph: None };
    Ok(match cfg.init {
        InitMethod::Random => plain(random_knng(data, k, seed, counters)?),
        InitMethod::Division => plain(multiple_division(data, k, crate::init::DivisionParams { seed, ..cfg.division }, counters)?),
        InitMethod::Lsh => plain(lsh_partition_knng(data, k, crate::init::LshParams { seed, ..cfg.lsh }, counters)?),
        InitMethod::RpForest => plain(rp_forest_knng(data, k, crate::init::RpForestParams { seed, ..cfg.rp_forest }, counters)?),
        InitMethod::Sw => {
            let (sw, graph) = build_sw_knng(data, k, crate::smallworld::SwParams { seed, ..cfg.sw }, counters)?;
            Initial { graph, search_graph: Some(sw.graph) }
        }
        InitMethod::Hnsw => {
            let (h, graph) = build_hnsw_knng(data, k, crate::smallworld::HnswParams { seed, ..cfg.hnsw }, counters)?;
            Initial { graph, search_graph: Some(h.graph) }
        }
    })
}

/// Runs INIT then NBPG on the current rayon pool. INIT and NBPG costs are
/// tallied separately; `observer` sees each refinement round.
pub fn build_graph(
    data: &Dataset,
    cfg: &PipelineConfig,
    init_counters: &mut Counters,
    nbpg_counters: &mut Counters,
    observer: Option<Observer<'_>>,
) -> Result<KnnGraph> {
    cfg.validate()?;
    let n_iter = cfg.effective_n_iter();
    let kg = crate::nbpg::KGraphParams { n_iter, seed: cfg.seed, filters: cfg.filters, ..cfg.kgraph };
    match (cfg.init, cfg.nbpg) {
        (_, NbpgMethod::NnDes) => {
            let p = NnDesParams { n_iter, seed: cfg.seed, filters: cfg.filters };
            nndes(data, cfg.k, p, nbpg_counters, observer)
        }
        (InitMethod::Random, NbpgMethod::KGraph) => {
            kgraph_refine(data, cfg.k, kg, None, nbpg_counters, observer)
        }
        (_, nbpg) => {
            let init = build_init(data, cfg, init_counters)?;
            match nbpg {
                NbpgMethod::None => Ok(init.graph),
                NbpgMethod::UniProp => uniprop(data, &init.graph, n_iter, cfg.filters, nbpg_counters, observer),
                NbpgMethod::KGraph => kgraph_refine(data, cfg.k, kg, Some(&init.graph), nbpg_counters, observer),
                NbpgMethod::Deep => match &init.search_graph {
                    Some(h) => deep_search(data, &init.graph, &h.layer(0), cfg.ef_search, cfg.filters, nbpg_counters),
                    None => deep_search(data, &init.graph, &init.graph, cfg.ef_search, cfg.filters, nbpg_counters),
                },
                NbpgMethod::NnDes => unreachable!("handled above"),
            }
        }
    }
}

/// Builds the graph and measures it against `oracle`.
pub fn run_pipeline(data: &Dataset, cfg: &PipelineConfig, oracle: &Oracle) -> Result<(KnnGraph, RunReport)> {
    cfg.validate()?;
    let mut ci = Counters::new();
    let mut cn = Counters::new();
    let start = Instant::now();
    let graph = in_pool(cfg.threads, || build_graph(data, cfg, &mut ci, &mut cn, None))?;
    let wall = start.elapsed().as_secs_f64();
    let report = make_report(data, cfg, oracle, &graph, &ci, &cn, wall)?;
    Ok((graph, report))
}

fn make_report(
    data: &Dataset,
    cfg: &PipelineConfig,
    oracle: &Oracle,
    graph: &KnnGraph,
    ci: &Counters,
    cn: &Counters,
    wall_seconds: f64,
) -> Result<RunReport> {
    let n = data.len();
    let init_ef = match cfg.init {
        InitMethod::Sw => Some(cfg.sw.ef_construction),
        InitMethod::Hnsw => Some(cfg.hnsw.ef_construction),
        _ => None,
    };
    let nbpg_ef = (cfg.nbpg == NbpgMethod::Deep).then_some(cfg.ef_search);
    let total = ci.total_dist + cn.total_dist;
    let (recall_r, class, h_001) = match oracle {
        Oracle::Exact(e) => {
            let h = data_hubness(&node_hubness(e), 0.01)?;
            (Some(reverse_recall(graph, e)?.mean), Some(classify_value(h)), Some(h))
        }
        Oracle::Sampled(_) => (None, None, None),
    };
    Ok(RunReport {
        method: cfg.method_name(),
        params: cfg.params(),
        n,
        k: cfg.k,
        recall: oracle.recall(graph)?,
        recall_r,
        estimated: oracle.is_estimate(),
        scan_rate: scan_rate_of(total, n),
        total_dist: total,
        expand_count: ci.expand_count + cn.expand_count,
        prune_count: ci.prune_count,
        prune_ratio: (cfg.init == InitMethod::Hnsw && ci.queries > 0)
            .then(|| ci.prune_count as f64 / (n * cfg.hnsw.m) as f64),
        init: StageReport::new(ci, init_ef),
        nbpg: StageReport::new(cn, nbpg_ef),
        wall_seconds,
        peak_aux_bytes: ci.peak_aux_bytes.max(cn.peak_aux_bytes),
        hubness_class: class,
        h_001,
    })
}

/// Large-parameter settings at which each family is taken as converged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvergedSchedule {
    pub uniprop_iters: usize,
    pub deep_ef_search: usize,
    pub kgraph_iters: usize,
}

impl Default for ConvergedSchedule {
    fn default() -> Self {
        Self {
            uniprop_iters: 4,
            deep_ef_search: 160,
            kgraph_iters: 16,
        }
    }
}

impl ConvergedSchedule {
    pub fn apply(&self, cfg: &PipelineConfig) -> PipelineConfig {
        let mut out = cfg.clone();
        match cfg.nbpg {
            NbpgMethod::UniProp => out.n_iter = Some(self.uniprop_iters),
            NbpgMethod::Deep => out.ef_search = self.deep_ef_search,
            NbpgMethod::KGraph | NbpgMethod::NnDes => out.n_iter = Some(self.kgraph_iters),
            NbpgMethod::None => {}
        }
        out
    }
}

/// Recall at the schedule's terminal setting.
pub fn converged_recall(
    data: &Dataset,
    cfg: &PipelineConfig,
    oracle: &Oracle,
    schedule: ConvergedSchedule,
) -> Result<RunReport> {
    run_pipeline(data, &schedule.apply(cfg), oracle).map(|r| r.1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub recall: f64,
    pub scan_rate: f64,
    pub total_dist: u64,
}

/// One run per value of `axis`, in ascending value order.
pub fn sweep(
    data: &Dataset,
    cfg: &PipelineConfig,
    oracle: &Oracle,
    axis: &str,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    if !cfg.is_axis(axis) {
        return arg_err(format!("'{axis}' is not a parameter of method {}", cfg.method_name()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rows = Vec::with_capacity(sorted.len());
    for v in sorted {
        let mut run = cfg.clone();
        run.apply(axis, &format!("{v}"))?;
        let (_, report) = run_pipeline(data, &run, oracle)?;
        rows.push(SweepRow {
            value: v,
            recall: report.recall,
            scan_rate: report.scan_rate,
            total_dist: report.total_dist,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv(mut w: impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "value,recall,scan_rate,total_dist")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.value, r.recall, r.scan_rate, r.total_dist)?;
    }
    Ok(())
}
