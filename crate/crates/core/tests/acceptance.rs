//! End-to-end acceptance checks. Runs single-threaded, prints one line per
//! criterion and exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use knng::harness::{build_graph, PipelineConfig};
use knng::hubness::{bucketed_accuracy, data_hubness, group_mean, hub_quantiles, node_hubness, HubnessProfile};
use knng::init::{lsh_partition_knng, multiple_division, random_knng, rp_forest_knng, DivisionParams, LshParams, RpForestParams};
use knng::metrics::{recall, reverse_recall};
use knng::nbpg::{deep_search, kgraph_refine, nndes, uniprop, Filters, KGraphParams, NnDesParams};
use knng::smallworld::{build_hnsw_knng, build_sw_knng, HnswParams, SwParams};
use knng::{exact_knng, synth, Counters, Dataset, ExactKnng, KnnGraph};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const K: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
    /// Digest of everything computed for seed 0 (or the whole run when unseeded).
    digest: u64,
}

#[derive(Default)]
struct Digest(DefaultHasher);

impl Digest {
    fn graph(&mut self, g: &KnnGraph) {
        g.k().hash(&mut self.0);
        for row in g.rows() {
            for e in row {
                e.id.hash(&mut self.0);
                e.dist.to_bits().hash(&mut self.0);
            }
        }
    }

    fn counters(&mut self, c: &Counters) {
        (c.total_dist, c.expand_count, c.prune_count, c.queries).hash(&mut self.0);
        c.expand_hist.hash(&mut self.0);
    }

    fn value(&mut self, x: f64) {
        x.to_bits().hash(&mut self.0);
    }

    fn finish(&self) -> u64 {
        self.0.finish()
    }
}

fn oracle(data: &Dataset, k: usize) -> ExactKnng {
    exact_knng(data, k, &mut Counters::new()).unwrap()
}

fn config(text: &str, seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_text(text).unwrap();
    cfg.seed = seed;
    cfg.threads = 1;
    cfg
}

fn pairs(n: usize) -> f64 {
    n as f64 * (n as f64 - 1.0) / 2.0
}

// ---------------------------------------------------------------------------

fn naive_rows(data: &Dataset, k: usize) -> Vec<Vec<u32>> {
    let n = data.len() as u32;
    (0..n)
        .map(|u| {
            let a = data.point(u);
            let mut all: Vec<(f64, u32)> = (0..n)
                .filter(|&v| v != u)
                .map(|v| {
                    let b = data.point(v);
                    let d: f64 = a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum();
                    (d, v)
                })
                .collect();
            all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            all.truncate(k);
            all.into_iter().map(|(_, v)| v).collect()
        })
        .collect()
}

fn a1_datasets(seed: u64) -> Vec<Dataset> {
    let mut out = Vec::new();
    for (i, (n, d)) in [(200, 4), (200, 32), (2000, 4), (2000, 32)].into_iter().enumerate() {
        out.push(synth::gaussian(n, d, seed * 4 + i as u64 + 100).unwrap());
    }
    out
}

fn oracle_equivalence(seeds: &[u64]) -> Outcome {
    let mut digest = Digest::default();
    let (mut datasets, mut row_mismatch, mut bad_self, mut bad_sum) = (0, 0usize, 0, 0);
    for &seed in seeds {
        for data in a1_datasets(seed) {
            datasets += 1;
            let exact = oracle(&data, K);
            let naive = naive_rows(&data, K);
            for (u, row) in naive.iter().enumerate() {
                let ids: Vec<u32> = exact.graph().row(u as u32).iter().map(|e| e.id).collect();
                if &ids != row {
                    row_mismatch += 1;
                }
            }
            if recall(exact.graph(), &exact).unwrap() != 1.0 {
                bad_self += 1;
            }
            let p = node_hubness(&exact);
            if p.counts().iter().map(|&h| h as usize).sum::<usize>() != data.len() * K {
                bad_sum += 1;
            }
            if seed == 0 {
                digest.graph(exact.graph());
            }
        }
    }
    Outcome {
        pass: row_mismatch == 0 && bad_self == 0 && bad_sum == 0,
        detail: format!(
            "{datasets} datasets; mismatched rows {row_mismatch}, self-recall failures {bad_self}, hub-sum failures {bad_sum}"
        ),
        digest: digest.finish(),
    }
}

// ---------------------------------------------------------------------------

fn degenerate_exactness() -> Outcome {
    let mut digest = Digest::default();
    let mut results: Vec<(&str, f64)> = Vec::new();
    let k = 10;
    let data = synth::gaussian(300, 8, 7).unwrap();
    let exact = oracle(&data, k);
    let small = synth::gaussian(k + 1, 8, 8).unwrap();
    let small_exact = oracle(&small, k);
    let mut check = |name, g: KnnGraph, ex: &ExactKnng| {
        digest.graph(&g);
        results.push((name, recall(&g, ex).unwrap()));
    };
    let c = &mut Counters::new();
    check("random", random_knng(&small, k, 1, c).unwrap(), &small_exact);
    let div = DivisionParams { t_div: 300, l_div: 1, seed: 1, ..DivisionParams::default() };
    check("division", multiple_division(&data, k, div, c).unwrap(), &exact);
    let lsh = LshParams { t_hash: 300, l_hash: 1, seed: 1, ..LshParams::default() };
    check("lsh", lsh_partition_knng(&data, k, lsh, c).unwrap(), &exact);
    let rp = RpForestParams { l_tree: 1, leaf_size: 300, seed: 1 };
    check("rp-forest", rp_forest_knng(&data, k, rp, c).unwrap(), &exact);
    let sw = SwParams { m: k, ef_construction: 1, seed: 1 };
    check("sw", build_sw_knng(&small, k, sw, c).unwrap().1, &small_exact);
    let hnsw = HnswParams { m: 20, ef_construction: 1, seed: 1 };
    check("hnsw", build_hnsw_knng(&small, k, hnsw, c).unwrap().1, &small_exact);
    let failed: Vec<_> = results.iter().filter(|r| r.1 != 1.0).collect();
    Outcome {
        pass: failed.is_empty(),
        detail: results.iter().map(|(n, r)| format!("{n} {r:.3}")).collect::<Vec<_>>().join(", "),
        digest: digest.finish(),
    }
}

// ---------------------------------------------------------------------------

struct RefineRun {
    kgraph: f64,
    deep: f64,
    uni_t2: f64,
    uni_t4: f64,
    heads_ok: bool,
    warm: f64,
    cold_at_warm_cost: f64,
    digest: u64,
}

/// Recall of a (cost, recall) curve at `cost`, interpolated and clamped.
fn recall_at(curve: &[(f64, f64)], cost: f64) -> f64 {
    if cost <= curve[0].0 {
        return curve[0].1;
    }
    for w in curve.windows(2) {
        let ((c0, r0), (c1, r1)) = (w[0], w[1]);
        if cost <= c1 {
            return r0 + (r1 - r0) * (cost - c0) / (c1 - c0).max(f64::MIN_POSITIVE);
        }
    }
    curve[curve.len() - 1].1
}

/// Observer state that records recall per round and checks that no row's
/// k-th distance ever grows.
struct Tracker<'a> {
    exact: &'a ExactKnng,
    offset: u64,
    heads: Option<Vec<f32>>,
    heads_ok: bool,
    curve: Vec<(f64, f64)>,
    recalls: Vec<f64>,
}

impl<'a> Tracker<'a> {
    fn new(exact: &'a ExactKnng, offset: u64) -> Self {
        Self { exact, offset, heads: None, heads_ok: true, curve: Vec::new(), recalls: Vec::new() }
    }

    fn see(&mut self, g: &KnnGraph, c: &Counters) {
        let heads: Vec<f32> = g.rows().iter().map(|r| r.last().map_or(f32::INFINITY, |e| e.dist)).collect();
        if let Some(prev) = &self.heads {
            self.heads_ok &= prev.iter().zip(&heads).all(|(a, b)| b <= a);
        }
        self.heads = Some(heads);
        let r = recall(g, self.exact).unwrap();
        self.recalls.push(r);
        self.curve.push(((c.total_dist + self.offset) as f64, r));
    }
}

fn refine_run(seed: u64) -> RefineRun {
    let mut digest = Digest::default();
    let (data, _) = synth::clustered_gaussian(10_000, 16, 10, 2.0, seed).unwrap();
    let exact = oracle(&data, K);

    let cfg = config("method=kgraph\nn_iter=16", seed);
    let mut cold = Tracker::new(&exact, 0);
    let (mut ci, mut cn) = (Counters::new(), Counters::new());
    let g = build_graph(&data, &cfg, &mut ci, &mut cn, Some(&mut |_, g, c| cold.see(g, c))).unwrap();
    let kgraph = recall(&g, &exact).unwrap();
    digest.graph(&g);
    digest.counters(&cn);

    let mut cfg = config("method=deep-hnsw", seed);
    cfg.ef_search = 160;
    let (mut ci, mut cn) = (Counters::new(), Counters::new());
    let g = build_graph(&data, &cfg, &mut ci, &mut cn, None).unwrap();
    let deep = recall(&g, &exact).unwrap();
    digest.graph(&g);
    digest.counters(&cn);

    let cfg = config("method=uni-hnsw\nn_iter=4", seed);
    let mut uni = Tracker::new(&exact, 0);
    let g = build_graph(&data, &cfg, &mut Counters::new(), &mut Counters::new(), Some(&mut |_, g, c| uni.see(g, c)))
        .unwrap();
    digest.graph(&g);

    // warm start: HNSW initial graph handed to KGraph
    let cfg = config("init=hnsw\nnbpg=kgraph\nn_iter=16", seed);
    let mut init_counters = Counters::new();
    let g0 = build_graph(&data, &config("init=hnsw\nnbpg=none", seed), &mut init_counters, &mut Counters::new(), None)
        .unwrap();
    let mut warm = Tracker::new(&exact, init_counters.total_dist);
    let (mut ci, mut cn) = (Counters::new(), Counters::new());
    let gw = build_graph(&data, &cfg, &mut ci, &mut cn, Some(&mut |_, g, c| warm.see(g, c))).unwrap();
    assert_eq!(ci.total_dist, init_counters.total_dist);
    warm.heads_ok &= g0.rows().iter().zip(gw.rows()).all(|(a, b)| b.last().unwrap().dist <= a.last().unwrap().dist);
    digest.graph(&gw);
    let warm_cost = (ci.total_dist + cn.total_dist) as f64;
    let mut cold_curve = vec![(0.0, 0.0)];
    cold_curve.extend(&cold.curve);

    RefineRun {
        kgraph,
        deep,
        uni_t2: uni.recalls[1],
        uni_t4: uni.recalls[3],
        heads_ok: cold.heads_ok && uni.heads_ok && warm.heads_ok,
        warm: recall(&gw, &exact).unwrap(),
        cold_at_warm_cost: recall_at(&cold_curve, warm_cost),
        digest: digest.finish(),
    }
}

fn within(values: &[f64], floor: f64, tol: f64) -> (bool, f64) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (mean >= floor && values.iter().all(|v| (v - mean).abs() <= tol), mean)
}

fn refinement_power(runs: &[RefineRun]) -> Outcome {
    let kg: Vec<f64> = runs.iter().map(|r| r.kgraph).collect();
    let dp: Vec<f64> = runs.iter().map(|r| r.deep).collect();
    let (ok_kg, m_kg) = within(&kg, 0.90, 0.03);
    let (ok_dp, m_dp) = within(&dp, 0.90, 0.03);
    let gaps: Vec<f64> = runs.iter().map(|r| r.uni_t4 - r.uni_t2).collect();
    let max_gap = gaps.iter().cloned().fold(f64::MIN, f64::max);
    Outcome {
        pass: ok_kg && ok_dp && max_gap < 0.02,
        detail: format!(
            "kgraph mean {m_kg:.4} (min {:.4}), deep-hnsw mean {m_dp:.4} (min {:.4}), uniprop max gap t4-t2 {max_gap:.4}",
            kg.iter().cloned().fold(1.0, f64::min),
            dp.iter().cloned().fold(1.0, f64::min)
        ),
        digest: runs[0].digest,
    }
}

fn monotonicity(runs: &[RefineRun]) -> Outcome {
    let heads = runs.iter().all(|r| r.heads_ok);
    let diffs: Vec<f64> = runs.iter().map(|r| r.warm - r.cold_at_warm_cost).collect();
    let worst = diffs.iter().cloned().fold(0.0, |a: f64, d| if d.abs() > a.abs() { d } else { a });
    Outcome {
        pass: heads && worst.abs() <= 0.02,
        detail: format!(
            "row heads non-increasing: {heads} (debug asserts {}); warm minus cold recall at matched cost, worst {worst:+.4}",
            if cfg!(debug_assertions) { "on" } else { "off" }
        ),
        digest: runs[0].digest,
    }
}

// ---------------------------------------------------------------------------

fn filter_neutrality() -> Outcome {
    let mut digest = Digest::default();
    let k = 10;
    let (data, _) = synth::clustered_gaussian(3000, 16, 10, 2.0, 21).unwrap();
    let combos = [Filters::OFF, Filters { global: true, local: false }, Filters { global: false, local: true }, Filters::ON];
    let g0 = random_knng(&data, k, 3, &mut Counters::new()).unwrap();
    let (h, hg0) = build_hnsw_knng(&data, k, HnswParams { m: 12, ef_construction: 20, seed: 3 }, &mut Counters::new()).unwrap();
    let layer = h.graph.layer(0);

    let mut families: BTreeMap<&str, Vec<(KnnGraph, u64)>> = BTreeMap::new();
    for f in combos {
        let mut run = |name, body: &dyn Fn(&mut Counters) -> KnnGraph| {
            let mut c = Counters::new();
            let g = body(&mut c);
            families.entry(name).or_default().push((g, c.total_dist));
        };
        run("uniprop", &|c| uniprop(&data, &g0, 4, f, c, None).unwrap());
        run("nndes", &|c| nndes(&data, k, NnDesParams { n_iter: 6, seed: 3, filters: f }, c, None).unwrap());
        let kg = KGraphParams { n_iter: 8, seed: 3, filters: f, ..KGraphParams::default() };
        run("kgraph", &|c| kgraph_refine(&data, k, kg, None, c, None).unwrap());
        run("deep", &|c| deep_search(&data, &hg0, &layer, 40, f, c).unwrap());
    }
    let mut pass = true;
    let mut parts = Vec::new();
    let mut any_strict = false;
    for (name, runs) in &families {
        let off = &runs[0];
        let on = &runs[3];
        let identical = runs.iter().all(|(g, _)| g == &off.0 && knng::io::graph_bytes(g) == knng::io::graph_bytes(&off.0));
        let no_worse = runs.iter().all(|(_, d)| *d <= off.1);
        pass &= identical && no_worse;
        any_strict |= on.1 < off.1;
        parts.push(format!("{name} identical={identical} dist on/off {}/{}", on.1, off.1));
        for (g, d) in runs {
            digest.graph(g);
            d.hash(&mut digest.0);
        }
    }
    Outcome { pass: pass && any_strict, detail: parts.join("; "), digest: digest.finish() }
}

// ---------------------------------------------------------------------------

fn hubness_formula() -> Outcome {
    let mut digest = Digest::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    for seed in SEEDS {
        for data in a1_datasets(seed) {
            checked += 1;
            let exact = oracle(&data, K);
            let p = node_hubness(&exact);
            let h0 = data_hubness(&p, 0.0).unwrap();
            let h1 = data_hubness(&p, 1.0).unwrap();
            if h0.abs() > 1e-9 || (h1 - 1.0).abs() > 1e-9 {
                failures.push(format!("H(0)={h0} H(1)={h1}"));
            }
            let g = random_knng(&data, K, seed, &mut Counters::new()).unwrap();
            let buckets = bucketed_accuracy(&g, &exact, &p, &[0, 5, 10, 20, 40]).unwrap();
            let count: usize = buckets.iter().map(|b| b.count).sum();
            let weighted: f64 = buckets.iter().filter_map(|b| b.recall.map(|r| r * b.count as f64)).sum();
            let global = recall(&g, &exact).unwrap();
            let rr = reverse_recall(&g, &exact).unwrap();
            let rcount: usize = buckets.iter().map(|b| b.recall_r_count).sum();
            let rweighted: f64 = buckets.iter().filter_map(|b| b.recall_r.map(|r| r * b.recall_r_count as f64)).sum();
            if count != data.len()
                || (weighted / count as f64 - global).abs() > 1e-9
                || (rweighted / rcount as f64 - rr.mean).abs() > 1e-9
            {
                failures.push(format!("bucket identity broken on n={} d={}", data.len(), data.dim()));
            }
            digest.value(h0);
            digest.value(weighted);
        }
    }
    let line = Dataset::from_rows(&[[0.0f32], [1.0], [3.0], [7.0]]).unwrap();
    let p = node_hubness(&oracle(&line, 1));
    let h = p.counts().to_vec();
    let h_quarter = data_hubness(&p, 0.25).unwrap();
    if h != vec![1, 2, 1, 0] || (h_quarter - 0.5).abs() > 1e-12 {
        failures.push(format!("four-point example gave h={h:?} H(0.25)={h_quarter}"));
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{checked} datasets plus the four-point line: h={h:?}, H(0.25)={h_quarter}")
        } else {
            failures.join("; ")
        },
        digest: digest.finish(),
    }
}

// ---------------------------------------------------------------------------

/// Cheapest scan rate at which any path reaches `target`, interpolating
/// linearly between consecutive points of a path.
fn scan_to_reach(paths: &[Vec<(f64, f64)>], target: f64) -> f64 {
    let mut best = f64::INFINITY;
    for path in paths {
        if path[0].1 >= target {
            best = best.min(path[0].0);
            continue;
        }
        for w in path.windows(2) {
            let ((s0, r0), (s1, r1)) = (w[0], w[1]);
            if r0 < target && r1 >= target {
                best = best.min(s0 + (target - r0) / (r1 - r0) * (s1 - s0));
                break;
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Costs {
    kgraph: f64,
    deep: f64,
    uniprop: f64,
}

struct HubRun {
    h01: [f64; 2],
    costs: [Costs; 2],
    top_gain: f64,
    bottom_gain: f64,
    digest: u64,
}

const TARGET: f64 = 0.8;
const GRID_EFC: [usize; 4] = [10, 20, 40, 80];
const GRID_EF: [usize; 4] = [10, 20, 40, 80];

fn costs_for(data: &Dataset, exact: &ExactKnng, seed: u64, digest: &mut Digest) -> Costs {
    let n = data.len();
    let scan = |d: u64| d as f64 / pairs(n);

    let cfg = config("method=kgraph\nn_iter=8", seed);
    let mut kg = vec![(0.0, 0.0)];
    let mut nc = Counters::new();
    build_graph(data, &cfg, &mut Counters::new(), &mut nc, Some(&mut |_, g, c| {
        kg.push((scan(c.total_dist), recall(g, exact).unwrap()))
    }))
    .unwrap();
    digest.counters(&nc);

    let (mut deep_paths, mut uni_paths) = (Vec::new(), Vec::new());
    for efc in GRID_EFC {
        let mut ci = Counters::new();
        let (h, g0) = build_hnsw_knng(data, K, HnswParams { m: 20, ef_construction: efc, seed }, &mut ci).unwrap();
        let start = (scan(ci.total_dist), recall(&g0, exact).unwrap());
        digest.graph(&g0);

        let mut uni = vec![start];
        uniprop(data, &g0, 3, Filters::ON, &mut Counters::new(), Some(&mut |_, g, c| {
            uni.push((scan(ci.total_dist + c.total_dist), recall(g, exact).unwrap()))
        }))
        .unwrap();
        uni_paths.push(uni);

        let layer = h.graph.layer(0);
        let mut deep = vec![start];
        for ef in GRID_EF {
            let mut c = Counters::new();
            let g = deep_search(data, &g0, &layer, ef, Filters::ON, &mut c).unwrap();
            deep.push((scan(ci.total_dist + c.total_dist), recall(&g, exact).unwrap()));
            digest.counters(&c);
        }
        deep_paths.push(deep);
    }
    Costs {
        kgraph: scan_to_reach(&[kg], TARGET),
        deep: scan_to_reach(&deep_paths, TARGET),
        uniprop: scan_to_reach(&uni_paths, TARGET),
    }
}

fn hub_run(seed: u64) -> HubRun {
    let mut digest = Digest::default();
    let low = synth::uniform_hypercube(20_000, 8, seed).unwrap();
    let high = synth::gaussian(20_000, 64, seed).unwrap();
    let mut h01 = [0.0; 2];
    let mut costs = Vec::new();
    let mut profiles: Vec<HubnessProfile> = Vec::new();
    let mut high_exact = None;
    for (i, data) in [&low, &high].into_iter().enumerate() {
        let exact = oracle(data, K);
        let p = node_hubness(&exact);
        h01[i] = data_hubness(&p, 0.1).unwrap();
        digest.value(h01[i]);
        costs.push(costs_for(data, &exact, seed, &mut digest));
        profiles.push(p);
        if i == 1 {
            high_exact = Some(exact);
        }
    }

    // one UniProp round from a roughly half-right initial graph
    let exact = high_exact.unwrap();
    let (_, g0) = build_hnsw_knng(&high, K, HnswParams { m: 20, ef_construction: 32, seed }, &mut Counters::new()).unwrap();
    let g1 = uniprop(&high, &g0, 1, Filters::ON, &mut Counters::new(), None).unwrap();
    let r0 = reverse_recall(&g0, &exact).unwrap();
    let r1 = reverse_recall(&g1, &exact).unwrap();
    let deciles = hub_quantiles(&profiles[1], 10).unwrap();
    let gain = |grp: &[u32]| group_mean(&r1.per_node, grp).unwrap() - group_mean(&r0.per_node, grp).unwrap();
    let (top_gain, bottom_gain) = (gain(&deciles[0]), gain(&deciles[9]));
    digest.graph(&g1);
    digest.value(top_gain);

    HubRun { h01, costs: [costs[0], costs[1]], top_gain, bottom_gain, digest: digest.finish() }
}

fn hubness_trend(runs: &[HubRun]) -> Outcome {
    let h_ok = runs.iter().all(|r| r.h01[1] > r.h01[0]);
    let majority = runs.len() / 2 + 1;
    let pick: [(&str, fn(&Costs) -> f64); 3] =
        [("kgraph", |c| c.kgraph), ("deep-hnsw", |c| c.deep), ("uniprop", |c| c.uniprop)];
    let mut pass = h_ok;
    let mut parts = vec![format!(
        "H(0.1) uniform/gaussian {}",
        runs.iter().map(|r| format!("{:.3}/{:.3}", r.h01[0], r.h01[1])).collect::<Vec<_>>().join(" ")
    )];
    for (name, f) in pick {
        let wins = runs.iter().filter(|r| f(&r.costs[1]) > f(&r.costs[0])).count();
        pass &= wins >= majority;
        parts.push(format!(
            "{name} scan to {TARGET} larger on gaussian in {wins}/{} (seed 0: {:.4} vs {:.4})",
            runs.len(),
            f(&runs[0].costs[0]),
            f(&runs[0].costs[1])
        ));
    }
    Outcome { pass, detail: parts.join("; "), digest: runs[0].digest }
}

fn hub_accuracy(runs: &[HubRun]) -> Outcome {
    let wins = runs.iter().filter(|r| r.top_gain > r.bottom_gain).count();
    Outcome {
        pass: wins > runs.len() / 2,
        detail: format!(
            "top decile gain above bottom in {wins}/{}; gains {}",
            runs.len(),
            runs.iter().map(|r| format!("{:.3}/{:.3}", r.top_gain, r.bottom_gain)).collect::<Vec<_>>().join(" ")
        ),
        digest: runs[0].digest,
    }
}

// ---------------------------------------------------------------------------

fn construction_instrumentation() -> Outcome {
    let mut digest = Digest::default();
    let data = synth::gaussian(20_000, 64, 0).unwrap();
    let m = 20;
    let mut ratios = Vec::new();
    let mut prune_80 = 0;
    for efc in [20usize, 40, 80, 160] {
        let mut c = Counters::new();
        build_hnsw_knng(&data, K, HnswParams { m, ef_construction: efc, seed: 0 }, &mut c).unwrap();
        ratios.push(c.mean_expand() / efc as f64);
        if efc == 80 {
            prune_80 = c.prune_count;
        }
        digest.counters(&c);
    }
    let bound = (data.len() * m / 4) as u64;
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: decreasing && prune_80 < bound,
        detail: format!(
            "expand/efC {}; prune at efC=80 {prune_80} (bound {bound})",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(" ")
        ),
        digest: digest.finish(),
    }
}

// ---------------------------------------------------------------------------

fn guarded<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())
    })
}

fn report(id: &str, name: &str, outcome: &Result<Outcome, String>, started: Instant) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => {
            println!("{id} {name}: {} [{secs:.0}s] {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(msg) => {
            println!("{id} {name}: FAIL [{secs:.0}s] panicked: {msg}");
            false
        }
    }
}

fn main() -> ExitCode {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let ok = pool.install(|| {
        let mut ok = true;
        let mut digests: BTreeMap<&str, u64> = BTreeMap::new();
        let mut record = |id: &'static str, name: &str, o: Result<Outcome, String>, t: Instant| {
            let pass = report(id, name, &o, t);
            if let Ok(o) = o {
                digests.insert(id, o.digest);
            }
            pass
        };

        let t = Instant::now();
        ok &= record("A1", "oracle equivalence", guarded(|| oracle_equivalence(&SEEDS)), t);
        let t = Instant::now();
        ok &= record("A2", "degenerate-input exactness", guarded(degenerate_exactness), t);

        let t = Instant::now();
        let refine = guarded(|| SEEDS.iter().map(|&s| refine_run(s)).collect::<Vec<_>>());
        let refine_secs = t.elapsed();
        ok &= record("A3", "refinement power", refine.as_ref().map(|r| refinement_power(r)).map_err(Clone::clone), t);
        let t = Instant::now();
        ok &= record("A4", "filter neutrality", guarded(filter_neutrality), t);
        let t = Instant::now();
        ok &= record("A5", "hubness formula", guarded(hubness_formula), t);

        let t = Instant::now();
        let hubs = guarded(|| SEEDS.iter().map(|&s| hub_run(s)).collect::<Vec<_>>());
        ok &= record("A6", "hubness-effect trend", hubs.as_ref().map(|r| hubness_trend(r)).map_err(Clone::clone), t);
        ok &= record("A7", "node-hubness accuracy effect", hubs.as_ref().map(|r| hub_accuracy(r)).map_err(Clone::clone), t);
        let t = Instant::now();
        ok &= record("A8", "construction instrumentation", guarded(construction_instrumentation), t);
        ok &= record("A9", "monotonicity", refine.as_ref().map(|r| monotonicity(r)).map_err(Clone::clone), Instant::now() - refine_secs);

        // rerun the seed-0 slice of every criterion and compare digests
        let t = Instant::now();
        let rerun = guarded(|| {
            let refine0 = vec![refine_run(0)];
            let hubs0 = vec![hub_run(0)];
            let again: Vec<(&str, u64)> = vec![
                ("A1", oracle_equivalence(&[0]).digest),
                ("A2", degenerate_exactness().digest),
                ("A3", refinement_power(&refine0).digest),
                ("A4", filter_neutrality().digest),
                ("A5", hubness_formula().digest),
                ("A6", hubness_trend(&hubs0).digest),
                ("A7", hub_accuracy(&hubs0).digest),
                ("A8", construction_instrumentation().digest),
                ("A9", monotonicity(&refine0).digest),
            ];
            let differing: Vec<&str> =
                again.iter().filter(|(id, d)| digests.get(id) != Some(d)).map(|(id, _)| *id).collect();
            Outcome {
                pass: differing.is_empty(),
                detail: if differing.is_empty() {
                    format!("{} seed-0 digests identical on rerun", again.len())
                } else {
                    format!("digests differ for {}", differing.join(", "))
                },
                digest: 0,
            }
        });
        ok &= report("A10", "reproducibility", &rerun, t);
        ok
    });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
