use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knng::harness::{build_graph, run_pipeline, sweep, write_sweep_csv, NbpgMethod, Oracle, PipelineConfig};
use knng::hubness::{
    bucketed_accuracy, classify_hubness, data_hubness, hubness_curve, node_hubness, write_bucket_csv,
    write_curve_csv,
};
use knng::io::{load_dataset, load_graph, save_graph};
use knng::metrics::scan_rate_of;
use knng::nbpg::{deep_search, kgraph_refine, uniprop, KGraphParams};
use knng::{Counters, Dataset, Error, KnnGraph};

const THREADS_ENV: &str = "KNNG_THREADS";

#[derive(Parser)]
#[command(name = "knng", version, about = "Build and evaluate k-nearest-neighbor graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the exact graph by brute force and save it.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an initial graph only.
    Init {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine a saved initial graph with the configured propagation method.
    Refine {
        #[command(flatten)]
        common: Common,
        /// Initial graph to refine.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Initial graph, refinement and evaluation; writes the graph and a JSON report.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: Eval,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// One pipeline run per value of a parameter; writes a CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: Eval,
        #[arg(long)]
        axis: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "")]
        values: String,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hubness of a dataset, optionally with per-bucket accuracy of a graph.
    Hubness {
        #[command(flatten)]
        common: Common,
        /// Write the H(x) curve as CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Graph whose accuracy is bucketed by node hubness.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, requires = "graph")]
        buckets: Option<PathBuf>,
        /// Bucket lower edges, ascending.
        #[arg(long, default_value = "0,1,2,5,10,20,50,100")]
        edges: String,
    },
    /// Check and summarize a JSON run report.
    Report { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Dataset path (same as --set data=PATH).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct Eval {
    /// Fall back to a sampled-query oracle above the oracle cap.
    #[arg(long)]
    estimate: bool,
}

impl Common {
    /// Config file, then the thread variable, then `--data`, then `--set`.
    fn config(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_text(&fs::read_to_string(p)?)?,
            None => PipelineConfig::default(),
        };
        if let Ok(t) = std::env::var(THREADS_ENV) {
            cfg.apply("threads", &t)?;
        }
        if let Some(d) = &self.data {
            cfg.data = Some(d.clone());
        }
        for s in &self.sets {
            cfg.apply_override(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dataset(cfg: &PipelineConfig) -> Result<Dataset, Error> {
    match &cfg.data {
        Some(p) => load_dataset(p, cfg.format),
        None => Err(Error::Argument("no dataset given (use --data or set data=PATH)".into())),
    }
}

fn pool(cfg: &PipelineConfig) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {} threads: {e}", cfg.threads)))
}

fn output(flag: &Option<PathBuf>, cfg_path: &Option<PathBuf>, what: &str) -> Result<PathBuf, Error> {
    flag.clone()
        .or_else(|| cfg_path.clone())
        .ok_or_else(|| Error::Argument(format!("no {what} output path (use --out or set graph_out=PATH)")))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    Ok(())
}

fn cost_line(n: usize, c: &Counters) -> String {
    format!("total_dist {} scan_rate {:.6}", c.total_dist, scan_rate_of(c.total_dist, n))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::Argument(format!("bad {what} value '{t}'"))))
        .collect()
}

fn refine(data: &Dataset, cfg: &PipelineConfig, g0: &KnnGraph, counters: &mut Counters) -> Result<KnnGraph, Error> {
    if g0.k() != cfg.k {
        return Err(Error::Argument(format!("graph has k = {} but k = {}", g0.k(), cfg.k)));
    }
    let n_iter = cfg.effective_n_iter();
    match cfg.nbpg {
        NbpgMethod::None => Ok(g0.clone()),
        NbpgMethod::UniProp => uniprop(data, g0, n_iter, cfg.filters, counters, None),
        NbpgMethod::KGraph => {
            let p = KGraphParams { n_iter, seed: cfg.seed, filters: cfg.filters, ..cfg.kgraph };
            kgraph_refine(data, cfg.k, p, Some(g0), counters, None)
        }
        // without a saved proximity graph the initial graph is searched itself
        NbpgMethod::Deep => deep_search(data, g0, g0, cfg.ef_search, cfg.filters, counters),
        NbpgMethod::NnDes => {
            Err(Error::Argument("nndes starts from its own random graph; use the pipeline command".into()))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Oracle { common, out } => {
            let cfg = common.config()?;
            let data = dataset(&cfg)?;
            let path = output(&out, &cfg.oracle, "oracle")?;
            if data.len() > cfg.oracle_cap {
                return Err(Error::OracleCap { n: data.len(), cap: cfg.oracle_cap });
            }
            let mut c = Counters::new();
            let exact = pool(&cfg)?.install(|| knng::exact_knng(&data, cfg.k, &mut c))?;
            save_graph(&path, exact.graph())?;
            println!("oracle n {} k {} {}", data.len(), cfg.k, cost_line(data.len(), &c));
        }
        Command::Init { common, out } => {
            let mut cfg = common.config()?;
            cfg.nbpg = NbpgMethod::None;
            let data = dataset(&cfg)?;
            let path = output(&out, &cfg.graph_out, "graph")?;
            let mut c = Counters::new();
            let g = pool(&cfg)?.install(|| build_graph(&data, &cfg, &mut c, &mut Counters::new(), None))?;
            save_graph(&path, &g)?;
            println!("init {} {}", cfg.init, cost_line(data.len(), &c));
        }
        Command::Refine { common, graph, out } => {
            let cfg = common.config()?;
            let data = dataset(&cfg)?;
            let path = output(&out, &cfg.graph_out, "graph")?;
            let g0 = load_graph(&graph, &data)?;
            let mut c = Counters::new();
            let g = pool(&cfg)?.install(|| refine(&data, &cfg, &g0, &mut c))?;
            save_graph(&path, &g)?;
            println!("refine {} {}", cfg.nbpg, cost_line(data.len(), &c));
        }
        Command::Pipeline { common, eval, out, report } => {
            let mut cfg = common.config()?;
            cfg.estimate |= eval.estimate;
            let data = dataset(&cfg)?;
            let oracle = Oracle::prepare(&data, &cfg)?;
            let (g, rep) = run_pipeline(&data, &cfg, &oracle)?;
            if let Some(p) = out.or(cfg.graph_out.clone()) {
                save_graph(p, &g)?;
            }
            let json = rep.to_json();
            match report.or(cfg.report_out.clone()) {
                Some(p) => write_text(&p, &json)?,
                None => println!("{json}"),
            }
        }
        Command::Sweep { common, eval, axis, values, out } => {
            let mut cfg = common.config()?;
            cfg.estimate |= eval.estimate;
            let values: Vec<f64> = parse_list(&values, &axis)?;
            if !cfg.is_axis(&axis) {
                return Err(Error::Argument(format!("'{axis}' is not a parameter of method {}", cfg.method_name())));
            }
            let rows = if values.is_empty() {
                Vec::new()
            } else {
                let data = dataset(&cfg)?;
                let oracle = Oracle::prepare(&data, &cfg)?;
                sweep(&data, &cfg, &oracle, &axis, &values)?
            };
            let mut csv = Vec::new();
            write_sweep_csv(&mut csv, &rows)?;
            match out {
                Some(p) => fs::write(p, csv)?,
                None => std::io::stdout().write_all(&csv)?,
            }
        }
        Command::Hubness { common, curve, graph, buckets, edges } => {
            let cfg = common.config()?;
            let data = dataset(&cfg)?;
            let exact = match Oracle::prepare(&data, &cfg)? {
                Oracle::Exact(e) => e,
                Oracle::Sampled(_) => unreachable!("estimation is never enabled here"),
            };
            let profile = node_hubness(&exact);
            println!(
                "n {} k {} H(0.01) {:.6} H(0.1) {:.6} class {}",
                data.len(),
                cfg.k,
                data_hubness(&profile, 0.01)?,
                data_hubness(&profile, 0.1)?,
                classify_hubness(&profile)
            );
            if let Some(p) = curve {
                let xs: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
                let mut f = fs::File::create(p)?;
                write_curve_csv(&mut f, &hubness_curve(&profile, &xs)?)?;
            }
            if let Some(gp) = graph {
                let g = load_graph(&gp, &data)?;
                let edges: Vec<u32> = parse_list(&edges, "edge")?;
                let b = bucketed_accuracy(&g, &exact, &profile, &edges)?;
                match buckets {
                    Some(p) => write_bucket_csv(fs::File::create(p)?, &b)?,
                    None => write_bucket_csv(std::io::stdout(), &b)?,
                }
            }
        }
        Command::Report { path } => {
            let text = fs::read_to_string(&path)?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Format { offset: 0, message: format!("report is not JSON: {e}") })?;
            let field = |name: &str| {
                v.get(name).and_then(serde_json::Value::as_f64).ok_or_else(|| Error::Format {
                    offset: 0,
                    message: format!("report has no numeric field '{name}'"),
                })
            };
            let (n, total, scan) = (field("n")?, field("total_dist")?, field("scan_rate")?);
            let expected = scan_rate_of(total as u64, n as usize);
            if (expected - scan).abs() > 1e-12 {
                return Err(Error::Format {
                    offset: 0,
                    message: format!("scan_rate {scan} does not match total_dist (expected {expected})"),
                });
            }
            println!(
                "method {} n {} recall {:.6}{} scan_rate {:.6} total_dist {}",
                v.get("method").and_then(|m| m.as_str()).unwrap_or("?"),
                n,
                field("recall")?,
                if v.get("estimated").and_then(|e| e.as_bool()) == Some(true) { " (estimated)" } else { "" },
                scan,
                total
            );
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => 2,
        Error::Format { .. } => 3,
        Error::OracleCap { .. } => 4,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
