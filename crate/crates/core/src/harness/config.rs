//! Pipeline configuration: `key = value` lines plus overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{arg_err, Error, Result};
use crate::init::{DivisionParams, LshParams, RpForestParams};
use crate::io::DatasetFormat;
use crate::nbpg::{Filters, KGraphParams};
use crate::smallworld::{HnswParams, SwParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMethod {
    Random,
    Division,
    Lsh,
    RpForest,
    Sw,
    Hnsw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NbpgMethod {
    None,
    UniProp,
    NnDes,
    KGraph,
    Deep,
}

impl InitMethod {
    pub fn name(self) -> &'static str {
        match self {
            InitMethod::Random => "random",
            InitMethod::Division => "division",
            InitMethod::Lsh => "lsh",
            InitMethod::RpForest => "rpforest",
            InitMethod::Sw => "sw",
            InitMethod::Hnsw => "hnsw",
        }
    }
}

impl NbpgMethod {
    pub fn name(self) -> &'static str {
        match self {
            NbpgMethod::None => "none",
            NbpgMethod::UniProp => "uniprop",
            NbpgMethod::NnDes => "nndes",
            NbpgMethod::KGraph => "kgraph",
            NbpgMethod::Deep => "deep",
        }
    }
}

impl FromStr for InitMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => InitMethod::Random,
            "division" | "mdiv" => InitMethod::Division,
            "lsh" => InitMethod::Lsh,
            "rpforest" | "rp" => InitMethod::RpForest,
            "sw" => InitMethod::Sw,
            "hnsw" => InitMethod::Hnsw,
            _ => return arg_err(format!("unknown init method '{s}'")),
        })
    }
}

impl FromStr for NbpgMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => NbpgMethod::None,
            "uniprop" => NbpgMethod::UniProp,
            "nndes" => NbpgMethod::NnDes,
            "kgraph" => NbpgMethod::KGraph,
            "deep" | "deepsearch" => NbpgMethod::Deep,
            _ => return arg_err(format!("unknown refinement method '{s}'")),
        })
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for NbpgMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Named INIT + NBPG combinations.
pub const PRESETS: [(&str, InitMethod, NbpgMethod); 6] = [
    ("largevis", InitMethod::RpForest, NbpgMethod::UniProp),
    ("uni-hnsw", InitMethod::Hnsw, NbpgMethod::UniProp),
    ("nndes", InitMethod::Random, NbpgMethod::NnDes),
    ("kgraph", InitMethod::Random, NbpgMethod::KGraph),
    ("deep-mdiv", InitMethod::Division, NbpgMethod::Deep),
    ("deep-hnsw", InitMethod::Hnsw, NbpgMethod::Deep),
];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub data: Option<PathBuf>,
    pub format: DatasetFormat,
    pub k: usize,
    pub init: InitMethod,
    pub nbpg: NbpgMethod,
    pub seed: u64,
    pub threads: usize,
    pub graph_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    /// Exact oracle file, loaded if present and written otherwise.
    pub oracle: Option<PathBuf>,
    pub oracle_cap: usize,
    pub estimate: bool,
    pub queries: usize,

    pub division: DivisionParams,
    pub lsh: LshParams,
    pub rp_forest: RpForestParams,
    pub sw: SwParams,
    pub hnsw: HnswParams,
    pub kgraph: KGraphParams,
    /// Rounds for UniProp, NNDes and KGraph; `None` picks the method default.
    pub n_iter: Option<usize>,
    pub ef_search: usize,
    pub filters: Filters,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data: None,
            format: DatasetFormat::Fvecs,
            k: 20,
            init: InitMethod::Random,
            nbpg: NbpgMethod::KGraph,
            seed: 0,
            threads: 16,
            graph_out: None,
            report_out: None,
            oracle: None,
            oracle_cap: 50_000,
            estimate: false,
            queries: 2000,
            division: DivisionParams::default(),
            lsh: LshParams::default(),
            rp_forest: RpForestParams::default(),
            sw: SwParams { m: 20, ef_construction: 40, seed: 0 },
            hnsw: HnswParams::default(),
            kgraph: KGraphParams::default(),
            n_iter: None,
            ef_search: 40,
            filters: Filters::ON,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Argument(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        _ => arg_err(format!("bad boolean '{value}' for '{key}'")),
    }
}

/// Keys that tune a given method, used to validate sweep axes.
fn method_keys(init: InitMethod, nbpg: NbpgMethod) -> Vec<&'static str> {
    let mut keys = vec!["k", "seed"];
    if nbpg != NbpgMethod::NnDes && !(nbpg == NbpgMethod::KGraph && init == InitMethod::Random) {
        keys.extend(match init {
            InitMethod::Random => &[][..],
            InitMethod::Division => &["t_div", "l_div", "sample_size"][..],
            InitMethod::Lsh => &["b", "t_hash", "l_hash"][..],
            InitMethod::RpForest => &["l_tree", "leaf_size"][..],
            InitMethod::Sw => &["m_sw", "ef_construction"][..],
            InitMethod::Hnsw => &["m_hnsw", "ef_construction"][..],
        });
    }
    keys.extend(match nbpg {
        NbpgMethod::None => &[][..],
        NbpgMethod::UniProp | NbpgMethod::NnDes => &["n_iter"][..],
        NbpgMethod::KGraph => &["n_iter", "pool_size", "reverse_cap", "delta"][..],
        NbpgMethod::Deep => &["ef_search"][..],
    });
    keys
}

impl PipelineConfig {
    /// Parses `key = value` lines; `#` starts a comment. A `method` preset
    /// is applied before the other keys regardless of its position.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return arg_err(format!("config line {}: expected key = value", no + 1));
            };
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        let mut cfg = Self::default();
        cfg.apply_all(&pairs)?;
        Ok(cfg)
    }

    pub fn apply_all(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (key, value) in pairs.iter().filter(|p| p.0 == "method") {
            self.apply(key, value)?;
        }
        for (key, value) in pairs.iter().filter(|p| p.0 != "method") {
            self.apply(key, value)?;
        }
        Ok(())
    }

    /// Parses `key=value`.
    pub fn apply_override(&mut self, pair: &str) -> Result<()> {
        match pair.split_once('=') {
            Some((k, v)) => self.apply(k.trim(), v.trim()),
            None => arg_err(format!("override '{pair}' is not key=value")),
        }
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "method" => {
                let Some(&(_, init, nbpg)) = PRESETS.iter().find(|p| p.0 == value) else {
                    let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
                    return arg_err(format!("unknown method '{value}' (known: {})", names.join(", ")));
                };
                self.init = init;
                self.nbpg = nbpg;
            }
            "data" => self.data = Some(PathBuf::from(value)),
            "format" => self.format = value.parse()?,
            "k" => self.k = parse(key, value)?,
            "init" => self.init = value.parse()?,
            "nbpg" => self.nbpg = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "graph_out" | "output" => self.graph_out = Some(PathBuf::from(value)),
            "report_out" | "report" => self.report_out = Some(PathBuf::from(value)),
            "oracle" => self.oracle = Some(PathBuf::from(value)),
            "oracle_cap" => self.oracle_cap = parse(key, value)?,
            "estimate" => self.estimate = parse_bool(key, value)?,
            "queries" => self.queries = parse(key, value)?,
            "t_div" => self.division.t_div = parse(key, value)?,
            "l_div" => self.division.l_div = parse(key, value)?,
            "sample_size" => self.division.sample_size = parse(key, value)?,
            "b" => self.lsh.b = parse(key, value)?,
            "t_hash" => self.lsh.t_hash = parse(key, value)?,
            "l_hash" => self.lsh.l_hash = parse(key, value)?,
            "l_tree" => self.rp_forest.l_tree = parse(key, value)?,
            "leaf_size" => self.rp_forest.leaf_size = parse(key, value)?,
            "m_sw" => self.sw.m = parse(key, value)?,
            "m_hnsw" => self.hnsw.m = parse(key, value)?,
            "ef_construction" => {
                let ef = parse(key, value)?;
                self.sw.ef_construction = ef;
                self.hnsw.ef_construction = ef;
            }
            "n_iter" => self.n_iter = Some(parse(key, value)?),
            "pool_size" => self.kgraph.pool_size = parse(key, value)?,
            "reverse_cap" => self.kgraph.reverse_cap = parse(key, value)?,
            "delta" => self.kgraph.delta = parse(key, value)?,
            "ef_search" => self.ef_search = parse(key, value)?,
            "filters" => {
                let on = parse_bool(key, value)?;
                self.filters = Filters { global: on, local: on };
            }
            "filters_global" => self.filters.global = parse_bool(key, value)?,
            "filters_local" => self.filters.local = parse_bool(key, value)?,
            _ => return arg_err(format!("unknown config key '{key}'")),
        }
        Ok(())
    }

    /// Rounds used by the configured refinement.
    pub fn effective_n_iter(&self) -> usize {
        self.n_iter.unwrap_or(match self.nbpg {
            NbpgMethod::UniProp => 4,
            NbpgMethod::NnDes => 8,
            _ => 16,
        })
    }

    /// Preset name when the combination matches one, else `init+nbpg`.
    pub fn method_name(&self) -> String {
        PRESETS
            .iter()
            .find(|p| p.1 == self.init && p.2 == self.nbpg)
            .map(|p| p.0.to_string())
            .unwrap_or_else(|| format!("{}+{}", self.init, self.nbpg))
    }

    pub fn is_axis(&self, key: &str) -> bool {
        method_keys(self.init, self.nbpg).contains(&key)
    }

    /// Checks every parameter the configured methods use.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return arg_err("k must be at least 1");
        }
        if self.threads == 0 {
            return arg_err("threads must be at least 1");
        }
        if self.nbpg == NbpgMethod::NnDes && self.init != InitMethod::Random {
            return arg_err("nndes starts from random pools; use init = random");
        }
        let uses_init =
            self.nbpg != NbpgMethod::NnDes && !(self.nbpg == NbpgMethod::KGraph && self.init == InitMethod::Random);
        if uses_init {
            match self.init {
                InitMethod::Random => {}
                InitMethod::Division => self.division.validate(self.k)?,
                InitMethod::Lsh => self.lsh.validate(self.k)?,
                InitMethod::RpForest => self.rp_forest.validate(self.k)?,
                InitMethod::Sw => {
                    if self.sw.m == 0 || self.sw.ef_construction == 0 {
                        return arg_err("sw needs m_sw >= 1 and ef_construction >= 1");
                    }
                }
                InitMethod::Hnsw => {
                    if self.hnsw.m < 2 || self.hnsw.ef_construction == 0 {
                        return arg_err("hnsw needs m_hnsw >= 2 and ef_construction >= 1");
                    }
                }
            }
        }
        if self.nbpg == NbpgMethod::KGraph {
            self.kgraph.validate(self.k)?;
        }
        if self.queries == 0 {
            return arg_err("queries must be at least 1");
        }
        Ok(())
    }

    /// Parameters relevant to the configured methods, for reports.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        for key in method_keys(self.init, self.nbpg) {
            out.insert(key.to_string(), self.value_of(key).unwrap_or_default());
        }
        out.insert("init".into(), self.init.to_string());
        out.insert("nbpg".into(), self.nbpg.to_string());
        if self.nbpg != NbpgMethod::None {
            out.insert("filters_global".into(), self.filters.global.to_string());
            out.insert("filters_local".into(), self.filters.local.to_string());
        }
        out
    }

    pub fn value_of(&self, key: &str) -> Option<String> {
        Some(match key {
            "k" => self.k.to_string(),
            "seed" => self.seed.to_string(),
            "t_div" => self.division.t_div.to_string(),
            "l_div" => self.division.l_div.to_string(),
            "sample_size" => self.division.sample_size.to_string(),
            "b" => self.lsh.b.to_string(),
            "t_hash" => self.lsh.t_hash.to_string(),
            "l_hash" => self.lsh.l_hash.to_string(),
            "l_tree" => self.rp_forest.l_tree.to_string(),
            "leaf_size" => self.rp_forest.leaf_size.to_string(),
            "m_sw" => self.sw.m.to_string(),
            "m_hnsw" => self.hnsw.m.to_string(),
            "ef_construction" => match self.init {
                InitMethod::Sw => self.sw.ef_construction.to_string(),
                _ => self.hnsw.ef_construction.to_string(),
            },
            "n_iter" => self.effective_n_iter().to_string(),
            "pool_size" => self.kgraph.pool_size.to_string(),
            "reverse_cap" => self.kgraph.reverse_cap.to_string(),
            "delta" => self.kgraph.delta.to_string(),
            "ef_search" => self.ef_search.to_string(),
            _ => return None,
        })
    }
}
