//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use lazydual::inner::SolverKind;
use lazydual::topology::GraphKind;
use lazydual::Method;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub weights: Weights,
    pub topology: TopologySpec,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    #[default]
    Metropolis,
    MaxDegree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Grid2d { rows: usize, cols: usize },
    Path { n: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    /// One `i j` pair per line, 0-based.
    EdgeList { path: PathBuf },
}

impl TopologySpec {
    pub fn graph_kind(&self) -> Option<GraphKind> {
        Some(match *self {
            TopologySpec::Grid2d { rows, cols } => GraphKind::Grid2d { rows, cols },
            TopologySpec::Path { n } => GraphKind::Path { n },
            TopologySpec::Complete { n } => GraphKind::Complete { n },
            TopologySpec::ErdosRenyi { n, p, seed } => GraphKind::ErdosRenyi { n, p, seed },
            TopologySpec::EdgeList { .. } => return None,
        })
    }
}

/// Per-worker `(μ, L)` replacing the defaults of a quadratic problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerConditioning {
    pub worker: usize,
    pub mu: f64,
    pub l_smooth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionCfg {
    pub a: f64,
    pub b: f64,
    pub seed: u64,
}

impl Default for PartitionCfg {
    fn default() -> Self {
        Self { a: 1.0, b: 10.0, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        m: usize,
        dim: usize,
        #[serde(default = "one")]
        mu: f64,
        #[serde(default = "one")]
        l_smooth: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        overrides: Vec<WorkerConditioning>,
    },
    Logistic {
        dataset: PathBuf,
        lambda: f64,
        #[serde(default)]
        normalize: bool,
        #[serde(default)]
        partition: PartitionCfg,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Values from the file, with `η = eta_scale·μ_min/σ₁` when `eta` is absent.
    #[default]
    Manual,
    /// Schedules from the convergence theory; explicit values still win.
    Theory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub mode: ParamMode,
    pub eta: Option<f64>,
    pub eta_scale: f64,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    #[serde(alias = "D")]
    pub big_d: usize,
    #[serde(alias = "K")]
    pub k: Option<usize>,
    pub inner: InnerSpec,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self {
            mode: ParamMode::Manual,
            eta: None,
            eta_scale: 1.0,
            s: None,
            gamma: None,
            c: None,
            big_d: 2,
            k: None,
            inner: InnerSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerSpec {
    pub solver: SolverKind,
    /// Fixed step count; derived from `c` when absent.
    pub steps: Option<usize>,
    pub c_kat: f64,
    pub c_agd: f64,
}

impl Default for InnerSpec {
    fn default() -> Self {
        Self { solver: SolverKind::Katyusha, steps: None, c_kat: 1.0, c_agd: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSpec {
    pub max_iters: usize,
    pub target_subopt: Option<f64>,
}

impl Default for StopSpec {
    fn default() -> Self {
        Self { max_iters: 1000, target_subopt: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub eta: Option<f64>,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub big_d: Option<usize>,
    pub k: Option<usize>,
    pub max_iters: Option<usize>,
    pub target_subopt: Option<f64>,
}

impl ExperimentConfig {
    /// Parses TOML text. Relative file references resolve against `base`.
    pub fn parse(text: &str, source: &str, base: &Path) -> Result<Self> {
        let err = |msg: String| CliError::Config { origin: source.to_string(), msg };
        let de = toml::Deserializer::parse(text).map_err(|e| err(e.to_string()))?;
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            err(format!("at `{path}`: {}", e.into_inner()))
        })?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { origin: path.display().to_string(), msg: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ProblemSpec::Logistic { dataset, .. } = &mut self.problem {
            fix(dataset);
        }
        if let TopologySpec::EdgeList { path } = &mut self.topology {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(CliError::Invalid { key: key.to_string(), msg });
        if self.methods.is_empty() {
            return bad("methods", "at least one method is required".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required".into());
        }
        if let ProblemSpec::Logistic { dataset, .. } = &self.problem {
            if !dataset.is_file() {
                return bad("problem.dataset", format!("dataset file {} not found", dataset.display()));
            }
        }
        if let TopologySpec::EdgeList { path } = &self.topology {
            if !path.is_file() {
                return bad("topology.path", format!("edge list {} not found", path.display()));
            }
        }
        if !(self.params.eta_scale > 0.0) {
            return bad("params.eta_scale", format!("must be positive, got {}", self.params.eta_scale));
        }
        if self.params.big_d == 0 {
            return bad("params.big_d", "must be at least 1".into());
        }
        if self.stop.max_iters == 0 && self.stop.target_subopt.is_some() {
            return bad("stop.max_iters", "zero iterations cannot reach a target".into());
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if !o.methods.is_empty() {
            self.methods = o.methods.clone();
        }
        if !o.seeds.is_empty() {
            self.seeds = o.seeds.clone();
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        let p = &mut self.params;
        p.eta = o.eta.or(p.eta);
        p.s = o.s.or(p.s);
        p.gamma = o.gamma.or(p.gamma);
        p.c = o.c.or(p.c);
        p.big_d = o.big_d.unwrap_or(p.big_d);
        p.k = o.k.or(p.k);
        if let Some(m) = o.max_iters {
            self.stop.max_iters = m;
        }
        if let Some(t) = o.target_subopt {
            self.stop.target_subopt = Some(t);
        }
        self.validate()
    }

    /// SHA-256 over everything that influences the traces: the config minus
    /// output settings, plus the bytes of referenced data files.
    pub fn hash(&self) -> Result<String> {
        let mut view = self.clone();
        view.output = OutputSpec::default();
        let strip = |p: &mut PathBuf| *p = p.file_name().map(PathBuf::from).unwrap_or_default();
        if let ProblemSpec::Logistic { dataset, .. } = &mut view.problem {
            strip(dataset);
        }
        if let TopologySpec::EdgeList { path } = &mut view.topology {
            strip(path);
        }
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&view)?);
        if let ProblemSpec::Logistic { dataset, .. } = &self.problem {
            h.update(std::fs::read(dataset)?);
        }
        if let TopologySpec::EdgeList { path } = &self.topology {
            h.update(std::fs::read(path)?);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}
