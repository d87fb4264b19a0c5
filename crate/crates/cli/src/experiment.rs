//! Run orchestration: build the instance, resolve per-method parameters,
//! execute every (method, seed) pair and write traces plus a summary.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lazydual::inner::{agd_budget, katyusha_budget};
use lazydual::metrics::{
    heterogeneity_score, mdlag_general_params, mdlag_params, measured_vs_predicted, pk_spectrum,
    predicted_comm_ratio, theorem1_params, theorem4_params, CommPrediction, CommReport, TheoryParams,
    DEFAULT_SLACK,
};
use lazydual::problems::{load_libsvm, make_logistic, make_quadratic, partition_uneven, LibsvmOptions};
use lazydual::topology::{build_graph, chebyshev_plan, Spectrum};
use lazydual::{
    AlgoConfig, ChebyshevPlan, GossipMatrix, Graph, InnerBudget, Method, ProblemInstance, RunTrace, Simulator,
    SolverKind, StopCriteria,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Format, ParamMode, ProblemSpec, TopologySpec, Weights};
use crate::error::{CliError, Result};
use crate::output::{write_csv, write_json};

/// Everything shared by the runs of one experiment.
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub gm: GossipMatrix,
    pub plan: ChebyshevPlan,
    pub problem: ProblemInstance,
    pub partition: Option<Vec<usize>>,
}

fn invalid(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Invalid { key: key.to_string(), msg: msg.into() }
}

pub fn build_topology(spec: &TopologySpec) -> Result<Graph> {
    match spec {
        TopologySpec::EdgeList { path } => {
            let text = std::fs::read_to_string(path)?;
            Ok(Graph::parse_edge_list(&text, &path.display().to_string())?)
        }
        other => Ok(build_graph(&other.graph_kind().expect("generated topology"))?),
    }
}

pub fn build_problem(spec: &ProblemSpec, n: usize) -> Result<(ProblemInstance, Option<Vec<usize>>)> {
    match spec {
        ProblemSpec::Quadratic { m, dim, mu, l_smooth, seed, overrides } => {
            let mut cond = vec![(*mu, *l_smooth); n];
            for o in overrides {
                let slot = cond
                    .get_mut(o.worker)
                    .ok_or_else(|| invalid("problem.overrides", format!("worker {} out of range", o.worker)))?;
                *slot = (o.mu, o.l_smooth);
            }
            Ok((make_quadratic(n, *m, *dim, &cond, *seed)?, None))
        }
        ProblemSpec::Logistic { dataset, lambda, normalize, partition } => {
            let opts = LibsvmOptions { normalize: *normalize, ..Default::default() };
            let ds = load_libsvm(dataset, &opts)?;
            let part = partition_uneven(ds.len(), n, partition.a, partition.b, partition.seed)?;
            let counts = part.counts.clone();
            Ok((make_logistic(&ds, *lambda, &part)?, Some(counts)))
        }
    }
}

impl Setup {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        let graph = build_topology(&cfg.topology)?;
        let gm = match cfg.weights {
            Weights::Metropolis => GossipMatrix::metropolis(&graph)?,
            Weights::MaxDegree => GossipMatrix::max_degree(&graph)?,
        };
        let mut plan = chebyshev_plan(&gm);
        if let Some(k) = cfg.params.k {
            if k == 0 {
                return Err(invalid("params.k", "K must be at least 1"));
            }
            plan = plan.with_rounds(k);
        }
        let (problem, partition) = build_problem(&cfg.problem, graph.n())?;
        let problem = problem.with_reference(1e-12)?;
        let hash = cfg.hash()?;
        Ok(Self { cfg, hash, gm, plan, problem, partition })
    }

    /// Spectrum of the gossip operator a method multiplies by.
    pub fn operator_spectrum(&self, method: Method) -> Result<Spectrum> {
        if method.is_multi() {
            Ok(pk_spectrum(&self.gm, &self.plan)?)
        } else {
            Ok(self.gm.spectrum())
        }
    }

    pub fn stop(&self) -> StopCriteria {
        StopCriteria { max_iters: self.cfg.stop.max_iters, target_subopt: self.cfg.stop.target_subopt }
    }
}

/// Parameters of one method after theory schedules and explicit values are merged.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub cfg: AlgoConfig,
    pub theory: Option<TheoryParams>,
}

fn theory_for(setup: &Setup, method: Method, mode: ParamMode) -> Result<Option<TheoryParams>> {
    let p = &setup.cfg.params;
    if mode != ParamMode::Theory || !method.is_lazy() {
        return Ok(None);
    }
    let (gm, plan, problem, d) = (&setup.gm, &setup.plan, &setup.problem, p.big_d);
    let headline = match method {
        Method::Mdlag => mdlag_params(gm, plan, problem, d)?,
        _ => theorem1_params(gm, problem, d)?,
    };
    if p.gamma.is_none() && p.c.is_none() {
        return Ok(Some(headline));
    }
    let gamma = p.gamma.unwrap_or(headline.gamma);
    let c = p.c.unwrap_or(headline.c);
    Ok(Some(match method {
        Method::Mdlag => mdlag_general_params(gm, plan, problem, d, gamma, c)?,
        _ => theorem4_params(gm, problem, d, gamma, c)?,
    }))
}

pub fn resolve(setup: &Setup, method: Method) -> Result<Resolved> {
    resolve_with_mode(setup, method, setup.cfg.params.mode)
}

pub fn resolve_with_mode(setup: &Setup, method: Method, mode: ParamMode) -> Result<Resolved> {
    let p = &setup.cfg.params;
    let k = setup.problem.constants();
    let theory = theory_for(setup, method, mode)?;
    let beta = setup.operator_spectrum(method)?.sigma1 / k.mu_min;
    let eta = p.eta.or(theory.map(|t| t.eta)).unwrap_or(p.eta_scale / beta);
    let s = p.s.or(theory.map(|t| t.s)).unwrap_or(1.0);
    let (gamma, c, inner) = if method.is_lazy() {
        let gamma = p.gamma.or(theory.map(|t| t.gamma)).unwrap_or(0.0);
        let c = p.c.or(theory.map(|t| t.c)).unwrap_or(0.0);
        let inner = match p.inner.solver {
            SolverKind::Exact => InnerBudget::exact(),
            solver => {
                if !(c > 0.0 && c < 1.0) {
                    return Err(invalid("params.c", format!("an approximate inner solver needs 0 < c < 1, got {c}")));
                }
                let steps = p.inner.steps.unwrap_or_else(|| match solver {
                    SolverKind::Agd => agd_budget(k.kappa_max, c, p.inner.c_agd),
                    _ => katyusha_budget(setup.problem.max_m(), k.kappa_max, c, p.inner.c_kat),
                });
                InnerBudget { solver, steps, c }
            }
        };
        (gamma, c, inner)
    } else {
        (0.0, 0.0, InnerBudget::exact())
    };
    let cfg = AlgoConfig {
        method,
        eta,
        s,
        gamma,
        c,
        big_d: p.big_d,
        k: if method.is_multi() { Some(setup.plan.k) } else { None },
        inner,
    };
    cfg.validate()?;
    Ok(Resolved { cfg, theory })
}

/// One finished (or aborted) run.
#[derive(Debug)]
pub struct RunOutcome {
    pub method: Method,
    pub seed: u64,
    pub resolved: Option<Resolved>,
    /// Complete trace, or the rows recorded before an abort.
    pub trace: Option<RunTrace>,
    pub error: Option<String>,
}

pub fn execute(setup: &Setup, method: Method, seed: u64, threads: usize) -> RunOutcome {
    let failed = |error: String| RunOutcome { method, seed, resolved: None, trace: None, error: Some(error) };
    let resolved = match resolve(setup, method) {
        Ok(r) => r,
        Err(e) => return failed(e.to_string()),
    };
    let mut sim = match Simulator::new(&setup.problem, &setup.gm, &resolved.cfg, seed) {
        Ok(s) => s.with_threads(threads),
        Err(e) => return failed(e.to_string()),
    };
    let stop = setup.stop();
    let mut error = None;
    while !stop.done(sim.iteration(), sim.subopt()) {
        if let Err(e) = sim.step().map(|_| ()) {
            error = Some(e.to_string());
            break;
        }
    }
    let mut trace = sim.into_trace();
    trace.meta.config_hash = Some(setup.hash.clone());
    trace.meta.theory = resolved.theory;
    RunOutcome { method, seed, resolved: Some(resolved), trace: Some(trace), error }
}

/// Parallelism cap from `LAZYDUAL_THREADS`, else the machine's.
pub fn thread_budget() -> usize {
    std::env::var("LAZYDUAL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs every (method, seed) pair, at most `threads` at a time. Results come
/// back in config order regardless of scheduling.
pub fn run_all(setup: &Setup, threads: usize) -> Vec<RunOutcome> {
    let jobs: Vec<(Method, u64)> =
        setup.cfg.methods.iter().flat_map(|&m| setup.cfg.seeds.iter().map(move |&s| (m, s))).collect();
    let workers = threads.clamp(1, jobs.len().max(1));
    let per_run = (threads / workers).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunOutcome>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(method, seed)) = jobs.get(i) else { break };
                let outcome = execute(setup, method, seed, per_run);
                slots.lock().expect("no panics while holding the lock")[i] = Some(outcome);
            });
        }
    });
    slots.into_inner().expect("workers joined").into_iter().map(|o| o.expect("every job ran")).collect()
}

pub fn trace_file_name(method: Method, seed: u64, format: Format) -> String {
    format!("{method}-seed{seed}.{}", format.extension())
}

pub fn write_trace(trace: &RunTrace, path: &Path, format: Format) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Csv => write_csv(trace, &mut w)?,
        Format::Json => write_json(trace, &mut w)?,
    }
    std::io::Write::flush(&mut w)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub file: Option<String>,
    pub ok: bool,
    pub error: Option<String>,
    pub iterations: usize,
    pub final_subopt: f64,
    pub final_consensus: f64,
    pub messages: u64,
    pub grad_evals: u64,
    pub skips: usize,
    pub edge_utilization: f64,
    pub reached_target: bool,
    pub iterations_to_target: Option<usize>,
    pub messages_to_target: Option<u64>,
    pub grad_evals_to_target: Option<u64>,
    pub params: Option<AlgoConfig>,
    pub theory: Option<TheoryParams>,
    pub comm: Option<CommReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub failed: usize,
    pub mean_edge_utilization: f64,
    pub mean_messages_to_target: Option<f64>,
    pub heterogeneity: Option<Vec<f64>>,
    pub predicted: Option<CommPrediction>,
    /// Seed-averaged utilization against the prediction.
    pub comm: Option<CommReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub config_hash: String,
    pub n: usize,
    pub dim: usize,
    pub edges: usize,
    pub spectrum: Spectrum,
    pub chebyshev_rounds: usize,
    pub f_star: f64,
    pub constants: lazydual::problems::Constants,
    pub partition: Option<Vec<usize>>,
    pub target_subopt: Option<f64>,
    pub runs: Vec<RunSummary>,
    pub methods: Vec<MethodSummary>,
}

/// Heterogeneity score and predicted utilization for a lazy method.
pub fn prediction(setup: &Setup, method: Method, gamma: f64) -> Result<(Vec<f64>, CommPrediction)> {
    let h = heterogeneity_score(&setup.problem, setup.gm.graph(), gamma, setup.cfg.params.big_d)?;
    let pred = predicted_comm_ratio(&h, setup.plan.k, method);
    Ok((h, pred))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(setup: &Setup, outcomes: &[RunOutcome], files: &[Option<String>]) -> Result<Summary> {
    let target = setup.cfg.stop.target_subopt.filter(|t| t.is_finite());
    let mut runs = Vec::with_capacity(outcomes.len());
    for (o, file) in outcomes.iter().zip(files) {
        let params = o.resolved.as_ref().map(|r| r.cfg);
        let mut s = RunSummary {
            method: o.method,
            seed: o.seed,
            file: file.clone(),
            ok: o.error.is_none(),
            error: o.error.clone(),
            iterations: 0,
            final_subopt: f64::NAN,
            final_consensus: f64::NAN,
            messages: 0,
            grad_evals: 0,
            skips: 0,
            edge_utilization: f64::NAN,
            reached_target: false,
            iterations_to_target: None,
            messages_to_target: None,
            grad_evals_to_target: None,
            params,
            theory: o.resolved.as_ref().and_then(|r| r.theory),
            comm: None,
        };
        if let Some(t) = &o.trace {
            let last = t.last();
            s.iterations = t.iterations();
            s.final_subopt = last.subopt;
            s.final_consensus = last.consensus;
            s.messages = last.messages;
            s.grad_evals = last.grad_evals;
            s.skips = t.rows.iter().map(|r| r.skips).sum();
            s.edge_utilization = t.edge_utilization();
            if let Some(eps) = target {
                if let Some(row) = t.first_below(eps) {
                    s.reached_target = true;
                    s.iterations_to_target = Some(row.iter);
                    s.messages_to_target = Some(row.messages);
                    s.grad_evals_to_target = Some(row.grad_evals);
                }
            }
            if let (true, Some(p)) = (o.method.is_lazy(), params) {
                let (_, pred) = prediction(setup, o.method, p.gamma)?;
                s.comm = Some(measured_vs_predicted(t, &pred, DEFAULT_SLACK));
            }
        }
        runs.push(s);
    }
    let mut methods = Vec::new();
    for &m in &setup.cfg.methods {
        let mine: Vec<&RunSummary> = runs.iter().filter(|r| r.method == m).collect();
        let ok: Vec<&&RunSummary> = mine.iter().filter(|r| r.ok).collect();
        let mean_util = mean(ok.iter().map(|r| r.edge_utilization)).unwrap_or(f64::NAN);
        let mean_msgs = if ok.iter().all(|r| r.reached_target) {
            mean(ok.iter().filter_map(|r| r.messages_to_target.map(|x| x as f64)))
        } else {
            None
        };
        let gamma = mine.iter().find_map(|r| r.params.map(|p| p.gamma));
        let (heterogeneity, predicted, comm) = match (m.is_lazy(), gamma) {
            (true, Some(g)) => {
                let (h, pred) = prediction(setup, m, g)?;
                let comm = CommReport {
                    measured: mean_util,
                    predicted: pred.factor,
                    slack: DEFAULT_SLACK,
                    pass: mean_util <= pred.factor * (1.0 + DEFAULT_SLACK),
                };
                (Some(h), Some(pred), Some(comm))
            }
            _ => (None, None, None),
        };
        methods.push(MethodSummary {
            method: m,
            runs: mine.len(),
            failed: mine.len() - ok.len(),
            mean_edge_utilization: mean_util,
            mean_messages_to_target: mean_msgs,
            heterogeneity,
            predicted,
            comm,
        });
    }
    Ok(Summary {
        name: setup.cfg.name.clone(),
        config_hash: setup.hash.clone(),
        n: setup.problem.n(),
        dim: setup.problem.dim(),
        edges: setup.gm.graph().num_edges(),
        spectrum: setup.gm.spectrum(),
        chebyshev_rounds: setup.plan.k,
        f_star: setup.problem.reference().map_or(f64::NAN, |r| r.value),
        constants: setup.problem.constants(),
        partition: setup.partition.clone(),
        target_subopt: target,
        runs,
        methods,
    })
}

/// Writes one trace per run (partial traces included) and `summary.json`.
pub fn write_outputs(setup: &Setup, outcomes: &[RunOutcome], dir: &Path, format: Format) -> Result<Summary> {
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        files.push(match &o.trace {
            Some(t) => {
                let name = trace_file_name(o.method, o.seed, format);
                write_trace(t, &dir.join(&name), format)?;
                Some(name)
            }
            None => None,
        });
    }
    let summary = summarize(setup, outcomes, &files)?;
    let path: PathBuf = dir.join("summary.json");
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(summary)
}
