//! Inspection reports behind the `spectrum`, `params` and `score` commands.

use lazydual::metrics::{CommPrediction, TheoryParams};
use lazydual::topology::Spectrum;
use lazydual::{AlgoConfig, Method};
use serde::Serialize;

use crate::config::ParamMode;
use crate::error::Result;
use crate::experiment::{prediction, resolve, resolve_with_mode, Setup};

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub n: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub gossip: Spectrum,
    pub chebyshev_k: usize,
    pub chebyshev_bypass: bool,
    pub c2: f64,
    pub c3: f64,
    pub accelerated: Spectrum,
}

pub fn spectrum_report(setup: &Setup) -> Result<SpectrumReport> {
    let g = setup.gm.graph();
    Ok(SpectrumReport {
        n: g.n(),
        edges: g.num_edges(),
        max_degree: g.max_degree(),
        gossip: setup.gm.spectrum(),
        chebyshev_k: setup.plan.k,
        chebyshev_bypass: setup.plan.bypass,
        c2: setup.plan.c2,
        c3: setup.plan.c3,
        accelerated: setup.operator_spectrum(Method::Msda)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamsEntry {
    pub method: Method,
    pub config: AlgoConfig,
    pub theory: Option<TheoryParams>,
}

/// Theory-mode parameters for every configured method; explicit values in the
/// file or on the command line still take precedence.
pub fn params_report(setup: &Setup) -> Result<Vec<ParamsEntry>> {
    setup
        .cfg
        .methods
        .iter()
        .map(|&method| {
            let r = resolve_with_mode(setup, method, ParamMode::Theory)?;
            Ok(ParamsEntry { method, config: r.cfg, theory: r.theory })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScoreEntry {
    pub method: Method,
    pub gamma: f64,
    pub big_d: usize,
    pub heterogeneity: Vec<f64>,
    pub predicted: CommPrediction,
}

/// Heterogeneity scores and predicted utilization for the lazy methods,
/// using the parameters a `run` would use.
pub fn score_report(setup: &Setup) -> Result<Vec<ScoreEntry>> {
    let mut lazy: Vec<Method> = setup.cfg.methods.iter().copied().filter(|m| m.is_lazy()).collect();
    if lazy.is_empty() {
        lazy.push(Method::Dlag);
    }
    lazy.into_iter()
        .map(|method| {
            let gamma = resolve(setup, method)?.cfg.gamma;
            let (heterogeneity, predicted) = prediction(setup, method, gamma)?;
            Ok(ScoreEntry { method, gamma, big_d: setup.cfg.params.big_d, heterogeneity, predicted })
        })
        .collect()
}
