//! From a sampled instance to estimated assignments.
//!
//! With estimated parameters the stages run in the order: moment estimate of
//! `p`, spectral initialization (which needs `p` for trimming), plug-in
//! estimates of `(p, q)` under the initial assignment, then refinement.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Result};
use imlsbm::baseline::{coreg_cluster, CoRegConfig};
use imlsbm::estimate::{moment_p_hat, plugin_pq, separate};
use imlsbm::metrics::misclustering;
use imlsbm::refine::{refine_generic, refine_provable, DetectionResult, RefineConfig};
use imlsbm::spectral::{spectral_initialize, LeaveOneOutSpectral, SpectralConfig, WeightScheme};
use imlsbm::{Assignment, SampleRecord};
use log::debug;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Spectral,
    Generic,
    Provable,
    Coreg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::Generic => "generic",
            Method::Provable => "provable",
            Method::Coreg => "coreg",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spectral" => Ok(Method::Spectral),
            "generic" => Ok(Method::Generic),
            "provable" => Ok(Method::Provable),
            "coreg" => Ok(Method::Coreg),
            _ => Err(format!("unknown method {s:?} (expected spectral, generic, provable or coreg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamsSource {
    True,
    Estimated,
}

impl ParamsSource {
    pub fn name(self) -> &'static str {
        match self {
            ParamsSource::True => "true",
            ParamsSource::Estimated => "estimated",
        }
    }
}

impl FromStr for ParamsSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true" => Ok(ParamsSource::True),
            "estimated" => Ok(ParamsSource::Estimated),
            _ => Err(format!("unknown parameter source {s:?} (expected true or estimated)")),
        }
    }
}

pub fn parse_weight_scheme(s: &str) -> std::result::Result<WeightScheme, String> {
    match s {
        "uniform" => Ok(WeightScheme::Uniform),
        "variance" => Ok(WeightScheme::Variance),
        "stdev" => Ok(WeightScheme::Stdev),
        _ => Err(format!("unknown weight scheme {s:?} (expected uniform, variance or stdev)")),
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub params: ParamsSource,
    pub rho_input: f64,
    pub weights: WeightScheme,
    pub spectral: SpectralConfig,
    pub coreg: CoRegConfig,
}

impl PipelineOptions {
    pub fn new(params: ParamsSource, rho_input: f64, seed: u64) -> Self {
        PipelineOptions {
            params,
            rho_input,
            weights: WeightScheme::Uniform,
            spectral: SpectralConfig { seed, ..Default::default() },
            coreg: CoRegConfig { seed, ..Default::default() },
        }
    }
}

/// The shared Stage-I output every refinement method starts from.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub init: Assignment,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `p` as used for weights and trimming.
    pub p_trim: Vec<f64>,
    pub stages: Vec<&'static str>,
    pub init_ms: f64,
}

/// Parameters for trimming and refinement plus the spectral initial
/// assignment of the full graph.
pub fn prepare(record: &SampleRecord, opts: &PipelineOptions) -> Result<Prepared> {
    let start = Instant::now();
    let graph = &record.graph;
    let mut stages = Vec::new();
    let p_trim = match opts.params {
        ParamsSource::True => record.params.p.clone(),
        ParamsSource::Estimated => {
            stages.push("moment");
            moment_p_hat(graph)?
        }
    };
    let omega = opts.weights.weights(&p_trim)?;
    let init = spectral_initialize(graph, &omega, &p_trim, &opts.spectral)?;
    stages.push("spectral");
    debug!("spectral init: {} trimmed, degenerate = {}", init.trim.trimmed_nodes.len(), init.degenerate);
    let (p, q) = match opts.params {
        ParamsSource::True => (record.params.p.clone(), record.params.q.clone()),
        ParamsSource::Estimated => {
            let est = plugin_pq(graph, &init.assignment)?;
            stages.push("plugin");
            let (mut p, mut q) = (est.p_hat, est.q_hat);
            separate(&mut p, &mut q);
            (p, q)
        }
    };
    Ok(Prepared {
        init: init.assignment,
        p,
        q,
        p_trim,
        stages,
        init_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub result: DetectionResult,
    pub stages: Vec<&'static str>,
    /// Wall time including the shared preparation.
    pub wall_ms: f64,
}

/// Runs `method` on a prepared instance.
pub fn run_method(record: &SampleRecord, prepared: &Prepared, method: Method, opts: &PipelineOptions) -> Result<Detection> {
    let start = Instant::now();
    let graph = &record.graph;
    let mut stages = prepared.stages.clone();
    let refine_config = || RefineConfig::new(opts.rho_input, prepared.p.clone(), prepared.q.clone());
    let result = match method {
        Method::Spectral => DetectionResult {
            z_star_hat: prepared.init.clone(),
            z_layer_hat: vec![prepared.init.clone(); graph.num_layers()],
            per_node_scores: nalgebra::DMatrix::zeros(0, 0),
            aligned: true,
            unaligned_nodes: Vec::new(),
        },
        Method::Generic => {
            stages.push("refine");
            refine_generic(&prepared.init, graph, &refine_config()?)?
        }
        Method::Provable => {
            stages.push("loo-spectral");
            let omega = opts.weights.weights(&prepared.p_trim)?;
            let loo = LeaveOneOutSpectral::new(graph, &omega, &prepared.p_trim, &opts.spectral)?;
            stages.push("refine");
            refine_provable(graph, &refine_config()?, &|i| loo.init_without(i))?
        }
        Method::Coreg => {
            stages = vec!["coreg"];
            coreg_cluster(graph, &opts.coreg)?.result
        }
    };
    let own_ms = start.elapsed().as_secs_f64() * 1e3;
    let wall_ms = if method == Method::Coreg { own_ms } else { own_ms + prepared.init_ms };
    Ok(Detection { result, stages, wall_ms })
}

pub fn detect(record: &SampleRecord, method: Method, opts: &PipelineOptions) -> Result<Detection> {
    if method == Method::Coreg {
        // Co-regularization needs no initializer or probability estimates.
        let prepared = Prepared {
            init: Assignment::constant(record.graph.n(), 1),
            p: Vec::new(),
            q: Vec::new(),
            p_trim: Vec::new(),
            stages: Vec::new(),
            init_ms: 0.0,
        };
        return run_method(record, &prepared, method, opts);
    }
    run_method(record, &prepare(record, opts)?, method, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Losses {
    pub global: f64,
    pub layers: Vec<f64>,
}

pub fn losses(record: &SampleRecord, result: &DetectionResult) -> Result<Losses> {
    if result.z_layer_hat.len() != record.z_layers.len() {
        bail!("result has {} layers, instance has {}", result.z_layer_hat.len(), record.z_layers.len());
    }
    let global = misclustering(&result.z_star_hat, &record.z_star)?.value;
    let layers = result
        .z_layer_hat
        .iter()
        .zip(&record.z_layers)
        .map(|(h, z)| Ok(misclustering(h, z)?.value))
        .collect::<Result<_>>()?;
    Ok(Losses { global, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use imlsbm::{balanced_assignment, sample_imlsbm, ModelParams};

    #[test]
    fn estimated_pipeline_stage_order() {
        let params = ModelParams::new(60, 0.1, vec![0.4, 0.3], vec![0.05, 0.05]).unwrap();
        let rec = sample_imlsbm(&params, &balanced_assignment(60).unwrap(), 2).unwrap();
        let opts = PipelineOptions::new(ParamsSource::Estimated, 0.1, 2);
        let d = detect(&rec, Method::Generic, &opts).unwrap();
        assert_eq!(d.stages, vec!["moment", "spectral", "plugin", "refine"]);
        let t = detect(&rec, Method::Generic, &PipelineOptions::new(ParamsSource::True, 0.1, 2)).unwrap();
        assert_eq!(t.stages, vec!["spectral", "refine"]);
    }

    #[test]
    fn parse_names() {
        assert_eq!("provable".parse::<Method>().unwrap(), Method::Provable);
        assert!("kmeans".parse::<Method>().is_err());
        assert_eq!("estimated".parse::<ParamsSource>().unwrap(), ParamsSource::Estimated);
        assert!(parse_weight_scheme("inverse").is_err());
    }
}
