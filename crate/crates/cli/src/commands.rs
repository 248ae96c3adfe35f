//! Subcommand implementations. Each returns its output as text or files so
//! the binary and the tests share one code path.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use imlsbm::estimate::{marginal_probs, moment_p_hat, plugin_pq};
use imlsbm::format::{read_instance, write_instance};
use imlsbm::rates::{layer_info, rate_report, RateModel, RateReport};
use imlsbm::spectral::{spectral_initialize, SpectralConfig};
use imlsbm::{balanced_assignment, experiment_params, sample_imlsbm, ModelParams, SampleRecord, Scaling};
use serde::{Deserialize, Serialize};

use crate::config::{parse_scaling, Grid, RawConfig, DESK_LAYERS, DESK_N};
use crate::pipeline::{detect, losses, Detection, Method, PipelineOptions};

pub fn load_instance(path: &Path) -> Result<SampleRecord> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_instance(BufReader::new(file)).with_context(|| format!("reading instance {}", path.display()))
}

/// What `generate` samples: one instance per design point and replication.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub n: usize,
    pub layers: usize,
    pub rho: Vec<f64>,
    pub c: Vec<f64>,
    pub scaling: Scaling,
    pub replications: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl GenerateSpec {
    /// Reads the sampling keys of an experiment config; other keys are
    /// ignored.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let grid = |g: &Option<Grid>, default: f64| match g {
            None => vec![default],
            Some(Grid::One(v)) => vec![*v],
            Some(Grid::Many(v)) => v.clone(),
        };
        let spec = GenerateSpec {
            n: raw.n.unwrap_or(DESK_N),
            layers: raw.layers.unwrap_or(DESK_LAYERS),
            rho: grid(&raw.rho, 0.1),
            c: grid(&raw.c, 3.0),
            scaling: match raw.scaling.as_deref() {
                None => Scaling::StrongMix,
                Some(s) => parse_scaling(s).map_err(anyhow::Error::msg)?,
            },
            replications: raw.replications.unwrap_or(1),
            seed: raw.seed.unwrap_or(0),
            out: raw.out.clone().unwrap_or_else(|| PathBuf::from("instances")),
        };
        if spec.replications == 0 || spec.rho.is_empty() || spec.c.is_empty() {
            bail!("generate needs at least one replication and nonempty rho and c grids");
        }
        Ok(spec)
    }
}

/// Writes `instance_RRRR.txt` files (with a `rho`/`c` tag when the grid has
/// several points); replication `r` uses seed `seed + r`.
pub fn cmd_generate(spec: &GenerateSpec) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&spec.out).with_context(|| format!("creating {}", spec.out.display()))?;
    let z_star = balanced_assignment(spec.n)?;
    let points: Vec<(f64, f64)> = spec.rho.iter().flat_map(|&r| spec.c.iter().map(move |&c| (r, c))).collect();
    let mut written = Vec::new();
    for &(rho, c) in &points {
        let design = experiment_params(spec.n, spec.layers, c, rho, spec.scaling)?;
        for r in 0..spec.replications {
            let record = sample_imlsbm(&design.params, &z_star, spec.seed.wrapping_add(r as u64))?;
            let name = if points.len() == 1 {
                format!("instance_{r:04}.txt")
            } else {
                format!("instance_rho{rho}_c{c}_{r:04}.txt")
            };
            let path = spec.out.join(name);
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_instance(BufWriter::new(file), &record).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn push_labels(s: &mut String, labels: &[i8]) {
    for &v in labels {
        s.push_str(if v == 1 { " +1" } else { " -1" });
    }
    s.push('\n');
}

/// Detection output: estimates, losses against the stored truth and timing.
pub fn render_detection(record: &SampleRecord, method: Method, opts: &PipelineOptions, det: &Detection) -> Result<String> {
    let loss = losses(record, &det.result)?;
    let mut s = String::new();
    writeln!(s, "method {method}")?;
    writeln!(s, "params {}", opts.params.name())?;
    writeln!(s, "weights {}", opts.weights.name())?;
    writeln!(s, "rho_input {}", opts.rho_input)?;
    writeln!(s, "seed {}", opts.spectral.seed)?;
    writeln!(s, "stages {}", det.stages.join(","))?;
    writeln!(s, "wall_ms {:.3}", det.wall_ms)?;
    writeln!(s, "aligned {}", det.result.aligned)?;
    writeln!(s, "loss_global {}", loss.global)?;
    for (l, v) in loss.layers.iter().enumerate() {
        writeln!(s, "loss_layer {l} {v}")?;
    }
    s.push_str("z_star_hat");
    push_labels(&mut s, det.result.z_star_hat.labels());
    for (l, z) in det.result.z_layer_hat.iter().enumerate() {
        write!(s, "z_layer_hat {l}")?;
        push_labels(&mut s, z.labels());
    }
    Ok(s)
}

pub fn cmd_detect(record: &SampleRecord, method: Method, opts: &PipelineOptions) -> Result<String> {
    let det = detect(record, method, opts)?;
    render_detection(record, method, opts, &det)
}

/// A model for `rate`: explicit per-layer probabilities, or the simulation
/// design at signal constant `c`.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RateParamsFile {
    pub n: usize,
    pub rho: f64,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub layers: Option<usize>,
    pub c: Option<f64>,
    pub scaling: Option<String>,
}

impl RateParamsFile {
    pub fn into_params(self) -> Result<ModelParams> {
        match (self.p, self.q, self.layers, self.c) {
            (Some(p), Some(q), None, None) => Ok(ModelParams::new(self.n, self.rho, p, q)?),
            (None, None, Some(layers), Some(c)) => {
                let scaling = match self.scaling.as_deref() {
                    None => Scaling::StrongMix,
                    Some(s) => parse_scaling(s).map_err(anyhow::Error::msg)?,
                };
                Ok(experiment_params(self.n, layers, c, self.rho, scaling)?.params)
            }
            _ => bail!("give either p and q lists or layers and c"),
        }
    }
}

/// Model parameters from a `.toml` parameter file or an instance file.
pub fn load_params(path: &Path) -> Result<ModelParams> {
    if path.extension().is_some_and(|e| e == "toml") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: RateParamsFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        file.into_params()
    } else {
        Ok(load_instance(path)?.params)
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// The rate report as `key = value` lines.
pub fn render_rate_report(params: &ModelParams, report: &RateReport) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("n", params.n.to_string());
    kv("layers", params.num_layers().to_string());
    kv("rho", params.rho.to_string());
    kv("j_rho", report.j_rho.to_string());
    kv("m", report.m.to_string());
    kv("global.min_snr", report.global.value.to_string());
    kv("global.subset", join(report.global.members()));
    kv("global.complement_odd", report.global.complement_odd.to_string());
    kv("global.exponent", report.global_exponent.to_string());
    for (l, r) in report.per_layer.iter().enumerate() {
        kv(&format!("layer.{l}.p"), params.p[l].to_string());
        kv(&format!("layer.{l}.q"), params.q[l].to_string());
        kv(&format!("layer.{l}.i_half"), report.i_half[l].to_string());
        kv(&format!("layer.{l}.min_snr"), r.min_snr.value.to_string());
        kv(&format!("layer.{l}.subset"), join(r.min_snr.members()));
        kv(&format!("layer.{l}.j_single"), r.j_single.to_string());
        kv(&format!("layer.{l}.exponent"), report.individual_exponents[l].to_string());
    }
    s
}

/// Per-`t` curves: `I_t` of every layer and the pooled `psi_S(t)` of the
/// global minimizer, as CSV with columns `series,t,value`.
pub fn render_rate_curves(params: &ModelParams, report: &RateReport, points: usize) -> Result<String> {
    if points < 2 {
        bail!("curves need at least two points");
    }
    let model = RateModel::from_params(params);
    let mut s = String::from("series,t,value\n");
    for k in 0..points {
        let t = k as f64 / (points - 1) as f64;
        for l in 0..params.num_layers() {
            writeln!(s, "layer_{l},{t},{}", layer_info(params.p[l], params.q[l], t))?;
        }
        writeln!(s, "psi_global_subset,{t},{}", model.pooled_signal(&report.global.mask, t))?;
    }
    Ok(s)
}

pub fn cmd_rate(params: &ModelParams, curve_points: Option<usize>) -> Result<(String, Option<String>)> {
    let report = rate_report(params)?;
    let curves = curve_points.map(|k| render_rate_curves(params, &report, k)).transpose()?;
    Ok((render_rate_report(params, &report), curves))
}

/// Probability estimates per layer as CSV: truth, marginal blend, moment
/// estimate, and plug-in estimates under the spectral initialization.
pub fn cmd_estimate(record: &SampleRecord, config: &SpectralConfig) -> Result<String> {
    let graph = &record.graph;
    let moment = moment_p_hat(graph)?;
    let omega = imlsbm::spectral::uniform_weights(graph.num_layers())?;
    let init = spectral_initialize(graph, &omega, &moment, config)?;
    let plugin = plugin_pq(graph, &init.assignment)?;
    let (tp, tq) = marginal_probs(&record.params);
    let mut s = String::from("layer,p,q,p_tilde,q_tilde,p_moment,p_plugin,q_plugin,swapped,fallback\n");
    for l in 0..graph.num_layers() {
        writeln!(
            s,
            "{l},{},{},{},{},{},{},{},{},{}",
            record.params.p[l],
            record.params.q[l],
            tp[l],
            tq[l],
            moment[l],
            plugin.p_hat[l],
            plugin.q_hat[l],
            plugin.swapped.contains(&l),
            plugin.fallback
        )?;
    }
    Ok(s)
}

/// Writes `text` to `dir/name`, or returns it for printing when no
/// directory was given.
pub fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<Option<PathBuf>> {
    match dir {
        None => Ok(None),
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            Ok(Some(path))
        }
    }
}
