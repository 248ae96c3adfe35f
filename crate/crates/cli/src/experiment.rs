//! Monte Carlo experiment harness.
//!
//! Each `(rho, c)` design point and replication `r` is one job: it samples an
//! instance with seed `seed + r` and runs every configured method on it, so
//! methods are compared on identical instances. Jobs run in parallel and
//! the rows are sorted into a fixed order before anything is written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use imlsbm::metrics::{summarize, Summary};
use imlsbm::spectral::WeightScheme;
use imlsbm::{balanced_assignment, experiment_params, sample_imlsbm, ExperimentDesign, LayerGroup};
use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Scenario};
use crate::pipeline::{losses, prepare, run_method, Losses, Method, PipelineOptions};

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// Parameter source label of methods that use no probability estimates.
pub const NO_PARAMS: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub rho: f64,
    pub c: f64,
    pub rho_input: f64,
    /// Method name, suffixed with `/scheme` for non-uniform weights.
    pub method: String,
    pub params_source: String,
    pub layer_group: String,
    pub replication: usize,
    pub loss_global: f64,
    pub loss_individual_mean: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub rho: f64,
    pub c: f64,
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResults {
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

impl ExperimentResults {
    /// Rows matching a predicate.
    pub fn select<'a>(&'a self, pred: impl Fn(&Row) -> bool + 'a) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| pred(r))
    }
}

pub fn method_label(method: Method, weights: WeightScheme) -> String {
    if method == Method::Coreg || weights == WeightScheme::Uniform {
        method.name().to_string()
    } else {
        format!("{}/{}", method.name(), weights.name())
    }
}

/// Sort position of a row inside its job.
type RowKey = (usize, usize, usize, usize, LayerGroup);

struct Job {
    point: usize,
    rho: f64,
    c: f64,
    replication: usize,
}

fn run_job(config: &ExperimentConfig, job: &Job) -> Result<Vec<(RowKey, Row)>> {
    let design = experiment_params(config.n, config.layers, job.c, job.rho, config.scaling)?;
    let z_star = balanced_assignment(config.n)?;
    let seed = config.seed.wrapping_add(job.replication as u64);
    let record = sample_imlsbm(&design.params, &z_star, seed)?;
    let rho_inputs = config.rho_inputs(job.rho);
    let mut out = Vec::new();
    let mut emit = |key: (usize, usize, usize, usize), label: String, params: &str, rho_input: f64, loss: &Losses, wall_ms: f64| {
        for group in LayerGroup::ALL {
            let members = design.layers_in(group);
            if members.is_empty() {
                continue;
            }
            let individual = members.iter().map(|&l| loss.layers[l]).sum::<f64>() / members.len() as f64;
            out.push((
                (key.0, key.1, key.2, key.3, group),
                Row {
                    scenario: config.scenario.name().to_string(),
                    n: config.n,
                    layers: config.layers,
                    rho: job.rho,
                    c: job.c,
                    rho_input,
                    method: label.clone(),
                    params_source: params.to_string(),
                    layer_group: group.name().to_string(),
                    replication: job.replication,
                    loss_global: loss.global,
                    loss_individual_mean: individual,
                    wall_ms,
                },
            ));
        }
    };

    let refined: Vec<(usize, Method)> =
        config.methods.iter().copied().enumerate().filter(|(_, m)| *m != Method::Coreg).collect();
    if !refined.is_empty() {
        for (pi, &params) in config.params.iter().enumerate() {
            for (wi, &weights) in config.weights.iter().enumerate() {
                let mut opts = PipelineOptions::new(params, job.rho, seed);
                opts.weights = weights;
                let prepared = prepare(&record, &opts)?;
                for (ri, &rho_input) in rho_inputs.iter().enumerate() {
                    opts.rho_input = rho_input;
                    for &(mi, method) in &refined {
                        let det = run_method(&record, &prepared, method, &opts)?;
                        let loss = losses(&record, &det.result)?;
                        emit((ri, pi, wi, mi), method_label(method, weights), params.name(), rho_input, &loss, det.wall_ms);
                    }
                }
            }
        }
    }
    if let Some(mi) = config.methods.iter().position(|&m| m == Method::Coreg) {
        let opts = PipelineOptions::new(config.params[0], job.rho, seed);
        let prepared_none = crate::pipeline::detect(&record, Method::Coreg, &opts)?;
        let loss = losses(&record, &prepared_none.result)?;
        emit((0, 0, 0, mi), Method::Coreg.name().to_string(), NO_PARAMS, job.rho, &loss, prepared_none.wall_ms);
    }
    Ok(out)
}

/// Runs every job of `config` and returns the rows in canonical order.
/// Failed jobs are reported in `failures` and contribute no rows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let jobs: Vec<Job> = config
        .design_points()
        .into_iter()
        .enumerate()
        .flat_map(|(point, (rho, c))| (0..config.replications).map(move |replication| Job { point, rho, c, replication }))
        .collect();
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().context("building the worker pool")?;
    let outcomes: Vec<(usize, usize, Result<Vec<(RowKey, Row)>>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let res = run_job(config, job);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % (total / 10).max(1) == 0 || k == total {
                    info!("{}: {k}/{total} jobs done", config.scenario);
                }
                (job.point, job.replication, res)
            })
            .collect()
    });

    let mut keyed = Vec::new();
    let mut failures = Vec::new();
    for (point, replication, res) in outcomes {
        match res {
            Ok(rows) => keyed.extend(rows.into_iter().map(|(k, row)| ((point, k), replication, row))),
            Err(e) => {
                let (rho, c) = config.design_points()[point];
                error!("rho = {rho}, c = {c}, replication {replication} failed: {e:#}");
                failures.push(Failure { rho, c, replication, message: format!("{e:#}") });
            }
        }
    }
    keyed.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(ExperimentResults { rows: keyed.into_iter().map(|(_, _, row)| row).collect(), failures })
}

/// Columns of the summary file that identify a row group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupKey {
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub rho: f64,
    pub c: f64,
    pub rho_input: f64,
    pub method: String,
    pub params_source: String,
    pub layer_group: String,
}

impl GroupKey {
    fn of(row: &Row) -> Self {
        GroupKey {
            scenario: row.scenario.clone(),
            n: row.n,
            layers: row.layers,
            rho: row.rho,
            c: row.c,
            rho_input: row.rho_input,
            method: row.method.clone(),
            params_source: row.params_source.clone(),
            layer_group: row.layer_group.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub global: Summary,
    pub individual: Summary,
    pub wall_ms_mean: f64,
}

/// Summaries per group in order of first appearance.
pub fn summarize_rows(rows: &[Row]) -> Result<Vec<GroupSummary>> {
    let mut order: Vec<GroupKey> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut values: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in rows {
        let key = GroupKey::of(row);
        let id = format!("{key:?}");
        let slot = *index.entry(id).or_insert_with(|| {
            order.push(key);
            values.push(Default::default());
            values.len() - 1
        });
        values[slot].0.push(row.loss_global);
        values[slot].1.push(row.loss_individual_mean);
        values[slot].2.push(row.wall_ms);
    }
    order
        .into_iter()
        .zip(values)
        .map(|(key, (g, ind, wall))| {
            Ok(GroupSummary {
                key,
                global: summarize(&g)?,
                individual: summarize(&ind)?,
                wall_ms_mean: wall.iter().sum::<f64>() / wall.len() as f64,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryRecord<'a> {
    scenario: &'a str,
    n: usize,
    #[serde(rename = "L")]
    layers: usize,
    rho: f64,
    c: f64,
    rho_input: f64,
    method: &'a str,
    params_source: &'a str,
    layer_group: &'a str,
    count: usize,
    global_mean: f64,
    global_sd: f64,
    global_q05: f64,
    global_q25: f64,
    global_q50: f64,
    global_q75: f64,
    global_q95: f64,
    individual_mean: f64,
    individual_sd: f64,
    individual_q05: f64,
    individual_q25: f64,
    individual_q50: f64,
    individual_q75: f64,
    individual_q95: f64,
    wall_ms_mean: f64,
}

impl<'a> SummaryRecord<'a> {
    fn new(s: &'a GroupSummary) -> Self {
        let (g, i) = (&s.global, &s.individual);
        let k = &s.key;
        SummaryRecord {
            scenario: &k.scenario,
            n: k.n,
            layers: k.layers,
            rho: k.rho,
            c: k.c,
            rho_input: k.rho_input,
            method: &k.method,
            params_source: &k.params_source,
            layer_group: &k.layer_group,
            count: g.count,
            global_mean: g.mean,
            global_sd: g.sd,
            global_q05: g.quantiles[0],
            global_q25: g.quantiles[1],
            global_q50: g.quantiles[2],
            global_q75: g.quantiles[3],
            global_q95: g.quantiles[4],
            individual_mean: i.mean,
            individual_sd: i.sd,
            individual_q05: i.quantiles[0],
            individual_q25: i.quantiles[1],
            individual_q50: i.quantiles[2],
            individual_q75: i.quantiles[3],
            individual_q95: i.quantiles[4],
            wall_ms_mean: s.wall_ms_mean,
        }
    }
}

/// One point of the plot description: a mean with a 95% normal interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotPoint {
    pub panel: String,
    pub series: String,
    pub x_label: String,
    pub x: f64,
    pub y: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

/// Panels are estimands (global, or individual per layer group); the x axis
/// is `c`, or `log(1/rho_input)` for sensitivity runs and `log(1/rho)` for
/// sweeps over several `rho`.
pub fn plot_points(config: &ExperimentConfig, summaries: &[GroupSummary]) -> Vec<PlotPoint> {
    let multi_rho = config.rho.len() > 1;
    let multi_c = config.c.len() > 1;
    let (x_label, x_of): (&str, fn(&GroupKey) -> f64) = match config.scenario {
        Scenario::Sensitivity => ("log(1/rho_input)", |k| (1.0 / k.rho_input).ln()),
        Scenario::SnrSweep if multi_rho => ("log(1/rho)", |k| (1.0 / k.rho).ln()),
        _ => ("c", |k| k.c),
    };
    let mut seen_global = std::collections::HashSet::new();
    let mut points = Vec::new();
    for s in summaries {
        let k = &s.key;
        let mut series = format!("{}|{}", k.method, k.params_source);
        if x_label != "c" && multi_c {
            series.push_str(&format!("|c={}", k.c));
        }
        if x_label != "log(1/rho)" && multi_rho {
            series.push_str(&format!("|rho={}", k.rho));
        }
        let x = x_of(k);
        let mut push = |panel: String, sum: &Summary| {
            let half = 1.96 * sum.sd / (sum.count as f64).sqrt();
            points.push(PlotPoint {
                panel,
                series: series.clone(),
                x_label: x_label.to_string(),
                x,
                y: sum.mean,
                y_lo: sum.mean - half,
                y_hi: sum.mean + half,
            });
        };
        // The global loss repeats across layer-group rows; plot it once.
        let global_id = format!("{}|{}|{}|{}|{}", k.method, k.params_source, k.rho, k.c, k.rho_input);
        if seen_global.insert(global_id) {
            push("global".to_string(), &s.global);
        }
        push(format!("individual-{}", k.layer_group), &s.individual);
    }
    points
}

fn write_csv<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in records {
        w.serialize(r).with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub const RUNS_HEADER: &str =
    "scenario,n,L,rho,c,rho_input,method,params_source,layer_group,replication,loss_global,loss_individual_mean,wall_ms";

/// Writes the long-format runs, summary, plot description and resolved
/// config into `config.out`, plus a failures file when jobs failed.
pub fn write_outputs(config: &ExperimentConfig, results: &ExperimentResults) -> Result<Vec<PathBuf>> {
    let dir = &config.out;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();

    let runs = dir.join(RUNS_FILE);
    if results.rows.is_empty() {
        fs::write(&runs, format!("{RUNS_HEADER}\n")).with_context(|| format!("writing {}", runs.display()))?;
    } else {
        write_csv(&runs, &results.rows)?;
    }
    written.push(runs);

    let summaries = summarize_rows(&results.rows)?;
    let summary = dir.join(SUMMARY_FILE);
    write_csv(&summary, summaries.iter().map(SummaryRecord::new))?;
    written.push(summary);

    let plot = dir.join(PLOT_FILE);
    write_csv(&plot, plot_points(config, &summaries))?;
    written.push(plot);

    let cfg = dir.join(CONFIG_FILE);
    fs::write(&cfg, config.to_toml()).with_context(|| format!("writing {}", cfg.display()))?;
    written.push(cfg);

    let failures = dir.join(FAILURES_FILE);
    if results.failures.is_empty() {
        if failures.exists() {
            fs::remove_file(&failures).with_context(|| format!("removing stale {}", failures.display()))?;
        }
    } else {
        write_csv(&failures, &results.failures)?;
        written.push(failures);
    }
    Ok(written)
}

/// Groups and their means for quick inspection: `(group key, mean global
/// loss, mean individual loss)`.
pub fn group_means(results: &ExperimentResults) -> Result<Vec<(GroupKey, f64, f64)>> {
    Ok(summarize_rows(&results.rows)?.into_iter().map(|s| (s.key, s.global.mean, s.individual.mean)).collect())
}

/// The design of one grid point, for callers that need layer groups.
pub fn design_of(config: &ExperimentConfig, rho: f64, c: f64) -> Result<ExperimentDesign> {
    Ok(experiment_params(config.n, config.layers, c, rho, config.scaling)?)
}
