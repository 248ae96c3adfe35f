//! Argument parsing and dispatch.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use imlsbm::spectral::{SpectralConfig, WeightScheme};
use log::{info, warn};

use crate::commands::{self, GenerateSpec};
use crate::config::{parse_scaling, ExperimentConfig, Grid, RawConfig, Scenario};
use crate::experiment::{run_experiment, write_outputs};
use crate::pipeline::{parse_weight_scheme, Method, ParamsSource, PipelineOptions};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "imlsbm", version, about = "Community detection in inhomogeneous multilayer stochastic block models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed; replication r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "IMLSBM_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample instances and write them as text files.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        /// weak, intermediate or strong-mix.
        #[arg(long)]
        scaling: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
        /// Use n = 1000, L = 100.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a detection method on an instance file.
    Detect {
        instance: PathBuf,
        #[arg(long, default_value = "generic")]
        method: Method,
        #[arg(long, default_value = "true")]
        params: ParamsSource,
        /// Label-flip probability given to refinement (default: the instance's rho).
        #[arg(long)]
        rho_input: Option<f64>,
        #[arg(long, default_value = "uniform", value_parser = parse_weight_scheme)]
        weights: WeightScheme,
        #[command(flatten)]
        common: Common,
    },
    /// Minimax rate quantities for a parameter file (.toml) or an instance.
    Rate {
        params: PathBuf,
        /// Also emit per-t curves on this many grid points.
        #[arg(long)]
        curves: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Probability estimates for an instance.
    Estimate {
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a simulation study and write CSV results.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario to run with defaults when no config is given.
        #[arg(long)]
        scenario: Option<Scenario>,
        /// Override the config's methods.
        #[arg(long)]
        method: Vec<Method>,
        /// Override the config's parameter sources.
        #[arg(long)]
        params: Vec<ParamsSource>,
        /// Override the config's rho_input grid.
        #[arg(long)]
        rho_input: Vec<f64>,
        /// Use n = 1000, L = 100 and 500 replications.
        #[arg(long)]
        full: bool,
        #[command(flatten)]
        common: Common,
    },
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

trait Classify<T> {
    fn usage(self) -> std::result::Result<T, Failure>;
    fn runtime(self) -> std::result::Result<T, Failure>;
}

impl<T> Classify<T> for Result<T> {
    fn usage(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Usage)
    }

    fn runtime(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Runtime)
    }
}

fn load_raw(path: Option<&Path>) -> Result<RawConfig> {
    path.map(RawConfig::load).transpose().map(Option::unwrap_or_default)
}

fn print_or_write(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match commands::emit(dir, name, text)? {
        Some(path) => info!("wrote {}", path.display()),
        None => print!("{text}"),
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

pub fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    let jobs = match &cli.command {
        Command::Generate { common, .. }
        | Command::Detect { common, .. }
        | Command::Rate { common, .. }
        | Command::Estimate { common, .. }
        | Command::Experiment { common, .. } => common.jobs,
    };
    if jobs == Some(0) {
        return Err(Failure::Usage(anyhow::anyhow!("--jobs must be at least 1")));
    }
    if let Some(j) = jobs {
        // Ignore the error if a pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }

    match cli.command {
        Command::Generate { config, n, layers, rho, c, scaling, replications, full, common } => {
            let mut raw = load_raw(config.as_deref()).usage()?;
            if full {
                raw.n = Some(crate::config::FULL_N);
                raw.layers = Some(crate::config::FULL_LAYERS);
            }
            raw.n = n.or(raw.n);
            raw.layers = layers.or(raw.layers);
            raw.rho = rho.map(Grid::One).or(raw.rho);
            raw.c = c.map(Grid::One).or(raw.c);
            raw.replications = replications.or(raw.replications);
            raw.seed = common.seed.or(raw.seed);
            raw.out = common.out.or(raw.out);
            if let Some(s) = scaling {
                parse_scaling(&s).map_err(anyhow::Error::msg).usage()?;
                raw.scaling = Some(s);
            }
            let spec = GenerateSpec::from_raw(&raw).usage()?;
            let files = commands::cmd_generate(&spec).runtime()?;
            info!("wrote {} instance files to {}", files.len(), spec.out.display());
            Ok(())
        }
        Command::Detect { instance, method, params, rho_input, weights, common } => {
            let record = commands::load_instance(&instance).runtime()?;
            let rho_input = rho_input.unwrap_or(record.params.rho);
            if !(0.0..=0.5).contains(&rho_input) {
                return Err(Failure::Usage(anyhow::anyhow!("--rho-input {rho_input} outside [0, 1/2]")));
            }
            let mut opts = PipelineOptions::new(params, rho_input, common.seed.unwrap_or(record.seed));
            opts.weights = weights;
            let text = commands::cmd_detect(&record, method, &opts).runtime()?;
            print_or_write(common.out.as_deref(), &format!("{}.{}.txt", stem(&instance), method), &text).runtime()
        }
        Command::Rate { params, curves, common } => {
            let model = commands::load_params(&params).usage()?;
            let (report, curve_csv) = commands::cmd_rate(&model, curves).runtime()?;
            let name = stem(&params);
            print_or_write(common.out.as_deref(), &format!("{name}.rate.txt"), &report).runtime()?;
            if let Some(csv) = curve_csv {
                print_or_write(common.out.as_deref(), &format!("{name}.curves.csv"), &csv).runtime()?;
            }
            Ok(())
        }
        Command::Estimate { instance, common } => {
            let record = commands::load_instance(&instance).runtime()?;
            let config = SpectralConfig { seed: common.seed.unwrap_or(record.seed), ..Default::default() };
            let text = commands::cmd_estimate(&record, &config).runtime()?;
            print_or_write(common.out.as_deref(), &format!("{}.estimate.csv", stem(&instance)), &text).runtime()
        }
        Command::Experiment { config, scenario, method, params, rho_input, full, common } => {
            let mut raw = load_raw(config.as_deref()).usage()?;
            if let Some(s) = scenario {
                raw.scenario = Some(s.name().into());
            }
            if !method.is_empty() {
                raw.methods = Some(method.iter().map(|m| m.name().into()).collect());
            }
            if !params.is_empty() {
                raw.params = Some(params.iter().map(|p| p.name().into()).collect());
            }
            if !rho_input.is_empty() {
                raw.rho_input = Some(Grid::Many(rho_input));
            }
            raw.seed = common.seed.or(raw.seed);
            raw.out = common.out.or(raw.out);
            raw.jobs = common.jobs.or(raw.jobs);
            let mut cfg = ExperimentConfig::resolve(raw).usage()?;
            if full {
                cfg.full_scale();
            }
            info!(
                "{}: n = {}, L = {}, {} design points x {} replications",
                cfg.scenario,
                cfg.n,
                cfg.layers,
                cfg.design_points().len(),
                cfg.replications
            );
            let results = run_experiment(&cfg).runtime()?;
            let written = write_outputs(&cfg, &results).runtime()?;
            for path in &written {
                info!("wrote {}", path.display());
            }
            if !results.failures.is_empty() {
                warn!("{} replications failed", results.failures.len());
                return Err(Failure::Runtime(anyhow::anyhow!(
                    "{} of {} jobs failed; see {}",
                    results.failures.len(),
                    cfg.design_points().len() * cfg.replications,
                    cfg.out.join(crate::experiment::FAILURES_FILE).display()
                )));
            }
            Ok(())
        }
    }
}

/// Entry point of the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not failures.
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_method_is_a_usage_error() {
        let err = Cli::try_parse_from(["imlsbm", "detect", "x.txt", "--method", "kmeans"]).unwrap_err();
        assert!(err.use_stderr());
        assert_eq!(err.exit_code(), EXIT_USAGE as i32);
    }
}
