use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lis_beam::channel::{read_channel_file, write_channel_file};
use lis_beam::dl::io::{load_dataset, load_predictor, save_dataset, save_predictor};
use lis_beam::harness::{
    collect_point_dataset, evaluate_point, prepare_point, resolve_output, run_experiment, sweep_points,
    train_predictor, write_csv, ExperimentConfig, Method, SweepPoint,
};
use lis_beam::{Error, Result};

/// LIS reflection beamforming simulator.
#[derive(Parser)]
#[command(name = "lis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Collect a learning dataset at the first sweep point and save it.
    GenerateData(Common),
    /// Fit a network and save it, from a saved dataset or a fresh one.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset written by `generate-data`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score methods on fresh trials at the first sweep point.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model written by `train`; needed for `dl` and `dl_topk`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Methods to score (comma separated); defaults to `dl,dl_topk`.
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
    },
    /// Run the full sweep and write the result CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Restrict to these methods (comma separated).
        #[arg(long, value_delimiter = ',')]
        method: Vec<String>,
    },
    /// Validate a channel file and print a per-link summary.
    ImportChannels {
        file: PathBuf,
        /// Also write the parsed channels back out in canonical form.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    resolve_output(common.out.as_deref().unwrap_or(Path::new(default)))
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>> {
    let mut methods = names.iter().map(|n| Method::parse(n.trim())).collect::<Result<Vec<_>>>()?;
    methods.sort();
    methods.dedup();
    Ok(methods)
}

fn first_point(config: &ExperimentConfig) -> SweepPoint {
    sweep_points(config)[0]
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateData(common) => {
            let config = load_config(&common)?;
            let p = prepare_point(&config, first_point(&config))?;
            let size = *config
                .dl
                .dataset_sizes
                .first()
                .ok_or_else(|| Error::Config { field: "dl.dataset_sizes".into(), message: "list must not be empty".into() })?;
            let dataset = collect_point_dataset(&config, &p, size)?;
            let out = out_path(&common, "dataset.lisd");
            save_dataset(&out, &dataset)?;
            println!("wrote {} samples to {}", dataset.len(), out.display());
        }
        Command::Train { common, data } => {
            let config = load_config(&common)?;
            let dataset = match data {
                Some(path) => load_dataset(&path)?,
                None => {
                    let p = prepare_point(&config, first_point(&config))?;
                    let size = config.dl.dataset_sizes.first().copied().unwrap_or(1);
                    collect_point_dataset(&config, &p, size)?
                }
            };
            let (predictor, log) = train_predictor(&config, &dataset)?;
            let out = out_path(&common, "model.lism");
            save_predictor(&out, &predictor)?;
            let last = log.epochs.last();
            println!(
                "trained on {} samples ({} held out), final train mse {:?}, validation mse {:?}; wrote {}",
                log.train_count,
                log.validation_count,
                last.map(|e| e.train_mse),
                last.and_then(|e| e.validation_mse),
                out.display()
            );
        }
        Command::Evaluate { common, model, method } => {
            let config = load_config(&common)?;
            let methods = if method.is_empty() {
                vec![Method::Dl, Method::DlTopk]
            } else {
                parse_methods(&method)?
            };
            let predictor = match model {
                Some(path) => Some(load_predictor(&path)?),
                None if methods.iter().any(|m| m.uses_network()) => {
                    return Err(Error::InvalidArgument("--model is required for dl and dl_topk".into()));
                }
                None => None,
            };
            let mut point = first_point(&config);
            if let Some(pr) = &predictor {
                point.m_bar = pr.active.len();
                if pr.k_dl != config.dl.k_dl {
                    return Err(Error::InvalidArgument(format!(
                        "model uses K_DL = {} but the config says {}",
                        pr.k_dl, config.dl.k_dl
                    )));
                }
            }
            let mut p = prepare_point(&config, point)?;
            if let Some(pr) = &predictor {
                if pr.active.total_elements() != config.num_elements() {
                    return Err(Error::InvalidArgument("model was trained for a different surface size".into()));
                }
                p.active = pr.active.clone();
            }
            let predictors: Vec<_> = predictor.into_iter().map(|pr| (0, pr)).collect();
            let rows = evaluate_point(&config, &p, &predictors, &methods);
            let out = out_path(&common, "evaluation.csv");
            write_csv(&out, &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Sweep { common, method } => {
            let mut config = load_config(&common)?;
            if !method.is_empty() {
                config.methods = parse_methods(&method)?;
            }
            let rows = run_experiment(&config)?;
            let out = match &common.out {
                Some(p) => resolve_output(p),
                None => config.output_path(),
            };
            write_csv(&out, &rows)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::ImportChannels { file, out } => {
            let imported = read_channel_file(&file)?;
            let h = &imported.header;
            println!(
                "{}: pathloss={} K={} D={} Ts={} links={}",
                file.display(),
                h.path_loss,
                h.num_subcarriers,
                h.num_taps,
                h.sample_period,
                imported.links.len()
            );
            for (id, paths) in &imported.links {
                let power: f64 = paths.iter().map(|p| p.gain.norm_sqr()).sum();
                println!("link {id}: {} paths, total gain power {power:.6e}", paths.len());
            }
            if let Some(out) = out {
                let out = resolve_output(&out);
                std::fs::write(&out, write_channel_file(h, &imported.links))?;
                println!("wrote {}", out.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
