use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, SourceConfig};
use crate::channel::read_channel_file;
use crate::codebook::{dft_codebook, ReflectionCodebook};
use crate::cs::{build_dictionary, cs_beam_design, CsSettings, DesignStatus, Dictionary};
use crate::dl::{
    collect_raw, noisy_samples, predict_beam, top_k_refine, train, BeamPredictor, Dataset, RawSample, TrainConfig,
    TrainingLog,
};
use crate::rate::{rate_vector, LinkBudget};
use crate::scenario::{ImportedScenario, ScenarioSource, SyntheticScenario};
use crate::surface::{effective_channel, sampled_descriptor, select_active, ActiveSet};
use crate::{derive_seed, rng_from_seed, Result};

// Seed streams. Every random draw of a run comes from
// `derive_seed(master, stream, index)` with one of these streams.
const SOURCE_STREAM: u64 = 10;
const ACTIVE_STREAM: u64 = 11;
const DATASET_STREAM: u64 = 12;
const TRAIN_STREAM: u64 = 13;
const TRIAL_STREAM: u64 = 14;
const NOISE_STREAM: u64 = 15;

/// Per-row outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// Sparse recovery hit a rank-deficient support and fell back to
    /// codeword 0.
    CsFallback,
    /// The trial could not be run; rates are zero.
    Failed,
}

impl RowStatus {
    pub fn name(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::CsFallback => "cs_fallback",
            RowStatus::Failed => "failed",
        }
    }
}

/// One method on one trial of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    /// `k_B` for `dl_topk` rows.
    pub top_k: Option<usize>,
    pub m_bar: usize,
    /// Training-set size for network rows, 0 otherwise.
    pub dataset_size: usize,
    /// Paths per link, 0 for imported channels.
    pub num_paths: usize,
    pub transmit_power: f64,
    pub trial: usize,
    pub achieved_rate: f64,
    pub optimal_rate: f64,
    pub rate_ratio: f64,
    pub wall_time_ms: f64,
    pub status: RowStatus,
}

impl ResultRow {
    /// `upper_bound`, `cs`, `dl` or `dl_topk(k)`.
    pub fn method_label(&self) -> String {
        match (self.method, self.top_k) {
            (Method::DlTopk, Some(k)) => format!("dl_topk({k})"),
            (m, _) => m.name().to_string(),
        }
    }
}

pub const CSV_HEADER: &str =
    "method,m_bar,dataset_size,num_paths,transmit_power,trial,achieved_rate,optimal_rate,rate_ratio,wall_time_ms,status";

/// CSV with a header row; reals carry 12 significant digits.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.11e},{},{:.11e},{:.11e},{:.11e},{:.11e},{}",
            r.method_label(),
            r.m_bar,
            r.dataset_size,
            r.num_paths,
            r.transmit_power,
            r.trial,
            r.achieved_rate,
            r.optimal_rate,
            r.rate_ratio,
            r.wall_time_ms,
            r.status.name()
        );
    }
    out
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(to_csv(rows).as_bytes())?;
    Ok(())
}

/// Coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub num_paths: usize,
    pub m_bar: usize,
    pub transmit_power: f64,
}

/// Points in CSV order: path count outermost, transmit power innermost.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<SweepPoint> {
    let paths: Vec<usize> = match config.source {
        SourceConfig::Synthetic { .. } => config.num_paths.clone(),
        SourceConfig::Imported { .. } => vec![0],
    };
    let mut pts = Vec::new();
    for &num_paths in &paths {
        for &m_bar in &config.active_counts {
            for &transmit_power in &config.transmit_powers {
                pts.push(SweepPoint {
                    num_paths,
                    m_bar,
                    transmit_power,
                });
            }
        }
    }
    pts
}

/// Everything a sweep point needs besides trained networks.
pub struct PreparedPoint {
    pub point: SweepPoint,
    pub source: Box<dyn ScenarioSource>,
    /// Drawn once per `M_bar` and shared by every point with that count.
    pub active: ActiveSet,
    pub budget: LinkBudget,
    pub codebook: ReflectionCodebook,
    pub dictionary: Dictionary,
    pub cs: CsSettings,
}

fn build_source(config: &ExperimentConfig, num_paths: usize) -> Result<Box<dyn ScenarioSource>> {
    Ok(match &config.source {
        SourceConfig::Synthetic {
            placement,
            transmitter_path_loss,
        } => {
            let rx = config.channel;
            let tx = rx.with_path_loss(*transmitter_path_loss);
            let mut rng = rng_from_seed(derive_seed(config.seed, SOURCE_STREAM, num_paths as u64));
            Box::new(SyntheticScenario::new(config.geometry, tx, rx, num_paths, *placement, &mut rng)?)
        }
        SourceConfig::Imported { path, transmitter_link } => {
            let imported = read_channel_file(path)?;
            Box::new(ImportedScenario::new(&imported, config.geometry, *transmitter_link, config.channel.pulse)?)
        }
    })
}

/// Active sensor layout for `m_bar` sensors under this config's seed.
pub fn active_set_for(config: &ExperimentConfig, m_bar: usize) -> Result<ActiveSet> {
    let mut rng = rng_from_seed(derive_seed(config.seed, ACTIVE_STREAM, m_bar as u64));
    select_active(config.num_elements(), m_bar, &mut rng)
}

pub fn prepare_point(config: &ExperimentConfig, point: SweepPoint) -> Result<PreparedPoint> {
    let source = build_source(config, point.num_paths)?;
    let budget = LinkBudget::new(point.transmit_power, config.noise_power, source.num_subcarriers())?;
    let sparsity = config.cs.max_sparsity.unwrap_or(point.num_paths.max(1));
    let mut cs = CsSettings::for_noise(sparsity, point.m_bar, config.sensing_noise_power);
    cs.mode = config.cs.mode;
    if let Some(tol) = config.cs.residual_tol {
        cs.residual_tol = tol;
    }
    Ok(PreparedPoint {
        point,
        source,
        active: active_set_for(config, point.m_bar)?,
        budget,
        codebook: dft_codebook(&config.geometry)?,
        dictionary: build_dictionary(&config.geometry, config.cs.grid_az, config.cs.grid_el)?,
        cs,
    })
}

fn point_key(p: &PreparedPoint) -> u64 {
    ((p.point.num_paths as u64) << 32) | p.active.len() as u64
}

/// Raw learning samples of `size` blocks. Blocks are seeded by index, so a
/// smaller collection is a prefix of a larger one at the same point.
pub fn collect_point_raw(config: &ExperimentConfig, p: &PreparedPoint, size: usize) -> Result<Vec<RawSample>> {
    collect_raw(
        p.source.as_ref(),
        &p.active,
        &p.codebook,
        &p.budget,
        config.dl.k_dl,
        size,
        config.sensing_noise_power,
        derive_seed(config.seed, DATASET_STREAM, point_key(p)),
    )
}

/// Normalized learning dataset of `size` blocks.
pub fn collect_point_dataset(config: &ExperimentConfig, p: &PreparedPoint, size: usize) -> Result<Dataset> {
    let raw = collect_point_raw(config, p, size)?;
    Dataset::from_raw(&raw, p.active.clone(), config.dl.k_dl, config.sensing_noise_power, None)
}

/// `config.dl.train` with the seed derived from the master seed.
pub fn train_config_for(config: &ExperimentConfig, dataset_size: usize) -> TrainConfig {
    TrainConfig {
        seed: derive_seed(config.seed, TRAIN_STREAM, dataset_size as u64),
        ..config.dl.train
    }
}

/// Fits a network to `dataset` with the config's layer widths.
pub fn train_predictor(config: &ExperimentConfig, dataset: &Dataset) -> Result<(BeamPredictor, TrainingLog)> {
    let sizes = config.dl.hidden_layers.as_ref().map(|hidden| {
        let mut s = vec![dataset.input_len()];
        s.extend(hidden);
        s.push(dataset.num_codewords);
        s
    });
    train(dataset, sizes.as_deref(), &train_config_for(config, dataset.len()))
}

fn elapsed_ms(start: Instant, record: bool) -> f64 {
    if record {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

fn ratio(achieved: f64, optimal: f64) -> f64 {
    if optimal > 0.0 {
        achieved / optimal
    } else {
        1.0
    }
}

/// Runs every selected method on one trial. `predictors` pairs each network
/// with the dataset size it was trained on.
fn run_trial(
    config: &ExperimentConfig,
    p: &PreparedPoint,
    predictors: &[(usize, BeamPredictor)],
    methods: &[Method],
    trial: usize,
) -> Result<Vec<ResultRow>> {
    let record = config.record_wall_time;
    let key = ((p.point.num_paths as u64) << 32) | trial as u64;
    let pair = p.source.draw(trial as u64, &mut rng_from_seed(derive_seed(config.seed, TRIAL_STREAM, key)))?;
    let mut noise_rng = rng_from_seed(derive_seed(config.seed, NOISE_STREAM, trial as u64));
    let (sampled_t, sampled_r) =
        noisy_samples(&pair.transmitter, &pair.receiver, &p.active, config.sensing_noise_power, &mut noise_rng)?;

    let start = Instant::now();
    let eff = effective_channel(&pair.transmitter, &pair.receiver)?;
    let rates = rate_vector(&eff, &p.codebook, &p.budget)?;
    let best = rates.best().expect("non-empty codebook");
    let search_ms = elapsed_ms(start, record);
    let rate_of = |i: usize| rates.as_slice()[i];

    let row = |method, top_k, dataset_size, achieved: f64, wall_time_ms, status| ResultRow {
        method,
        top_k,
        m_bar: p.point.m_bar,
        dataset_size,
        num_paths: p.point.num_paths,
        transmit_power: p.point.transmit_power,
        trial,
        achieved_rate: achieved,
        optimal_rate: best.rate,
        rate_ratio: ratio(achieved, best.rate),
        wall_time_ms,
        status,
    };

    let mut rows = Vec::new();
    if methods.contains(&Method::UpperBound) {
        rows.push(row(Method::UpperBound, None, 0, best.rate, search_ms, RowStatus::Ok));
    }
    if methods.contains(&Method::Cs) {
        let start = Instant::now();
        let design = cs_beam_design(&sampled_t, &sampled_r, &p.active, &p.dictionary, &p.codebook, &p.budget, &p.cs)?;
        let status = match design.status {
            DesignStatus::Ok => RowStatus::Ok,
            DesignStatus::DegenerateFallback => RowStatus::CsFallback,
        };
        rows.push(row(Method::Cs, None, 0, rate_of(design.index), elapsed_ms(start, record), status));
    }
    let want_dl = methods.contains(&Method::Dl);
    let want_topk = methods.contains(&Method::DlTopk);
    if want_dl || want_topk {
        let descriptor = sampled_descriptor(&sampled_t, &sampled_r, config.dl.k_dl)?;
        for (size, predictor) in predictors {
            let start = Instant::now();
            let pred = predict_beam(&predictor.model, descriptor.as_slice(), predictor.delta)?;
            let predict_ms = elapsed_ms(start, record);
            if want_dl {
                rows.push(row(Method::Dl, None, *size, rate_of(pred.index), predict_ms, RowStatus::Ok));
            }
            if want_topk {
                for &k in &config.dl.top_k {
                    let start = Instant::now();
                    let choice = top_k_refine(&pred.rates, k, |i| Ok(rate_of(i)))?;
                    let ms = predict_ms + elapsed_ms(start, record);
                    rows.push(row(Method::DlTopk, Some(k), *size, choice.rate, ms, RowStatus::Ok));
                }
            }
        }
    }
    Ok(rows)
}

/// Placeholder rows for a trial that failed.
fn failed_rows(
    config: &ExperimentConfig,
    p: &PreparedPoint,
    predictors: &[(usize, BeamPredictor)],
    methods: &[Method],
    trial: usize,
) -> Vec<ResultRow> {
    let mut specs: Vec<(Method, Option<usize>, usize)> = Vec::new();
    for &m in &[Method::UpperBound, Method::Cs] {
        if methods.contains(&m) {
            specs.push((m, None, 0));
        }
    }
    for (size, _) in predictors {
        if methods.contains(&Method::Dl) {
            specs.push((Method::Dl, None, *size));
        }
        if methods.contains(&Method::DlTopk) {
            specs.extend(config.dl.top_k.iter().map(|&k| (Method::DlTopk, Some(k), *size)));
        }
    }
    specs
        .into_iter()
        .map(|(method, top_k, dataset_size)| ResultRow {
            method,
            top_k,
            m_bar: p.point.m_bar,
            dataset_size,
            num_paths: p.point.num_paths,
            transmit_power: p.point.transmit_power,
            trial,
            achieved_rate: 0.0,
            optimal_rate: 0.0,
            rate_ratio: 0.0,
            wall_time_ms: 0.0,
            status: RowStatus::Failed,
        })
        .collect()
}

/// Runs `config.trials` trials of one point in parallel. Rows come back in
/// trial order, so the output does not depend on thread scheduling.
pub fn evaluate_point(
    config: &ExperimentConfig,
    p: &PreparedPoint,
    predictors: &[(usize, BeamPredictor)],
    methods: &[Method],
) -> Vec<ResultRow> {
    let per_trial: Vec<Vec<ResultRow>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            run_trial(config, p, predictors, methods, trial).unwrap_or_else(|e| {
                log::warn!("trial {trial} at {:?} failed: {e}", p.point);
                failed_rows(config, p, predictors, methods, trial)
            })
        })
        .collect();
    per_trial.into_iter().flatten().collect()
}

/// Full sweep: for every point, train one network per dataset size (when a
/// network method is selected), then evaluate every method on the same
/// trial scenarios.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for point in sweep_points(config) {
        let p = prepare_point(config, point)?;
        let mut predictors = Vec::new();
        if config.uses_network() {
            let largest = *config.dl.dataset_sizes.iter().max().expect("validated");
            let raw = collect_point_raw(config, &p, largest)?;
            for &size in &config.dl.dataset_sizes {
                let dataset =
                    Dataset::from_raw(&raw[..size], p.active.clone(), config.dl.k_dl, config.sensing_noise_power, None)?;
                let (predictor, log) = train_predictor(config, &dataset)?;
                log::info!(
                    "{point:?}, S = {size}: final train mse {:?}",
                    log.final_train_mse()
                );
                predictors.push((size, predictor));
            }
        }
        rows.extend(evaluate_point(config, &p, &predictors, &config.methods));
    }
    Ok(rows)
}
