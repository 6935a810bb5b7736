use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelConfig, Placement, Pulse};
use crate::cs::OmpMode;
use crate::dl::TrainConfig;
use crate::{Error, Result};

/// Environment variable naming the directory for outputs whose path is not
/// given explicitly.
pub const OUT_DIR_ENV: &str = "LIS_OUT_DIR";

/// A beam-design method as named in configs, CSV rows and on the command
/// line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    UpperBound,
    Cs,
    Dl,
    /// `dl` followed by top-`k_B` refinement for every `k_B` in `dl.top_k`.
    DlTopk,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::UpperBound, Method::Cs, Method::Dl, Method::DlTopk];

    pub fn name(self) -> &'static str {
        match self {
            Method::UpperBound => "upper_bound",
            Method::Cs => "cs",
            Method::Dl => "dl",
            Method::DlTopk => "dl_topk",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown method `{name}` (expected upper_bound, cs, dl or dl_topk)")))
    }

    pub fn uses_network(self) -> bool {
        matches!(self, Method::Dl | Method::DlTopk)
    }
}

/// Where receiver channels come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig {
    /// Geometric generator; the transmitter link is drawn once per path
    /// count and then held fixed.
    Synthetic {
        placement: Placement,
        /// Path loss of the transmitter link; `channel.path_loss` applies to
        /// the receiver link.
        transmitter_path_loss: f64,
    },
    /// Paths read from a channel file. Its header overrides `channel`
    /// except for the pulse.
    Imported { path: PathBuf, transmitter_link: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsConfig {
    /// Dictionary grid points in `u` and `v`.
    pub grid_az: usize,
    pub grid_el: usize,
    /// Defaults to the path count of the sweep point.
    #[serde(default)]
    pub max_sparsity: Option<usize>,
    /// Defaults to `sqrt(M_bar sigma^2)` with the sensing noise power.
    #[serde(default)]
    pub residual_tol: Option<f64>,
    #[serde(default)]
    pub mode: OmpMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlConfig {
    /// Leading subcarriers fed to the network.
    pub k_dl: usize,
    /// Hidden layer widths; defaults to `[M, 4M, 4M, M]` with `M` the
    /// codebook size.
    #[serde(default)]
    pub hidden_layers: Option<Vec<usize>>,
    /// Training-set sizes to sweep.
    pub dataset_sizes: Vec<usize>,
    /// Refinement widths reported as `dl_topk(k)` rows.
    #[serde(default)]
    pub top_k: Vec<usize>,
    /// The harness replaces `train.seed` with a value derived from the
    /// master seed.
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub methods: Vec<Method>,
    /// CSV destination; relative to `$LIS_OUT_DIR` (or the working
    /// directory) when not absolute.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill `wall_time_ms`; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
    pub geometry: ArrayGeometry,
    /// Receiver link, and every link parameter but path loss of the
    /// transmitter link.
    pub channel: ChannelConfig,
    pub source: SourceConfig,
    /// Receiver noise power `sigma_n^2` in the rate.
    pub noise_power: f64,
    /// Noise power added to every sampled channel entry the sensors report.
    pub sensing_noise_power: f64,
    /// Sweep lists.
    pub active_counts: Vec<usize>,
    pub transmit_powers: Vec<f64>,
    pub num_paths: Vec<usize>,
    pub cs: CsConfig,
    pub dl: DlConfig,
}

fn check(ok: bool, field: impl Into<String>, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

fn non_empty<T>(list: &[T], field: &str) -> Result<()> {
    check(!list.is_empty(), field, "list must not be empty")
}

fn positive(x: f64, field: &str) -> Result<()> {
    check(x.is_finite() && x > 0.0, field, format!("must be finite and > 0, got {x}"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("byte {}..{}", s.start, s.end)).unwrap_or_default();
            Error::config(field, e.message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a TOML file. A relative `source.path` is taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config { field, message } => Error::config(format!("{}: {field}", path.display()), message),
            other => other,
        })?;
        if let SourceConfig::Imported { path: file, .. } = &mut config.source {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn num_elements(&self) -> usize {
        self.geometry.num_elements()
    }

    /// Codebook size; the DFT codebook has one codeword per element.
    pub fn num_codewords(&self) -> usize {
        self.num_elements()
    }

    pub fn uses_network(&self) -> bool {
        self.methods.iter().any(|m| m.uses_network())
    }

    /// Resolved CSV path.
    pub fn output_path(&self) -> PathBuf {
        let name = self.output.clone().unwrap_or_else(|| PathBuf::from("results.csv"));
        resolve_output(&name)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.trials >= 1, "trials", "must be >= 1")?;
        non_empty(&self.methods, "methods")?;
        self.geometry.validate().map_err(|e| Error::config("geometry", e.to_string()))?;
        self.channel.validate().map_err(|e| Error::config("channel", e.to_string()))?;
        positive(self.noise_power, "noise_power")?;
        check(
            self.sensing_noise_power.is_finite() && self.sensing_noise_power >= 0.0,
            "sensing_noise_power",
            "must be finite and >= 0",
        )?;
        match &self.source {
            SourceConfig::Synthetic {
                placement,
                transmitter_path_loss,
            } => {
                positive(*transmitter_path_loss, "source.transmitter_path_loss")?;
                if let Placement::OnGrid { n_az, n_el } = placement {
                    check(*n_az > 0 && *n_el > 0, "source.placement", "grid sizes must be positive")?;
                }
            }
            SourceConfig::Imported { path, .. } => {
                check(!path.as_os_str().is_empty(), "source.path", "must not be empty")?;
            }
        }
        let m = self.num_elements();
        non_empty(&self.active_counts, "active_counts")?;
        for (i, &a) in self.active_counts.iter().enumerate() {
            check(a >= 1 && a <= m, format!("active_counts[{i}]"), format!("must lie in [1, {m}], got {a}"))?;
        }
        non_empty(&self.transmit_powers, "transmit_powers")?;
        for (i, &p) in self.transmit_powers.iter().enumerate() {
            positive(p, &format!("transmit_powers[{i}]"))?;
        }
        non_empty(&self.num_paths, "num_paths")?;
        for (i, &l) in self.num_paths.iter().enumerate() {
            check(l >= 1, format!("num_paths[{i}]"), "must be >= 1")?;
        }

        check(self.cs.grid_az >= 1 && self.cs.grid_el >= 1, "cs.grid_az", "grid sizes must be >= 1")?;
        if let Some(s) = self.cs.max_sparsity {
            check(s >= 1, "cs.max_sparsity", "must be >= 1")?;
        }
        if let Some(t) = self.cs.residual_tol {
            check(t.is_finite() && t >= 0.0, "cs.residual_tol", "must be finite and >= 0")?;
        }

        let k = self.channel.num_subcarriers;
        let dl = &self.dl;
        check(
            dl.k_dl >= 1 && dl.k_dl <= k,
            "dl.k_dl",
            format!("must lie in [1, {k}], got {}", dl.k_dl),
        )?;
        if let Some(h) = &dl.hidden_layers {
            for (i, &w) in h.iter().enumerate() {
                check(w >= 1, format!("dl.hidden_layers[{i}]"), "must be >= 1")?;
            }
        }
        if self.uses_network() {
            non_empty(&dl.dataset_sizes, "dl.dataset_sizes")?;
        }
        for (i, &s) in dl.dataset_sizes.iter().enumerate() {
            check(s >= 1, format!("dl.dataset_sizes[{i}]"), "must be >= 1")?;
        }
        if self.methods.contains(&Method::DlTopk) {
            non_empty(&dl.top_k, "dl.top_k")?;
        }
        let n_cb = self.num_codewords();
        for (i, &kb) in dl.top_k.iter().enumerate() {
            check(
                kb >= 1 && kb <= n_cb,
                format!("dl.top_k[{i}]"),
                format!("must lie in [1, {n_cb}], got {kb}"),
            )?;
        }
        dl.train.validate().map_err(|e| Error::config("dl.train", e.to_string()))?;
        Ok(())
    }

    /// Small synthetic configuration: 8 x 8 surface, 16 subcarriers, one
    /// path per link on the twice-oversampled dictionary grid.
    pub fn desk() -> Self {
        Self {
            seed: 1,
            trials: 100,
            methods: Method::ALL.to_vec(),
            output: None,
            record_wall_time: false,
            geometry: ArrayGeometry::half_wavelength(8, 8).expect("valid"),
            channel: ChannelConfig {
                num_subcarriers: 16,
                num_taps: 4,
                sample_period: 1e-8,
                path_loss: 1e4,
                pulse: Pulse::Delta,
            },
            source: SourceConfig::Synthetic {
                placement: Placement::OnGrid { n_az: 16, n_el: 16 },
                transmitter_path_loss: 1e4,
            },
            noise_power: 1e-4,
            sensing_noise_power: 1e-4,
            active_counts: vec![4],
            transmit_powers: vec![1.0],
            num_paths: vec![1],
            cs: CsConfig {
                grid_az: 16,
                grid_el: 16,
                max_sparsity: None,
                residual_tol: None,
                mode: OmpMode::Joint,
            },
            dl: DlConfig {
                k_dl: 8,
                hidden_layers: None,
                dataset_sizes: vec![2000],
                top_k: vec![1, 2, 4],
                train: TrainConfig::default(),
            },
        }
    }
}

/// Absolute paths pass through; relative ones land under `$LIS_OUT_DIR` when
/// it is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}
