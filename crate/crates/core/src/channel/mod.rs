//! Wideband geometric channel model between the surface and a single-antenna
//! terminal.
//!
//! The surface is a uniform planar array in the y-z plane. A path arriving at
//! azimuth `theta` and elevation `phi` has spatial frequencies
//! `u = sin(theta) sin(phi)` (horizontal) and `v = cos(phi)` (vertical), and the
//! array response is the Kronecker product of two 1-D exponentials in `u` and
//! `v`. Element `(m_h, m_v)` sits at flat index `m_h * M_V + m_v`.

mod import;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Complex64, Error, Result};

pub use import::{read_channel_file, parse_channel_file, write_channel_file, ChannelFileHeader, ImportedChannels};

/// One propagation ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Seconds, never negative.
    pub delay: f64,
    /// Radians in `[0, 2pi)`.
    pub azimuth: f64,
    /// Radians in `[0, 2pi)`.
    pub elevation: f64,
}

impl PathComponent {
    /// Validates the delay and reduces both angles modulo `2pi`.
    pub fn new(gain: Complex64, delay: f64, azimuth: f64, elevation: f64) -> Result<Self> {
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(Error::invalid("path gain must be finite"));
        }
        if !delay.is_finite() || delay < 0.0 {
            return Err(Error::invalid(format!("path delay must be finite and >= 0, got {delay}")));
        }
        if !azimuth.is_finite() || !elevation.is_finite() {
            return Err(Error::invalid("path angles must be finite"));
        }
        Ok(Self {
            gain,
            delay,
            azimuth: wrap_angle(azimuth),
            elevation: wrap_angle(elevation),
        })
    }

    /// Spatial frequencies `(u, v)` of this path on a y-z plane array.
    pub fn spatial_frequencies(&self) -> (f64, f64) {
        spatial_frequencies(self.azimuth, self.elevation)
    }
}

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `(u, v) = (sin(theta) sin(phi), cos(phi))`.
pub fn spatial_frequencies(azimuth: f64, elevation: f64) -> (f64, f64) {
    (azimuth.sin() * elevation.sin(), elevation.cos())
}

/// Angles `(azimuth, elevation)` producing spatial frequencies `(u, v)`, or
/// `None` when the pair is not physical (`u^2 + v^2 > 1`).
pub fn angles_for_frequencies(u: f64, v: f64) -> Option<(f64, f64)> {
    if !(-1.0..=1.0).contains(&v) {
        return None;
    }
    let elevation = v.acos();
    let s = elevation.sin();
    if u.abs() > s + 1e-15 {
        return None;
    }
    let azimuth = if s == 0.0 { 0.0 } else { (u / s).clamp(-1.0, 1.0).asin() };
    Some((wrap_angle(azimuth), wrap_angle(elevation)))
}

/// Uniform planar array of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub m_horizontal: usize,
    pub m_vertical: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(m_horizontal: usize, m_vertical: usize, spacing: f64) -> Result<Self> {
        let g = Self {
            m_horizontal,
            m_vertical,
            spacing,
        };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength spaced `m_horizontal x m_vertical` array.
    pub fn half_wavelength(m_horizontal: usize, m_vertical: usize) -> Result<Self> {
        Self::new(m_horizontal, m_vertical, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_horizontal == 0 || self.m_vertical == 0 {
            return Err(Error::invalid("array dimensions must be positive"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::invalid(format!("element spacing must be > 0, got {}", self.spacing)));
        }
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.m_horizontal * self.m_vertical
    }

    /// `(m_h, m_v)` of a flat element index.
    pub fn element_position(&self, index: usize) -> (usize, usize) {
        (index / self.m_vertical, index % self.m_vertical)
    }
}

/// 1-D response `[exp(i 2pi spacing n freq)]` for `n = 0..len`.
pub fn linear_response(len: usize, spacing: f64, freq: f64) -> CVector {
    CVector::from_fn(len, |n, _| Complex64::from_polar(1.0, TAU * spacing * n as f64 * freq))
}

/// Array response at spatial frequencies `(u, v)`.
pub fn array_response_uv(geometry: &ArrayGeometry, u: f64, v: f64) -> CVector {
    let a_h = linear_response(geometry.m_horizontal, geometry.spacing, u);
    let a_v = linear_response(geometry.m_vertical, geometry.spacing, v);
    a_h.kronecker(&a_v)
}

/// Array response `a(theta, phi) = a_h(u) kron a_v(v)`.
pub fn array_response(geometry: &ArrayGeometry, azimuth: f64, elevation: f64) -> CVector {
    let (u, v) = spatial_frequencies(azimuth, elevation);
    array_response_uv(geometry, u, v)
}

/// Pulse shaping function for `T_S`-spaced signaling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pulse {
    /// One inside `[-T_S/2, T_S/2)`, zero elsewhere, so every delay lands on
    /// exactly one tap.
    #[default]
    Delta,
    Sinc,
    RaisedCosine { rolloff: f64 },
}

impl Pulse {
    /// `p(t)` for sample period `ts`.
    pub fn evaluate(&self, t: f64, ts: f64) -> f64 {
        let x = t / ts;
        match *self {
            Pulse::Delta => {
                if (-0.5..0.5).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Pulse::Sinc => sinc(x),
            Pulse::RaisedCosine { rolloff } => {
                if rolloff == 0.0 {
                    return sinc(x);
                }
                let denom = 1.0 - (2.0 * rolloff * x).powi(2);
                if denom.abs() < 1e-12 {
                    PI / 4.0 * sinc(1.0 / (2.0 * rolloff))
                } else {
                    sinc(x) * (PI * rolloff * x).cos() / denom
                }
            }
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// OFDM and propagation parameters of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// `K`
    pub num_subcarriers: usize,
    /// `D`
    pub num_taps: usize,
    /// `T_S` in seconds.
    pub sample_period: f64,
    /// `rho`, linear.
    pub path_loss: f64,
    #[serde(default)]
    pub pulse: Pulse,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_subcarriers == 0 || self.num_taps == 0 {
            return Err(Error::invalid("subcarrier and tap counts must be positive"));
        }
        if self.num_taps > self.num_subcarriers {
            return Err(Error::invalid(format!(
                "num_taps ({}) exceeds num_subcarriers ({})",
                self.num_taps, self.num_subcarriers
            )));
        }
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::invalid("sample period must be > 0"));
        }
        if !(self.path_loss.is_finite() && self.path_loss > 0.0) {
            return Err(Error::invalid(format!("path loss must be > 0, got {}", self.path_loss)));
        }
        if let Pulse::RaisedCosine { rolloff } = self.pulse {
            if !(0.0..=1.0).contains(&rolloff) {
                return Err(Error::invalid("raised-cosine rolloff must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Same link with a different path loss.
    pub fn with_path_loss(mut self, path_loss: f64) -> Self {
        self.path_loss = path_loss;
        self
    }
}

/// Per-subcarrier channel vectors, `M x K`, column `k` is `h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyChannel(CMatrix);

impl FrequencyChannel {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("channel contains non-finite entries"));
        }
        Ok(Self(entries))
    }

    pub fn zeros(num_elements: usize, num_subcarriers: usize) -> Self {
        Self(CMatrix::zeros(num_elements, num_subcarriers))
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn num_elements(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.0.ncols()
    }
}

fn validate_inputs(paths: &[PathComponent], config: &ChannelConfig, geometry: &ArrayGeometry) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::EmptyPathList);
    }
    config.validate()?;
    geometry.validate()
}

/// Delay-domain channel at tap `d`:
/// `sqrt(M / rho) * sum_l alpha_l p(d T_S - tau_l) a(theta_l, phi_l)`.
pub fn delay_channel(
    paths: &[PathComponent],
    config: &ChannelConfig,
    geometry: &ArrayGeometry,
    tap: usize,
) -> Result<CVector> {
    validate_inputs(paths, config, geometry)?;
    if tap >= config.num_taps {
        return Err(Error::invalid(format!("tap {tap} out of range 0..{}", config.num_taps)));
    }
    let m = geometry.num_elements();
    let scale = (m as f64 / config.path_loss).sqrt();
    let t = tap as f64 * config.sample_period;
    let mut h = CVector::zeros(m);
    for path in paths {
        let p = config.pulse.evaluate(t - path.delay, config.sample_period);
        if p == 0.0 {
            continue;
        }
        let a = array_response(geometry, path.azimuth, path.elevation);
        h.axpy(path.gain * scale * p, &a, Complex64::new(1.0, 0.0));
    }
    Ok(h)
}

/// Per-path, per-subcarrier gains
/// `beta[l, k] = sqrt(M / rho) alpha_l sum_d p(d T_S - tau_l) exp(-i 2pi k d / K)`,
/// shape `L x K`.
pub fn path_gains(paths: &[PathComponent], config: &ChannelConfig, geometry: &ArrayGeometry) -> Result<CMatrix> {
    validate_inputs(paths, config, geometry)?;
    let k_total = config.num_subcarriers;
    let scale = (geometry.num_elements() as f64 / config.path_loss).sqrt();
    let mut beta = CMatrix::zeros(paths.len(), k_total);
    for (l, path) in paths.iter().enumerate() {
        let taps: Vec<f64> = (0..config.num_taps)
            .map(|d| config.pulse.evaluate(d as f64 * config.sample_period - path.delay, config.sample_period))
            .collect();
        for k in 0..k_total {
            let mut acc = Complex64::new(0.0, 0.0);
            for (d, &p) in taps.iter().enumerate() {
                if p != 0.0 {
                    acc += p * twiddle(k, d, k_total);
                }
            }
            beta[(l, k)] = path.gain * scale * acc;
        }
    }
    Ok(beta)
}

/// `exp(-i 2pi k d / K)` with the exponent reduced modulo `K` first.
fn twiddle(k: usize, d: usize, k_total: usize) -> Complex64 {
    let r = (k * d) % k_total;
    Complex64::from_polar(1.0, -TAU * r as f64 / k_total as f64)
}

/// Array response matrix `A = [a(theta_1, phi_1), ..., a(theta_L, phi_L)]`.
pub fn steering_matrix(paths: &[PathComponent], geometry: &ArrayGeometry) -> CMatrix {
    let m = geometry.num_elements();
    let mut a = CMatrix::zeros(m, paths.len());
    for (l, path) in paths.iter().enumerate() {
        a.set_column(l, &array_response(geometry, path.azimuth, path.elevation));
    }
    a
}

/// Frequency-domain channel, evaluated in the compact form `h_k = A beta_k`.
pub fn frequency_channel(
    paths: &[PathComponent],
    config: &ChannelConfig,
    geometry: &ArrayGeometry,
) -> Result<FrequencyChannel> {
    let beta = path_gains(paths, config, geometry)?;
    FrequencyChannel::new(steering_matrix(paths, geometry) * beta)
}

/// Frequency-domain channel as the DFT of the delay taps,
/// `h_k = sum_d h_d exp(-i 2pi k d / K)`.
pub fn frequency_channel_from_taps(
    paths: &[PathComponent],
    config: &ChannelConfig,
    geometry: &ArrayGeometry,
) -> Result<FrequencyChannel> {
    let taps = (0..config.num_taps)
        .map(|d| delay_channel(paths, config, geometry, d))
        .collect::<Result<Vec<_>>>()?;
    let k_total = config.num_subcarriers;
    let mut h = CMatrix::zeros(geometry.num_elements(), k_total);
    for k in 0..k_total {
        let mut col = h.column_mut(k);
        for (d, tap) in taps.iter().enumerate() {
            col.axpy(twiddle(k, d, k_total), tap, Complex64::new(1.0, 0.0));
        }
    }
    FrequencyChannel::new(h)
}

/// Adds circularly symmetric complex Gaussian noise of total per-entry
/// variance `noise_power` (each of re/im gets `noise_power / 2`).
pub fn add_noise<R: Rng + ?Sized>(values: &mut [Complex64], noise_power: f64, rng: &mut R) -> Result<()> {
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(Error::invalid(format!("noise power must be >= 0, got {noise_power}")));
    }
    if noise_power == 0.0 {
        return Ok(());
    }
    let sigma = (noise_power / 2.0).sqrt();
    for z in values.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *z += Complex64::new(sigma * re, sigma * im);
    }
    Ok(())
}

/// Uniform spatial-frequency grid point `-1 + 2 i / n` used by the recovery
/// dictionary.
pub fn grid_frequency(index: usize, points: usize) -> f64 {
    -1.0 + 2.0 * index as f64 / points as f64
}

/// How synthetic path directions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Directions snapped to a `n_az x n_el` dictionary grid in `(u, v)`;
    /// only physical grid points (`u^2 + v^2 <= 1`) are used.
    OnGrid { n_az: usize, n_el: usize },
    /// Azimuth uniform in `[0, 2pi)`, elevation uniform in `[0, pi)`.
    Uniform,
}

/// Physical `(i_az, i_el)` points of a dictionary grid.
pub fn physical_grid_points(n_az: usize, n_el: usize) -> Vec<(usize, usize)> {
    let mut pts = Vec::new();
    for i in 0..n_az {
        let u = grid_frequency(i, n_az);
        for j in 0..n_el {
            let v = grid_frequency(j, n_el);
            if u * u + v * v <= 1.0 {
                pts.push((i, j));
            }
        }
    }
    pts
}

/// Draws `num_paths` synthetic rays: complex Gaussian gains `CN(0, 1)`,
/// delays uniform in `[0, (D - 1) T_S]`, directions per `placement`.
pub fn synthesize_scenario<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &ArrayGeometry,
    config: &ChannelConfig,
    num_paths: usize,
    placement: Placement,
) -> Result<Vec<PathComponent>> {
    if num_paths == 0 {
        return Err(Error::invalid("a scenario needs at least one path"));
    }
    geometry.validate()?;
    config.validate()?;
    let grid = match placement {
        Placement::OnGrid { n_az, n_el } => {
            if n_az == 0 || n_el == 0 {
                return Err(Error::invalid("grid sizes must be positive"));
            }
            Some((n_az, n_el, physical_grid_points(n_az, n_el)))
        }
        Placement::Uniform => None,
    };
    let max_delay = (config.num_taps - 1) as f64 * config.sample_period;
    let mut paths = Vec::with_capacity(num_paths);
    for _ in 0..num_paths {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let gain = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        let delay = rng.random::<f64>() * max_delay;
        let (azimuth, elevation) = match &grid {
            Some((n_az, n_el, points)) => {
                let (i, j) = points[rng.random_range(0..points.len())];
                angles_for_frequencies(grid_frequency(i, *n_az), grid_frequency(j, *n_el))
                    .expect("physical grid point")
            }
            None => (rng.random::<f64>() * TAU, rng.random::<f64>() * PI),
        };
        paths.push(PathComponent::new(gain, delay, azimuth, elevation)?);
    }
    Ok(paths)
}
