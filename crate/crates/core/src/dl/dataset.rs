use rayon::prelude::*;

use crate::channel::add_noise;
use crate::codebook::ReflectionCodebook;
use crate::rate::{rate_vector, LinkBudget, RateVector};
use crate::scenario::ScenarioSource;
use crate::surface::{effective_channel, sample_channel, sampled_descriptor, ActiveSet};
use crate::{derive_seed, rng_from_seed, CMatrix, CVector, Complex64, Error, Result};

/// Divides by `delta` and interleaves `(re, im)` per entry.
pub fn build_input(descriptor: &[Complex64], delta: f64) -> Result<Vec<f64>> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("input scale must be > 0, got {delta}")));
    }
    Ok(descriptor.iter().flat_map(|z| [z.re / delta, z.im / delta]).collect())
}

/// Largest entry magnitude over every descriptor.
pub fn compute_delta<'a>(descriptors: impl IntoIterator<Item = &'a CVector>) -> Result<f64> {
    let mut seen = false;
    let mut delta = 0.0f64;
    for d in descriptors {
        seen = true;
        for z in d.iter() {
            delta = delta.max(z.norm());
        }
    }
    if !seen {
        return Err(Error::invalid("cannot scale an empty dataset"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("every descriptor entry is zero"));
    }
    Ok(delta)
}

/// Outcome of target normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetStatus {
    Ok,
    /// Every rate was zero; targets were left at zero.
    AllZero,
}

/// Divides every rate by the largest one, so the best codeword maps to 1.
pub fn normalize_targets(rates: &RateVector) -> Result<(Vec<f64>, TargetStatus)> {
    let r = rates.as_slice();
    if r.is_empty() {
        return Err(Error::invalid("rate vector is empty"));
    }
    let max = r.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok((vec![0.0; r.len()], TargetStatus::AllZero));
    }
    Ok((r.iter().map(|x| x / max).collect(), TargetStatus::Ok))
}

/// One coherence block before any dataset-level normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    pub scenario_id: u64,
    /// Noisy stacked sampled channel, length `M_bar K_DL`.
    pub descriptor: CVector,
    /// True rate of every codeword.
    pub rates: RateVector,
}

/// Noisy sampled channels `(h_bar_T, h_bar_R)` of one block.
pub fn noisy_samples(
    transmitter: &crate::channel::FrequencyChannel,
    receiver: &crate::channel::FrequencyChannel,
    active: &ActiveSet,
    noise_power: f64,
    rng: &mut crate::SimRng,
) -> Result<(CMatrix, CMatrix)> {
    let mut t = sample_channel(transmitter, active)?;
    let mut r = sample_channel(receiver, active)?;
    add_noise(t.as_mut_slice(), noise_power, rng)?;
    add_noise(r.as_mut_slice(), noise_power, rng)?;
    Ok((t, r))
}

const BLOCK_STREAM: u64 = 0x_b10c;

/// Seed of the rng that draws block `block` in [`collect_raw`].
pub fn block_seed(seed: u64, block: u64) -> u64 {
    derive_seed(seed, BLOCK_STREAM, block)
}

/// Learning-phase collection: for each of `count` coherence blocks, draw a
/// scenario, estimate the noisy sampled channels, evaluate every codeword on
/// the true channels and keep `<descriptor, rates>`.
///
/// Block `s` draws the scenario and then the noise from its own rng seeded
/// by [`block_seed`], so blocks are collected in parallel yet the result is
/// identical to a serial run.
#[allow(clippy::too_many_arguments)]
pub fn collect_raw(
    source: &dyn ScenarioSource,
    active: &ActiveSet,
    codebook: &ReflectionCodebook,
    budget: &LinkBudget,
    k_dl: usize,
    count: usize,
    noise_power: f64,
    seed: u64,
) -> Result<Vec<RawSample>> {
    if count == 0 {
        return Err(Error::invalid("dataset size must be >= 1"));
    }
    (0..count as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng_from_seed(block_seed(seed, s));
            let pair = source.draw(s, &mut rng)?;
            let (t, r) = noisy_samples(&pair.transmitter, &pair.receiver, active, noise_power, &mut rng)?;
            let descriptor = sampled_descriptor(&t, &r, k_dl)?;
            let eff = effective_channel(&pair.transmitter, &pair.receiver)?;
            Ok(RawSample {
                scenario_id: pair.id,
                descriptor,
                rates: rate_vector(&eff, codebook, budget)?,
            })
        })
        .collect()
}

/// One normalized training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    /// `2 M_bar K_DL` reals, scaled by the dataset's `delta`.
    pub descriptor: Vec<f64>,
    /// Rates divided by their maximum.
    pub targets: Vec<f64>,
    /// The maximum the targets were divided by (the block's `R*`).
    pub raw_max_rate: f64,
    pub scenario_id: u64,
    pub status: TargetStatus,
}

/// Normalized learning dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub active: ActiveSet,
    pub k_dl: usize,
    pub num_codewords: usize,
    pub noise_power: f64,
    /// Input scale shared by every sample and frozen for prediction.
    pub delta: f64,
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    /// Normalizes raw samples. `delta = None` computes the scale from these
    /// samples; pass the training scale when building a test set.
    pub fn from_raw(
        raw: &[RawSample],
        active: ActiveSet,
        k_dl: usize,
        noise_power: f64,
        delta: Option<f64>,
    ) -> Result<Self> {
        let first = raw.first().ok_or_else(|| Error::invalid("dataset is empty"))?;
        let expect = active.len() * k_dl;
        let num_codewords = first.rates.len();
        for s in raw {
            if s.descriptor.len() != expect {
                return Err(Error::mismatch("descriptor length", expect, s.descriptor.len()));
            }
            if s.rates.len() != num_codewords {
                return Err(Error::mismatch("rate vector length", num_codewords, s.rates.len()));
            }
        }
        let delta = match delta {
            Some(d) => d,
            None => compute_delta(raw.iter().map(|s| &s.descriptor))?,
        };
        let samples = raw
            .iter()
            .map(|s| {
                let (targets, status) = normalize_targets(&s.rates)?;
                if status == TargetStatus::AllZero {
                    log::warn!("scenario {} has an all-zero rate vector", s.scenario_id);
                }
                Ok(DatasetSample {
                    descriptor: build_input(s.descriptor.as_slice(), delta)?,
                    targets,
                    raw_max_rate: s.rates.as_slice().iter().copied().fold(0.0, f64::max),
                    scenario_id: s.scenario_id,
                    status,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            active,
            k_dl,
            num_codewords,
            noise_power,
            delta,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_len(&self) -> usize {
        2 * self.active.len() * self.k_dl
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.descriptor.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.targets.clone()).collect()
    }
}

/// [`collect_raw`] followed by dataset-level normalization.
#[allow(clippy::too_many_arguments)]
pub fn collect_dataset(
    source: &dyn ScenarioSource,
    active: &ActiveSet,
    codebook: &ReflectionCodebook,
    budget: &LinkBudget,
    k_dl: usize,
    count: usize,
    noise_power: f64,
    seed: u64,
) -> Result<Dataset> {
    let raw = collect_raw(source, active, codebook, budget, k_dl, count, noise_power, seed)?;
    Dataset::from_raw(&raw, active.clone(), k_dl, noise_power, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn input_interleaves_and_scales() {
        let x = build_input(&[c(1.0, 0.0), c(0.0, 2.0)], 2.0).unwrap();
        assert_eq!(x, vec![0.5, 0.0, 0.0, 1.0]);
        assert!(build_input(&[c(1.0, 0.0)], 0.0).is_err());
        assert!(build_input(&[c(1.0, 0.0)], -1.0).is_err());
    }

    #[test]
    fn delta_is_max_abs() {
        let one = CVector::from_vec(vec![c(3.0, 4.0)]);
        assert_eq!(compute_delta([&one]).unwrap(), 5.0);
        let two = CVector::from_vec(vec![c(0.0, -7.0), c(1.0, 1.0)]);
        assert_eq!(compute_delta([&one, &two]).unwrap(), 7.0);
        let zero = CVector::zeros(3);
        assert!(compute_delta([&zero]).is_err());
        assert!(compute_delta(std::iter::empty()).is_err());
    }

    #[test]
    fn delta_matches_naive_double_loop() {
        let mut rng = crate::rng_from_seed(8);
        let data: Vec<CVector> = (0..1000)
            .map(|_| CVector::from_fn(6, |_, _| c(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0)))
            .collect();
        let mut naive = 0.0f64;
        for d in &data {
            for i in 0..d.len() {
                let m = (d[i].re * d[i].re + d[i].im * d[i].im).sqrt();
                if m > naive {
                    naive = m;
                }
            }
        }
        let delta = compute_delta(data.iter()).unwrap();
        assert!((delta - naive).abs() <= 1e-15 * naive);
        for d in &data {
            assert!(build_input(d.as_slice(), delta).unwrap().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn target_normalization() {
        let (t, s) = normalize_targets(&RateVector::new(vec![2.0, 4.0]).unwrap()).unwrap();
        assert_eq!((t, s), (vec![0.5, 1.0], TargetStatus::Ok));
        let (t, _) = normalize_targets(&RateVector::new(vec![3.3; 4]).unwrap()).unwrap();
        assert_eq!(t, vec![1.0; 4]);
        let (t, s) = normalize_targets(&RateVector::new(vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!((t, s), (vec![0.0; 3], TargetStatus::AllZero));
        assert!(normalize_targets(&RateVector::new(vec![]).unwrap()).is_err());
    }
}
