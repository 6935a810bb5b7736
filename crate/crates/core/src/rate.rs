//! Achievable rate of a reflection vector and the exhaustive-search upper
//! bound.

use serde::{Deserialize, Serialize};

use crate::codebook::ReflectionCodebook;
use crate::surface::EffectiveChannel;
use crate::{argmax, CVector, Error, Result};

/// Transmit power, receiver noise and subcarrier count of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// `P_T`, watts.
    pub transmit_power: f64,
    /// `sigma_n^2`, watts.
    pub noise_power: f64,
    /// `K`
    pub num_subcarriers: usize,
}

impl LinkBudget {
    pub fn new(transmit_power: f64, noise_power: f64, num_subcarriers: usize) -> Result<Self> {
        let b = Self {
            transmit_power,
            noise_power,
            num_subcarriers,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.transmit_power.is_finite() && self.transmit_power > 0.0) {
            return Err(Error::invalid("transmit power must be > 0"));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::invalid("noise power must be > 0"));
        }
        if self.num_subcarriers == 0 {
            return Err(Error::invalid("subcarrier count must be positive"));
        }
        Ok(())
    }

    /// `P_T / (K sigma_n^2)`
    pub fn snr(&self) -> f64 {
        self.transmit_power / (self.num_subcarriers as f64 * self.noise_power)
    }
}

/// Rate of every codeword, bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("rates must be finite and non-negative"));
        }
        Ok(Self(rates))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Best codeword, lowest index on ties.
    pub fn best(&self) -> Option<BeamChoice> {
        argmax(&self.0).map(|index| BeamChoice { index, rate: self.0[index] })
    }
}

/// A chosen codeword together with its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamChoice {
    pub index: usize,
    pub rate: f64,
}

fn check_budget(eff: &EffectiveChannel, budget: &LinkBudget) -> Result<()> {
    budget.validate()?;
    if eff.num_subcarriers() != budget.num_subcarriers {
        return Err(Error::mismatch("subcarrier count", budget.num_subcarriers, eff.num_subcarriers()));
    }
    Ok(())
}

fn rate_from_gains(gains: impl Iterator<Item = f64>, snr: f64, k: usize) -> f64 {
    gains.map(|g| (snr * g).ln_1p()).sum::<f64>() / (k as f64 * std::f64::consts::LN_2)
}

/// `(1/K) sum_k log2(1 + SNR |(h_T,k (.) h_R,k)^T psi|^2)`.
pub fn achievable_rate(eff: &EffectiveChannel, psi: &CVector, budget: &LinkBudget) -> Result<f64> {
    check_budget(eff, budget)?;
    if psi.len() != eff.num_elements() {
        return Err(Error::mismatch("reflection vector length", eff.num_elements(), psi.len()));
    }
    let gains = eff.entries().tr_mul(psi);
    Ok(rate_from_gains(gains.iter().map(|z| z.norm_sqr()), budget.snr(), budget.num_subcarriers))
}

/// Rate of every codeword with exact (noiseless) feedback.
pub fn rate_vector(eff: &EffectiveChannel, codebook: &ReflectionCodebook, budget: &LinkBudget) -> Result<RateVector> {
    check_budget(eff, budget)?;
    if codebook.columns().nrows() != eff.num_elements() {
        return Err(Error::mismatch("codebook rows", eff.num_elements(), codebook.columns().nrows()));
    }
    // K x N_cb: every (subcarrier, codeword) inner product at once
    let gains = eff.entries().tr_mul(codebook.columns());
    let snr = budget.snr();
    let k = budget.num_subcarriers;
    let rates = (0..codebook.len())
        .map(|n| rate_from_gains(gains.column(n).iter().map(|z| z.norm_sqr()), snr, k))
        .collect();
    RateVector::new(rates)
}

/// Upper bound `R*`: the best codeword under full channel knowledge.
pub fn exhaustive_search(
    eff: &EffectiveChannel,
    codebook: &ReflectionCodebook,
    budget: &LinkBudget,
) -> Result<BeamChoice> {
    let rates = rate_vector(eff, codebook, budget)?;
    Ok(rates.best().expect("codebook is never empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ArrayGeometry;
    use crate::codebook::dft_codebook;
    use crate::{rng_from_seed, CMatrix, Complex64};
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_gain_gives_one_bit() {
        let mut e = CMatrix::zeros(4, 3);
        for k in 0..3 {
            e[(0, k)] = c(1.0, 0.0);
        }
        let eff = EffectiveChannel::from_matrix(e);
        let psi = CVector::from_element(4, c(1.0, 0.0));
        let budget = LinkBudget::new(3.0, 1.0, 3).unwrap();
        assert_eq!(budget.snr(), 1.0);
        let r = achievable_rate(&eff, &psi, &budget).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn budget_validation() {
        assert!(LinkBudget::new(0.0, 1.0, 1).is_err());
        assert!(LinkBudget::new(1.0, 0.0, 1).is_err());
        assert!(LinkBudget::new(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let eff = EffectiveChannel::from_matrix(CMatrix::zeros(4, 2));
        let budget = LinkBudget::new(1.0, 1.0, 2).unwrap();
        assert!(achievable_rate(&eff, &CVector::zeros(3), &budget).is_err());
        let wrong_k = LinkBudget::new(1.0, 1.0, 3).unwrap();
        assert!(achievable_rate(&eff, &CVector::zeros(4), &wrong_k).is_err());
        let cb = dft_codebook(&ArrayGeometry::half_wavelength(1, 2).unwrap()).unwrap();
        assert!(rate_vector(&eff, &cb, &budget).is_err());
    }

    #[test]
    fn zero_channel_zero_rates() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let cb = dft_codebook(&g).unwrap();
        let eff = EffectiveChannel::from_matrix(CMatrix::zeros(4, 2));
        let budget = LinkBudget::new(1.0, 1.0, 2).unwrap();
        let r = rate_vector(&eff, &cb, &budget).unwrap();
        assert!(r.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rate_vector_matches_per_codeword_calls() {
        let g = ArrayGeometry::half_wavelength(4, 4).unwrap();
        let cb = dft_codebook(&g).unwrap();
        let mut rng = rng_from_seed(1);
        let e = CMatrix::from_fn(16, 5, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let eff = EffectiveChannel::from_matrix(e);
        let budget = LinkBudget::new(10.0, 0.5, 5).unwrap();
        let rv = rate_vector(&eff, &cb, &budget).unwrap();
        for n in 0..16 {
            let single = achievable_rate(&eff, &cb.codeword(n), &budget).unwrap();
            assert!((rv.as_slice()[n] - single).abs() <= 1e-12 * single.max(1.0));
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let g = ArrayGeometry::half_wavelength(1, 1).unwrap();
        let single = dft_codebook(&g).unwrap();
        let eff = EffectiveChannel::from_matrix(CMatrix::from_element(1, 1, c(1.0, 0.0)));
        let budget = LinkBudget::new(1.0, 1.0, 1).unwrap();
        assert_eq!(exhaustive_search(&eff, &single, &budget).unwrap().index, 0);

        let g = ArrayGeometry::half_wavelength(2, 4).unwrap();
        let dft = dft_codebook(&g).unwrap();
        let mut cols = dft.columns().clone();
        let best = dft.codeword(5);
        cols.set_column(3, &best);
        cols.set_column(7, &best);
        cols.set_column(5, &dft.codeword(0));
        let cb = ReflectionCodebook::new(cols, g).unwrap();
        let eff = EffectiveChannel::from_matrix(CMatrix::from_fn(8, 1, |m, _| best[m].conj()));
        let choice = exhaustive_search(&eff, &cb, &budget).unwrap();
        assert_eq!(choice.index, 3);
    }
}
