//! Compressive-sensing beam design: recover the full surface channels from
//! the few active sensors, then search the codebook offline.

mod dictionary;
mod omp;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::channel::FrequencyChannel;
use crate::codebook::ReflectionCodebook;
use crate::rate::{exhaustive_search, LinkBudget};
use crate::surface::{effective_channel, ActiveSet};
use crate::{CMatrix, Error, Result};

pub use dictionary::{build_dictionary, sensing_matrix, Dictionary};
pub use omp::{omp, omp_per_subcarrier, OmpMode, SparseSolution};

/// Sparse-recovery stopping rule and mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsSettings {
    pub max_sparsity: usize,
    pub residual_tol: f64,
    #[serde(default)]
    pub mode: OmpMode,
}

impl CsSettings {
    /// Stops at `max_sparsity` atoms or once every subcarrier residual falls
    /// to the expected noise norm `sqrt(M_bar sigma_n^2)`.
    pub fn for_noise(max_sparsity: usize, active_count: usize, noise_power: f64) -> Self {
        Self {
            max_sparsity,
            residual_tol: (active_count as f64 * noise_power).sqrt(),
            mode: OmpMode::Joint,
        }
    }
}

/// Full channel from a sparse solution: column `k` is
/// `sum_{j in support} coef[j, k] atom_j`.
pub fn reconstruct_channel(dictionary: &Dictionary, solution: &SparseSolution) -> Result<FrequencyChannel> {
    let n = dictionary.num_atoms();
    if let Some(&bad) = solution.support.iter().find(|&&j| j >= n) {
        return Err(Error::invalid(format!("support atom {bad} outside dictionary of {n} atoms")));
    }
    if solution.coefficients.nrows() != solution.support.len() {
        return Err(Error::mismatch(
            "sparse coefficients",
            solution.support.len(),
            solution.coefficients.nrows(),
        ));
    }
    let basis = dictionary.atoms().select_columns(solution.support.iter());
    FrequencyChannel::new(basis * &solution.coefficients)
}

/// Runs the configured OMP variant on sampled measurements.
pub fn recover_channel(
    dictionary: &Dictionary,
    phi: &CMatrix,
    sampled: &CMatrix,
    settings: &CsSettings,
) -> Result<(SparseSolution, FrequencyChannel)> {
    let sol = match settings.mode {
        OmpMode::Joint => omp(phi, sampled, settings.max_sparsity, settings.residual_tol)?,
        OmpMode::PerSubcarrier => omp_per_subcarrier(phi, sampled, settings.max_sparsity, settings.residual_tol)?,
    };
    let h = reconstruct_channel(dictionary, &sol)?;
    Ok((sol, h))
}

/// Whether the design ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignStatus {
    Ok,
    /// Recovery hit a rank-deficient support; codeword 0 was used instead.
    DegenerateFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsDesign {
    /// Chosen codeword.
    pub index: usize,
    /// Rate of `index` on the reconstructed channels (not the true ones).
    pub predicted_rate: f64,
    /// Reconstructed transmitter and receiver channels, absent on fallback.
    pub reconstructed: Option<(FrequencyChannel, FrequencyChannel)>,
    pub status: DesignStatus,
}

/// Recovers both links from their noisy sampled channels and picks the
/// codeword maximizing the rate on the reconstructed cascade channel.
#[allow(clippy::too_many_arguments)]
pub fn cs_beam_design(
    sampled_t: &CMatrix,
    sampled_r: &CMatrix,
    active: &ActiveSet,
    dictionary: &Dictionary,
    codebook: &ReflectionCodebook,
    budget: &LinkBudget,
    settings: &CsSettings,
) -> Result<CsDesign> {
    if sampled_t.nrows() != active.len() || sampled_r.nrows() != active.len() {
        return Err(Error::mismatch(
            "sampled channel rows",
            active.len(),
            format!("{} / {}", sampled_t.nrows(), sampled_r.nrows()),
        ));
    }
    let phi = sensing_matrix(dictionary, active)?;
    let recovered = recover_channel(dictionary, &phi, sampled_t, settings)
        .and_then(|(_, h_t)| recover_channel(dictionary, &phi, sampled_r, settings).map(|(_, h_r)| (h_t, h_r)));
    let (h_t, h_r) = match recovered {
        Ok(pair) => pair,
        Err(Error::DegenerateSupport { iteration, atom }) => {
            warn!("degenerate OMP support (iteration {iteration}, atom {atom}); falling back to codeword 0");
            return Ok(CsDesign {
                index: 0,
                predicted_rate: 0.0,
                reconstructed: None,
                status: DesignStatus::DegenerateFallback,
            });
        }
        Err(e) => return Err(e),
    };
    let eff = effective_channel(&h_t, &h_r)?;
    let choice = exhaustive_search(&eff, codebook, budget)?;
    Ok(CsDesign {
        index: choice.index,
        predicted_rate: choice.rate,
        reconstructed: Some((h_t, h_r)),
        status: DesignStatus::Ok,
    })
}
