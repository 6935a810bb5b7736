//! Sparse-sensor surface architecture: which elements are active, what they
//! observe, and the cascade channel seen through the reflection vector.

use rand::Rng;

use crate::channel::FrequencyChannel;
use crate::{CMatrix, CVector, Error, Result};

/// Sorted, duplicate-free indices of the active channel sensors among the `M`
/// surface elements. Stands in for the row-selection matrix `G_LIS`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    indices: Vec<usize>,
    total_elements: usize,
}

impl ActiveSet {
    pub fn new(mut indices: Vec<usize>, total_elements: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("active set must hold at least one element"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("active set indices must be unique"));
        }
        if let Some(&last) = indices.last() {
            if last >= total_elements {
                return Err(Error::invalid(format!(
                    "active index {last} out of range for {total_elements} elements"
                )));
            }
        }
        Ok(Self { indices, total_elements })
    }

    /// Every element active.
    pub fn full(total_elements: usize) -> Result<Self> {
        Self::new((0..total_elements).collect(), total_elements)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total_elements(&self) -> usize {
        self.total_elements
    }

    /// Rows of `matrix` picked by this set (`G_LIS * matrix`).
    pub fn select_rows(&self, matrix: &CMatrix) -> Result<CMatrix> {
        if matrix.nrows() != self.total_elements {
            return Err(Error::mismatch("active-set row selection", self.total_elements, matrix.nrows()));
        }
        Ok(matrix.select_rows(self.indices.iter()))
    }
}

/// Draws `active` of `total` elements uniformly without replacement.
pub fn select_active<R: Rng + ?Sized>(total: usize, active: usize, rng: &mut R) -> Result<ActiveSet> {
    if active == 0 || active > total {
        return Err(Error::invalid(format!(
            "active count must lie in 1..={total}, got {active}"
        )));
    }
    let picked = rand::seq::index::sample(rng, total, active).into_vec();
    ActiveSet::new(picked, total)
}

/// Channel observed at the active sensors, `M_bar x K`.
pub fn sample_channel(channel: &FrequencyChannel, active: &ActiveSet) -> Result<CMatrix> {
    active.select_rows(channel.entries())
}

/// Per-subcarrier Hadamard product `h_T,k (.) h_R,k`, `M x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel(CMatrix);

impl EffectiveChannel {
    /// Wraps an already formed cascade matrix.
    pub fn from_matrix(entries: CMatrix) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn num_elements(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.0.ncols()
    }
}

pub fn effective_channel(h_t: &FrequencyChannel, h_r: &FrequencyChannel) -> Result<EffectiveChannel> {
    let (a, b) = (h_t.entries(), h_r.entries());
    if a.shape() != b.shape() {
        return Err(Error::mismatch("effective channel", format!("{:?}", a.shape()), format!("{:?}", b.shape())));
    }
    Ok(EffectiveChannel(a.component_mul(b)))
}

/// Stacks `h_bar_T,k (.) h_bar_R,k` for the first `k_dl` subcarriers,
/// subcarrier-major: all `M_bar` entries of subcarrier 0, then subcarrier 1...
pub fn sampled_descriptor(sampled_t: &CMatrix, sampled_r: &CMatrix, k_dl: usize) -> Result<CVector> {
    if sampled_t.shape() != sampled_r.shape() {
        return Err(Error::mismatch(
            "sampled descriptor",
            format!("{:?}", sampled_t.shape()),
            format!("{:?}", sampled_r.shape()),
        ));
    }
    if k_dl == 0 || k_dl > sampled_t.ncols() {
        return Err(Error::invalid(format!(
            "K_DL must lie in 1..={}, got {k_dl}",
            sampled_t.ncols()
        )));
    }
    let prod = sampled_t.columns(0, k_dl).component_mul(&sampled_r.columns(0, k_dl));
    // nalgebra storage is column-major, which is exactly vec([h_1 ... h_K])
    Ok(CVector::from_column_slice(prod.as_slice()))
}
