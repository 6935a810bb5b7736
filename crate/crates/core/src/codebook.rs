//! Quantized reflection codebook.

use std::f64::consts::TAU;

use crate::channel::ArrayGeometry;
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Candidate reflection vectors, one per column (`M x N_cb`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionCodebook {
    columns: CMatrix,
    geometry: ArrayGeometry,
}

impl ReflectionCodebook {
    /// Wraps arbitrary unit-modulus columns.
    pub fn new(columns: CMatrix, geometry: ArrayGeometry) -> Result<Self> {
        if columns.ncols() == 0 {
            return Err(Error::invalid("codebook needs at least one codeword"));
        }
        if columns.nrows() != geometry.num_elements() {
            return Err(Error::mismatch("codebook rows", geometry.num_elements(), columns.nrows()));
        }
        if columns.iter().any(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("codeword entries must have unit modulus"));
        }
        Ok(Self { columns, geometry })
    }

    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }

    pub fn codeword(&self, index: usize) -> CVector {
        self.columns.column(index).into_owned()
    }
}

/// `M x M` DFT matrix whose column `m` is `[exp(-i 2pi n m / M)]_n`.
fn dft_matrix(size: usize) -> CMatrix {
    CMatrix::from_fn(size, size, |n, m| {
        let r = (n * m) % size;
        Complex64::from_polar(1.0, -TAU * r as f64 / size as f64)
    })
}

/// `DFT_{M_H} kron DFT_{M_V}`. Codeword `n = m_h * M_V + m_v` pairs horizontal
/// DFT column `m_h` with vertical column `m_v`; indices start at zero, so
/// codeword 0 is the all-ones (broadside) beam.
pub fn dft_codebook(geometry: &ArrayGeometry) -> Result<ReflectionCodebook> {
    geometry.validate()?;
    let columns = dft_matrix(geometry.m_horizontal).kronecker(&dft_matrix(geometry.m_vertical));
    ReflectionCodebook::new(columns, *geometry)
}

/// Spatial frequencies `(u, v)`, wrapped into `[-1, 1)`, that DFT codeword
/// `index` coherently combines on a half-wavelength array: the cascade
/// frequency pair `(u_T + u_R, v_T + v_R)` it matches.
pub fn dft_beam_frequencies(geometry: &ArrayGeometry, index: usize) -> (f64, f64) {
    let (m_h, m_v) = (index / geometry.m_vertical, index % geometry.m_vertical);
    let wrap = |x: f64| (x + 1.0).rem_euclid(2.0) - 1.0;
    (
        wrap(-2.0 * m_h as f64 / geometry.m_horizontal as f64),
        wrap(-2.0 * m_v as f64 / geometry.m_vertical as f64),
    )
}
