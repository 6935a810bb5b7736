use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{CMatrix, Complex64, Error, Result};

/// How the support is shared across subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmpMode {
    /// One support for all subcarriers (simultaneous OMP). Path directions do
    /// not depend on frequency, so every subcarrier votes on every atom.
    #[default]
    Joint,
    /// An independent OMP run per subcarrier; the reported support is the
    /// union and each subcarrier only uses its own atoms.
    PerSubcarrier,
}

/// Sparse coefficients over a dictionary, shared across subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    /// Atom indices in selection order.
    pub support: Vec<usize>,
    /// `|support| x K`; row `i` holds the coefficients of `support[i]`.
    pub coefficients: CMatrix,
    /// Final residual norm per subcarrier.
    pub residual_norms: Vec<f64>,
    /// Residual norms per subcarrier after each iteration, starting with the
    /// measurements themselves.
    pub residual_history: Vec<Vec<f64>>,
}

impl SparseSolution {
    fn empty(k: usize, norms: Vec<f64>) -> Self {
        Self {
            support: Vec::new(),
            coefficients: CMatrix::zeros(0, k),
            residual_history: vec![norms.clone()],
            residual_norms: norms,
        }
    }
}

fn column_norms(m: &CMatrix) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

/// Least squares `min ||phi_s x - y||` per column through a Householder QR of
/// `phi_s`. Fails when the selected columns are (numerically) dependent.
fn least_squares(phi_s: &CMatrix, y: &CMatrix, iteration: usize, atom: usize) -> Result<CMatrix> {
    let scale = phi_s.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let qr = phi_s.clone().qr();
    let r = qr.r();
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    if r.diagonal().iter().any(|d| d.norm() <= tol) {
        return Err(Error::DegenerateSupport { iteration, atom });
    }
    let qty = qr.q().adjoint() * y;
    r.solve_upper_triangular(&qty)
        .ok_or(Error::DegenerateSupport { iteration, atom })
}

/// Simultaneous orthogonal matching pursuit.
///
/// Each iteration picks the atom maximizing `sum_k |phi_j^H r_k|^2 / ||phi_j||^2`
/// (lowest index on ties), refits every subcarrier by least squares on the
/// whole support, and stops once `max_sparsity` atoms are selected or every
/// residual norm is at most `residual_tol`.
pub fn omp(phi: &CMatrix, measurements: &CMatrix, max_sparsity: usize, residual_tol: f64) -> Result<SparseSolution> {
    let (rows, atoms) = phi.shape();
    if measurements.nrows() != rows {
        return Err(Error::mismatch("OMP measurement rows", rows, measurements.nrows()));
    }
    if max_sparsity > rows.min(atoms) {
        return Err(Error::invalid(format!(
            "max_sparsity {max_sparsity} exceeds min(rows, atoms) = {}",
            rows.min(atoms)
        )));
    }
    if residual_tol.is_nan() || residual_tol < 0.0 {
        return Err(Error::invalid("residual tolerance must be >= 0"));
    }
    let k = measurements.ncols();
    let norms = column_norms(phi);
    let mut residual = measurements.clone();
    let mut res_norms = column_norms(&residual);
    let mut solution = SparseSolution::empty(k, res_norms.clone());
    let done = |n: &[f64]| n.iter().all(|&r| r <= residual_tol);

    let mut selected = vec![false; atoms];
    while solution.support.len() < max_sparsity && !done(&res_norms) {
        let energy: f64 = res_norms.iter().map(|r| r * r).sum();
        // atoms x K correlations with the current residuals
        let corr = phi.ad_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..atoms {
            if selected[j] || norms[j] == 0.0 {
                continue;
            }
            let score = corr.row(j).iter().map(Complex64::norm_sqr).sum::<f64>() / (norms[j] * norms[j]);
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((atom, score)) = best else { break };
        // residual already orthogonal to every remaining atom
        if score <= 1e-24 * energy {
            break;
        }
        selected[atom] = true;
        solution.support.push(atom);

        let phi_s = phi.select_columns(solution.support.iter());
        let coef = least_squares(&phi_s, measurements, solution.support.len(), atom)?;
        residual = measurements - &phi_s * &coef;
        res_norms = column_norms(&residual);
        solution.coefficients = coef;
        solution.residual_history.push(res_norms.clone());
    }
    solution.residual_norms = res_norms;
    Ok(solution)
}

/// OMP run independently on every subcarrier; see [`OmpMode::PerSubcarrier`].
pub fn omp_per_subcarrier(
    phi: &CMatrix,
    measurements: &CMatrix,
    max_sparsity: usize,
    residual_tol: f64,
) -> Result<SparseSolution> {
    let k = measurements.ncols();
    let mut per_k = Vec::with_capacity(k);
    for col in 0..k {
        let y = measurements.columns(col, 1).into_owned();
        per_k.push(omp(phi, &y, max_sparsity, residual_tol)?);
    }
    // union of supports, in order of first appearance
    let mut position = BTreeMap::new();
    let mut support = Vec::new();
    for sol in &per_k {
        for &j in &sol.support {
            position.entry(j).or_insert_with(|| {
                support.push(j);
                support.len() - 1
            });
        }
    }
    let mut coefficients = CMatrix::zeros(support.len(), k);
    let iterations = per_k.iter().map(|s| s.residual_history.len()).max().unwrap_or(1);
    let mut residual_history = vec![vec![0.0; k]; iterations];
    let mut residual_norms = Vec::with_capacity(k);
    for (col, sol) in per_k.iter().enumerate() {
        for (i, &j) in sol.support.iter().enumerate() {
            coefficients[(position[&j], col)] = sol.coefficients[(i, 0)];
        }
        for (it, row) in residual_history.iter_mut().enumerate() {
            let h = &sol.residual_history;
            row[col] = h[it.min(h.len() - 1)][0];
        }
        residual_norms.push(sol.residual_norms[0]);
    }
    Ok(SparseSolution {
        support,
        coefficients,
        residual_norms,
        residual_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ArrayGeometry;
    use crate::cs::dictionary::{build_dictionary, sensing_matrix};
    use crate::surface::select_active;
    use crate::rng_from_seed;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phi_16x64() -> CMatrix {
        let g = ArrayGeometry::half_wavelength(8, 8).unwrap();
        let d = build_dictionary(&g, 8, 8).unwrap();
        let s = select_active(64, 16, &mut rng_from_seed(2)).unwrap();
        sensing_matrix(&d, &s).unwrap()
    }

    #[test]
    fn single_scaled_atom() {
        let phi = phi_16x64();
        let y = phi.columns(5, 1) * c(3.0, 0.0);
        let sol = omp(&phi, &y, 4, 1e-9).unwrap();
        assert_eq!(sol.support, vec![5]);
        assert!((sol.coefficients[(0, 0)] - c(3.0, 0.0)).norm() < 1e-12);
        assert!(sol.residual_norms[0] < 1e-12);
    }

    #[test]
    fn zero_measurements_give_empty_support() {
        let phi = phi_16x64();
        let sol = omp(&phi, &CMatrix::zeros(16, 3), 4, 0.0).unwrap();
        assert!(sol.support.is_empty());
        assert_eq!(sol.coefficients.shape(), (0, 3));
    }

    #[test]
    fn argument_validation() {
        let phi = phi_16x64();
        assert!(omp(&phi, &CMatrix::zeros(15, 1), 2, 0.0).is_err());
        assert!(omp(&phi, &CMatrix::zeros(16, 1), 17, 0.0).is_err());
        assert!(omp(&phi, &CMatrix::zeros(16, 1), 2, -1.0).is_err());
    }

    #[test]
    fn duplicate_columns_are_degenerate() {
        // two identical atoms and a measurement that needs both "directions"
        let mut phi = CMatrix::zeros(3, 3);
        phi[(0, 0)] = c(1.0, 0.0);
        phi[(1, 1)] = c(1.0, 0.0);
        phi[(1, 2)] = c(1.0, 0.0);
        let ls = least_squares(&phi.select_columns([1usize, 2].iter()), &CMatrix::zeros(3, 1), 2, 2);
        assert!(matches!(ls, Err(Error::DegenerateSupport { .. })));
    }

    #[test]
    fn residuals_never_increase() {
        let phi = phi_16x64();
        let mut rng = rng_from_seed(7);
        let y = CMatrix::from_fn(16, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let sol = omp(&phi, &y, 10, 0.0).unwrap();
        assert_eq!(sol.support.len(), 10);
        for w in sol.residual_history.windows(2) {
            for (after, before) in w[1].iter().zip(&w[0]) {
                assert!(after <= &(before + 1e-12));
            }
        }
    }

    #[test]
    fn per_subcarrier_mode_recovers_each_column() {
        let phi = phi_16x64();
        let mut y = CMatrix::zeros(16, 2);
        y.set_column(0, &(phi.column(3) * c(1.0, 1.0)));
        y.set_column(1, &(phi.column(40) * c(-2.0, 0.0)));
        let sol = omp_per_subcarrier(&phi, &y, 2, 1e-9).unwrap();
        assert_eq!(sol.support, vec![3, 40]);
        assert!((sol.coefficients[(0, 0)] - c(1.0, 1.0)).norm() < 1e-12);
        assert_eq!(sol.coefficients[(1, 0)], c(0.0, 0.0));
        assert!((sol.coefficients[(1, 1)] - c(-2.0, 0.0)).norm() < 1e-12);
    }
}
