use crate::channel::{grid_frequency, linear_response, ArrayGeometry};
use crate::surface::ActiveSet;
use crate::{CMatrix, Error, Result};

/// Array-response dictionary `A_D = A_D^Az kron A_D^El` on a uniform
/// `(u, v)` grid over `[-1, 1) x [-1, 1)`.
///
/// Atom `j = i_az * n_el + i_el` is the response at
/// `(u, v) = (-1 + 2 i_az / n_az, -1 + 2 i_el / n_el)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: CMatrix,
    grid: Vec<(f64, f64)>,
    n_az: usize,
    n_el: usize,
    geometry: ArrayGeometry,
}

impl Dictionary {
    pub fn atoms(&self) -> &CMatrix {
        &self.atoms
    }

    pub fn grid(&self) -> &[(f64, f64)] {
        &self.grid
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn grid_size(&self) -> (usize, usize) {
        (self.n_az, self.n_el)
    }

    /// Index of the atom at grid point `(i_az, i_el)`.
    pub fn atom_index(&self, i_az: usize, i_el: usize) -> usize {
        i_az * self.n_el + i_el
    }

    /// Nearest atom to the spatial frequencies `(u, v)`, treating both axes
    /// as periodic with period 2.
    pub fn nearest_atom(&self, u: f64, v: f64) -> usize {
        let snap = |x: f64, n: usize| {
            let pos = (x + 1.0).rem_euclid(2.0) * n as f64 / 2.0;
            (pos.round() as usize) % n
        };
        self.atom_index(snap(u, self.n_az), snap(v, self.n_el))
    }
}

/// Builds the `M x (n_az n_el)` dictionary. The usual choice is twice the
/// array size per axis (`n_az = 2 M_H`, `n_el = 2 M_V`).
pub fn build_dictionary(geometry: &ArrayGeometry, n_az: usize, n_el: usize) -> Result<Dictionary> {
    geometry.validate()?;
    if n_az == 0 || n_el == 0 {
        return Err(Error::invalid("dictionary grid sizes must be positive"));
    }
    let mut az = CMatrix::zeros(geometry.m_horizontal, n_az);
    for i in 0..n_az {
        az.set_column(i, &linear_response(geometry.m_horizontal, geometry.spacing, grid_frequency(i, n_az)));
    }
    let mut el = CMatrix::zeros(geometry.m_vertical, n_el);
    for j in 0..n_el {
        el.set_column(j, &linear_response(geometry.m_vertical, geometry.spacing, grid_frequency(j, n_el)));
    }
    let grid = (0..n_az)
        .flat_map(|i| (0..n_el).map(move |j| (grid_frequency(i, n_az), grid_frequency(j, n_el))))
        .collect();
    Ok(Dictionary {
        atoms: az.kronecker(&el),
        grid,
        n_az,
        n_el,
        geometry: *geometry,
    })
}

/// `Phi = G_LIS A_D`: dictionary rows at the active sensors.
pub fn sensing_matrix(dictionary: &Dictionary, active: &ActiveSet) -> Result<CMatrix> {
    active.select_rows(&dictionary.atoms)
}
