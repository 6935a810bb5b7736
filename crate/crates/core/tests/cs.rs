use lis_beam::channel::ArrayGeometry;
use lis_beam::cs::{build_dictionary, omp, sensing_matrix};
use lis_beam::surface::select_active;
use lis_beam::{rng_from_seed, CMatrix, Complex64};
use rand::Rng;

/// Least-squares residual norm of `y` on the columns `support` of `phi`.
fn ls_residual(phi: &CMatrix, y: &CMatrix, support: &[usize]) -> f64 {
    let a = phi.select_columns(support.iter());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(y, 1e-12).unwrap();
    (y - &a * x).norm()
}

#[test]
fn two_sparse_recovery_matches_exhaustive_oracle() {
    let geometry = ArrayGeometry::half_wavelength(8, 8).unwrap();
    let dictionary = build_dictionary(&geometry, 8, 8).unwrap();
    let n = dictionary.num_atoms();
    let mut rng = rng_from_seed(12);
    let k = 3;
    let mut checked = 0;
    for _ in 0..10 {
        let active = select_active(64, 16, &mut rng).unwrap();
        let phi = sensing_matrix(&dictionary, &active).unwrap();
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let coef = CMatrix::from_fn(2, k, |_, _| Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)));
        let y = phi.select_columns([a, b].iter()) * &coef;

        let mut exact = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if ls_residual(&phi, &y, &[i, j]) <= 1e-9 * y.norm() {
                    exact.push((i, j));
                }
            }
        }
        let truth = (a.min(b), a.max(b));
        if exact != [truth] {
            // the sensor layout makes this pair ambiguous; no method can tell
            continue;
        }

        let sol = omp(&phi, &y, 2, 0.0).unwrap();
        let mut support = sol.support.clone();
        support.sort();
        assert_eq!(support, vec![truth.0, truth.1]);
        let order: Vec<usize> = sol.support.iter().map(|&s| if s == a { 0 } else { 1 }).collect();
        let expected = coef.select_rows(order.iter());
        let err = (&sol.coefficients - &expected).norm() / expected.norm();
        assert!(err < 1e-10, "coefficient error {err}");
        checked += 1;
    }
    assert!(checked >= 8, "only {checked} unambiguous instances");
}
