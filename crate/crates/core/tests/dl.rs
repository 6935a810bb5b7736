use lis_beam::dl::{normalize_targets, top_k_indices, top_k_refine, MlpModel, Mode, TargetStatus};
use lis_beam::rate::RateVector;
use lis_beam::{argmax, rng_from_seed};
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Only the dropout feeding the affine output is unbiased in expectation;
/// a deeper stack passes the noise through further ReLUs.
#[test]
fn inverted_dropout_preserves_expectation() {
    let mut rng = rng_from_seed(31);
    let model = MlpModel::new(&[6, 48, 1], 0.5, &mut rng).unwrap();
    let x = [0.4, -0.2, 0.9, 0.1, -0.7, 0.3];
    let eval = model.forward(&x, Mode::Eval).unwrap()[0];

    let masks = 10_000;
    let samples: Vec<f64> = (0..masks)
        .map(|_| model.forward(&x, Mode::Train(&mut rng)).unwrap()[0])
        .collect();
    let mean = samples.iter().sum::<f64>() / masks as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (masks - 1) as f64;
    let se = (var / masks as f64).sqrt();
    assert!(se > 0.0);
    assert!((mean - eval).abs() <= 2.0 * se, "mean {mean} vs eval {eval}, se {se}");
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = rng_from_seed(4);
    let mut model = MlpModel::new(&[5, 7, 6, 3], 0.0, &mut rng).unwrap();
    let x = DMatrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
    let y = DMatrix::from_fn(3, 4, |i, j| ((i + 2 * j) % 5) as f64 / 4.0);
    let (_, grads) = model.loss_and_gradients(&x, &y, Mode::Eval).unwrap();
    let analytic = grads.flatten();
    assert_eq!(analytic.len(), model.parameter_count());
    let h = 1e-6;
    for (i, &g) in analytic.iter().enumerate() {
        let p = model.parameter(i);
        model.set_parameter(i, p + h);
        let up = model.mse(&x, &y).unwrap();
        model.set_parameter(i, p - h);
        let down = model.mse(&x, &y).unwrap();
        model.set_parameter(i, p);
        let numeric = (up - down) / (2.0 * h);
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-7);
        assert!(rel < 1e-4, "parameter {i}: analytic {g}, numeric {numeric}");
    }
}

proptest! {
    #[test]
    fn normalization_keeps_argmax_and_peaks_at_one(rates in prop::collection::vec(0.0..20.0f64, 1..64)) {
        let (targets, status) = normalize_targets(&RateVector::new(rates.clone()).unwrap()).unwrap();
        if rates.iter().all(|&r| r == 0.0) {
            prop_assert_eq!(status, TargetStatus::AllZero);
        } else {
            prop_assert_eq!(status, TargetStatus::Ok);
            prop_assert_eq!(argmax(&targets), argmax(&rates));
            prop_assert_eq!(targets[argmax(&rates).unwrap()], 1.0);
            prop_assert!(targets.iter().all(|&t| (0.0..=1.0).contains(&t)));
        }
    }

    #[test]
    fn top_k_refinement_matches_brute_force(
        pred in prop::collection::vec(-1.0..1.0f64, 2..40),
        truth in prop::collection::vec(0.0..5.0f64, 40),
        k_frac in 0.0..1.0f64,
    ) {
        let k = ((pred.len() as f64 * k_frac) as usize).clamp(1, pred.len());
        let idx = top_k_indices(&pred, k).unwrap();
        prop_assert_eq!(idx.len(), k);
        let cutoff = pred[idx[k - 1]];
        prop_assert!((0..pred.len()).filter(|i| !idx.contains(i)).all(|i| pred[i] <= cutoff));

        let choice = top_k_refine(&pred, k, |n| Ok(truth[n])).unwrap();
        let best = idx.iter().map(|&n| truth[n]).fold(f64::MIN, f64::max);
        prop_assert_eq!(choice.rate, best);
        if k == pred.len() {
            prop_assert_eq!(choice.rate, truth[..pred.len()].iter().copied().fold(f64::MIN, f64::max));
        }
    }
}
