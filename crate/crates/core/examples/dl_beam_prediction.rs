// Learned beam prediction at a small scale: collect a dataset, fit the
// network, and score plain and top-k predictions on fresh blocks.

use lis_beam::codebook::dft_codebook;
use lis_beam::dl::{noisy_samples, top_k_refine, TrainConfig};
use lis_beam::harness::{
    active_set_for, collect_point_dataset, prepare_point, sweep_points, train_predictor, ExperimentConfig,
};
use lis_beam::rate::{achievable_rate, exhaustive_search};
use lis_beam::surface::{effective_channel, sampled_descriptor};
use lis_beam::{derive_seed, rng_from_seed, Result};

pub fn run_example() -> Result<()> {
    let mut config = ExperimentConfig::desk();
    config.geometry = lis_beam::channel::ArrayGeometry::half_wavelength(4, 4)?;
    config.cs.grid_az = 8;
    config.cs.grid_el = 8;
    config.source = lis_beam::harness::SourceConfig::Synthetic {
        placement: lis_beam::channel::Placement::OnGrid { n_az: 8, n_el: 8 },
        transmitter_path_loss: 1e4,
    };
    config.dl.k_dl = 4;
    config.dl.train = TrainConfig { epochs: 30, batch_size: 100, dropout_rate: 0.0, ..TrainConfig::default() };
    config.validate()?;

    let p = prepare_point(&config, sweep_points(&config)[0])?;
    let dataset = collect_point_dataset(&config, &p, 600)?;
    let (predictor, log) = train_predictor(&config, &dataset)?;
    println!(
        "trained on {} samples, final train mse {:.4}",
        log.train_count,
        log.final_train_mse().unwrap_or(f64::NAN)
    );

    let codebook = dft_codebook(&config.geometry)?;
    let active = active_set_for(&config, p.active.len())?;
    let (mut plain, mut top4) = (0.0, 0.0);
    let trials = 20;
    for t in 0..trials {
        let mut rng = rng_from_seed(derive_seed(99, 0, t));
        let pair = p.source.draw(t, &mut rng)?;
        let (s_t, s_r) = noisy_samples(&pair.transmitter, &pair.receiver, &active, config.sensing_noise_power, &mut rng)?;
        let descriptor = sampled_descriptor(&s_t, &s_r, config.dl.k_dl)?;
        let eff = effective_channel(&pair.transmitter, &pair.receiver)?;
        let optimal = exhaustive_search(&eff, &codebook, &p.budget)?.rate;
        let pred = predictor.predict(descriptor.as_slice())?;
        plain += achievable_rate(&eff, &codebook.codeword(pred.index), &p.budget)? / optimal;
        let refined = top_k_refine(&pred.rates, 4, |n| achievable_rate(&eff, &codebook.codeword(n), &p.budget))?;
        top4 += refined.rate / optimal;
    }
    println!("mean rate ratio over {trials} blocks: dl {:.3}, dl top-4 {:.3}", plain / trials as f64, top4 / trials as f64);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
