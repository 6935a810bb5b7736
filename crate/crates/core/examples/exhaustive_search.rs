// Upper-bound beam selection: every codeword scored on the true cascade
// channel, compared with a random reflection.

use lis_beam::channel::{frequency_channel, synthesize_scenario, ArrayGeometry, ChannelConfig, Placement, Pulse};
use lis_beam::codebook::dft_codebook;
use lis_beam::rate::{achievable_rate, exhaustive_search, rate_vector, LinkBudget};
use lis_beam::surface::effective_channel;
use lis_beam::{rng_from_seed, CVector, Complex64, Result};
use rand::Rng;

pub fn run_example() -> Result<()> {
    let geometry = ArrayGeometry::half_wavelength(8, 8)?;
    let config = ChannelConfig {
        num_subcarriers: 16,
        num_taps: 4,
        sample_period: 1e-8,
        path_loss: 1e4,
        pulse: Pulse::Delta,
    };
    let mut rng = rng_from_seed(3);
    let tx = synthesize_scenario(&mut rng, &geometry, &config, 2, Placement::Uniform)?;
    let rx = synthesize_scenario(&mut rng, &geometry, &config, 2, Placement::Uniform)?;
    let eff = effective_channel(
        &frequency_channel(&tx, &config, &geometry)?,
        &frequency_channel(&rx, &config, &geometry)?,
    )?;
    let codebook = dft_codebook(&geometry)?;
    let budget = LinkBudget::new(1.0, 1e-4, config.num_subcarriers)?;

    let best = exhaustive_search(&eff, &codebook, &budget)?;
    let rates = rate_vector(&eff, &codebook, &budget)?;
    let mean = rates.as_slice().iter().sum::<f64>() / rates.len() as f64;
    let random = CVector::from_fn(geometry.num_elements(), |_, _| {
        Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
    });
    println!(
        "best codeword #{} rate {:.3} bit/s/Hz; codebook mean {mean:.3}; random phases {:.3}",
        best.index,
        best.rate,
        achievable_rate(&eff, &random, &budget)?
    );
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
