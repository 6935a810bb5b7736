// Wideband multipath channel of one link, built two ways: from the delay
// taps and from the compact per-path form. Both must agree.

use lis_beam::channel::{
    frequency_channel, frequency_channel_from_taps, synthesize_scenario, ArrayGeometry, ChannelConfig, Placement,
    Pulse,
};
use lis_beam::{rng_from_seed, Result};

pub fn run_example() -> Result<()> {
    let geometry = ArrayGeometry::half_wavelength(8, 8)?;
    let config = ChannelConfig {
        num_subcarriers: 32,
        num_taps: 8,
        sample_period: 1e-8,
        path_loss: 1e4,
        pulse: Pulse::RaisedCosine { rolloff: 0.4 },
    };
    let mut rng = rng_from_seed(7);
    let paths = synthesize_scenario(&mut rng, &geometry, &config, 3, Placement::Uniform)?;
    for (l, p) in paths.iter().enumerate() {
        println!(
            "path {l}: |alpha|={:.3} tau={:.2e}s az={:.3} el={:.3}",
            p.gain.norm(),
            p.delay,
            p.azimuth,
            p.elevation
        );
    }
    let compact = frequency_channel(&paths, &config, &geometry)?;
    let taps = frequency_channel_from_taps(&paths, &config, &geometry)?;
    let diff = (compact.entries() - taps.entries()).norm() / taps.entries().norm();
    println!(
        "channel {} x {}, power {:.3e}, relative difference between forms {diff:.1e}",
        compact.num_elements(),
        compact.num_subcarriers(),
        compact.entries().norm_squared()
    );
    assert!(diff < 1e-10);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
