// Externally traced paths: parse the columnar channel file, build the link
// channels and run upper-bound beam selection with link 0 as transmitter.

use lis_beam::channel::{frequency_channel, parse_channel_file, ArrayGeometry, Pulse};
use lis_beam::codebook::dft_codebook;
use lis_beam::rate::{exhaustive_search, LinkBudget};
use lis_beam::surface::effective_channel;
use lis_beam::Result;

const CHANNELS: &str = include_str!("sample_channels.csv");

pub fn run_example() -> Result<()> {
    let imported = parse_channel_file(CHANNELS, "sample_channels.csv")?;
    let geometry = ArrayGeometry::half_wavelength(8, 8)?;
    let config = imported.header.channel_config(Pulse::Delta);
    let codebook = dft_codebook(&geometry)?;
    let budget = LinkBudget::new(1.0, 1e-4, config.num_subcarriers)?;

    let tx_paths = &imported.links[&0];
    let h_t = frequency_channel(tx_paths, &config, &geometry)?;
    for (id, paths) in imported.links.iter().filter(|(id, _)| **id != 0) {
        let h_r = frequency_channel(paths, &config, &geometry)?;
        let best = exhaustive_search(&effective_channel(&h_t, &h_r)?, &codebook, &budget)?;
        println!("receiver link {id} ({} paths): beam #{} rate {:.3}", paths.len(), best.index, best.rate);
    }

    let bad = CHANNELS.replace("5.5, 0.6", "7.0, 0.6");
    match parse_channel_file(&bad, "bad.csv") {
        Err(e) => println!("out-of-range angle rejected: {e}"),
        Ok(_) => unreachable!("angles outside [0, 2pi) must be rejected"),
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
