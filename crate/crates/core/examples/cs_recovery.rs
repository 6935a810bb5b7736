// Compressive-sensing design: recover both links from a few active sensors
// with joint OMP, then pick the beam on the recovered channels.

use lis_beam::channel::{frequency_channel, synthesize_scenario, ArrayGeometry, ChannelConfig, Placement, Pulse};
use lis_beam::codebook::dft_codebook;
use lis_beam::cs::{build_dictionary, cs_beam_design, CsSettings};
use lis_beam::dl::noisy_samples;
use lis_beam::rate::{achievable_rate, exhaustive_search, LinkBudget};
use lis_beam::surface::{effective_channel, select_active};
use lis_beam::{rng_from_seed, Result};

pub fn run_example() -> Result<()> {
    let geometry = ArrayGeometry::half_wavelength(8, 8)?;
    let config = ChannelConfig {
        num_subcarriers: 16,
        num_taps: 4,
        sample_period: 1e-8,
        path_loss: 1e4,
        pulse: Pulse::Delta,
    };
    let placement = Placement::OnGrid { n_az: 16, n_el: 16 };
    let noise = 1e-4;
    let mut rng = rng_from_seed(11);
    let h_t = frequency_channel(&synthesize_scenario(&mut rng, &geometry, &config, 1, placement)?, &config, &geometry)?;
    let h_r = frequency_channel(&synthesize_scenario(&mut rng, &geometry, &config, 1, placement)?, &config, &geometry)?;

    let codebook = dft_codebook(&geometry)?;
    let budget = LinkBudget::new(1.0, noise, config.num_subcarriers)?;
    let dictionary = build_dictionary(&geometry, 16, 16)?;
    let eff = effective_channel(&h_t, &h_r)?;
    let optimal = exhaustive_search(&eff, &codebook, &budget)?.rate;

    for m_bar in [2, 4, 8] {
        let active = select_active(geometry.num_elements(), m_bar, &mut rng)?;
        let (s_t, s_r) = noisy_samples(&h_t, &h_r, &active, noise, &mut rng)?;
        let settings = CsSettings::for_noise(1, m_bar, noise);
        let design = cs_beam_design(&s_t, &s_r, &active, &dictionary, &codebook, &budget, &settings)?;
        let achieved = achievable_rate(&eff, &codebook.codeword(design.index), &budget)?;
        println!("M_bar={m_bar:2}: beam #{:3}, rate ratio {:.3}", design.index, achieved / optimal);
    }
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
