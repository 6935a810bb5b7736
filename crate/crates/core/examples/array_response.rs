// Array responses of an 8 x 8 half-wavelength surface and the DFT beams that
// tile its angular space.

use lis_beam::channel::{array_response, spatial_frequencies, ArrayGeometry};
use lis_beam::codebook::{dft_beam_frequencies, dft_codebook};
use lis_beam::Result;

pub fn run_example() -> Result<()> {
    let geometry = ArrayGeometry::half_wavelength(8, 8)?;
    let (azimuth, elevation) = (0.7, 1.1);
    let a = array_response(&geometry, azimuth, elevation);
    let (u, v) = spatial_frequencies(azimuth, elevation);
    println!("direction az={azimuth} el={elevation} -> u={u:.4} v={v:.4}, |a|^2 = {:.1}", a.norm_squared());

    let codebook = dft_codebook(&geometry)?;
    let gains: Vec<f64> = (0..codebook.len())
        .map(|n| codebook.codeword(n).dotc(&a).norm())
        .collect();
    let best = lis_beam::argmax(&gains).expect("codebook is never empty");
    let (bu, bv) = dft_beam_frequencies(&geometry, best);
    println!("best of {} DFT beams: #{best} at u={bu:.3} v={bv:.3}, gain {:.2}", codebook.len(), gains[best]);
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
