//! Reflection beamforming for large intelligent surfaces (LIS) whose elements
//! are passive phase shifters except for a handful of active channel sensors.
//!
//! The crate covers the whole chain:
//!
//! * [`channel`]: wideband geometric multipath channels between the surface and
//!   single-antenna terminals, plus an importer for externally traced paths.
//! * [`surface`]: active-sensor selection, channel sampling and the effective
//!   (Hadamard) cascade channel.
//! * [`codebook`]: the Kronecker DFT reflection codebook.
//! * [`rate`]: achievable rates and the exhaustive-search upper bound.
//! * [`cs`]: full-channel recovery from sampled channels with orthogonal
//!   matching pursuit over an array-response dictionary.
//! * [`dl`]: dataset collection, a from-scratch MLP rate predictor, and beam
//!   prediction with top-k refinement.
//! * [`harness`]: seeded Monte-Carlo sweeps comparing both designs against the
//!   upper bound, written as CSV.

pub mod channel;
pub mod codebook;
pub mod cs;
pub mod dl;
mod error;
pub mod harness;
pub mod rate;
pub mod scenario;
pub mod surface;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix, column-major. Channel matrices are `M x K` with one
/// column per subcarrier.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Seeded random source used throughout. ChaCha output is portable, so a seed
/// reproduces the same draws on every platform.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds a [`SimRng`] from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}

/// Counter-based seed derivation: mixes `(master, stream, index)` through
/// SplitMix64 so that every (stream, index) pair gets an independent,
/// order-free seed. Parallel workers use this instead of sharing an rng.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ stream) ^ index)
}

/// Index of the largest finite value, lowest index on ties. `None` when the
/// slice is empty or holds no comparable value.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
        assert_eq!(argmax(&[f64::NAN, 0.5]), Some(1));
    }
}
