use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::resonator::SplitResonance;
use crate::units::{omega_to_wavelength, DetuningGrid};

use super::SpectrumSample;

/// Samples `|T|²` on `grid` with Gaussian noise added in amplitude.
///
/// Output is ordered by increasing wavelength.
pub fn synthesize_spectrum<T>(
    params: &SplitResonance<T>,
    grid: &DetuningGrid<T>,
    noise_sigma: T,
    seed: u64,
) -> Result<Vec<SpectrumSample<T>>>
where
    T: Real,
    StandardNormal: Distribution<T>,
{
    if !(noise_sigma >= T::zero()) {
        return Err(Error::Argument(format!("noise sigma must be non-negative, got {noise_sigma}")));
    }
    let normal = Normal::new(T::zero(), noise_sigma).map_err(|e| Error::Argument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(grid.len());
    for k in (0..grid.len()).rev() {
        let omega = grid.absolute(k);
        let amp = params.through_transmission(omega)?.norm();
        let eps = if noise_sigma > T::zero() { normal.sample(&mut rng) } else { T::zero() };
        let a = Float::max(amp + eps, T::zero());
        out.push(SpectrumSample { wavelength_nm: omega_to_wavelength(omega)?, transmission: a * a });
    }
    Ok(out)
}
