//! Least-squares extraction of split-resonance parameters from through-port
//! transmission spectra.
//!
//! The fit runs on amplitude `√T` over eight parameters. Positive quantities
//! are optimised in log space, `C` through a scaled logistic, phases freely
//! (wrapped on output) and `ω₀` as an offset scaled by the guessed decay rate.
//! A simplex pass is refined by Levenberg–Marquardt from several perturbed
//! starts; the lowest residual wins.

mod guess;
pub mod optimizer;
mod synth;

use nalgebra::RealField;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::resonator::{SplitResonance, C_NORM_MAX};
use crate::units::{wavelength_to_omega, AngularFrequency};

pub use guess::initial_guess;
pub use synth::synthesize_spectrum;

use optimizer::{levenberg_marquardt, nelder_mead, StopRule};

/// Fewest samples accepted by the fitter.
pub const MIN_SAMPLES: usize = 20;

/// One point of a measured spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample<T> {
    pub wavelength_nm: T,
    /// Power transmission ratio.
    pub transmission: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Perturbed restarts in addition to the unperturbed start.
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Half-width of the uniform log-space perturbation.
    pub perturbation: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 8, seed: 0x5eed, max_iterations: 500, tolerance: 1e-10, perturbation: 0.3 }
    }
}

impl FitOptions {
    pub fn single_start() -> Self {
        Self { starts: 0, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct FitResult<T> {
    #[serde(flatten)]
    pub params: SplitResonance<T>,
    pub r_squared: T,
    pub residual_rms: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Parameter transform between physical values and optimiser coordinates.
#[derive(Debug, Clone, Copy)]
struct Transform<T> {
    omega_ref: T,
    omega_scale: T,
}

const N_PARAMS: usize = 8;

impl<T: Real> Transform<T> {
    fn encode(&self, p: &SplitResonance<T>) -> [T; N_PARAMS] {
        let c_max = T::lit(C_NORM_MAX);
        let eps = T::lit(1e-9);
        let c = Float::min(Float::max(p.c_norm, c_max * eps), c_max * (T::one() - eps));
        let floor = |v: T| Float::ln(Float::max(v, T::lit(1e-300)));
        [
            Float::ln(c / (c_max - c)),
            floor(p.decay),
            floor(p.gamma),
            floor(p.mu0),
            floor(p.kappa),
            p.phi1,
            p.phi2,
            (p.omega0.0 - self.omega_ref) / self.omega_scale,
        ]
    }

    fn decode(&self, u: &[T], label: &str) -> Result<SplitResonance<T>> {
        let c = T::lit(C_NORM_MAX) / (T::one() + Float::exp(-u[0]));
        SplitResonance::new(
            label,
            c,
            Float::exp(u[1]),
            Float::exp(u[2]),
            Float::exp(u[3]),
            Float::exp(u[4]),
            u[5],
            u[6],
            AngularFrequency(self.omega_ref + u[7] * self.omega_scale),
        )
    }
}

struct Problem<T> {
    omegas: Vec<T>,
    amplitudes: Vec<T>,
    transform: Transform<T>,
    label: String,
}

impl<T: Real> Problem<T> {
    fn model(&self, p: &SplitResonance<T>) -> Result<Vec<T>> {
        let dets: Vec<T> = self.omegas.iter().map(|&w| w - p.omega0.0).collect();
        Ok(p.transmission_many(&dets)?.into_iter().map(|t| t.norm()).collect())
    }

    fn residuals(&self, u: &[T]) -> Option<Vec<T>> {
        let p = self.transform.decode(u, &self.label).ok()?;
        let m = self.model(&p).ok()?;
        let r: Vec<T> = m.iter().zip(&self.amplitudes).map(|(&a, &b)| a - b).collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn cost(&self, u: &[T]) -> T {
        self.residuals(u).map(|r| r.iter().fold(T::zero(), |a, &v| a + v * v)).unwrap_or(T::infinity())
    }
}

/// `1 − SS_res/SS_tot`; a constant data set scores 1 when reproduced to
/// rounding and 0 otherwise.
pub fn r_squared<T: Real>(data: &[T], model: &[T]) -> T {
    let n = T::usize(data.len());
    let mean = data.iter().fold(T::zero(), |a, &v| a + v) / n;
    let ss_tot = data.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    let ss_res = data.iter().zip(model).fold(T::zero(), |a, (&y, &m)| a + (y - m) * (y - m));
    let tiny = n * T::epsilon() * T::epsilon();
    if ss_tot <= tiny {
        return if ss_res <= tiny { T::one() } else { T::zero() };
    }
    T::one() - ss_res / ss_tot
}

/// Converts samples to ascending angular frequency with amplitude data.
pub(crate) fn prepare<T: Real>(samples: &[SpectrumSample<T>]) -> Result<(Vec<T>, Vec<T>)> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Argument(format!("spectrum needs at least {MIN_SAMPLES} samples, got {}", samples.len())));
    }
    let increasing = samples[1].wavelength_nm > samples[0].wavelength_nm;
    for pair in samples.windows(2) {
        let ok = if increasing {
            pair[1].wavelength_nm > pair[0].wavelength_nm
        } else {
            pair[1].wavelength_nm < pair[0].wavelength_nm
        };
        if !ok {
            return Err(Error::Argument("spectrum wavelengths must be strictly monotone".into()));
        }
    }
    let mut pts = Vec::with_capacity(samples.len());
    for s in samples {
        if !(s.transmission >= T::zero()) || !s.transmission.is_finite() {
            return Err(Error::Argument(format!("transmission must be finite and non-negative, got {}", s.transmission)));
        }
        pts.push((wavelength_to_omega(s.wavelength_nm)?.0, Float::sqrt(s.transmission)));
    }
    if increasing {
        pts.reverse();
    }
    Ok(pts.into_iter().unzip())
}

/// Fits the split-resonance model to a transmission spectrum.
///
/// Non-convergence is reported through `converged`, not as an error.
pub fn fit_resonance<T>(
    samples: &[SpectrumSample<T>],
    init: Option<&SplitResonance<T>>,
    options: &FitOptions,
) -> Result<FitResult<T>>
where
    T: Real + RealField,
{
    let (omegas, amplitudes) = prepare(samples)?;
    let start = match init {
        Some(p) => p.clone(),
        None => initial_guess(samples)?,
    };
    let span = omegas[omegas.len() - 1] - omegas[0];
    if guess::has_dip(&amplitudes) && span < T::lit(3.0) * start.linewidth() {
        return Err(Error::Argument(format!(
            "spectrum spans {span} rad/ps, less than three linewidths ({})",
            start.linewidth()
        )));
    }
    let transform = Transform { omega_ref: start.omega0.0, omega_scale: start.decay };
    let problem = Problem { omegas, amplitudes, transform, label: start.label.clone() };
    let rule = StopRule { max_iterations: options.max_iterations, tolerance: T::lit(options.tolerance) };

    let base = transform.encode(&start);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut starts = vec![base];
    for _ in 0..options.starts {
        let mut u = base;
        let q = options.perturbation;
        for v in u.iter_mut().take(5).skip(1) {
            *v += T::lit(rng.random_range(-q..=q));
        }
        for v in u.iter_mut().take(7).skip(5) {
            *v += T::lit(rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI));
        }
        starts.push(u);
    }

    let steps = [0.1, 0.2, 0.2, 0.2, 0.2, 0.3, 0.3, 0.2].map(T::lit);
    let mut best: Option<(T, Vec<T>, usize, bool)> = None;
    for u0 in &starts {
        // refine both the raw start and the simplex result; the simplex can
        // funnel nearby starts into one shallow basin
        let nm = nelder_mead(|u| problem.cost(u), u0, &steps, rule);
        for (seed, pre) in [(u0.to_vec(), 0), (nm.x, nm.iterations)] {
            let lm = levenberg_marquardt(|u| problem.residuals(u), &seed, rule);
            if lm.value.is_finite() && best.as_ref().is_none_or(|b| lm.value < b.0) {
                best = Some((lm.value, lm.x, pre + lm.iterations, lm.converged));
            }
        }
    }
    let (cost, u, iterations, converged) =
        best.ok_or_else(|| Error::Domain("model could not be evaluated from any start".into()))?;
    let params = transform.decode(&u, &start.label)?;
    let model = problem.model(&params)?;
    let n = T::usize(problem.amplitudes.len());
    Ok(FitResult {
        r_squared: r_squared(&problem.amplitudes, &model),
        residual_rms: Float::sqrt(cost / n),
        params,
        iterations,
        converged,
    })
}
