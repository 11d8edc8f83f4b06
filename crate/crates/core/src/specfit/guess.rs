use num_traits::Float;

use crate::error::Result;
use crate::num::Real;
use crate::resonator::{SplitResonance, C_NORM_MAX};
use crate::units::AngularFrequency;

use super::{prepare, SpectrumSample};

/// Relative dip depth below which a spectrum counts as flat.
const FLAT_DEPTH: f64 = 1e-9;

fn median<T: Real>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

fn baseline<T: Real>(y: &[T]) -> T {
    let edge = (y.len() / 10).max(1);
    median(y[..edge].iter().chain(&y[y.len() - edge..]).copied().collect())
}

pub(super) fn has_dip<T: Real>(y: &[T]) -> bool {
    let c = baseline(y);
    let y_min = y.iter().copied().fold(T::infinity(), Float::min);
    c - y_min > T::lit(FLAT_DEPTH) * Float::max(c, T::one())
}

/// Heuristic starting point for [`super::fit_resonance`].
///
/// A spectrum without a dip yields a resonance centred on the window with a
/// broad width and negligible coupling.
pub fn initial_guess<T: Real>(samples: &[SpectrumSample<T>]) -> Result<SplitResonance<T>> {
    let (w, y) = prepare(samples)?;
    let n = w.len();
    let two = T::lit(2.0);
    let c_max = T::lit(C_NORM_MAX);
    let c = Float::min(Float::max(baseline(&y), T::lit(1e-6)), c_max * T::lit(0.999_999));
    let span = w[n - 1] - w[0];
    let (pi, three_pi) = (T::PI() / two, T::lit(3.0) * T::PI() / two);

    if !has_dip(&y) {
        let decay = span / T::lit(8.0);
        let centre = AngularFrequency((w[0] + w[n - 1]) / two);
        return SplitResonance::new("", c, decay, T::lit(0.4), decay / two, T::lit(1e-8) * Float::sqrt(decay), pi, three_pi, centre);
    }

    let d: Vec<T> = y.iter().map(|&v| Float::max(c - v, T::zero())).collect();
    let (num, den) = w.iter().zip(&d).fold((T::zero(), T::zero()), |(a, b), (&wk, &dk)| (a + wk * dk * dk, b + dk * dk));
    let omega0 = num / den;
    let depth = d.iter().copied().fold(T::zero(), Float::max);

    let below: Vec<usize> = (0..n).filter(|&k| d[k] > depth / two).collect();
    let width = w[below[below.len() - 1]] - w[below[0]];
    let mut decay = Float::max(width / two, span / T::usize(4 * n));

    let minima: Vec<usize> =
        (1..n - 1).filter(|&k| y[k] < y[k - 1] && y[k] < y[k + 1] && d[k] > T::lit(0.3) * depth).collect();
    let mu0 = if minima.len() >= 2 {
        let mu = (w[minima[minima.len() - 1]] - w[minima[0]]) / two;
        decay = Float::max(decay - mu, decay / T::lit(3.0));
        mu
    } else {
        decay / two
    };
    let kappa = Float::sqrt(Float::max(depth, T::lit(1e-3)) * decay);
    SplitResonance::new("", c, decay, T::lit(0.4), mu0, kappa, pi, three_pi, AngularFrequency(omega0))
}
