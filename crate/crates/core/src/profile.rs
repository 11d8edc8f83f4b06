//! Small helpers on sampled 1-D profiles.

use crate::num::Real;

/// Full width at half maximum of a sampled non-negative profile, measured
/// around its global maximum with linear interpolation at the crossings.
/// Returns `None` if either half-level crossing lies outside the samples.
pub fn fwhm<T: Real>(xs: &[T], ys: &[T]) -> Option<T> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let (kmax, &ymax) = ys.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if !(ymax > T::zero()) {
        return None;
    }
    let half = ymax / T::lit(2.0);
    let cross = |k0: usize, k1: usize| {
        let t = (half - ys[k0]) / (ys[k1] - ys[k0]);
        xs[k0] + t * (xs[k1] - xs[k0])
    };
    let mut k = kmax;
    while k > 0 && ys[k - 1] > half {
        k -= 1;
    }
    if k == 0 {
        return None;
    }
    let left = cross(k - 1, k);
    let mut k = kmax;
    while k + 1 < ys.len() && ys[k + 1] > half {
        k += 1;
    }
    if k + 1 == ys.len() {
        return None;
    }
    let right = cross(k, k + 1);
    Some(right - left)
}

/// Indices of strict interior local maxima at or above `threshold·max`.
pub fn local_maxima<T: Real>(ys: &[T], threshold: T) -> Vec<usize> {
    let top = ys.iter().copied().fold(T::neg_infinity(), T::max);
    let floor = threshold * top;
    (1..ys.len().saturating_sub(1)).filter(|&k| ys[k] > ys[k - 1] && ys[k] > ys[k + 1] && ys[k] >= floor).collect()
}
