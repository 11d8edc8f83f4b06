//! Schmidt decomposition, purity, peak inventory, marginals and loss-corrected
//! rates.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::JsaGrid;
use crate::num::Real;
use crate::profile::fwhm;
use crate::units::{detuning_to_wavelength_nm, Grid2D};

/// Number of Schmidt weights written to reports.
pub const REPORT_WEIGHTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtResult<T> {
    /// Descending, summing to 1.
    pub weights: Vec<T>,
    pub purity: T,
    pub effective_modes: T,
}

/// Schmidt decomposition of a sampled amplitude `F(ν_s, ν_i)`.
///
/// The matrix is scaled by √(dν_s·dν_i) before the SVD so that the weights
/// approximate the continuum decomposition. With `flat_phase` the modulus |F|
/// is decomposed instead of F.
pub fn schmidt_decompose<T: Real + RealField>(grid: &Grid2D<Complex<T>, T>, flat_phase: bool) -> Result<SchmidtResult<T>> {
    let (r, c) = grid.values.dim();
    if r < 2 || c < 2 {
        return Err(Error::Domain(format!("Schmidt decomposition needs at least a 2x2 grid, got {r}x{c}")));
    }
    let scale = Float::sqrt(Float::abs(grid.cell_area()));
    let mut finite = true;
    let m = DMatrix::from_fn(r, c, |a, b| {
        let v = grid.values[(a, b)];
        finite &= v.re.is_finite() && v.im.is_finite();
        let v = if flat_phase { Complex::new(v.norm(), T::zero()) } else { v };
        v * scale
    });
    if !finite {
        return Err(Error::Domain("grid contains non-finite values".into()));
    }
    weights_from_matrix(m)
}

/// Schmidt decomposition of a measured intensity grid under the flat-phase
/// assumption (amplitude = √JSI).
pub fn schmidt_from_intensity<T: Real + RealField>(grid: &Grid2D<T, T>) -> Result<SchmidtResult<T>> {
    let amp = grid.map(|&v| Complex::new(Float::sqrt(Float::max(v, T::zero())), T::zero()));
    schmidt_decompose(&amp, false)
}

fn weights_from_matrix<T: Real + RealField>(m: DMatrix<Complex<T>>) -> Result<SchmidtResult<T>> {
    let sv = m.singular_values();
    let mut w: Vec<T> = sv.iter().map(|&s| s * s).collect();
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return Err(Error::Domain("cannot decompose an all-zero grid".into()));
    }
    for x in &mut w {
        *x /= total;
    }
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let purity = w.iter().fold(T::zero(), |a, &b| a + b * b);
    Ok(SchmidtResult { weights: w, purity, effective_modes: T::one() / purity })
}

/// Unheralded g⁽²⁾(0) = 1 + P.
pub fn purity_to_g2<T: Real>(purity: T) -> Result<T> {
    if !(purity > T::zero() && purity <= T::one()) {
        return Err(Error::Argument(format!("purity must lie in (0, 1], got {purity}")));
    }
    Ok(T::one() + purity)
}

/// Strict 8-neighbour interior maxima at or above `rel_threshold·max`,
/// sorted by value (descending).
pub fn find_peaks<T: Real>(values: &Array2<T>, rel_threshold: T) -> Vec<(usize, usize, T)> {
    let (r, c) = values.dim();
    if r < 3 || c < 3 {
        return Vec::new();
    }
    let top = values.iter().copied().fold(T::neg_infinity(), T::max);
    let floor = rel_threshold * top;
    let mut out = Vec::new();
    for a in 1..r - 1 {
        for b in 1..c - 1 {
            let v = values[(a, b)];
            if v < floor {
                continue;
            }
            let strict = (a - 1..=a + 1).all(|x| (b - 1..=b + 1).all(|y| (x == a && y == b) || values[(x, y)] < v));
            if strict {
                out.push((a, b, v));
            }
        }
    }
    out.sort_by(|p, q| q.2.partial_cmp(&p.2).unwrap().then((p.0, p.1).cmp(&(q.0, q.1))));
    out
}

/// Trapezoid marginals (signal, idler) of a real grid.
pub fn marginals<T: Real>(grid: &Grid2D<T, T>) -> (Vec<T>, Vec<T>) {
    let ws = grid.signal_axis.trapezoid_weights();
    let wi = grid.idler_axis.trapezoid_weights();
    let (r, c) = grid.values.dim();
    let sig = (0..r).map(|a| (0..c).fold(T::zero(), |acc, b| acc + grid.values[(a, b)] * wi[b])).collect();
    let idl = (0..c).map(|b| (0..r).fold(T::zero(), |acc, a| acc + grid.values[(a, b)] * ws[a])).collect();
    (sig, idl)
}

/// Marginal of a real grid along a rotated coordinate `ν_s + sign·ν_i`
/// (sign = 1 for the sum, −1 for the difference), deposited on bins of the
/// given width with linear sharing between neighbouring bins.
pub fn rotated_marginal<T: Real>(grid: &Grid2D<T, T>, sign: T, bin: T) -> (Vec<T>, Vec<T>) {
    let s = grid.signal_axis.points();
    let i = grid.idler_axis.points();
    let lo = s[0].min(s[s.len() - 1]) + (sign * i[0]).min(sign * i[i.len() - 1]);
    let hi = s[0].max(s[s.len() - 1]) + (sign * i[0]).max(sign * i[i.len() - 1]);
    let n = ((hi - lo) / bin).ceil().to_usize().unwrap_or(0) + 2;
    let mut acc = vec![T::zero(); n];
    let area = grid.cell_area().abs();
    for ((a, b), &v) in grid.values.indexed_iter() {
        let t = (s[a] + sign * i[b] - lo) / bin;
        let k = t.floor().to_usize().unwrap_or(0).min(n - 2);
        let f = t - T::usize(k);
        acc[k] = acc[k] + v * area * (T::one() - f);
        acc[k + 1] = acc[k + 1] + v * area * f;
    }
    let xs = (0..n).map(|k| lo + bin * T::usize(k)).collect();
    (xs, acc)
}

/// FWHMs of the sum- and difference-coordinate marginals.
pub fn sum_difference_fwhm<T: Real>(grid: &Grid2D<T, T>) -> (Option<T>, Option<T>) {
    let bin = grid.signal_axis.spacing().min(grid.idler_axis.spacing());
    let (xs, ys) = rotated_marginal(grid, T::one(), bin);
    let (xd, yd) = rotated_marginal(grid, -T::one(), bin);
    (fwhm(&xs, &ys), fwhm(&xd, &yd))
}

/// Losses between the chip and the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget<T> {
    /// Grating-coupler loss per facet, dB.
    pub alpha_gc: T,
    /// Loss per demultiplexing stage, dB.
    pub alpha_de: T,
    /// Detector efficiency.
    pub eta_d: T,
    pub de_stages: u32,
}

impl<T: Real> LossBudget<T> {
    /// Total single-channel loss α_tot = 1 − 10^{(−α_gc − n·α_de)/10}.
    pub fn alpha_tot(&self) -> T {
        let db = self.alpha_gc + T::from_u32(self.de_stages).unwrap() * self.alpha_de;
        T::one() - T::lit(10.0).powf(-db / T::lit(10.0))
    }

    fn validate(&self) -> Result<()> {
        if self.alpha_gc < T::zero() || self.alpha_de < T::zero() {
            return Err(Error::Argument("losses must be non-negative".into()));
        }
        if !(self.eta_d > T::zero() && self.eta_d <= T::one()) {
            return Err(Error::Argument(format!("detector efficiency must lie in (0, 1], got {}", self.eta_d)));
        }
        Ok(())
    }
}

/// On-chip single and pair rates from raw detected rates.
pub fn loss_corrected_rates<T: Real>(budget: &LossBudget<T>, raw_single: T, raw_coincidence: T) -> Result<(T, T)> {
    budget.validate()?;
    if raw_single < T::zero() || raw_coincidence < T::zero() {
        return Err(Error::Argument("rates must be non-negative".into()));
    }
    let t = T::one() - budget.alpha_tot();
    let single = raw_single / budget.eta_d / t;
    let pairs = raw_coincidence / (budget.eta_d * budget.eta_d) / (t * t);
    Ok((single, pairs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport<T> {
    pub d_lambda_s_nm: T,
    pub d_lambda_i_nm: T,
    /// Intensity relative to the global maximum.
    pub height: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport<T> {
    pub weights: Vec<T>,
    pub purity: T,
    pub g2: T,
    pub effective_modes: T,
    pub peaks: Vec<PeakReport<T>>,
    #[serde(skip)]
    pub signal_marginal: Vec<T>,
    #[serde(skip)]
    pub idler_marginal: Vec<T>,
}

/// Peaks of an intensity grid in wavelength-detuning coordinates.
pub fn peak_report<T: Real>(jsi: &Grid2D<T, T>, rel_threshold: T) -> Vec<PeakReport<T>> {
    let top = jsi.values.iter().copied().fold(T::zero(), T::max);
    find_peaks(&jsi.values, rel_threshold)
        .into_iter()
        .map(|(a, b, v)| PeakReport {
            d_lambda_s_nm: detuning_to_wavelength_nm(jsi.signal_axis.center, jsi.signal_axis.points()[a]),
            d_lambda_i_nm: detuning_to_wavelength_nm(jsi.idler_axis.center, jsi.idler_axis.points()[b]),
            height: v / top,
        })
        .collect()
}

fn report_from<T: Real>(schmidt: SchmidtResult<T>, jsi: &Grid2D<T, T>, rel_threshold: T) -> Result<AnalysisReport<T>> {
    let (signal_marginal, idler_marginal) = marginals(jsi);
    Ok(AnalysisReport {
        weights: schmidt.weights.iter().copied().take(REPORT_WEIGHTS).collect(),
        g2: purity_to_g2(schmidt.purity.min(T::one()))?,
        purity: schmidt.purity,
        effective_modes: schmidt.effective_modes,
        peaks: peak_report(jsi, rel_threshold),
        signal_marginal,
        idler_marginal,
    })
}

/// Full analysis of a simulated JSA.
pub fn analyze<T: Real + RealField>(jsa: &JsaGrid<T>, flat_phase: bool, rel_threshold: T) -> Result<AnalysisReport<T>> {
    analyze_amplitude(&jsa.grid, flat_phase, rel_threshold)
}

/// Analysis of a sampled complex amplitude, e.g. one read back from disk.
pub fn analyze_amplitude<T: Real + RealField>(grid: &Grid2D<Complex<T>, T>, flat_phase: bool, rel_threshold: T) -> Result<AnalysisReport<T>> {
    let schmidt = schmidt_decompose(grid, flat_phase)?;
    let jsi = grid.map(|v| v.norm_sqr());
    report_from(schmidt, &jsi, rel_threshold)
}

/// Analysis of an intensity-only grid (flat-phase assumption).
pub fn analyze_intensity<T: Real + RealField>(jsi: &Grid2D<T, T>, rel_threshold: T) -> Result<AnalysisReport<T>> {
    let schmidt = schmidt_from_intensity(jsi)?;
    report_from(schmidt, jsi, rel_threshold)
}
