//! Pump spectral envelopes, optical temporal differentiators and time-domain
//! waveforms.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cis, Real};
use crate::units::{bandwidth_pm_to_omega, AngularFrequency};

/// Group velocity of light in vacuum, µm/ps.
const C_UM_PER_PS: f64 = 299.792458;

/// Ring radius (µm) and group index used for the default differentiator delay.
pub const DEFAULT_RING_RADIUS_UM: f64 = 30.0;
pub const DEFAULT_GROUP_INDEX: f64 = 4.2;
pub const DEFAULT_ALPHA_RT: f64 = 0.98;

/// Round-trip delay 2πR·n_g/c of a ring, in ps.
pub fn round_trip_delay<T: Real>(radius_um: T, group_index: T) -> T {
    T::TAU() * radius_um * group_index / T::lit(C_UM_PER_PS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpShape {
    #[default]
    Gaussian,
}

/// All-pass ring used as a fractional temporal differentiator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentiatorSpec<T> {
    pub tau_c: T,
    pub alpha_rt: T,
    /// Round-trip delay in ps.
    pub t_s: T,
    /// Ring resonance placed on the pump carrier.
    #[serde(rename = "omega_align_THz")]
    pub omega_align: AngularFrequency<T>,
}

/// Ideal differentiator `[i(ω−ω₀)]^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealDiff<T> {
    pub order: T,
    #[serde(rename = "omega0_THz")]
    pub omega0: AngularFrequency<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpTransform<T> {
    Mrr(DifferentiatorSpec<T>),
    Ideal(IdealDiff<T>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec<T> {
    #[serde(rename = "center_THz")]
    pub center: AngularFrequency<T>,
    /// Power-spectrum FWHM in pm, converted at the centre wavelength.
    pub fwhm_pm: T,
    #[serde(default)]
    pub shape: PumpShape,
    #[serde(default)]
    pub transform: Option<PumpTransform<T>>,
}

impl<T: Real> DifferentiatorSpec<T> {
    pub fn new(tau_c: T, alpha_rt: T, t_s: T, omega_align: AngularFrequency<T>) -> Result<Self> {
        let s = Self { tau_c, alpha_rt, t_s, omega_align };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_c > T::zero() && self.tau_c < T::one()) {
            return Err(Error::Domain(format!("tau_c must lie in (0, 1), got {}", self.tau_c)));
        }
        if !(self.alpha_rt > T::zero() && self.alpha_rt <= T::one()) {
            return Err(Error::Domain(format!("alpha_rt must lie in (0, 1], got {}", self.alpha_rt)));
        }
        if !(self.t_s > T::zero()) || !self.t_s.is_finite() {
            return Err(Error::Domain(format!("t_s must be positive, got {}", self.t_s)));
        }
        Ok(())
    }

    /// Free spectral range 2π/T_s in rad/ps.
    pub fn fsr(&self) -> T {
        T::TAU() / self.t_s
    }
}

impl<T: Real> IdealDiff<T> {
    pub fn new(order: T, omega0: AngularFrequency<T>) -> Result<Self> {
        if !(order > T::zero()) || !order.is_finite() {
            return Err(Error::Domain(format!("differentiation order must be positive, got {order}")));
        }
        Ok(Self { order, omega0 })
    }
}

impl<T: Real> PumpTransform<T> {
    pub fn transfer(&self, omega: AngularFrequency<T>) -> Complex<T> {
        match self {
            PumpTransform::Mrr(s) => mrr_diff_transfer(s, omega),
            PumpTransform::Ideal(s) => ideal_diff_transfer(s, omega),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PumpTransform::Mrr(s) => s.validate(),
            PumpTransform::Ideal(s) => IdealDiff::new(s.order, s.omega0).map(|_| ()),
        }
    }
}

impl<T: Real> PumpSpec<T> {
    pub fn gaussian(center: AngularFrequency<T>, fwhm_pm: T) -> Result<Self> {
        let s = Self { center, fwhm_pm, shape: PumpShape::Gaussian, transform: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_transform(mut self, transform: PumpTransform<T>) -> Result<Self> {
        transform.validate()?;
        self.transform = Some(transform);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_pm > T::zero()) || !self.fwhm_pm.is_finite() {
            return Err(Error::Domain(format!("pump FWHM must be positive, got {} pm", self.fwhm_pm)));
        }
        self.center.wavelength_nm()?;
        if let Some(t) = &self.transform {
            t.validate()?;
        }
        Ok(())
    }

    /// Angular power-FWHM in rad/ps.
    pub fn fwhm_omega(&self) -> T {
        let lambda = self.center.wavelength_nm().unwrap_or(T::nan());
        bandwidth_pm_to_omega(self.fwhm_pm, lambda)
    }

    /// Gaussian amplitude width σ, with |α|² = exp(−ν²/σ²).
    pub fn sigma(&self) -> T {
        self.fwhm_omega() / (T::lit(2.0) * T::LN_2().sqrt())
    }

    /// Envelope without any transform at detuning `nu` from the centre.
    pub fn base_at(&self, nu: T) -> T {
        let s = self.sigma();
        (-(nu * nu) / (T::lit(2.0) * s * s)).exp()
    }

    /// Envelope (including transform) at detuning `nu` from the centre.
    pub fn at(&self, nu: T) -> Complex<T> {
        let base = Complex::new(self.base_at(nu), T::zero());
        match &self.transform {
            Some(t) => base * t.transfer(self.center.offset(nu)),
            None => base,
        }
    }
}

/// Spectral envelope α_p(ω).
pub fn pump_envelope<T: Real>(spec: &PumpSpec<T>, omega: AngularFrequency<T>) -> Complex<T> {
    spec.at(omega.0 - spec.center.0)
}

/// All-pass ring transfer `(τ_c − α e^{−ix}) / (1 − τ_c α e^{−ix})` with
/// `x = (ω − ω_align)·T_s`, so a ring resonance sits at `ω_align`.
pub fn mrr_diff_transfer<T: Real>(spec: &DifferentiatorSpec<T>, omega: AngularFrequency<T>) -> Complex<T> {
    mrr_transfer_at(spec, omega.0 - spec.omega_align.0)
}

fn mrr_transfer_at<T: Real>(spec: &DifferentiatorSpec<T>, detuning: T) -> Complex<T> {
    // reduce the phase first so large detunings keep full precision
    let x = (detuning * spec.t_s) % T::TAU();
    let e = cis(-x);
    let one = Complex::new(T::one(), T::zero());
    (Complex::new(spec.tau_c, T::zero()) - e * spec.alpha_rt) / (one - e * (spec.tau_c * spec.alpha_rt))
}

/// `[i(ω−ω₀)]^N` on the principal branch.
pub fn ideal_diff_transfer<T: Real>(spec: &IdealDiff<T>, omega: AngularFrequency<T>) -> Complex<T> {
    ideal_transfer_at(spec.order, omega.0 - spec.omega0.0)
}

fn ideal_transfer_at<T: Real>(order: T, d: T) -> Complex<T> {
    if d == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let arg = if d > T::zero() { T::FRAC_PI_2() } else { -T::FRAC_PI_2() };
    Complex::from_polar(d.abs().powf(order), order * arg)
}

const SLOPE_POINTS_PER_SIDE: usize = 64;
const PHASE_POINTS: usize = 4001;
/// |H(centre)|/max below this counts as an exact zero.
const ZERO_RATIO: f64 = 1e-6;
/// |H(centre)|/max below this counts as a resonance dip.
const DIP_RATIO: f64 = 0.5;

/// Differentiation order of a transfer function `h(ν)` about `ν = 0` over
/// `|ν| ≤ band`.
///
/// A transfer vanishing at the centre is graded by the log-log slope of its
/// magnitude (sides averaged). A transfer with a finite-depth dip is graded by
/// its unwrapped phase excursion across the band in units of π. Anything else
/// (no dip) falls back to the magnitude slope, which is ≈0 for a flat response.
pub fn estimate_order<T: Real, F: Fn(T) -> Complex<T>>(h: F, band: T) -> T {
    let n = PHASE_POINTS;
    let nus: Vec<T> = (0..n).map(|k| band * (T::usize(2 * k) - T::usize(n - 1)) / T::usize(n - 1)).collect();
    let vals: Vec<Complex<T>> = nus.iter().map(|&v| h(v)).collect();
    let peak = vals.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let centre = h(T::zero()).norm();
    if centre > T::lit(ZERO_RATIO) * peak && centre < T::lit(DIP_RATIO) * peak {
        let mut total = T::zero();
        let mut prev = vals[0].arg();
        for v in &vals[1..] {
            let a = v.arg();
            let mut d = a - prev;
            while d > T::PI() {
                d = d - T::TAU();
            }
            while d < -T::PI() {
                d = d + T::TAU();
            }
            total = total + d;
            prev = a;
        }
        return total.abs() / T::PI();
    }
    let side = |sign: T| {
        let m = SLOPE_POINTS_PER_SIDE;
        let pts: Vec<(T, T)> = (1..=m)
            .map(|k| {
                let d = band * T::usize(k) / T::usize(m);
                (d.ln(), h(sign * d).norm().ln())
            })
            .collect();
        linear_slope(&pts)
    };
    (side(T::one()) + side(-T::one())) / T::lit(2.0)
}

fn linear_slope<T: Real>(pts: &[(T, T)]) -> T {
    let n = T::usize(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(sxy, sxx), p| {
        let dx = p.0 - mx;
        (sxy + dx * (p.1 - my), sxx + dx * dx)
    });
    sxy / sxx
}

/// Differentiation order realised by an all-pass ring over `±band_half_width`
/// about its aligned resonance.
pub fn estimate_diff_order<T: Real>(spec: &DifferentiatorSpec<T>, band_half_width: T) -> Result<T> {
    spec.validate()?;
    if !(band_half_width > T::zero()) {
        return Err(Error::Argument(format!("band half-width must be positive, got {band_half_width}")));
    }
    if band_half_width > spec.fsr() / T::lit(4.0) {
        return Err(Error::Argument(format!(
            "band half-width {band_half_width} exceeds a quarter of the FSR ({})",
            spec.fsr() / T::lit(4.0)
        )));
    }
    Ok(estimate_order(|nu| mrr_transfer_at(spec, nu), band_half_width))
}

/// Order of the ideal differentiator measured with [`estimate_order`].
pub fn estimate_ideal_order<T: Real>(spec: &IdealDiff<T>, band_half_width: T) -> T {
    estimate_order(|nu| ideal_transfer_at(spec.order, nu), band_half_width)
}

/// Finds the over-coupled self-coupling `τ_c ∈ (0, α_rt)` whose order over
/// `±band_half_width` equals `target` (coarse scan, then bisection).
pub fn tune_differentiator<T: Real>(
    alpha_rt: T,
    t_s: T,
    omega_align: AngularFrequency<T>,
    band_half_width: T,
    target: T,
) -> Result<DifferentiatorSpec<T>> {
    let order_at = |tc: T| DifferentiatorSpec::new(tc, alpha_rt, t_s, omega_align).and_then(|s| estimate_diff_order(&s, band_half_width));
    let steps = 400;
    let tc_at = |j: usize| alpha_rt * T::usize(j) / T::usize(steps);
    let mut prev = order_at(tc_at(1))?;
    for j in 2..steps {
        let cur = order_at(tc_at(j))?;
        if prev < target && cur >= target {
            let (mut lo, mut hi) = (tc_at(j - 1), tc_at(j));
            for _ in 0..60 {
                let mid = (lo + hi) / T::lit(2.0);
                if order_at(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return DifferentiatorSpec::new((lo + hi) / T::lit(2.0), alpha_rt, t_s, omega_align);
        }
        prev = cur;
    }
    Err(Error::Argument(format!("order {target} is not reachable with alpha_rt = {alpha_rt} over band {band_half_width}")))
}

/// Complex time series on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T> {
    pub times: Vec<T>,
    pub values: Vec<Complex<T>>,
}

/// Inverse DFT of the envelope sampled on the frequency grid conjugate to
/// `times` (Δω = 2π/(N·Δt), centred on the carrier), without normalisation:
/// `a_n = (Δω/2π)·Σ_k α(ν_k)·e^{iν_k t_n}`.
pub fn pump_waveform_raw<T: Real>(spec: &PumpSpec<T>, times: &[T]) -> Result<Waveform<T>> {
    let n = times.len();
    if n < 2 {
        return Err(Error::Argument("time grid needs at least 2 samples".into()));
    }
    let dt = (times[n - 1] - times[0]) / T::usize(n - 1);
    if !(dt > T::zero()) {
        return Err(Error::Argument("time grid must be strictly increasing".into()));
    }
    let tol = T::lit(1e-9) * dt * T::usize(n);
    for (k, &t) in times.iter().enumerate() {
        if (t - (times[0] + dt * T::usize(k))).abs() > tol {
            return Err(Error::Argument(format!("time grid is not uniform at index {k}")));
        }
    }
    let dw = T::TAU() / (T::usize(n) * dt);
    let m = n / 2;
    let t0 = times[0];
    let mut buf: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let nu = (T::usize(k) - T::usize(m)) * dw;
            spec.at(nu) * cis(nu * t0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = dw / T::TAU();
    let values = buf
        .into_iter()
        .enumerate()
        .map(|(j, v)| {
            // e^{−2πi·m·j/N} from the centred frequency index
            let ph = -T::TAU() * T::usize((m * j) % n) / T::usize(n);
            v * cis(ph) * scale
        })
        .collect();
    Ok(Waveform { times: times.to_vec(), values })
}

/// [`pump_waveform_raw`] scaled to unit peak magnitude.
pub fn pump_waveform<T: Real>(spec: &PumpSpec<T>, times: &[T]) -> Result<Waveform<T>> {
    let mut w = pump_waveform_raw(spec, times)?;
    let peak = w.values.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    if peak > T::zero() {
        for v in &mut w.values {
            *v = *v / peak;
        }
    }
    Ok(w)
}

/// Uniform time grid of `count` samples centred on zero.
pub fn centered_time_grid<T: Real>(dt: T, count: usize) -> Vec<T> {
    let half = T::usize(count / 2);
    (0..count).map(|k| (T::usize(k) - half) * dt).collect()
}
