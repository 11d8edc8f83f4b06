//! Joint spectral amplitude of cavity-enhanced four-wave mixing with split
//! pump, signal and idler resonances.
//!
//! Signal and idler detunings are measured from the centres of their grids
//! (normally the resonance centres). Sum-frequency offsets `ν₊` are measured
//! from twice the pump carrier.

use ndarray::Array2;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::phasematch::{phi_pm_at, PhaseMatchSpec};
use crate::pump::{pump_envelope, PumpSpec};
use crate::resonator::SplitResonance;
use crate::units::{make_grid, AngularFrequency, DetuningGrid, Grid2D};

/// Mismatch (in units of the widest linewidth) above which a warning is raised.
pub const ENERGY_WARN_LINEWIDTHS: f64 = 3.0;
/// Mismatch above which the resonance triple is rejected.
pub const ENERGY_ERROR_LINEWIDTHS: f64 = 10.0;
/// Quadrature window narrower than this many pump linewidths is flagged.
pub const MIN_WINDOW_LINEWIDTHS: f64 = 6.0;

/// Grid construction knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridOptions<T> {
    /// Half-width of the signal and idler grids in linewidths (2/τ) of the
    /// respective resonance.
    pub half_width_linewidths: T,
    pub count: usize,
    pub pump_quadrature_points: usize,
    /// Overrides the ω_p quadrature half-width (rad/ps).
    pub quadrature_half_width: Option<T>,
}

impl<T: Real> Default for GridOptions<T> {
    fn default() -> Self {
        Self { half_width_linewidths: T::lit(2.0), count: 128, pump_quadrature_points: 257, quadrature_half_width: None }
    }
}

#[derive(Debug, Clone)]
pub struct SourceConfig<T> {
    pub pump_res: SplitResonance<T>,
    pub signal_res: SplitResonance<T>,
    pub idler_res: SplitResonance<T>,
    pub pump: PumpSpec<T>,
    /// `None` means φ_PM ≡ 1.
    pub pm: Option<PhaseMatchSpec<T>>,
    pub signal_grid: DetuningGrid<T>,
    pub idler_grid: DetuningGrid<T>,
    pub pump_quadrature_points: usize,
    pub quadrature_half_width: Option<T>,
}

/// Normalised JSA with its prefactor and any non-fatal diagnostics.
#[derive(Debug, Clone)]
pub struct JsaGrid<T> {
    pub grid: Grid2D<Complex<T>, T>,
    /// Prefactor √N applied to reach unit L² norm.
    pub norm: T,
    pub warnings: Vec<String>,
    pub config: SourceConfig<T>,
}

impl<T: Real> JsaGrid<T> {
    /// Joint spectral intensity |F|².
    pub fn jsi(&self) -> Array2<T> {
        self.grid.values.map(|v| v.norm_sqr())
    }
}

impl<T: Real> SourceConfig<T> {
    /// Builds grids centred on the signal and idler resonances and checks
    /// energy matching.
    pub fn new(
        pump_res: SplitResonance<T>,
        signal_res: SplitResonance<T>,
        idler_res: SplitResonance<T>,
        pump: PumpSpec<T>,
        pm: Option<PhaseMatchSpec<T>>,
        opts: GridOptions<T>,
    ) -> Result<Self> {
        pump.validate()?;
        if let Some(p) = &pm {
            p.validate()?;
        }
        let signal_grid = make_grid(signal_res.omega0, opts.half_width_linewidths * signal_res.linewidth(), opts.count)?;
        let idler_grid = make_grid(idler_res.omega0, opts.half_width_linewidths * idler_res.linewidth(), opts.count)?;
        let cfg = Self {
            pump_res,
            signal_res,
            idler_res,
            pump,
            pm,
            signal_grid,
            idler_grid,
            pump_quadrature_points: opts.pump_quadrature_points,
            quadrature_half_width: opts.quadrature_half_width,
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// |2ω_p0 − ω_s0 − ω_i0| and the widest of the three linewidths.
    pub fn energy_mismatch(&self) -> (T, T) {
        let m = (T::lit(2.0) * self.pump_res.omega0.0 - self.signal_res.omega0.0 - self.idler_res.omega0.0).abs();
        let lw = self.pump_res.linewidth().max(self.signal_res.linewidth()).max(self.idler_res.linewidth());
        (m, lw)
    }

    /// Validates the configuration; returns non-fatal warnings.
    pub fn check(&self) -> Result<Vec<String>> {
        if self.pump_quadrature_points < 64 {
            return Err(Error::Argument(format!("pump_quadrature_points must be at least 64, got {}", self.pump_quadrature_points)));
        }
        let (m, lw) = self.energy_mismatch();
        let mut warnings = Vec::new();
        if m > T::lit(ENERGY_ERROR_LINEWIDTHS) * lw {
            return Err(Error::Consistency(format!(
                "resonances are not energy matched: |2ω_p − ω_s − ω_i| = {m} rad/ps exceeds {ENERGY_ERROR_LINEWIDTHS} linewidths ({lw} rad/ps)"
            )));
        }
        if m > T::lit(ENERGY_WARN_LINEWIDTHS) * lw {
            warnings.push(format!("energy mismatch {m} rad/ps exceeds {ENERGY_WARN_LINEWIDTHS} linewidths"));
        }
        if self.quadrature_window() < T::lit(MIN_WINDOW_LINEWIDTHS) * self.pump_res.linewidth() {
            warnings.push(format!(
                "pump quadrature half-width {} rad/ps is narrower than {MIN_WINDOW_LINEWIDTHS} pump linewidths",
                self.quadrature_window()
            ));
        }
        Ok(warnings)
    }

    /// Half-width of the ω_p quadrature window.
    pub fn quadrature_window(&self) -> T {
        self.quadrature_half_width.unwrap_or_else(|| {
            (T::lit(MIN_WINDOW_LINEWIDTHS) * self.pump_res.linewidth()).max(T::lit(3.0) * self.pump.fwhm_omega())
        })
    }

    /// ω_s0 + ω_i0 − 2ω_c: offset between `ν_s + ν_i` and `ν₊`.
    pub fn sum_offset(&self) -> T {
        self.signal_grid.center.0 + self.idler_grid.center.0 - T::lit(2.0) * self.pump.center.0
    }

    /// Pump field times forward and backward pump enhancement at ω.
    fn pump_fields(&self, omega: T) -> Result<(Complex<T>, Complex<T>)> {
        let a = pump_envelope(&self.pump, AngularFrequency(omega));
        let (f, b) = self.pump_res.enhancements_at(omega - self.pump_res.omega0.0)?;
        Ok((a * f, a * b))
    }

    fn phase_matching(&self, omega_s: T, omega_i: T) -> Complex<T> {
        match &self.pm {
            Some(p) => phi_pm_at(p, AngularFrequency(omega_s), AngularFrequency(omega_i)),
            None => Complex::new(T::one(), T::zero()),
        }
    }

    /// Pump integral at total frequency Σ = ω_s + ω_i by trapezoid quadrature
    /// over ω_p = Σ/2 + u, |u| ≤ window.
    fn pump_integral(&self, sigma: T) -> Result<Complex<T>> {
        let n = self.pump_quadrature_points;
        let w = self.quadrature_window();
        let h = T::lit(2.0) * w / T::usize(n - 1);
        let g2 = self.pump_res.gamma * self.pump_res.gamma;
        let half = sigma / T::lit(2.0);
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            let u = -w + h * T::usize(k);
            let (f1, b1) = self.pump_fields(half + u)?;
            let (f2, b2) = self.pump_fields(half - u)?;
            let term = f1 * f2 + b1 * b2 * g2;
            let wt = if k == 0 || k + 1 == n { h / T::lit(2.0) } else { h };
            acc = acc + term * wt;
        }
        Ok(acc)
    }
}

fn resonance_fields<T: Real>(res: &SplitResonance<T>, grid: &DetuningGrid<T>) -> Result<Vec<(Complex<T>, Complex<T>)>> {
    (0..grid.len()).map(|k| res.enhancements_at(grid.absolute(k).0 - res.omega0.0)).collect()
}

/// TDSI(ν_s, ν_i) = l_sf·l_if + γ_sγ_i·l_sb·l_ib.
pub fn compute_tdsi<T: Real>(cfg: &SourceConfig<T>) -> Result<Grid2D<Complex<T>, T>> {
    let ls = resonance_fields(&cfg.signal_res, &cfg.signal_grid)?;
    let li = resonance_fields(&cfg.idler_res, &cfg.idler_grid)?;
    let gg = cfg.signal_res.gamma * cfg.idler_res.gamma;
    let values = Array2::from_shape_fn((ls.len(), li.len()), |(a, b)| ls[a].0 * li[b].0 + ls[a].1 * li[b].1 * gg);
    Grid2D::new(cfg.signal_grid.clone(), cfg.idler_grid.clone(), values)
}

/// ADP(ν₊) by discrete auto-convolution of the pump fields.
///
/// The pump is sampled on a lattice of step `h₊/2` aligned so that pairs of
/// lattice points sum exactly onto the `ν₊` grid; `nu_sum_grid` must be
/// centred on twice the pump carrier.
pub fn compute_adp<T: Real>(cfg: &SourceConfig<T>, nu_sum_grid: &DetuningGrid<T>) -> Result<Vec<Complex<T>>> {
    let expect = T::lit(2.0) * cfg.pump.center.0;
    if (nu_sum_grid.center.0 - expect).abs() > T::lit(1e-9) * expect.abs() {
        return Err(Error::Argument(format!(
            "sum-frequency grid centred at {} rad/ps, expected twice the pump carrier ({expect})",
            nu_sum_grid.center.0
        )));
    }
    let h = nu_sum_grid.spacing() / T::lit(2.0);
    let w = cfg.quadrature_window();
    let pad = (w / h).ceil().to_usize().ok_or_else(|| Error::Argument("quadrature window too large for ADP lattice".into()))?;
    let n_out = nu_sum_grid.len();
    // x_a = ν₊₀/2 − pad·h + a·h, so x_a + x_b = ν₊_j when a + b = 2(pad + j)
    let n_lat = 2 * pad + 2 * (n_out - 1) + 1;
    let x0 = nu_sum_grid.first() / T::lit(2.0) - T::usize(pad) * h;
    let c = cfg.pump.center.0;
    let fields: Vec<(Complex<T>, Complex<T>)> =
        (0..n_lat).map(|a| cfg.pump_fields(c + x0 + T::usize(a) * h)).collect::<Result<_>>()?;
    let g2 = cfg.pump_res.gamma * cfg.pump_res.gamma;
    let out = (0..n_out)
        .into_par_iter()
        .map(|j| {
            let m = 2 * (pad + j);
            // pairs (a, m − a) with |u| = |a − pad − j|·h ≤ pad·h
            let mut acc = Complex::new(T::zero(), T::zero());
            for a in j..=2 * pad + j {
                let (fa, ba) = fields[a];
                let (fb, bb) = fields[m - a];
                acc = acc + fa * fb + ba * bb * g2;
            }
            acc * h
        })
        .collect();
    Ok(out)
}

/// Sum-frequency grid covering every `ν_s + ν_i` of the configuration at a
/// quarter of the finer JSA spacing.
pub fn adp_sum_grid<T: Real>(cfg: &SourceConfig<T>) -> Result<DetuningGrid<T>> {
    let step = cfg.signal_grid.spacing().min(cfg.idler_grid.spacing()) / T::lit(4.0);
    let off = cfg.sum_offset();
    let lo = cfg.signal_grid.first() + cfg.idler_grid.first() + off - step;
    let hi = cfg.signal_grid.last() + cfg.idler_grid.last() + off + step;
    let n = ((hi - lo) / step).ceil().to_usize().unwrap_or(0) + 1;
    let points = (0..n).map(|k| lo + step * T::usize(k)).collect();
    DetuningGrid::from_points(AngularFrequency(T::lit(2.0) * cfg.pump.center.0), points)
}

fn interpolate<T: Real>(grid: &DetuningGrid<T>, values: &[Complex<T>], x: T) -> Complex<T> {
    let t = (x - grid.first()) / grid.spacing();
    let n = values.len();
    if !(t >= T::zero()) || t > T::usize(n - 1) {
        return Complex::new(T::zero(), T::zero());
    }
    let k = t.floor().to_usize().unwrap_or(0).min(n - 2);
    let f = t - T::usize(k);
    values[k] * (T::one() - f) + values[k + 1] * f
}

/// Scales `values` to unit trapezoid L² norm; returns the scale factor.
pub fn normalize<T: Real>(signal: &DetuningGrid<T>, idler: &DetuningGrid<T>, values: &mut Array2<Complex<T>>) -> Result<T> {
    let total = l2_norm_sq(signal, idler, values);
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::Consistency("JSA vanishes on the grid; cannot normalise".into()));
    }
    let scale = T::one() / total.sqrt();
    values.mapv_inplace(|v| v * scale);
    Ok(scale)
}

/// Trapezoid ∫∫|F|² dν_s dν_i.
pub fn l2_norm_sq<T: Real>(signal: &DetuningGrid<T>, idler: &DetuningGrid<T>, values: &Array2<Complex<T>>) -> T {
    let ws = signal.trapezoid_weights();
    let wi = idler.trapezoid_weights();
    let mut total = T::zero();
    for ((a, b), v) in values.indexed_iter() {
        total = total + v.norm_sqr() * ws[a] * wi[b];
    }
    total
}

/// Trapezoid L² distance between two JSAs on the same grid.
pub fn l2_distance<T: Real>(a: &JsaGrid<T>, b: &JsaGrid<T>) -> T {
    let diff = &a.grid.values - &b.grid.values;
    l2_norm_sq(&a.grid.signal_axis, &a.grid.idler_axis, &diff).sqrt()
}

fn finish<T: Real>(cfg: &SourceConfig<T>, mut values: Array2<Complex<T>>) -> Result<JsaGrid<T>> {
    let warnings = cfg.check()?;
    let norm = normalize(&cfg.signal_grid, &cfg.idler_grid, &mut values)?;
    Ok(JsaGrid { grid: Grid2D::new(cfg.signal_grid.clone(), cfg.idler_grid.clone(), values)?, norm, warnings, config: cfg.clone() })
}

/// F(ν_s, ν_i) with the ω_p integral evaluated per pixel by trapezoid
/// quadrature. Rows run in parallel; each pixel is summed serially, so the
/// result does not depend on the thread count.
pub fn compute_jsa_quadrature<T: Real>(cfg: &SourceConfig<T>) -> Result<JsaGrid<T>> {
    cfg.check()?;
    let tdsi = compute_tdsi(cfg)?;
    let ns = cfg.signal_grid.len();
    let ni = cfg.idler_grid.len();
    let rows: Vec<Vec<Complex<T>>> = (0..ns)
        .into_par_iter()
        .map(|a| {
            let ws = cfg.signal_grid.absolute(a).0;
            (0..ni)
                .map(|b| {
                    let wi = cfg.idler_grid.absolute(b).0;
                    let p = cfg.pump_integral(ws + wi)?;
                    Ok(p * tdsi.values[(a, b)] * cfg.phase_matching(ws, wi))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let values = Array2::from_shape_fn((ns, ni), |(a, b)| rows[a][b]);
    finish(cfg, values)
}

/// F = φ_PM · TDSI · ADP(ν_s + ν_i), the ADP linearly interpolated from a
/// 4×-oversampled sum-frequency grid.
pub fn compute_jsa_factorized<T: Real>(cfg: &SourceConfig<T>) -> Result<JsaGrid<T>> {
    cfg.check()?;
    let tdsi = compute_tdsi(cfg)?;
    let sum_grid = adp_sum_grid(cfg)?;
    let adp = compute_adp(cfg, &sum_grid)?;
    let off = cfg.sum_offset();
    let values = Array2::from_shape_fn(tdsi.values.dim(), |(a, b)| {
        let ns = cfg.signal_grid.points()[a];
        let ni = cfg.idler_grid.points()[b];
        let ws = cfg.signal_grid.center.0 + ns;
        let wi = cfg.idler_grid.center.0 + ni;
        interpolate(&sum_grid, &adp, ns + ni + off) * tdsi.values[(a, b)] * cfg.phase_matching(ws, wi)
    });
    finish(cfg, values)
}
