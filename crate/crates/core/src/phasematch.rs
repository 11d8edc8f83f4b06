//! Linearised phase matching and the signal–idler orientation angle.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cis, Real};
use crate::units::AngularFrequency;

/// Ring circumference 2π·15 µm, the default interaction length.
pub fn default_length_um<T: Real>() -> T {
    T::TAU() * T::lit(15.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchSpec<T> {
    /// Interaction length L in µm.
    pub length_um: T,
    /// τ_s = k⁽¹⁾_p − k⁽¹⁾_s in ps/µm.
    pub tau_s: T,
    /// τ_i = k⁽¹⁾_p − k⁽¹⁾_i in ps/µm.
    pub tau_i: T,
    /// Nonlinear parameter γ in 1/(W·µm).
    #[serde(default)]
    pub gamma_nl: T,
    /// Peak pump power P in W.
    #[serde(default)]
    pub peak_power: T,
    /// Power P₀ at which the anchors are perfectly phase matched.
    #[serde(default)]
    pub anchor_power: T,
    #[serde(rename = "omega_s0_THz")]
    pub omega_s0: AngularFrequency<T>,
    #[serde(rename = "omega_i0_THz")]
    pub omega_i0: AngularFrequency<T>,
}

impl<T: Real> PhaseMatchSpec<T> {
    pub fn new(length_um: T, tau_s: T, tau_i: T, omega_s0: AngularFrequency<T>, omega_i0: AngularFrequency<T>) -> Result<Self> {
        let s = Self {
            length_um,
            tau_s,
            tau_i,
            gamma_nl: T::zero(),
            peak_power: T::zero(),
            anchor_power: T::zero(),
            omega_s0,
            omega_i0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_um > T::zero()) || !self.length_um.is_finite() {
            return Err(Error::Domain(format!("phase-matching length must be positive, got {} µm", self.length_um)));
        }
        if !self.tau_s.is_finite() || !self.tau_i.is_finite() {
            return Err(Error::Domain("tau_s and tau_i must be finite".into()));
        }
        Ok(())
    }

    /// Constant mismatch −γ(P − P₀) from operating away from the anchor power.
    pub fn power_shift(&self) -> T {
        -self.gamma_nl * (self.peak_power - self.anchor_power)
    }
}

/// Δk_lin = τ_s·ν_s + τ_i·ν_i (1/µm), detunings relative to the anchors.
pub fn delta_k_linear<T: Real>(spec: &PhaseMatchSpec<T>, nu_s: T, nu_i: T) -> T {
    spec.tau_s * nu_s + spec.tau_i * nu_i
}

/// Total mismatch including the power shift.
pub fn delta_k<T: Real>(spec: &PhaseMatchSpec<T>, nu_s: T, nu_i: T) -> T {
    delta_k_linear(spec, nu_s, nu_i) + spec.power_shift()
}

pub fn sinc<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::one()
    } else {
        x.sin() / x
    }
}

/// φ_PM = sinc(LΔk/2)·e^{iLΔk/2}.
pub fn phi_pm<T: Real>(spec: &PhaseMatchSpec<T>, nu_s: T, nu_i: T) -> Complex<T> {
    let x = spec.length_um * delta_k(spec, nu_s, nu_i) / T::lit(2.0);
    cis(x) * sinc(x)
}

/// φ_PM at absolute signal and idler frequencies.
pub fn phi_pm_at<T: Real>(spec: &PhaseMatchSpec<T>, omega_s: AngularFrequency<T>, omega_i: AngularFrequency<T>) -> Complex<T> {
    phi_pm(spec, omega_s.0 - spec.omega_s0.0, omega_i.0 - spec.omega_i0.0)
}

/// θ_si = −atan(τ_s/τ_i) in degrees; ±90° (sign of −τ_s) when τ_i = 0.
pub fn orientation_angle<T: Real>(spec: &PhaseMatchSpec<T>) -> T {
    orientation_from_taus(spec.tau_s, spec.tau_i)
}

pub fn orientation_from_taus<T: Real>(tau_s: T, tau_i: T) -> T {
    let ninety = T::lit(90.0);
    if tau_i == T::zero() {
        return if tau_s > T::zero() {
            -ninety
        } else if tau_s < T::zero() {
            ninety
        } else {
            T::zero()
        };
    }
    -(tau_s / tau_i).atan().to_degrees()
}

/// Tabulated first-order dispersion k⁽¹⁾(λ) in ps/µm.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTable<T> {
    lambda_nm: Vec<T>,
    k1: Vec<T>,
}

impl<T: Real> DispersionTable<T> {
    pub fn new(lambda_nm: Vec<T>, k1: Vec<T>) -> Result<Self> {
        if lambda_nm.len() != k1.len() || lambda_nm.len() < 2 {
            return Err(Error::Argument("dispersion table needs at least 2 (lambda, k1) pairs".into()));
        }
        if lambda_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("dispersion wavelengths must be strictly increasing".into()));
        }
        Ok(Self { lambda_nm, k1 })
    }

    pub fn lambda_nm(&self) -> &[T] {
        &self.lambda_nm
    }

    pub fn k1_values(&self) -> &[T] {
        &self.k1
    }

    /// Linear interpolation; exact at tabulated wavelengths.
    pub fn k1_at(&self, lambda_nm: T) -> Result<T> {
        let xs = &self.lambda_nm;
        if lambda_nm < xs[0] || lambda_nm > xs[xs.len() - 1] {
            return Err(Error::Domain(format!(
                "wavelength {lambda_nm} nm outside dispersion table [{}, {}]",
                xs[0],
                xs[xs.len() - 1]
            )));
        }
        let k = xs.partition_point(|&x| x < lambda_nm);
        if xs[k] == lambda_nm {
            return Ok(self.k1[k]);
        }
        let t = (lambda_nm - xs[k - 1]) / (xs[k] - xs[k - 1]);
        Ok(self.k1[k - 1] + t * (self.k1[k] - self.k1[k - 1]))
    }

    /// (τ_s, τ_i) for a pump/signal/idler wavelength triple.
    pub fn taus(&self, pump_nm: T, signal_nm: T, idler_nm: T) -> Result<(T, T)> {
        let kp = self.k1_at(pump_nm)?;
        Ok((kp - self.k1_at(signal_nm)?, kp - self.k1_at(idler_nm)?))
    }
}

/// One point of an orientation map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientationPoint<T> {
    pub pump_nm: T,
    pub idler_offset_nm: T,
    pub signal_nm: T,
    pub theta_deg: T,
}

/// θ_si over pump wavelengths × idler–pump offsets, the signal fixed by
/// energy conservation (2/λ_p = 1/λ_s + 1/λ_i). Points whose wavelengths
/// fall outside the table are skipped.
pub fn orientation_map<T: Real>(table: &DispersionTable<T>, pumps_nm: &[T], idler_offsets_nm: &[T]) -> Vec<OrientationPoint<T>> {
    let mut out = Vec::new();
    for &lp in pumps_nm {
        for &off in idler_offsets_nm {
            let li = lp + off;
            let inv_s = T::lit(2.0) / lp - T::one() / li;
            if !(inv_s > T::zero()) {
                continue;
            }
            let ls = T::one() / inv_s;
            if let Ok((ts, ti)) = table.taus(lp, ls, li) {
                out.push(OrientationPoint { pump_nm: lp, idler_offset_nm: off, signal_nm: ls, theta_deg: orientation_from_taus(ts, ti) });
            }
        }
    }
    out
}
