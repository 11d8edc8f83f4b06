//! Unit conversions and uniform detuning grids.
//!
//! Frequencies are angular and expressed in rad/ps throughout; numerically
//! this is the "THz" unit used for fitted resonance centres (1546.70 nm is
//! 1217.85 rad/ps). Wavelengths only appear at file boundaries.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Speed of light in nm/ps.
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;

/// Angular frequency in rad/ps.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularFrequency<T>(pub T);

impl<T: Real> AngularFrequency<T> {
    pub fn new(value: T) -> Self {
        Self(value)
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Vacuum wavelength in nm. Only meaningful for positive carriers.
    pub fn wavelength_nm(self) -> Result<T> {
        omega_to_wavelength(self)
    }

    #[inline]
    pub fn offset(self, detuning: T) -> Self {
        Self(self.0 + detuning)
    }
}

#[inline]
fn two_pi_c<T: Real>() -> T {
    T::TAU() * T::lit(SPEED_OF_LIGHT_NM_PER_PS)
}

/// ω = 2πc/λ with λ in nm.
pub fn wavelength_to_omega<T: Real>(lambda_nm: T) -> Result<AngularFrequency<T>> {
    if !(lambda_nm > T::zero()) || !lambda_nm.is_finite() {
        return Err(Error::Domain(format!("wavelength must be positive, got {lambda_nm} nm")));
    }
    Ok(AngularFrequency(two_pi_c::<T>() / lambda_nm))
}

/// λ = 2πc/ω in nm.
pub fn omega_to_wavelength<T: Real>(omega: AngularFrequency<T>) -> Result<T> {
    if !(omega.0 > T::zero()) || !omega.0.is_finite() {
        return Err(Error::Domain(format!("angular frequency must be positive, got {} rad/ps", omega.0)));
    }
    Ok(two_pi_c::<T>() / omega.0)
}

/// Converts a wavelength bandwidth in pm at `center_nm` to an angular bandwidth
/// in rad/ps, first order in Δλ/λ.
pub fn bandwidth_pm_to_omega<T: Real>(bandwidth_pm: T, center_nm: T) -> T {
    two_pi_c::<T>() * (bandwidth_pm * T::lit(1e-3)) / (center_nm * center_nm)
}

/// Inverse of [`bandwidth_pm_to_omega`].
pub fn bandwidth_omega_to_pm<T: Real>(bandwidth: T, center_nm: T) -> T {
    bandwidth * center_nm * center_nm / two_pi_c::<T>() * T::lit(1e3)
}

/// Exact wavelength detuning (nm) of `center + detuning` relative to `center`.
pub fn detuning_to_wavelength_nm<T: Real>(center: AngularFrequency<T>, detuning: T) -> T {
    let c = two_pi_c::<T>();
    c / (center.0 + detuning) - c / center.0
}

/// Inverse of [`detuning_to_wavelength_nm`].
pub fn wavelength_detuning_to_omega<T: Real>(center: AngularFrequency<T>, d_lambda_nm: T) -> T {
    let c = two_pi_c::<T>();
    let lambda0 = c / center.0;
    c / (lambda0 + d_lambda_nm) - center.0
}

/// Uniform, strictly increasing grid of detunings about a carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid<T> {
    pub center: AngularFrequency<T>,
    points: Vec<T>,
}

/// Builds `count` points spanning `[-half_width, +half_width]`.
///
/// Points are generated as `hw·(2k − (n−1))/(n−1)` so that
/// `points[k] == -points[n-1-k]` holds exactly.
pub fn make_grid<T: Real>(center: AngularFrequency<T>, half_width: T, count: usize) -> Result<DetuningGrid<T>> {
    if count < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 points, got {count}")));
    }
    if !(half_width > T::zero()) || !half_width.is_finite() {
        return Err(Error::Argument(format!("grid half-width must be positive, got {half_width}")));
    }
    let denom = T::usize(count - 1);
    let points = (0..count)
        .map(|k| {
            let num = T::usize(2 * k) - denom;
            half_width * num / denom
        })
        .collect();
    Ok(DetuningGrid { center, points })
}

impl<T: Real> DetuningGrid<T> {
    /// Wraps explicit detunings; they must be strictly increasing and uniform.
    pub fn from_points(center: AngularFrequency<T>, points: Vec<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Argument("grid needs at least 2 points".into()));
        }
        let step = points[1] - points[0];
        if !(step > T::zero()) {
            return Err(Error::Argument("grid must be strictly increasing".into()));
        }
        let span = (points[points.len() - 1] - points[0]).abs().max(step);
        let tol = T::lit(1e-9) * span;
        for (k, w) in points.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > tol {
                return Err(Error::Argument(format!("grid spacing is not uniform at index {}", k + 1)));
            }
        }
        Ok(Self { center, points })
    }

    #[inline]
    pub fn points(&self) -> &[T] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn spacing(&self) -> T {
        let n = self.points.len();
        (self.points[n - 1] - self.points[0]) / T::usize(n - 1)
    }

    pub fn first(&self) -> T {
        self.points[0]
    }

    pub fn last(&self) -> T {
        self.points[self.points.len() - 1]
    }

    /// Absolute angular frequency of sample `k`.
    #[inline]
    pub fn absolute(&self, k: usize) -> AngularFrequency<T> {
        self.center.offset(self.points[k])
    }

    /// Trapezoid quadrature weights (end points halved).
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let h = self.spacing();
        let n = self.points.len();
        let half = h / T::lit(2.0);
        (0..n).map(|k| if k == 0 || k + 1 == n { half } else { h }).collect()
    }

    /// Detunings converted to wavelength offsets (nm) about the grid centre.
    pub fn wavelength_offsets_nm(&self) -> Vec<T> {
        self.points.iter().map(|&d| detuning_to_wavelength_nm(self.center, d)).collect()
    }

    /// Same grid with every count doubled (used for refinement checks).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let hw = (self.last() - self.first()) / T::lit(2.0);
        make_grid(self.center, hw, self.len() * factor)
    }
}

/// Values sampled on a signal × idler grid, row index = signal.
#[derive(Debug, Clone)]
pub struct Grid2D<V, T> {
    pub signal_axis: DetuningGrid<T>,
    pub idler_axis: DetuningGrid<T>,
    pub values: Array2<V>,
}

impl<V: Clone, T: Real> Grid2D<V, T> {
    pub fn new(signal_axis: DetuningGrid<T>, idler_axis: DetuningGrid<T>, values: Array2<V>) -> Result<Self> {
        if values.dim() != (signal_axis.len(), idler_axis.len()) {
            return Err(Error::Argument(format!(
                "grid values {:?} do not match axes ({}, {})",
                values.dim(),
                signal_axis.len(),
                idler_axis.len()
            )));
        }
        Ok(Self { signal_axis, idler_axis, values })
    }

    pub fn map<W, F: FnMut(&V) -> W>(&self, f: F) -> Grid2D<W, T> {
        Grid2D {
            signal_axis: self.signal_axis.clone(),
            idler_axis: self.idler_axis.clone(),
            values: self.values.map(f),
        }
    }

    /// Area element dν_s·dν_i.
    pub fn cell_area(&self) -> T {
        self.signal_axis.spacing() * self.idler_axis.spacing()
    }
}
