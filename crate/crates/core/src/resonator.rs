//! Steady-state coupled-mode model of a backscattering-split resonance.
//!
//! A resonance carries a forward and a backward intra-cavity mode coupled
//! through `μ₁₂ = μ₀·e^{iφ₁}` and `μ₂₁ = μ₀·e^{iφ₂}`. The bus couples into the
//! forward mode with `κ` and into the backward mode with `κ' = γκ`. Solving the
//! mode equations at a single frequency gives the forward and backward field
//! enhancements and the through-port response.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{cis, i, Real};
use crate::units::AngularFrequency;

/// |D| below this is reported as a singular parameter set.
pub const SINGULARITY_THRESHOLD: f64 = 1e-30;

/// Upper bound accepted for the normalisation factor `C`.
pub const C_NORM_MAX: f64 = 1.05;

/// Fitted parameters of one split resonance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResonance<T>", into = "RawResonance<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SplitResonance<T> {
    pub label: String,
    pub c_norm: T,
    /// Amplitude decay rate 1/τ (rad/ps).
    pub decay: T,
    /// Backward/forward bus coupling ratio κ'/κ.
    pub gamma: T,
    /// Mutual coupling magnitude μ₀ (rad/ps).
    pub mu0: T,
    /// Forward bus coupling κ (sqrt(rad/ps)).
    pub kappa: T,
    pub phi1: T,
    pub phi2: T,
    pub omega0: AngularFrequency<T>,
}

#[derive(Serialize, Deserialize)]
struct RawResonance<T> {
    label: String,
    #[serde(rename = "C")]
    c_norm: T,
    #[serde(rename = "inv_tau_THz")]
    decay: T,
    gamma: T,
    #[serde(rename = "mu0_THz")]
    mu0: T,
    #[serde(rename = "kappa_sqrtTHz")]
    kappa: T,
    #[serde(rename = "phi1_rad")]
    phi1: T,
    #[serde(rename = "phi2_rad")]
    phi2: T,
    #[serde(rename = "omega0_THz")]
    omega0: T,
}

impl<T: Real> TryFrom<RawResonance<T>> for SplitResonance<T> {
    type Error = Error;

    fn try_from(r: RawResonance<T>) -> Result<Self> {
        SplitResonance::new(r.label, r.c_norm, r.decay, r.gamma, r.mu0, r.kappa, r.phi1, r.phi2, AngularFrequency(r.omega0))
    }
}

impl<T: Real> From<SplitResonance<T>> for RawResonance<T> {
    fn from(r: SplitResonance<T>) -> Self {
        RawResonance {
            label: r.label,
            c_norm: r.c_norm,
            decay: r.decay,
            gamma: r.gamma,
            mu0: r.mu0,
            kappa: r.kappa,
            phi1: r.phi1,
            phi2: r.phi2,
            omega0: r.omega0.0,
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let mut w = phi % tau;
    if w < T::zero() {
        w = w + tau;
    }
    if w >= tau {
        w = w - tau;
    }
    w
}

/// Intra-cavity amplitudes and through-port output for a given bus input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcmtState<T> {
    pub a_forward: Complex<T>,
    pub a_backward: Complex<T>,
    pub s_out: Complex<T>,
}

impl<T: Real> SplitResonance<T> {
    /// Validating constructor; phases are wrapped into `[0, 2π)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        c_norm: T,
        decay: T,
        gamma: T,
        mu0: T,
        kappa: T,
        phi1: T,
        phi2: T,
        omega0: AngularFrequency<T>,
    ) -> Result<Self> {
        let label = label.into();
        let finite = [c_norm, decay, gamma, mu0, kappa, phi1, phi2, omega0.0].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain(format!("resonance {label}: non-finite parameter")));
        }
        if !(decay > T::zero()) {
            return Err(Error::Domain(format!("resonance {label}: decay must be positive, got {decay}")));
        }
        if kappa < T::zero() || mu0 < T::zero() || gamma < T::zero() {
            return Err(Error::Domain(format!("resonance {label}: kappa, mu0 and gamma must be non-negative")));
        }
        if !(c_norm > T::zero()) || c_norm > T::lit(C_NORM_MAX) {
            return Err(Error::Domain(format!("resonance {label}: C must lie in (0, {C_NORM_MAX}], got {c_norm}")));
        }
        Ok(Self {
            label,
            c_norm,
            decay,
            gamma,
            mu0,
            kappa,
            phi1: wrap_phase(phi1),
            phi2: wrap_phase(phi2),
            omega0,
        })
    }

    /// Power FWHM of the unsplit line, 2/τ.
    #[inline]
    pub fn linewidth(&self) -> T {
        T::lit(2.0) * self.decay
    }

    #[inline]
    pub fn mu12(&self) -> Complex<T> {
        cis(self.phi1) * self.mu0
    }

    #[inline]
    pub fn mu21(&self) -> Complex<T> {
        cis(self.phi2) * self.mu0
    }

    /// κ' = γκ.
    #[inline]
    pub fn kappa_backward(&self) -> T {
        self.gamma * self.kappa
    }

    /// Same resonance with backscattering and backward coupling removed.
    pub fn unsplit(&self) -> Self {
        Self { mu0: T::zero(), gamma: T::zero(), ..self.clone() }
    }

    /// `i(ω−ω₀) + 1/τ`.
    #[inline]
    fn pole_term(&self, detuning: T) -> Complex<T> {
        Complex::new(self.decay, detuning)
    }

    fn denominator(&self, detuning: T) -> Result<Complex<T>> {
        let p = self.pole_term(detuning);
        let d = p * p + self.mu12() * self.mu21();
        let mag = d.norm();
        if !(mag >= T::lit(SINGULARITY_THRESHOLD)) {
            return Err(Error::Singular { magnitude: mag.to_f64_lossy(), detuning: detuning.to_f64_lossy() });
        }
        Ok(d)
    }

    /// Forward field enhancement `l_f(ω)`.
    pub fn enhancement_forward(&self, omega: AngularFrequency<T>) -> Result<Complex<T>> {
        self.forward_at(omega.0 - self.omega0.0)
    }

    /// Backward field enhancement `l_b(ω)`.
    pub fn enhancement_backward(&self, omega: AngularFrequency<T>) -> Result<Complex<T>> {
        self.backward_at(omega.0 - self.omega0.0)
    }

    /// `l_f` as a function of detuning from ω₀.
    pub fn forward_at(&self, detuning: T) -> Result<Complex<T>> {
        let d = self.denominator(detuning)?;
        let num = Complex::new(detuning, -self.decay) - self.mu12() * self.gamma;
        Ok(num * self.kappa / d)
    }

    /// `l_b` as a function of detuning from ω₀.
    pub fn backward_at(&self, detuning: T) -> Result<Complex<T>> {
        let d = self.denominator(detuning)?;
        let num = Complex::new(self.gamma * detuning, -self.gamma * self.decay) - self.mu21();
        Ok(num * self.kappa / d)
    }

    /// Both enhancements sharing one denominator evaluation.
    pub fn enhancements_at(&self, detuning: T) -> Result<(Complex<T>, Complex<T>)> {
        let d = self.denominator(detuning)?;
        let scale = Complex::new(self.kappa, T::zero()) / d;
        let f = (Complex::new(detuning, -self.decay) - self.mu12() * self.gamma) * scale;
        let b = (Complex::new(self.gamma * detuning, -self.gamma * self.decay) - self.mu21()) * scale;
        Ok((f, b))
    }

    /// Through-port field ratio `S_o/S_i` with the normalisation `C` in place
    /// of the unit direct-transmission term.
    pub fn through_transmission(&self, omega: AngularFrequency<T>) -> Result<Complex<T>> {
        self.transmission_at(omega.0 - self.omega0.0)
    }

    pub fn transmission_at(&self, detuning: T) -> Result<Complex<T>> {
        let p = self.pole_term(detuning);
        let d = self.denominator(detuning)?;
        let phase_sum = cis(self.phi1) + cis(self.phi2);
        let g = self.gamma;
        let num = i::<T>() * phase_sum * (g * self.mu0) - p * (T::one() + g * g);
        Ok(Complex::new(self.c_norm, T::zero()) + num * (self.kappa * self.kappa) / d)
    }

    /// [`Self::transmission_at`] over many detunings, sharing the
    /// frequency-independent terms.
    pub fn transmission_many(&self, detunings: &[T]) -> Result<Vec<Complex<T>>> {
        let g = self.gamma;
        let mu_prod = self.mu12() * self.mu21();
        let coupled = i::<T>() * (cis(self.phi1) + cis(self.phi2)) * (g * self.mu0);
        let k2 = self.kappa * self.kappa;
        let g1 = T::one() + g * g;
        let c = Complex::new(self.c_norm, T::zero());
        detunings
            .iter()
            .map(|&det| {
                let p = self.pole_term(det);
                let d = p * p + mu_prod;
                let mag = d.norm();
                if !(mag >= T::lit(SINGULARITY_THRESHOLD)) {
                    return Err(Error::Singular { magnitude: mag.to_f64_lossy(), detuning: det.to_f64_lossy() });
                }
                Ok(c + (coupled - p * g1) * k2 / d)
            })
            .collect()
    }

    /// Solves the steady-state mode equations for bus input `s_in`.
    ///
    /// `s_out = s_in − iκ·a_f − iκ'·a_b` uses a unit direct path, so it equals
    /// [`Self::through_transmission`] times `s_in` only when `C = 1`.
    pub fn solve_tcmt_steady(&self, omega: AngularFrequency<T>, s_in: Complex<T>) -> Result<TcmtState<T>> {
        let (lf, lb) = self.enhancements_at(omega.0 - self.omega0.0)?;
        let a_forward = lf * s_in;
        let a_backward = lb * s_in;
        let s_out = s_in - i::<T>() * (a_forward * self.kappa + a_backward * self.kappa_backward());
        Ok(TcmtState { a_forward, a_backward, s_out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{table1, ResonanceId};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn simple(c: f64, decay: f64, gamma: f64, mu0: f64, kappa: f64) -> SplitResonance<f64> {
        SplitResonance::new("t", c, decay, gamma, mu0, kappa, 0.3, 2.1, AngularFrequency(1200.0)).unwrap()
    }

    fn c_close(a: Complex<f64>, b: Complex<f64>, tol: f64) {
        assert!((a - b).norm() <= tol * b.norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn unsplit_forward_on_resonance() {
        let r = simple(1.0, 0.02, 0.0, 0.0, 0.15);
        let lf = r.enhancement_forward(r.omega0).unwrap();
        c_close(lf, Complex::new(0.0, -0.15 / 0.02), 1e-14);
    }

    #[test]
    fn unsplit_forward_magnitude_matches_lorentzian() {
        let r = simple(1.0, 0.018, 0.0, 0.0, 0.16);
        for d in [-0.2, -0.03, -0.001, 0.0, 0.004, 0.05, 0.3] {
            let lf = r.forward_at(d).unwrap();
            let expect = 0.16 / (d * d + 0.018 * 0.018).sqrt();
            assert_relative_eq!(lf.norm(), expect, max_relative = 1e-13);
            // phase differs from κ/[i(ω−ω₀)+1/τ] by −i
            let reduced = -i::<f64>() * 0.16 / Complex::new(0.018, d);
            c_close(lf, reduced, 1e-12);
        }
    }

    #[test]
    fn r3_enhancements_match_direct_formula_oracle() {
        // 30-digit evaluation of the closed forms at ω = ω₀ for preset R3
        let r = table1(ResonanceId::R3);
        let lf = r.forward_at(0.0).unwrap();
        let lb = r.backward_at(0.0).unwrap();
        c_close(lf, Complex::new(-0.337_562_516_810_131_94, -5.717_455_995_687_173), 1e-12);
        c_close(lb, Complex::new(-0.521_258_277_486_260_3, 2.339_350_289_367_59), 1e-12);
        let t = r.transmission_at(0.0).unwrap();
        c_close(t, Complex::new(0.244_648_945_761_791_74, 0.106_165_616_005_889_56), 1e-12);
    }

    #[test]
    fn backward_vanishes_without_splitting() {
        let r = simple(1.0, 0.02, 0.0, 0.0, 0.15);
        for d in [-0.1, 0.0, 0.07] {
            assert_eq!(r.backward_at(d).unwrap(), Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn backward_equals_forward_magnitude_for_unit_gamma() {
        let r = simple(1.0, 0.02, 1.0, 0.0, 0.15);
        for d in [-0.1, -0.01, 0.0, 0.03, 0.2] {
            assert_relative_eq!(r.backward_at(d).unwrap().norm(), r.forward_at(d).unwrap().norm(), max_relative = 1e-13);
        }
    }

    #[test]
    fn no_coupling_gives_constant_c() {
        let r = simple(0.93, 0.02, 0.4, 0.01, 0.0);
        for d in [-0.5, 0.0, 0.11] {
            c_close(r.transmission_at(d).unwrap(), Complex::new(0.93, 0.0), 1e-15);
        }
    }

    #[test]
    fn critical_all_pass_is_unitary() {
        let decay = 0.019;
        let r = simple(1.0, decay, 0.0, 0.0, (2.0 * decay).sqrt());
        for k in 0..100 {
            let d = -0.4 + 0.8 * k as f64 / 99.0;
            let t = r.transmission_at(d).unwrap();
            assert!((t.norm() - 1.0).abs() < 1e-12);
            let allpass = Complex::new(-decay, d) / Complex::new(decay, d);
            c_close(t, allpass, 1e-12);
        }
    }

    #[test]
    fn tcmt_examples() {
        let r = simple(1.0, 0.02, 0.0, 0.0, 0.15);
        let zero = r.solve_tcmt_steady(r.omega0, Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(zero.s_out, Complex::new(0.0, 0.0));
        assert_eq!(zero.a_forward, Complex::new(0.0, 0.0));
        let one = r.solve_tcmt_steady(r.omega0, Complex::new(1.0, 0.0)).unwrap();
        c_close(one.a_forward, Complex::new(0.0, -0.15 / 0.02), 1e-14);
        c_close(one.s_out, Complex::new(1.0 - 0.15 * 0.15 / 0.02, 0.0), 1e-14);

        let r2 = table1(ResonanceId::R2);
        let w = r2.omega0.offset(0.01);
        let s1 = r2.solve_tcmt_steady(w, Complex::new(1.0, 0.0)).unwrap();
        let s2 = r2.solve_tcmt_steady(w, Complex::new(2.0, 0.0)).unwrap();
        c_close(s2.a_forward, s1.a_forward * 2.0, 1e-14);
        c_close(s2.a_backward, s1.a_backward * 2.0, 1e-14);
        c_close(s2.s_out, s1.s_out * 2.0, 1e-14);
    }

    #[test]
    fn r1_is_a_doublet() {
        let r = table1(ResonanceId::R1);
        let n = 3001;
        let mags: Vec<f64> = (0..n).map(|k| r.transmission_at(-0.15 + 0.3 * k as f64 / (n - 1) as f64).unwrap().norm()).collect();
        let minima = (1..n - 1).filter(|&k| mags[k] < mags[k - 1] && mags[k] < mags[k + 1]).count();
        assert_eq!(minima, 2);
    }

    fn count_minima(r: &SplitResonance<f64>) -> usize {
        let n = 4001;
        let span = 20.0 * r.decay;
        let mags: Vec<f64> =
            (0..n).map(|k| r.transmission_at(-span + 2.0 * span * k as f64 / (n - 1) as f64).unwrap().norm()).collect();
        (1..n - 1).filter(|&k| mags[k] < mags[k - 1] && mags[k] < mags[k + 1]).count()
    }

    #[test]
    fn doublet_emerges_above_decay_rate() {
        // critical coupling: κ² = 2/τ_e with τ_e = 2τ, so κ² equals the total decay rate
        let decay = 0.02;
        let kappa = f64::sqrt(decay);
        // reciprocal backscattering: μ₂₁ = μ₁₂*
        let (p1, p2) = (0.4, std::f64::consts::TAU - 0.4);
        let split = SplitResonance::new("d", 1.0, decay, 0.0, 1.5 * decay, kappa, p1, p2, AngularFrequency(1200.0)).unwrap();
        assert_eq!(count_minima(&split), 2);
        let single = SplitResonance::new("s", 1.0, decay, 0.0, 0.0, kappa, p1, p2, AngularFrequency(1200.0)).unwrap();
        assert_eq!(count_minima(&single), 1);
    }

    #[test]
    fn invariants_are_enforced() {
        let w = AngularFrequency(1200.0);
        assert!(SplitResonance::new("x", 1.0, 0.0, 0.1, 0.01, 0.1, 0.0, 0.0, w).is_err());
        assert!(SplitResonance::new("x", 1.2, 0.02, 0.1, 0.01, 0.1, 0.0, 0.0, w).is_err());
        assert!(SplitResonance::new("x", 1.0, 0.02, -0.1, 0.01, 0.1, 0.0, 0.0, w).is_err());
        let r = SplitResonance::new("x", 1.0, 0.02, 0.1, 0.01, 0.1, -1.0, 7.0, w).unwrap();
        assert!(r.phi1 >= 0.0 && r.phi1 < std::f64::consts::TAU);
        assert_relative_eq!(r.phi2, 7.0 - std::f64::consts::TAU, epsilon = 1e-12);
    }

    #[test]
    fn singular_denominator_is_reported() {
        let r = SplitResonance::new("x", 1.0, 1e-16, 0.0, 0.0, 0.1, 0.0, 0.0, AngularFrequency(1200.0)).unwrap();
        assert!(matches!(r.forward_at(0.0), Err(Error::Singular { .. })));
        assert!(r.transmission_at(0.0).is_err());
    }

    #[test]
    fn json_schema_keys() {
        let r = table1(ResonanceId::R2);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["C", "gamma", "inv_tau_THz", "kappa_sqrtTHz", "label", "mu0_THz", "omega0_THz", "phi1_rad", "phi2_rad"]
        );
        let back: SplitResonance<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
        let bad = serde_json::json!({"label":"x","C":1.0,"inv_tau_THz":-1.0,"gamma":0.0,"mu0_THz":0.0,
            "kappa_sqrtTHz":0.1,"phi1_rad":0.0,"phi2_rad":0.0,"omega0_THz":1200.0});
        assert!(serde_json::from_value::<SplitResonance<f64>>(bad).is_err());
    }

    #[test]
    fn f32_tracks_f64() {
        let r64 = table1(ResonanceId::R4);
        let r32 = SplitResonance::<f32>::new(
            "R4",
            r64.c_norm as f32,
            r64.decay as f32,
            r64.gamma as f32,
            r64.mu0 as f32,
            r64.kappa as f32,
            r64.phi1 as f32,
            r64.phi2 as f32,
            AngularFrequency(r64.omega0.0 as f32),
        )
        .unwrap();
        for d in [-0.05_f64, 0.0, 0.013] {
            let a = r64.transmission_at(d).unwrap();
            let b = r32.transmission_at(d as f32).unwrap();
            assert!((a.re - b.re as f64).abs() < 1e-4 && (a.im - b.im as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn batched_transmission_matches_pointwise() {
        for id in ResonanceId::ALL {
            let r = table1(id);
            let dets: Vec<f64> = (-50..=50).map(|k| k as f64 * 2e-3).collect();
            let batch = r.transmission_many(&dets).unwrap();
            for (d, t) in dets.iter().zip(&batch) {
                assert!((r.transmission_at(*d).unwrap() - t).norm() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn transmission_consistent_with_tcmt_when_c_is_one(
            decay in 0.005f64..0.05, gamma in 0.0f64..1.5, mu0 in 0.0f64..0.05,
            kappa in 0.0f64..0.3, phi1 in 0.0f64..std::f64::consts::TAU, phi2 in 0.0f64..std::f64::consts::TAU, d in -0.3f64..0.3,
        ) {
            let r = SplitResonance::new("p", 1.0, decay, gamma, mu0, kappa, phi1, phi2, AngularFrequency(1210.0)).unwrap();
            let w = r.omega0.offset(d);
            if let (Ok(t), Ok(s)) = (r.through_transmission(w), r.solve_tcmt_steady(w, Complex::new(1.0, 0.0))) {
                prop_assert!((t - s.s_out).norm() <= 1e-12 * t.norm().max(1.0));
            }
        }

        #[test]
        fn evaluators_are_linear_in_input(re in -3.0f64..3.0, im in -3.0f64..3.0, d in -0.1f64..0.1) {
            let r = table1(ResonanceId::R1);
            let w = r.omega0.offset(d);
            let s = Complex::new(re, im);
            let unit = r.solve_tcmt_steady(w, Complex::new(1.0, 0.0)).unwrap();
            let scaled = r.solve_tcmt_steady(w, s).unwrap();
            prop_assert!((scaled.a_forward - unit.a_forward * s).norm() <= 1e-12 * scaled.a_forward.norm().max(1.0));
            prop_assert!((scaled.a_backward - unit.a_backward * s).norm() <= 1e-12 * scaled.a_backward.norm().max(1.0));
            prop_assert!((scaled.s_out - unit.s_out * s).norm() <= 1e-12 * scaled.s_out.norm().max(1.0));
        }

        #[test]
        fn unitary_across_twenty_linewidths(decay in 0.005f64..0.05, x in -20.0f64..20.0) {
            let r = SplitResonance::new("u", 1.0, decay, 0.0, 0.0, (2.0 * decay).sqrt(), 0.0, 0.0, AngularFrequency(1210.0)).unwrap();
            let t = r.transmission_at(x * decay).unwrap();
            prop_assert!((t.norm() - 1.0).abs() < 1e-10);
        }
    }
}
