//! JSON description of a photon-pair source and the end-to-end pipeline that
//! turns it into a JSA, its filtering factors and an analysis report.

use nalgebra::RealField;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, AnalysisReport};
use crate::error::{Error, Result};
use crate::jsa::{adp_sum_grid, compute_adp, compute_jsa_quadrature, compute_tdsi, GridOptions, JsaGrid, SourceConfig};
use crate::num::Real;
use crate::phasematch::PhaseMatchSpec;
use crate::presets::{table1, ResonanceId};
use crate::pump::{
    round_trip_delay, tune_differentiator, DifferentiatorSpec, IdealDiff, PumpShape, PumpSpec, PumpTransform, DEFAULT_ALPHA_RT,
    DEFAULT_GROUP_INDEX, DEFAULT_RING_RADIUS_UM,
};
use crate::resonator::SplitResonance;
use crate::units::{AngularFrequency, DetuningGrid, Grid2D};

/// A resonance given by preset label (`"R1"`..`"R4"`) or inline parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum ResonanceSource<T> {
    Preset(String),
    Inline(SplitResonance<T>),
}

impl<T: Real> ResonanceSource<T> {
    pub fn resolve(&self) -> Result<SplitResonance<T>> {
        match self {
            Self::Inline(r) => Ok(r.clone()),
            Self::Preset(name) => {
                let id = ResonanceId::ALL
                    .into_iter()
                    .find(|id| id.label().eq_ignore_ascii_case(name))
                    .ok_or_else(|| Error::Argument(format!("unknown resonance preset `{name}` (expected R1, R2, R3 or R4)")))?;
                let r = table1(id);
                let c = T::lit;
                SplitResonance::new(r.label, c(r.c_norm), c(r.decay), c(r.gamma), c(r.mu0), c(r.kappa), c(r.phi1), c(r.phi2), AngularFrequency(c(r.omega0.0)))
            }
        }
    }
}

fn default_alpha_rt<T: Real>() -> T {
    T::lit(DEFAULT_ALPHA_RT)
}
fn default_radius<T: Real>() -> T {
    T::lit(DEFAULT_RING_RADIUS_UM)
}
fn default_group_index<T: Real>() -> T {
    T::lit(DEFAULT_GROUP_INDEX)
}

/// Pump shaping stage. An MRR stage is given either by `tau_c` directly or
/// by a target `order`, in which case `tau_c` is tuned over the pump band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub enum DifferentiatorConfig<T> {
    Mrr {
        #[serde(default)]
        tau_c: Option<T>,
        #[serde(default)]
        order: Option<T>,
        #[serde(default = "default_alpha_rt")]
        alpha_rt: T,
        #[serde(default = "default_radius")]
        radius_um: T,
        #[serde(default = "default_group_index")]
        group_index: T,
        /// Half-width (rad/ps) of the band the order is measured over;
        /// defaults to half the pump FWHM.
        #[serde(default)]
        band_half_width: Option<T>,
    },
    Ideal {
        order: T,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct PumpConfig<T> {
    pub fwhm_pm: T,
    /// Carrier; defaults to the pump resonance centre.
    #[serde(default, rename = "center_THz")]
    pub center: Option<T>,
    #[serde(default)]
    pub shape: PumpShape,
    #[serde(default)]
    pub differentiator: Option<DifferentiatorConfig<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions<T> {
    pub jsi_threshold: T,
    pub tdsi_threshold: T,
    pub adp_threshold: T,
    /// Decompose |F| instead of F.
    pub flat_phase: bool,
}

impl<T: Real> Default for AnalysisOptions<T> {
    fn default() -> Self {
        Self { jsi_threshold: T::lit(0.10), tdsi_threshold: T::lit(0.25), adp_threshold: T::lit(0.10), flat_phase: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct SimulationConfig<T> {
    pub pump_resonance: ResonanceSource<T>,
    pub signal_resonance: ResonanceSource<T>,
    pub idler_resonance: ResonanceSource<T>,
    pub pump: PumpConfig<T>,
    #[serde(default)]
    pub phase_matching: Option<PhaseMatchSpec<T>>,
    #[serde(default)]
    pub grid: GridOptions<T>,
    #[serde(default)]
    pub analysis: AnalysisOptions<T>,
}

impl<T: Real> SimulationConfig<T> {
    pub fn from_json(text: &str) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the pump spectrum, tuning the differentiator if an order is given.
    pub fn pump_spec(&self, pump_res: &SplitResonance<T>) -> Result<PumpSpec<T>> {
        let center = AngularFrequency(self.pump.center.unwrap_or(pump_res.omega0.0));
        let mut spec = PumpSpec::gaussian(center, self.pump.fwhm_pm)?;
        spec.shape = self.pump.shape;
        let transform = match &self.pump.differentiator {
            None => return Ok(spec),
            Some(DifferentiatorConfig::Ideal { order }) => PumpTransform::Ideal(IdealDiff::new(*order, center)?),
            Some(DifferentiatorConfig::Mrr { tau_c, order, alpha_rt, radius_um, group_index, band_half_width }) => {
                let t_s = round_trip_delay(*radius_um, *group_index);
                let band = band_half_width.unwrap_or(spec.fwhm_omega() / T::lit(2.0));
                let ring = match (tau_c, order) {
                    (Some(tc), None) => DifferentiatorSpec::new(*tc, *alpha_rt, t_s, center)?,
                    (None, Some(n)) => tune_differentiator(*alpha_rt, t_s, center, band, *n)?,
                    _ => return Err(Error::Argument("mrr differentiator needs exactly one of `tau_c` and `order`".into())),
                };
                PumpTransform::Mrr(ring)
            }
        };
        spec.with_transform(transform)
    }

    pub fn source(&self) -> Result<SourceConfig<T>> {
        let pump_res = self.pump_resonance.resolve()?;
        let pump = self.pump_spec(&pump_res)?;
        SourceConfig::new(
            pump_res,
            self.signal_resonance.resolve()?,
            self.idler_resonance.resolve()?,
            pump,
            self.phase_matching.clone(),
            self.grid,
        )
    }
}

/// Everything the `simulate` pipeline produces.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub jsa: JsaGrid<T>,
    pub tdsi: Grid2D<Complex<T>, T>,
    pub adp_grid: DetuningGrid<T>,
    pub adp: Vec<Complex<T>>,
    pub report: AnalysisReport<T>,
}

impl<T: Real> Simulation<T> {
    pub fn warnings(&self) -> &[String] {
        &self.jsa.warnings
    }
}

pub fn simulate<T: Real + RealField>(cfg: &SimulationConfig<T>) -> Result<Simulation<T>> {
    let source = cfg.source()?;
    let jsa = compute_jsa_quadrature(&source)?;
    let tdsi = compute_tdsi(&source)?;
    let adp_grid = adp_sum_grid(&source)?;
    let adp = compute_adp(&source, &adp_grid)?;
    let report = analyze(&jsa, cfg.analysis.flat_phase, cfg.analysis.jsi_threshold)?;
    Ok(Simulation { jsa, tdsi, adp_grid, adp, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEPARABLE: &str = include_str!("../../../configs/separable.json");
    const GAUSSIAN: &str = include_str!("../../../configs/entangled_gaussian.json");
    const DIFF: &str = include_str!("../../../configs/entangled_diff.json");

    #[test]
    fn shipped_configs_parse() {
        for text in [SEPARABLE, GAUSSIAN, DIFF] {
            let cfg = SimulationConfig::<f64>::from_json(text).unwrap();
            cfg.source().unwrap();
        }
    }

    #[test]
    fn presets_resolve_case_insensitively() {
        let r: SplitResonance<f64> = ResonanceSource::Preset("r3".into()).resolve().unwrap();
        assert_eq!(r, table1(ResonanceId::R3));
        assert!(ResonanceSource::<f64>::Preset("R9".into()).resolve().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SEPARABLE.replacen("\"pump\"", "\"pmup\"", 1);
        assert!(SimulationConfig::<f64>::from_json(&text).is_err());
    }

    #[test]
    fn mrr_needs_one_of_tau_c_and_order() {
        let mut cfg = SimulationConfig::<f64>::from_json(DIFF).unwrap();
        cfg.pump.differentiator = Some(DifferentiatorConfig::Mrr {
            tau_c: Some(0.9),
            order: Some(1.7),
            alpha_rt: 0.98,
            radius_um: 30.0,
            group_index: 4.2,
            band_half_width: None,
        });
        assert!(matches!(cfg.source(), Err(Error::Argument(_))));
    }

    #[test]
    fn tuned_ring_reaches_target_order() {
        let cfg = SimulationConfig::<f64>::from_json(DIFF).unwrap();
        let res = cfg.pump_resonance.resolve().unwrap();
        let spec = cfg.pump_spec(&res).unwrap();
        match spec.transform {
            Some(PumpTransform::Mrr(ring)) => assert!((ring.tau_c - 0.9745).abs() < 2e-3, "{}", ring.tau_c),
            other => panic!("{other:?}"),
        }
    }
}
