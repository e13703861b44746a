//! JSON configuration covering every tunable parameter.
//!
//! ```json
//! {
//!   "pyramid": { "K": 5, "kernel": "binomial5" },
//!   "compound": { "gamma": 0.05, "enhance_layer": 3, "enhancement": true, "phi_overrides": null },
//!   "boundary": { "alpha": 15, "beta": 20, "min_size": 50, "grad_threshold": 0.19607843137254902,
//!                 "t1": 30.0, "t2": 2.0, "median_denoise": true, "polarity": "bright_above" },
//!   "confidence": { "decay": 0.002, "absorption": 0.02 }
//! }
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.
//! `boundary.t1` and `boundary.t2` are in 8-bit units, `grad_threshold` in
//! [0, 1] intensity units.

use echofuse_core::boundary::BoundaryParams;
use echofuse_core::compound::{PrepareSettings, PyramidParams, DEFAULT_ENHANCE_LAYER, DEFAULT_GAMMA};
use echofuse_core::confidence::AttenuationParams;
use echofuse_core::pyramid::{Kernel, DEFAULT_LEVELS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PyramidSection {
    #[serde(rename = "K")]
    pub levels: usize,
    pub kernel: Kernel,
}

impl Default for PyramidSection {
    fn default() -> Self {
        Self { levels: DEFAULT_LEVELS, kernel: Kernel::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompoundSection {
    pub gamma: f64,
    pub enhance_layer: usize,
    pub enhancement: bool,
    pub phi_overrides: Option<Vec<f64>>,
}

impl Default for CompoundSection {
    fn default() -> Self {
        Self { gamma: DEFAULT_GAMMA, enhance_layer: DEFAULT_ENHANCE_LAYER, enhancement: true, phi_overrides: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub pyramid: PyramidSection,
    pub compound: CompoundSection,
    pub boundary: BoundaryParams,
    pub confidence: AttenuationParams,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn pyramid_params(&self) -> PyramidParams {
        PyramidParams {
            levels: self.pyramid.levels,
            kernel: self.pyramid.kernel,
            gamma: self.compound.gamma,
            enhance_layer: self.compound.enhance_layer,
            enhancement: self.compound.enhancement,
            phi_overrides: self.compound.phi_overrides.clone(),
        }
    }

    pub fn prepare_settings(&self) -> PrepareSettings {
        PrepareSettings { attenuation: self.confidence, boundary: self.boundary }
    }

    pub fn validate(&self) -> echofuse_core::Result<()> {
        self.pyramid_params().validate()?;
        self.boundary.validate()?;
        let AttenuationParams { decay, absorption } = self.confidence;
        if !(decay >= 0.0 && decay.is_finite() && absorption >= 0.0 && absorption.is_finite()) {
            return Err(echofuse_core::Error::Parameter("confidence.decay and confidence.absorption must be finite and non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_values() {
        let c = Config::default();
        assert_eq!(c.pyramid.levels, 5);
        assert_eq!(c.compound.gamma, 0.05);
        assert_eq!(c.compound.enhance_layer, 3);
        assert_eq!((c.boundary.alpha, c.boundary.beta, c.boundary.min_size), (15, 20, 50));
        assert_eq!((c.boundary.t1, c.boundary.t2), (30.0, 2.0));
        c.validate().unwrap();
    }

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = Config::from_json(r#"{"pyramid": {"K": 4}, "boundary": {"beta": 12}}"#).unwrap();
        assert_eq!(c.pyramid.levels, 4);
        assert_eq!(c.boundary.beta, 12);
        assert_eq!(c.boundary.alpha, 15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_json(r#"{"pyramid": {"levels": 4}}"#).is_err());
        assert!(Config::from_json(r#"{"extra": 1}"#).is_err());
        assert!(Config::from_json(r#"{"compound": {"gama": 0.1}}"#).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let mut c = Config::default();
        c.compound.phi_overrides = Some(vec![0.0; 5]);
        c.boundary.median_denoise = false;
        assert_eq!(Config::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn invalid_values_fail_validation() {
        let mut c = Config::default();
        c.compound.enhance_layer = 9;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.confidence.decay = -1.0;
        assert!(c.validate().is_err());
    }
}
