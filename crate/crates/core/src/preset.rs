//! Named source configurations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{PhasematchSpec, Profile, PumpSpec, DEFAULT_GAMMA};
use crate::units::{self, nm, ps};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePreset {
    pub name: String,
    pub notes: String,
    pub pump: PumpSpec,
    pub pm: PhasematchSpec,
}

const PPKTP_8MM: &str = include_str!("../presets/ppktp-8mm.toml");

/// Names of the presets shipped with the crate.
pub const BUILTIN: &[&str] = &["ppktp-8mm"];

impl SourcePreset {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let preset: SourcePreset =
            toml::from_str(text).map_err(|e| Error::Preset(e.to_string()))?;
        preset.pump.validate()?;
        preset.pm.validate()?;
        Ok(preset)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Preset(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "ppktp-8mm" => Self::from_toml_str(PPKTP_8MM),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

/// Inputs fixing the ppKTP walk-offs.
#[derive(Debug, Clone, Copy)]
pub struct PpktpConstraints {
    pub ridge_angle_deg: f64,
    pub correlation_time: f64,
    pub gamma: f64,
    pub length: f64,
    pub pump_wavelength: f64,
    pub pump_fwhm: f64,
}

impl Default for PpktpConstraints {
    fn default() -> Self {
        Self {
            ridge_angle_deg: 59.0,
            correlation_time: ps(1.16),
            gamma: DEFAULT_GAMMA,
            length: 8e-3,
            pump_wavelength: nm(767.5),
            pump_fwhm: nm(2.0),
        }
    }
}

/// Solves for `(tau_s, tau_i)` given the ridge angle and the Gaussian-model
/// correlation time `sqrt(2 ln 2) sqrt(gamma) |tau_s - tau_i|`.
///
/// The ridge `tau_s nu_s + tau_i nu_i = 0` points along `(tau_i, -tau_s)`, so
/// `-tau_s / tau_i = tan(angle)`. The signal is taken as the photon with
/// positive walk-off.
pub fn derive_walkoffs(c: &PpktpConstraints) -> (f64, f64) {
    let separation =
        c.correlation_time / ((2.0 * std::f64::consts::LN_2).sqrt() * c.gamma.sqrt());
    let slope = c.ridge_angle_deg.to_radians().tan();
    let tau_i = -separation / (1.0 + slope);
    let tau_s = -slope * tau_i;
    (tau_s, tau_i)
}

pub fn derive_ppktp(c: &PpktpConstraints) -> Result<SourcePreset> {
    let (tau_s, tau_i) = derive_walkoffs(c);
    let pump = PumpSpec::from_wavelength_fwhm(c.pump_wavelength, c.pump_fwhm, 0.0)?;
    let omega_pdc = 0.5 * pump.omega_p0;
    let pm = PhasematchSpec {
        length: c.length,
        tau_s,
        tau_i,
        gamma: c.gamma,
        profile: Profile::Sinc,
        omega_s0: omega_pdc,
        omega_i0: omega_pdc,
    };
    pm.validate()?;
    Ok(SourcePreset {
        name: "ppktp-8mm".into(),
        notes: String::new(),
        pump,
        pm,
    })
}

/// The built-in ppKTP preset with its pump set to a wavelength FWHM (m).
pub fn ppktp_with_pump_fwhm(fwhm: f64) -> Result<SourcePreset> {
    let mut preset = SourcePreset::builtin("ppktp-8mm")?;
    let sigma = units::wavelength_fwhm_to_sigma(preset.pump.center_wavelength(), fwhm)?;
    preset.pump = preset.pump.with_sigma(sigma)?;
    Ok(preset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn shipped_preset_matches_derivation() {
        let shipped = SourcePreset::builtin("ppktp-8mm").unwrap();
        let derived = derive_ppktp(&PpktpConstraints::default()).unwrap();
        assert!(rel(shipped.pm.tau_s, derived.pm.tau_s) < 1e-12);
        assert!(rel(shipped.pm.tau_i, derived.pm.tau_i) < 1e-12);
        assert!(rel(shipped.pump.sigma_p, derived.pump.sigma_p) < 1e-12);
        assert!(rel(shipped.pump.omega_p0, derived.pump.omega_p0) < 1e-12);
        assert!(rel(shipped.pm.omega_s0, derived.pm.omega_s0) < 1e-12);
        assert_eq!(shipped.pm.length, derived.pm.length);
        assert_eq!(shipped.pm.gamma, derived.pm.gamma);
        assert!(shipped.notes.contains("59 deg"));
    }

    #[test]
    fn derived_walkoffs() {
        let (ts, ti) = derive_walkoffs(&PpktpConstraints::default());
        assert!(ts > 0.0 && ti < 0.0);
        assert!((ts - ti - 2.243e-12).abs() < 0.001e-12);
        assert!((ti.abs() - 0.842e-12).abs() < 0.001e-12);
        assert!((ts.abs() - 1.401e-12).abs() < 0.001e-12);
        let preset = derive_ppktp(&PpktpConstraints::default()).unwrap();
        assert!((preset.pm.ridge_angle_deg() - 59.0).abs() < 1e-9);
    }

    #[test]
    fn energy_conservation_of_carriers() {
        let p = SourcePreset::builtin("ppktp-8mm").unwrap();
        assert!(rel(p.pm.omega_s0 + p.pm.omega_i0, p.pump.omega_p0) < 1e-15);
    }

    #[test]
    fn toml_round_trip() {
        let p = SourcePreset::builtin("ppktp-8mm").unwrap();
        let text = p.to_toml_string().unwrap();
        assert_eq!(SourcePreset::from_toml_str(&text).unwrap(), p);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(
            SourcePreset::builtin("bbo-2mm"),
            Err(Error::UnknownPreset(_))
        ));
    }
}
