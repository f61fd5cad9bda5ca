//! Pump envelope and phasematching function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Gaussian factor that matches `exp(-gamma x^2)` to the FWHM of `sinc(x)`.
pub const DEFAULT_GAMMA: f64 = 0.193;

/// Chirped Gaussian pump pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Carrier angular frequency (rad/s).
    pub omega_p0: f64,
    /// Amplitude width of `exp[-(nu/sigma_p)^2]` (rad/s).
    pub sigma_p: f64,
    /// Quadratic spectral phase (s^2).
    pub beta: f64,
}

impl PumpSpec {
    pub fn new(omega_p0: f64, sigma_p: f64, beta: f64) -> Result<Self> {
        let pump = Self {
            omega_p0,
            sigma_p,
            beta,
        };
        pump.validate()?;
        Ok(pump)
    }

    /// Pump centered at `center_wavelength` (m) with spectral FWHM `fwhm` (m).
    pub fn from_wavelength_fwhm(center_wavelength: f64, fwhm: f64, beta: f64) -> Result<Self> {
        let sigma = units::wavelength_fwhm_to_sigma(center_wavelength, fwhm)?;
        Self::new(units::angular_frequency(center_wavelength), sigma, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_p > 0.0 && self.sigma_p.is_finite()) {
            return Err(Error::Domain(format!(
                "pump width sigma_p must be positive, got {}",
                self.sigma_p
            )));
        }
        if !(self.omega_p0 > 0.0 && self.omega_p0.is_finite()) {
            return Err(Error::Domain(format!(
                "pump carrier frequency must be positive, got {}",
                self.omega_p0
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::Domain("pump chirp must be finite".into()));
        }
        Ok(())
    }

    pub fn with_sigma(mut self, sigma_p: f64) -> Result<Self> {
        self.sigma_p = sigma_p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_chirp(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn center_wavelength(&self) -> f64 {
        units::wavelength_from_angular(self.omega_p0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Gaussian,
    Sinc,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Profile::Gaussian),
            "sinc" => Ok(Profile::Sinc),
            other => Err(Error::UnsupportedProfile(other.to_string())),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Gaussian => "gaussian",
            Profile::Sinc => "sinc",
        })
    }
}

/// Waveguide phasematching, linearized around the central PDC frequencies so
/// that `L dk ~ tau_s nu_s + tau_i nu_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchSpec {
    /// Waveguide length (m).
    pub length: f64,
    /// Signal walk-off `L (1/u_s - 1/u_p)` (s).
    pub tau_s: f64,
    /// Idler walk-off `L (1/u_i - 1/u_p)` (s).
    pub tau_i: f64,
    pub gamma: f64,
    pub profile: Profile,
    pub omega_s0: f64,
    pub omega_i0: f64,
}

impl PhasematchSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Domain(format!(
                "waveguide length must be positive, got {}",
                self.length
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.tau_s.is_finite() && self.tau_i.is_finite()) {
            return Err(Error::Domain("walk-off parameters must be finite".into()));
        }
        if !(self.omega_s0 > 0.0 && self.omega_i0 > 0.0) {
            return Err(Error::Domain(
                "central PDC frequencies must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = profile;
        self
    }

    /// Rescales the waveguide length. Walk-offs scale linearly with it.
    pub fn with_length(mut self, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!(
                "waveguide length must be positive, got {length}"
            )));
        }
        let ratio = length / self.length;
        self.tau_s *= ratio;
        self.tau_i *= ratio;
        self.length = length;
        Ok(self)
    }

    /// Half the phase mismatch, `x = (tau_s nu_s + tau_i nu_i) / 2`.
    pub fn mismatch(&self, nu_s: f64, nu_i: f64) -> f64 {
        0.5 * (self.tau_s * nu_s + self.tau_i * nu_i)
    }

    /// Orientation of the phasematching ridge in the `(omega_s, omega_i)`
    /// plane, in degrees from the signal axis, folded into `[0, 180)`.
    pub fn ridge_angle_deg(&self) -> f64 {
        let angle = (-self.tau_s).atan2(self.tau_i).to_degrees();
        angle.rem_euclid(180.0)
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Pump spectral amplitude at the sum detuning `nu_sum = nu_s + nu_i`.
pub fn pump_envelope(pump: &PumpSpec, nu_sum: f64) -> Complex64 {
    let r = nu_sum / pump.sigma_p;
    Complex64::from_polar((-r * r).exp(), pump.beta * nu_sum * nu_sum)
}

/// Phasematching amplitude including its linear phase `exp(i x)`.
pub fn phasematching_amplitude(pm: &PhasematchSpec, nu_s: f64, nu_i: f64) -> Complex64 {
    let x = pm.mismatch(nu_s, nu_i);
    Complex64::from_polar(1.0, x) * phasematching_envelope(pm, nu_s, nu_i)
}

/// Phasematching amplitude with the linear phase dropped. The linear phase
/// only shifts the biphoton in time, so the JSA is built from this real part.
pub fn phasematching_envelope(pm: &PhasematchSpec, nu_s: f64, nu_i: f64) -> f64 {
    let x = pm.mismatch(nu_s, nu_i);
    match pm.profile {
        Profile::Gaussian => (-pm.gamma * x * x).exp(),
        Profile::Sinc => sinc(x),
    }
}

/// Walk-offs `(tau_s, tau_i)` from group velocities.
pub fn walkoff_from_group_velocities(
    length: f64,
    u_s: f64,
    u_i: f64,
    u_p: f64,
) -> Result<(f64, f64)> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Domain(format!(
            "waveguide length must be positive, got {length}"
        )));
    }
    for (name, u) in [("u_s", u_s), ("u_i", u_i), ("u_p", u_p)] {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Domain(format!(
                "group velocity {name} must be positive, got {u}"
            )));
        }
    }
    Ok((length * (1.0 / u_s - 1.0 / u_p), length * (1.0 / u_i - 1.0 / u_p)))
}
