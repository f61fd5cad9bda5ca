//! Unit conversions between wavelength widths, angular-frequency widths and
//! pulse durations.
//!
//! Width convention: a Gaussian amplitude `exp[-(nu/sigma)^2]` is described by
//! its `sigma`. A full width at half maximum (FWHM) maps to it through
//! `sigma = FWHM / (2 sqrt(ln 2))`. Every spectral width in this crate,
//! including pump widths, filter widths and the CLI's `--pump-fwhm-nm`, uses
//! that mapping.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Time-bandwidth product of a transform-limited Gaussian pulse
/// (intensity FWHMs), `2 ln 2 / pi ~ 0.441`.
pub const GAUSSIAN_TIME_BANDWIDTH: f64 = 2.0 * LN_2 / PI;

/// Full width at half maximum of `exp(-x^2 / (2 s^2))` in units of `s`.
pub fn gaussian_fwhm_factor() -> f64 {
    2.0 * (2.0 * LN_2).sqrt()
}

/// Angular-frequency FWHM to the amplitude width `sigma`.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * LN_2.sqrt())
}

pub fn sigma_to_fwhm(sigma: f64) -> f64 {
    sigma * 2.0 * LN_2.sqrt()
}

/// Angular frequency (rad/s) of light with the given vacuum wavelength (m).
pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

pub fn wavelength_from_angular(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega
}

fn check_width(center_wavelength: f64, fwhm: f64) -> Result<()> {
    if !(center_wavelength > 0.0 && center_wavelength.is_finite()) {
        return Err(Error::Domain(format!(
            "center wavelength must be positive, got {center_wavelength}"
        )));
    }
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(Error::Domain(format!("FWHM must be positive, got {fwhm}")));
    }
    Ok(())
}

/// Frequency FWHM (Hz) for a wavelength FWHM around `center_wavelength`,
/// `df = c dlambda / lambda^2`.
pub fn frequency_fwhm(center_wavelength: f64, fwhm: f64) -> Result<f64> {
    check_width(center_wavelength, fwhm)?;
    Ok(SPEED_OF_LIGHT * fwhm / (center_wavelength * center_wavelength))
}

/// Wavelength FWHM (m) to the amplitude width `sigma` (rad/s).
pub fn wavelength_fwhm_to_sigma(center_wavelength: f64, fwhm: f64) -> Result<f64> {
    let df = frequency_fwhm(center_wavelength, fwhm)?;
    Ok(fwhm_to_sigma(2.0 * PI * df))
}

/// Inverse of [`wavelength_fwhm_to_sigma`].
pub fn sigma_to_wavelength_fwhm(center_wavelength: f64, sigma: f64) -> Result<f64> {
    check_width(center_wavelength, sigma)?;
    let domega = sigma_to_fwhm(sigma);
    Ok(angular_width_to_wavelength(center_wavelength, domega))
}

/// Converts an angular-frequency interval (rad/s) at `center_wavelength` to a
/// wavelength interval (m), to first order.
pub fn angular_width_to_wavelength(center_wavelength: f64, domega: f64) -> f64 {
    center_wavelength * center_wavelength * domega / (2.0 * PI * SPEED_OF_LIGHT)
}

/// Intensity-FWHM duration (s) of a transform-limited Gaussian pulse with the
/// given spectral FWHM.
pub fn transform_limited_duration(center_wavelength: f64, fwhm: f64) -> Result<f64> {
    let df = frequency_fwhm(center_wavelength, fwhm)?;
    Ok(GAUSSIAN_TIME_BANDWIDTH / df)
}

pub fn nm(x: f64) -> f64 {
    x * 1e-9
}

pub fn ps(x: f64) -> f64 {
    x * 1e-12
}

pub fn to_ps(t: f64) -> f64 {
    t * 1e12
}

pub fn to_nm(x: f64) -> f64 {
    x * 1e9
}

/// fs^2 to s^2.
pub fn fs2(x: f64) -> f64 {
    x * 1e-30
}
