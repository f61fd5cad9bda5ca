//! Hong-Ou-Mandel interference.
//!
//! The coincidence rate for a relative delay `tau` is
//!
//! ```text
//! R(tau) = 1 - Re[ sum e^{i(nu - nu')tau} f(nu, nu') f*(nu', nu) ] / sum |f|^2
//! ```
//!
//! so that `R -> 1` for distinguishable photons and `R(0) = 1 - h` with `h`
//! the visibility. For the Gaussian JSA the double integral is elementary:
//! the product `f(nu, nu') f*(nu', nu)` is `exp[-(A nu^2 + A nu'^2 + 2 B nu nu')]`
//! with `A = 2/sigma_p^2 + gamma (tau_s^2 + tau_i^2)/4` and
//! `B = 2/sigma_p^2 + gamma tau_s tau_i / 2`; the chirp cancels. Integrating
//! gives a Gaussian dip of standard deviation `W = sqrt(A - B)
//! = sqrt(gamma) |tau_s - tau_i| / 2` and visibility
//! `h = 1 / sqrt(1 + gamma sigma_p^2 (tau_s + tau_i)^2 / 16)`.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::JointSpectralAmplitude;
use crate::spectral::{PhasematchSpec, Profile, PumpSpec};
use crate::units;

/// Rates may exceed the baseline by this much before a scan is rejected.
pub const RATE_SLACK: f64 = 0.05;
/// Below this visibility a scan has no dip.
pub const MIN_VISIBILITY: f64 = 0.02;
/// Both ends of a scan must sit above this rate.
pub const BASELINE_THRESHOLD: f64 = 0.9;
pub const DEFAULT_DELAY_POINTS: usize = 201;
/// Default delay half-span in units of the Gaussian dip width `W`.
pub const DEFAULT_DELAY_SPAN: f64 = 4.0;

/// Coincidence rate versus delay, normalized to a unit baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayScan {
    pub delays: Vec<f64>,
    pub rates: Vec<f64>,
}

impl DelayScan {
    pub fn new(delays: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if delays.len() != rates.len() {
            return Err(Error::Shape(format!(
                "{} delays but {} rates",
                delays.len(),
                rates.len()
            )));
        }
        if delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("delays must be strictly increasing".into()));
        }
        if let Some(r) = rates
            .iter()
            .find(|&&r| !(-1e-9..=1.0 + RATE_SLACK).contains(&r))
        {
            return Err(Error::Domain(format!(
                "rate {r} outside [0, {}]",
                1.0 + RATE_SLACK
            )));
        }
        Ok(Self { delays, rates })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomModel {
    Numeric,
    GaussianAnalytic,
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomResult {
    pub scan: DelayScan,
    /// Dip FWHM, the correlation time (s).
    pub t_c: f64,
    pub visibility: f64,
    pub model: HomModel,
}

/// Precomputed interference kernel `f(nu, nu') f*(nu', nu)` of a JSA on a
/// square grid.
#[derive(Debug, Clone)]
pub struct HomOverlap {
    nu: Vec<f64>,
    kernel: Array2<Complex64>,
    norm: f64,
}

impl HomOverlap {
    pub fn new(jsa: &JointSpectralAmplitude) -> Result<Self> {
        if !jsa.grid.is_square() {
            return Err(Error::Shape(
                "HOM overlap needs identical signal and idler axes".into(),
            ));
        }
        let f = &jsa.amplitude;
        let norm: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::Degenerate("all-zero JSA".into()));
        }
        let kernel = Array2::from_shape_fn(f.dim(), |(j, k)| f[[j, k]] * f[[k, j]].conj());
        Ok(Self {
            nu: jsa.grid.signal_axis(),
            kernel,
            norm,
        })
    }

    pub fn rate(&self, tau: f64) -> f64 {
        let phase: Vec<Complex64> = self
            .nu
            .iter()
            .map(|&nu| Complex64::from_polar(1.0, nu * tau))
            .collect();
        let overlap: Complex64 = self
            .kernel
            .rows()
            .into_iter()
            .zip(&phase)
            .map(|(row, p)| {
                let inner: Complex64 = row.iter().zip(&phase).map(|(m, q)| m * q.conj()).sum();
                p * inner
            })
            .sum();
        1.0 - overlap.re / self.norm
    }
}

/// Numerical coincidence rate at delay `tau` (Riemann sum on the JSA grid).
pub fn coincidence_rate_numeric(jsa: &JointSpectralAmplitude, tau: f64) -> Result<f64> {
    Ok(HomOverlap::new(jsa)?.rate(tau))
}

pub fn coincidence_scan(jsa: &JointSpectralAmplitude, delays: &[f64]) -> Result<DelayScan> {
    let overlap = HomOverlap::new(jsa)?;
    let rates = delays.par_iter().map(|&t| overlap.rate(t)).collect();
    DelayScan::new(delays.to_vec(), rates)
}

fn require_gaussian(pm: &PhasematchSpec) -> Result<()> {
    if pm.profile != Profile::Gaussian {
        return Err(Error::UnsupportedProfile(format!(
            "closed-form HOM dip needs the gaussian profile, got {}",
            pm.profile
        )));
    }
    Ok(())
}

/// Standard deviation `W = sqrt(gamma) |tau_s - tau_i| / 2` of the Gaussian
/// dip, ignoring the profile selector.
pub fn gaussian_dip_sigma(pm: &PhasematchSpec) -> Result<f64> {
    let w = 0.5 * pm.gamma.sqrt() * (pm.tau_s - pm.tau_i).abs();
    if !(w > 0.0) {
        return Err(Error::DegenerateWidth);
    }
    Ok(w)
}

/// Closed-form visibility `h(sigma_p, tau_s, tau_i)`.
pub fn visibility_coefficient(pump: &PumpSpec, pm: &PhasematchSpec) -> Result<f64> {
    require_gaussian(pm)?;
    let sum = pm.tau_s + pm.tau_i;
    let x = pm.gamma * (pump.sigma_p * sum).powi(2) / 16.0;
    Ok(1.0 / (1.0 + x).sqrt())
}

pub fn coincidence_rate_gaussian(pump: &PumpSpec, pm: &PhasematchSpec, tau: f64) -> Result<f64> {
    require_gaussian(pm)?;
    let w = gaussian_dip_sigma(pm)?;
    let h = visibility_coefficient(pump, pm)?;
    Ok(1.0 - h * (-tau * tau / (2.0 * w * w)).exp())
}

/// Dip FWHM of the Gaussian model, `sqrt(2 ln 2) sqrt(gamma) |tau_s - tau_i|`.
/// Depends on the waveguide only.
pub fn correlation_time_gaussian(pm: &PhasematchSpec) -> Result<f64> {
    require_gaussian(pm)?;
    Ok(units::gaussian_fwhm_factor() * gaussian_dip_sigma(pm)?)
}

/// `n` uniformly spaced delays over `[-half_span, half_span]`.
pub fn delay_grid(half_span: f64, n: usize) -> Vec<f64> {
    let step = 2.0 * half_span / (n - 1) as f64;
    (0..n).map(|i| -half_span + i as f64 * step).collect()
}

/// 201 delays over four Gaussian-model dip widths on either side of zero.
pub fn default_delays(pm: &PhasematchSpec) -> Result<Vec<f64>> {
    Ok(delay_grid(
        DEFAULT_DELAY_SPAN * gaussian_dip_sigma(pm)?,
        DEFAULT_DELAY_POINTS,
    ))
}

pub fn gaussian_scan(pump: &PumpSpec, pm: &PhasematchSpec, delays: &[f64]) -> Result<DelayScan> {
    let rates = delays
        .iter()
        .map(|&t| coincidence_rate_gaussian(pump, pm, t))
        .collect::<Result<Vec<_>>>()?;
    DelayScan::new(delays.to_vec(), rates)
}

/// Visibility and FWHM of the dip in a scan.
pub fn extract_dip(scan: &DelayScan) -> Result<HomResult> {
    extract_dip_as(scan, HomModel::Numeric)
}

pub fn extract_dip_as(scan: &DelayScan, model: HomModel) -> Result<HomResult> {
    let n = scan.rates.len();
    if n < 3 {
        return Err(Error::Coverage("scan needs at least 3 points".into()));
    }
    let (first, last) = (scan.rates[0], scan.rates[n - 1]);
    if first <= BASELINE_THRESHOLD || last <= BASELINE_THRESHOLD {
        return Err(Error::Coverage(format!(
            "scan does not reach the baseline (ends at {first:.3} and {last:.3})"
        )));
    }
    let min = scan.rates.iter().copied().fold(f64::INFINITY, f64::min);
    let visibility = (1.0 - min).clamp(0.0, 1.0);
    if visibility < MIN_VISIBILITY {
        return Err(Error::NoDip {
            visibility,
            threshold: MIN_VISIBILITY,
        });
    }
    let depth: Vec<f64> = scan.rates.iter().map(|r| 1.0 - r).collect();
    let t_c = crate::jsa::intensity_fwhm(&scan.delays, &depth)?;
    Ok(HomResult {
        scan: scan.clone(),
        t_c,
        visibility,
        model,
    })
}
