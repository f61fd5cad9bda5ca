//! Joint temporal amplitude and timing-resolution bookkeeping.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::{intensity_fwhm, JointSpectralAmplitude, Provenance};
use crate::spectral::PumpSpec;
use crate::units;

/// Boundary samples of `|JTA|^2` above this fraction of the peak mean the
/// state wraps around the time window.
pub const EDGE_TOLERANCE: f64 = 1e-3;

/// `F(t_s, t_i) = (1/2pi) sum f(nu_s, nu_i) e^{-i(nu_s t_s + nu_i t_i)} dnu_s dnu_i`
/// on the time grid conjugate to the JSA grid, `t_k = (k - n/2) dt` with
/// `dt = 2pi / (n dnu)`.
#[derive(Debug, Clone)]
pub struct JointTemporalAmplitude {
    pub n: usize,
    pub dt: f64,
    /// Indexed `[signal time, idler time]`.
    pub amplitude: Array2<Complex64>,
    pub provenance: Provenance,
}

impl JointTemporalAmplitude {
    fn center(&self) -> usize {
        self.n / 2
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.dt
    }

    pub fn time_axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.time(k)).collect()
    }

    /// `sum |F|^2 dt^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt * self.dt
    }
}

fn transform_axis(data: &mut [Complex64], n: usize, pre: &[Complex64], post: &[Complex64]) {
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in data.chunks_exact_mut(n) {
        for (z, p) in row.iter_mut().zip(pre) {
            *z *= p;
        }
    }
    fft.process(data);
    for row in data.chunks_exact_mut(n) {
        for (z, p) in row.iter_mut().zip(post) {
            *z *= p;
        }
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for k in 0..n {
            out[k * n + j] = data[j * n + k];
        }
    }
    out
}

pub fn jta_from_jsa(jsa: &JointSpectralAmplitude) -> Result<JointTemporalAmplitude> {
    let g = &jsa.grid;
    let same = (g.d_nu_s() - g.d_nu_i()).abs() <= 1e-12 * g.d_nu_s();
    if g.n_s != g.n_i || !same {
        return Err(Error::Shape(
            "JTA needs a square grid with equal spacing on both axes".into(),
        ));
    }
    let n = g.n_s;
    let dnu = g.d_nu_s();
    let dt = 2.0 * PI / (n as f64 * dnu);
    let c = (n / 2) as f64;
    let pre: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * c / n as f64))
        .collect();
    let post = |nu_min: f64| -> Vec<Complex64> {
        (0..n)
            .map(|k| Complex64::from_polar(1.0, -nu_min * (k as f64 - c) * dt))
            .collect()
    };

    // idler axis is contiguous in row-major order
    let mut data: Vec<Complex64> = jsa.amplitude.iter().copied().collect();
    transform_axis(&mut data, n, &pre, &post(g.nu_i_min));
    let mut data = transpose(&data, n);
    transform_axis(&mut data, n, &pre, &post(g.nu_s_min));
    let data = transpose(&data, n);

    let scale = dnu * dnu / (2.0 * PI);
    let amplitude = Array2::from_shape_vec((n, n), data)
        .map_err(|e| Error::Shape(e.to_string()))?
        .mapv(|z| z * scale);
    let mut provenance = jsa.provenance.clone();
    provenance.notes.push("joint temporal amplitude".into());
    Ok(JointTemporalAmplitude {
        n,
        dt,
        amplitude,
        provenance,
    })
}

/// FWHMs of `|JTA|^2` projected onto the difference time `t_s - t_i` and the
/// sum time `t_s + t_i`. On the square time grid every diagonal sits at an
/// exact multiple of `dt` in both coordinates, so projection is plain binning.
pub fn diagonal_widths(jta: &JointTemporalAmplitude) -> Result<(f64, f64)> {
    let n = jta.n;
    let intensity = jta.amplitude.mapv(|z| z.norm_sqr());
    let peak = intensity.iter().copied().fold(0.0f64, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("all-zero JTA".into()));
    }
    let edge = (0..n)
        .flat_map(|k| [intensity[[0, k]], intensity[[n - 1, k]], intensity[[k, 0]], intensity[[k, n - 1]]])
        .fold(0.0f64, f64::max);
    if edge > EDGE_TOLERANCE * peak {
        return Err(Error::Coverage(format!(
            "JTA reaches the time-window edge ({:.2e} of peak)",
            edge / peak
        )));
    }
    let mut minus = vec![0.0; 2 * n - 1];
    let mut plus = vec![0.0; 2 * n - 1];
    for ((p, q), &v) in intensity.indexed_iter() {
        minus[p + n - 1 - q] += v;
        plus[p + q] += v;
    }
    let c = (n / 2) as f64;
    let t_minus: Vec<f64> = (0..2 * n - 1)
        .map(|d| (d as f64 - (n - 1) as f64) * jta.dt)
        .collect();
    let t_plus: Vec<f64> = (0..2 * n - 1)
        .map(|s| (s as f64 - 2.0 * c) * jta.dt)
        .collect();
    Ok((
        intensity_fwhm(&t_minus, &minus)?,
        intensity_fwhm(&t_plus, &plus)?,
    ))
}

/// Intensity-FWHM duration of the pump pulse. The spectral phase
/// `beta nu^2` stretches the transform-limited duration by
/// `sqrt(1 + (beta sigma_p^2)^2)`.
pub fn pump_duration(pump: &PumpSpec) -> f64 {
    let s2 = pump.sigma_p * pump.sigma_p;
    let tl = units::gaussian_fwhm_factor() / pump.sigma_p;
    tl * (1.0 + (pump.beta * s2).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// FWHM of the difference time `t_s - t_i` (s).
    pub dt_minus: f64,
    /// FWHM of the sum time `t_s + t_i` (s).
    pub dt_plus: f64,
    pub pump_duration: f64,
    /// `pump_duration / dt_minus`; above 1 the pair resolves time differences
    /// more finely than the pump pulse.
    pub gain_minus: f64,
    pub gain_plus: f64,
}

pub fn timing_gain(jta: &JointTemporalAmplitude, pump: &PumpSpec) -> Result<TimingReport> {
    let (dt_minus, dt_plus) = diagonal_widths(jta)?;
    let pump_duration = pump_duration(pump);
    Ok(TimingReport {
        dt_minus,
        dt_plus,
        pump_duration,
        gain_minus: pump_duration / dt_minus,
        gain_plus: pump_duration / dt_plus,
    })
}
