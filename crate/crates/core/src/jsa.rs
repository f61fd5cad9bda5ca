//! Joint spectral amplitude: construction on a grid, the closed-form Gaussian
//! coefficients, intensities, marginals, spectral filtering and correlation
//! classification.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::spectral::{
    phasematching_envelope, pump_envelope, PhasematchSpec, Profile, PumpSpec,
};
use crate::units;

/// Minimum samples per marginal FWHM before a grid is flagged as coarse.
pub const MIN_SAMPLES_PER_FWHM: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Model { pump: PumpSpec, pm: PhasematchSpec },
    /// Imported intensity with an assumed flat phase.
    Measured { origin: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub normalized: bool,
    /// Diagnostics and processing history, oldest first.
    pub notes: Vec<String>,
}

impl Provenance {
    /// HOM predictions from this state are approximate (unmeasured phase).
    pub fn is_approximate(&self) -> bool {
        matches!(self.source, Source::Measured { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Peak modulus of the model product is 1.
    Peak,
    /// `sum |f|^2 d nu_s d nu_i = 1`.
    L2,
}

/// Complex amplitude `f(nu_s, nu_i)` sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    pub grid: FrequencyGrid,
    /// Indexed `[signal, idler]`.
    pub amplitude: Array2<Complex64>,
    pub provenance: Provenance,
}

impl JointSpectralAmplitude {
    pub fn from_parts(
        grid: FrequencyGrid,
        amplitude: Array2<Complex64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if amplitude.dim() != (grid.n_s, grid.n_i) {
            return Err(Error::Shape(format!(
                "amplitude is {:?} but grid is {}x{}",
                amplitude.dim(),
                grid.n_s,
                grid.n_i
            )));
        }
        if amplitude.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("JSA contains non-finite entries".into()));
        }
        Ok(Self {
            grid,
            amplitude,
            provenance,
        })
    }

    /// `sum |f|^2 d nu_s d nu_i`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain("JSA is not normalizable".into()));
        }
        let scale = 1.0 / n.sqrt();
        let mut out = self.clone();
        out.amplitude.mapv_inplace(|z| z * scale);
        out.provenance.normalized = true;
        Ok(out)
    }

    pub fn model(&self) -> Option<(&PumpSpec, &PhasematchSpec)> {
        match &self.provenance.source {
            Source::Model { pump, pm } => Some((pump, pm)),
            Source::Measured { .. } => None,
        }
    }
}

/// Samples `alpha(nu_s + nu_i) phi(nu_s, nu_i)` on `grid`. The linear
/// phasematching phase is dropped.
pub fn build_jsa(
    pump: &PumpSpec,
    pm: &PhasematchSpec,
    grid: &FrequencyGrid,
    normalization: Normalization,
) -> Result<JointSpectralAmplitude> {
    pump.validate()?;
    pm.validate()?;
    let nu_s = grid.signal_axis();
    let nu_i = grid.idler_axis();
    let data: Vec<Complex64> = nu_s
        .par_iter()
        .flat_map_iter(|&s| {
            nu_i.iter()
                .map(move |&i| pump_envelope(pump, s + i) * phasematching_envelope(pm, s, i))
        })
        .collect();
    let amplitude = Array2::from_shape_vec((grid.n_s, grid.n_i), data)
        .map_err(|e| Error::Shape(e.to_string()))?;
    let mut jsa = JointSpectralAmplitude::from_parts(
        *grid,
        amplitude,
        Provenance {
            source: Source::Model {
                pump: *pump,
                pm: *pm,
            },
            normalized: false,
            notes: Vec::new(),
        },
    )?;
    if let Some(note) = coarse_grid_diagnostic(&jsa) {
        jsa.provenance.notes.push(note);
    }
    match normalization {
        Normalization::Peak => Ok(jsa),
        Normalization::L2 => jsa.normalized(),
    }
}

fn coarse_grid_diagnostic(jsa: &JointSpectralAmplitude) -> Option<String> {
    let (ms, mi) = match marginals(jsa) {
        Ok(m) => m,
        Err(e) => return Some(format!("warning: marginals unavailable: {e}")),
    };
    let fs = intensity_fwhm(&jsa.grid.signal_axis(), &ms);
    let fi = intensity_fwhm(&jsa.grid.idler_axis(), &mi);
    match (fs, fi) {
        (Ok(fs), Ok(fi)) => {
            let per_s = fs / jsa.grid.d_nu_s();
            let per_i = fi / jsa.grid.d_nu_i();
            (per_s.min(per_i) < MIN_SAMPLES_PER_FWHM).then(|| {
                format!(
                    "warning: coarse grid, {:.1} signal / {:.1} idler samples per marginal FWHM",
                    per_s, per_i
                )
            })
        }
        _ => Some("warning: marginal FWHM not resolved by the grid".into()),
    }
}

/// Coefficients of the Gaussian JSA
/// `exp[-(T_ss nu_s^2 + T_ii nu_i^2 + 2 T_si nu_s nu_i)]`, where each field
/// holds the complex square `T^2` (s^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianJsaParams {
    pub t_ss: Complex64,
    pub t_ii: Complex64,
    pub t_si: Complex64,
}

impl GaussianJsaParams {
    /// `T_lm^2 = 1/sigma_p^2 + (gamma/4) tau_l tau_m - i beta`.
    pub fn new(pump: &PumpSpec, pm: &PhasematchSpec) -> Result<Self> {
        if pm.profile != Profile::Gaussian {
            return Err(Error::UnsupportedProfile(format!(
                "closed-form JSA coefficients need the gaussian profile, got {}",
                pm.profile
            )));
        }
        let p = 1.0 / (pump.sigma_p * pump.sigma_p);
        let q = pm.gamma / 4.0;
        let coeff = |a: f64, b: f64| Complex64::new(p + q * a * b, -pump.beta);
        Ok(Self {
            t_ss: coeff(pm.tau_s, pm.tau_s),
            t_ii: coeff(pm.tau_i, pm.tau_i),
            t_si: coeff(pm.tau_s, pm.tau_i),
        })
    }

    pub fn eval(&self, nu_s: f64, nu_i: f64) -> Complex64 {
        (-(self.t_ss * nu_s * nu_s + self.t_ii * nu_i * nu_i + 2.0 * self.t_si * nu_s * nu_i))
            .exp()
    }

    /// Determinant of the real part of the quadratic form.
    fn real_det(&self) -> f64 {
        self.t_ss.re * self.t_ii.re - self.t_si.re * self.t_si.re
    }

    /// Intensity-FWHMs (rad/s) of the signal and idler marginals.
    pub fn marginal_fwhms(&self) -> Result<(f64, f64)> {
        let det = self.real_det();
        if !(det > 0.0) || self.t_ss.re <= 0.0 || self.t_ii.re <= 0.0 {
            return Err(Error::Degenerate(
                "Gaussian JSA is not integrable (tau_s == tau_i?)".into(),
            ));
        }
        // |f|^2 = exp(-2 v^T R v): covariance (4R)^-1
        let var_s = self.t_ii.re / (4.0 * det);
        let var_i = self.t_ss.re / (4.0 * det);
        let k = units::gaussian_fwhm_factor();
        Ok((k * var_s.sqrt(), k * var_i.sqrt()))
    }

    /// Pearson correlation of `|f|^2`.
    pub fn intensity_correlation(&self) -> f64 {
        -self.t_si.re / (self.t_ss.re * self.t_ii.re).sqrt()
    }
}

/// `|f|^2`.
pub fn jsi(jsa: &JointSpectralAmplitude) -> Array2<f64> {
    jsa.amplitude.mapv(|z| z.norm_sqr())
}

/// Signal and idler marginal spectra (row and column sums of the JSI times
/// the grid spacing).
pub fn marginals(jsa: &JointSpectralAmplitude) -> Result<(Vec<f64>, Vec<f64>)> {
    let intensity = jsi(jsa);
    if intensity.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all-zero JSA".into()));
    }
    let d_s = jsa.grid.d_nu_s();
    let d_i = jsa.grid.d_nu_i();
    let signal = intensity.rows().into_iter().map(|r| r.sum() * d_i).collect();
    let idler = intensity
        .columns()
        .into_iter()
        .map(|c| c.sum() * d_s)
        .collect();
    Ok((signal, idler))
}

/// Full width at half maximum of a sampled curve, interpolating linearly
/// between the samples that bracket the half-maximum on either side of the
/// peak.
pub fn intensity_fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    let (left, right) = half_max_crossings(x, y)?;
    Ok(right - left)
}

/// Left and right half-maximum crossings around the peak of `y`.
pub fn half_max_crossings(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Shape(format!(
            "FWHM needs matching axes with at least 3 samples, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (peak_idx, peak) = y
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    if !(peak > 0.0) || !peak.is_finite() {
        return Err(Error::Degenerate("curve has no positive peak".into()));
    }
    let half = 0.5 * refined_peak(y, peak_idx);
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) / (y[b] - y[a]) * (x[b] - x[a]);

    let left = (0..peak_idx)
        .rev()
        .find(|&i| y[i] < half)
        .map(|i| cross(i, i + 1))
        .ok_or_else(|| Error::Coverage("curve does not fall to half maximum on the left".into()))?;
    let right = (peak_idx + 1..y.len())
        .find(|&i| y[i] < half)
        .map(|i| cross(i - 1, i))
        .ok_or_else(|| {
            Error::Coverage("curve does not fall to half maximum on the right".into())
        })?;
    Ok((left, right))
}

/// Peak height from the parabola through the largest sample and its
/// neighbours, so the half level does not depend on where the samples fall.
pub fn refined_peak(y: &[f64], idx: usize) -> f64 {
    if idx == 0 || idx + 1 >= y.len() {
        return y[idx];
    }
    let (a, b, c) = (y[idx - 1], y[idx], y[idx + 1]);
    let curvature = a - 2.0 * b + c;
    if !(curvature < 0.0) {
        return b;
    }
    b - 0.125 * (c - a) * (c - a) / curvature
}

/// Marginal intensity-FWHMs (rad/s) of a gridded JSA.
pub fn marginal_fwhms(jsa: &JointSpectralAmplitude) -> Result<(f64, f64)> {
    let (ms, mi) = marginals(jsa)?;
    Ok((
        intensity_fwhm(&jsa.grid.signal_axis(), &ms)?,
        intensity_fwhm(&jsa.grid.idler_axis(), &mi)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    Rect,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterTarget {
    Signal,
    Idler,
    Both,
}

/// Spectral filter acting on detunings (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralFilter {
    pub shape: FilterShape,
    pub center: f64,
    /// FWHM for the gaussian shape, full width for rect.
    pub width: f64,
    pub target: FilterTarget,
}

impl SpectralFilter {
    pub fn gaussian(center: f64, fwhm: f64, target: FilterTarget) -> Self {
        Self {
            shape: FilterShape::Gaussian,
            center,
            width: fwhm,
            target,
        }
    }

    pub fn rect(center: f64, width: f64, target: FilterTarget) -> Self {
        Self {
            shape: FilterShape::Rect,
            center,
            width,
            target,
        }
    }

    /// Amplitude transmission at detuning `nu`.
    pub fn transmission(&self, nu: f64) -> f64 {
        let d = nu - self.center;
        match self.shape {
            FilterShape::Rect => {
                if d.abs() <= 0.5 * self.width {
                    1.0
                } else {
                    0.0
                }
            }
            FilterShape::Gaussian => {
                let sigma = units::fwhm_to_sigma(self.width);
                (-(d / sigma).powi(2)).exp()
            }
        }
    }
}

pub fn apply_spectral_filter(
    jsa: &JointSpectralAmplitude,
    filter: &SpectralFilter,
) -> Result<JointSpectralAmplitude> {
    if !(filter.width > 0.0) {
        return Err(Error::Domain(format!(
            "filter width must be positive, got {}",
            filter.width
        )));
    }
    let grid = &jsa.grid;
    let one = |_: f64| 1.0;
    let t_s: Vec<f64> = match filter.target {
        FilterTarget::Signal | FilterTarget::Both => {
            grid.signal_axis().into_iter().map(|v| filter.transmission(v)).collect()
        }
        FilterTarget::Idler => grid.signal_axis().into_iter().map(one).collect(),
    };
    let t_i: Vec<f64> = match filter.target {
        FilterTarget::Idler | FilterTarget::Both => {
            grid.idler_axis().into_iter().map(|v| filter.transmission(v)).collect()
        }
        FilterTarget::Signal => grid.idler_axis().into_iter().map(one).collect(),
    };
    let before = jsa.norm_sqr();
    let mut out = jsa.clone();
    for ((j, k), z) in out.amplitude.indexed_iter_mut() {
        *z *= t_s[j] * t_i[k];
    }
    let after = out.norm_sqr();
    if !(after > 1e-30 * before) {
        return Err(Error::EmptyState(format!(
            "{:?} filter at {:.4e} rad/s passes nothing on this grid",
            filter.shape, filter.center
        )));
    }
    out.provenance.normalized = false;
    out.provenance.notes.push(format!(
        "filtered: {:?} {:?} center {:.6e} rad/s width {:.6e} rad/s",
        filter.shape, filter.target, filter.center, filter.width
    ));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationLabel {
    Anticorrelated,
    Decorrelated,
    Correlated,
}

impl std::fmt::Display for CorrelationLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorrelationLabel::Anticorrelated => "anticorrelated",
            CorrelationLabel::Decorrelated => "decorrelated",
            CorrelationLabel::Correlated => "correlated",
        })
    }
}

/// `|rho|` at or below this is labeled decorrelated.
pub const DECORRELATED_DEAD_ZONE: f64 = 0.1;

/// First side lobe of `sinc^2` peaks at about 4.7% of the main lobe.
pub const SINC_SIDELOBE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub label: CorrelationLabel,
}

/// Pearson correlation between signal and idler detunings under the JSI.
pub fn correlation_classification(grid: &FrequencyGrid, jsi: &Array2<f64>) -> Result<Correlation> {
    correlation_classification_with_floor(grid, jsi, 0.0)
}

/// As [`correlation_classification`], ignoring samples below
/// `floor * max(jsi)`. A floor just above the sinc side lobes keeps their slow
/// `1/x^2` decay from dominating the second moments.
pub fn correlation_classification_with_floor(
    grid: &FrequencyGrid,
    jsi: &Array2<f64>,
    floor: f64,
) -> Result<Correlation> {
    if jsi.dim() != (grid.n_s, grid.n_i) {
        return Err(Error::Shape("JSI does not match grid".into()));
    }
    let peak = jsi.iter().copied().fold(0.0f64, f64::max);
    let cut = floor * peak;
    let weight = |v: f64| if v >= cut { v } else { 0.0 };
    let total: f64 = jsi.iter().map(|&v| weight(v)).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("JSI has no weight".into()));
    }
    let (mut ms, mut mi) = (0.0, 0.0);
    for ((j, k), &v) in jsi.indexed_iter() {
        let w = weight(v) / total;
        ms += w * grid.nu_s(j);
        mi += w * grid.nu_i(k);
    }
    let (mut vs, mut vi, mut cov) = (0.0, 0.0, 0.0);
    for ((j, k), &v) in jsi.indexed_iter() {
        let w = weight(v) / total;
        let ds = grid.nu_s(j) - ms;
        let di = grid.nu_i(k) - mi;
        vs += w * ds * ds;
        vi += w * di * di;
        cov += w * ds * di;
    }
    let scale_s = grid.d_nu_s() * grid.d_nu_s();
    let scale_i = grid.d_nu_i() * grid.d_nu_i();
    if vs <= 1e-24 * scale_s || vi <= 1e-24 * scale_i {
        return Err(Error::Degenerate("zero variance on one axis".into()));
    }
    let rho = (cov / (vs * vi).sqrt()).clamp(-1.0, 1.0);
    let label = if rho.abs() <= DECORRELATED_DEAD_ZONE {
        CorrelationLabel::Decorrelated
    } else if rho < 0.0 {
        CorrelationLabel::Anticorrelated
    } else {
        CorrelationLabel::Correlated
    };
    Ok(Correlation { rho, label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::ppktp_with_pump_fwhm;
    use crate::spectral::DEFAULT_GAMMA;
    use crate::units::nm;

    fn gaussian_pm(tau_s: f64, tau_i: f64) -> PhasematchSpec {
        PhasematchSpec {
            length: 1e-2,
            tau_s,
            tau_i,
            gamma: DEFAULT_GAMMA,
            profile: Profile::Gaussian,
            omega_s0: 1.2e15,
            omega_i0: 1.2e15,
        }
    }

    fn pump(sigma: f64, beta: f64) -> PumpSpec {
        PumpSpec::new(2.4e15, sigma, beta).unwrap()
    }

    #[test]
    fn grid_matches_closed_form() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 128).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let params = GaussianJsaParams::new(&pp, &pm).unwrap();
        for ((j, k), z) in jsa.amplitude.indexed_iter() {
            let exact = params.eval(grid.nu_s(j), grid.nu_i(k));
            if exact.norm() > 1e-200 {
                assert!((z - exact).norm() <= 1e-12 * exact.norm(), "{z} vs {exact}");
            }
        }
    }

    #[test]
    fn chirped_grid_matches_closed_form() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 2e-25);
        let grid = FrequencyGrid::auto(&pp, &pm, 64).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let params = GaussianJsaParams::new(&pp, &pm).unwrap();
        for ((j, k), z) in jsa.amplitude.indexed_iter() {
            let exact = params.eval(grid.nu_s(j), grid.nu_i(k));
            if exact.norm() > 1e-200 {
                assert!((z - exact).norm() <= 1e-12 * exact.norm());
            }
        }
    }

    #[test]
    fn params_examples() {
        let (ts, ti) = (1.0e-12, -0.5e-12);
        let sigma = (4.0 / (DEFAULT_GAMMA * ts * -ti)).sqrt();
        let p = GaussianJsaParams::new(&pump(sigma, 0.0), &gaussian_pm(ts, ti)).unwrap();
        assert!(p.t_si.norm() < 1e-12 * p.t_ss.norm());

        let b = 3.3e-26;
        let p = GaussianJsaParams::new(&pump(sigma, b), &gaussian_pm(ts, ti)).unwrap();
        for c in [p.t_ss, p.t_ii, p.t_si] {
            assert_eq!(c.im, -b);
        }

        let p = GaussianJsaParams::new(&pump(1e30, b), &gaussian_pm(ts, ti)).unwrap();
        let q = DEFAULT_GAMMA / 4.0;
        assert!((p.t_ss.re - q * ts * ts).abs() < 1e-12 * q * ts * ts);
        assert!((p.t_si.re - q * ts * ti).abs() < 1e-12 * q * ts * ti.abs());

        let sinc = gaussian_pm(ts, ti).with_profile(Profile::Sinc);
        assert!(matches!(
            GaussianJsaParams::new(&pump(sigma, 0.0), &sinc),
            Err(Error::UnsupportedProfile(_))
        ));
    }

    #[test]
    fn separable_marginal_fwhm() {
        // decorrelated: T_si = 0, marginal exp(-2 T_ss nu^2)
        let (ts, ti) = (1.0e-12, -0.5e-12);
        let sigma = (4.0 / (DEFAULT_GAMMA * ts * -ti)).sqrt();
        let pp = pump(sigma, 0.0);
        let pm = gaussian_pm(ts, ti);
        let params = GaussianJsaParams::new(&pp, &pm).unwrap();
        let grid = FrequencyGrid::auto(&pp, &pm, 256).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let (fs, fi) = marginal_fwhms(&jsa).unwrap();
        let exact_s = 2.0 * (std::f64::consts::LN_2 / (2.0 * params.t_ss.re)).sqrt();
        let exact_i = 2.0 * (std::f64::consts::LN_2 / (2.0 * params.t_ii.re)).sqrt();
        assert!((fs - exact_s).abs() / exact_s < 0.005);
        assert!((fi - exact_i).abs() / exact_i < 0.005);
        let (as_, ai) = params.marginal_fwhms().unwrap();
        assert!((as_ - exact_s).abs() / exact_s < 1e-12);
        assert!((ai - exact_i).abs() / exact_i < 1e-12);
    }

    #[test]
    fn fwhm_accuracy_at_eight_samples() {
        let s: f64 = 1.0;
        let fwhm = units::gaussian_fwhm_factor() * s;
        for offset in [0.0, 0.13, 0.37, 0.5] {
            let dx = fwhm / 8.0;
            let x: Vec<f64> = (-40..=40).map(|i| (i as f64 + offset) * dx).collect();
            let y: Vec<f64> = x.iter().map(|x| (-x * x / (2.0 * s * s)).exp()).collect();
            let got = intensity_fwhm(&x, &y).unwrap();
            assert!((got - fwhm).abs() / fwhm < 0.005, "{got} vs {fwhm}");
        }
    }

    #[test]
    fn fwhm_errors() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(intensity_fwhm(&x, &[0.0; 4]), Err(Error::Degenerate(_))));
        assert!(matches!(
            intensity_fwhm(&x, &[1.0, 0.9, 0.8, 0.1]),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn symmetric_state_has_identical_marginals() {
        let pm = gaussian_pm(1e-12, -1e-12).with_profile(Profile::Sinc);
        let pp = pump(3e12, 1e-26);
        let grid = FrequencyGrid::auto(&pp, &pm, 128).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let (ms, mi) = marginals(&jsa).unwrap();
        for (a, b) in ms.iter().zip(&mi) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn jsi_is_chirp_independent() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let grid = FrequencyGrid::auto(&pump(3e12, 0.0), &pm, 128).unwrap();
        let a = jsi(&build_jsa(&pump(3e12, 0.0), &pm, &grid, Normalization::Peak).unwrap());
        let b = jsi(&build_jsa(&pump(3e12, 5e-26), &pm, &grid, Normalization::Peak).unwrap());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-300));
        }
    }

    #[test]
    fn l2_normalization() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 64).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::L2).unwrap();
        assert!((jsa.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(jsa.provenance.normalized);
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let coarse = FrequencyGrid::auto(&pp, &pm, 16).unwrap();
        let jsa = build_jsa(&pp, &pm, &coarse, Normalization::Peak).unwrap();
        assert!(jsa.provenance.notes.iter().any(|n| n.contains("coarse")));
        let fine = FrequencyGrid::auto(&pp, &pm, 256).unwrap();
        let jsa = build_jsa(&pp, &pm, &fine, Normalization::Peak).unwrap();
        assert!(jsa.provenance.notes.is_empty(), "{:?}", jsa.provenance.notes);
    }

    #[test]
    fn filter_wide_is_identity() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 64).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        for shape in [FilterShape::Gaussian, FilterShape::Rect] {
            let f = SpectralFilter {
                shape,
                center: 0.0,
                width: 1e30,
                target: FilterTarget::Both,
            };
            let out = apply_spectral_filter(&jsa, &f).unwrap();
            for (a, b) in out.amplitude.iter().zip(jsa.amplitude.iter()) {
                assert!((a - b).norm() <= 1e-15 * b.norm());
            }
        }
    }

    #[test]
    fn rect_filter_sets_marginal_width() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 512).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let (fs, _) = marginal_fwhms(&jsa).unwrap();
        let width = 0.5 * fs;
        let out =
            apply_spectral_filter(&jsa, &SpectralFilter::rect(0.0, width, FilterTarget::Signal))
                .unwrap();
        let (got, _) = marginal_fwhms(&out).unwrap();
        assert!((got - width).abs() <= 1.01 * grid.d_nu_s(), "{got} vs {width}");
    }

    #[test]
    fn filter_outside_grid_is_empty() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(3e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 64).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let far = 10.0 * grid.nu_s_max;
        let f = SpectralFilter::rect(far, grid.d_nu_s(), FilterTarget::Signal);
        assert!(matches!(apply_spectral_filter(&jsa, &f), Err(Error::EmptyState(_))));
        let f = SpectralFilter::gaussian(far, grid.d_nu_s(), FilterTarget::Idler);
        assert!(matches!(apply_spectral_filter(&jsa, &f), Err(Error::EmptyState(_))));
    }

    #[test]
    fn separable_is_decorrelated() {
        let grid = FrequencyGrid::square(65, 4.0).unwrap();
        let intensity = Array2::from_shape_fn((65, 65), |(j, k)| {
            let (s, i) = (grid.nu_s(j), grid.nu_i(k));
            (-s * s).exp() * (-2.0 * i * i).exp()
        });
        let c = correlation_classification(&grid, &intensity).unwrap();
        assert!(c.rho.abs() < 1e-12);
        assert_eq!(c.label, CorrelationLabel::Decorrelated);
        let flat = Array2::from_shape_fn((65, 65), |(j, _)| if j == 3 { 1.0 } else { 0.0 });
        assert!(matches!(
            correlation_classification(&grid, &flat),
            Err(Error::Degenerate(_))
        ));
    }

    fn preset_rho(fwhm_nm: f64, profile: Profile) -> Correlation {
        let mut preset = ppktp_with_pump_fwhm(nm(fwhm_nm)).unwrap();
        preset.pm.profile = profile;
        let grid = FrequencyGrid::auto(&preset.pump, &preset.pm, 256).unwrap();
        let jsa = build_jsa(&preset.pump, &preset.pm, &grid, Normalization::Peak).unwrap();
        correlation_classification_with_floor(&grid, &jsi(&jsa), SINC_SIDELOBE_FLOOR).unwrap()
    }

    #[test]
    fn ppktp_correlation_types() {
        for profile in [Profile::Gaussian, Profile::Sinc] {
            let a = preset_rho(0.7, profile);
            assert!(a.rho < -0.5, "{profile}: {a:?}");
            assert_eq!(a.label, CorrelationLabel::Anticorrelated);
            let d = preset_rho(2.0, profile);
            assert_eq!(d.label, CorrelationLabel::Decorrelated, "{profile}: {d:?}");
            let c = preset_rho(4.5, profile);
            assert!(c.rho > 0.0);
            assert_eq!(c.label, CorrelationLabel::Correlated);
        }
    }

    #[test]
    fn analytic_correlation_matches_grid() {
        let pm = gaussian_pm(1.3e-12, -0.6e-12);
        let pp = pump(5e12, 0.0);
        let grid = FrequencyGrid::auto(&pp, &pm, 256).unwrap();
        let jsa = build_jsa(&pp, &pm, &grid, Normalization::Peak).unwrap();
        let c = correlation_classification(&grid, &jsi(&jsa)).unwrap();
        let exact = GaussianJsaParams::new(&pp, &pm).unwrap().intensity_correlation();
        assert!((c.rho - exact).abs() < 1e-6, "{} vs {exact}", c.rho);
    }
}
