//! Weighted least-squares fits of HOM dips.
//!
//! The dip model is `y(tau) = b (1 - V g((tau - tau0) / T))` where `g` has
//! unit peak and unit FWHM, so the fitted `T` is the correlation time
//! directly. `g` is either a Gaussian or a kernel tabulated from a simulated
//! scan (typically of the sinc-profile state).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hom::{DelayScan, MIN_VISIBILITY};
use crate::io::MeasuredScan;
use crate::jsa::{half_max_crossings, refined_peak};
use crate::units;

pub const MAX_ITERATIONS: usize = 200;
/// Fitted visibilities above this raise a model-mismatch warning.
pub const VISIBILITY_CEILING: f64 = 1.05;

const N_PARAMS: usize = 4;
const LN2: f64 = std::f64::consts::LN_2;

/// Dip profile with unit peak depth and unit FWHM, sampled on offsets in
/// units of its FWHM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipKernel {
    offsets: Vec<f64>,
    depth: Vec<f64>,
}

impl DipKernel {
    /// Normalizes the dip of a simulated scan: depth `1 - R`, centered on the
    /// midpoint of its half-depth crossings.
    pub fn from_scan(scan: &DelayScan) -> Result<Self> {
        let depth: Vec<f64> = scan.rates.iter().map(|r| 1.0 - r).collect();
        let idx = (0..depth.len())
            .max_by(|&a, &b| depth[a].total_cmp(&depth[b]))
            .ok_or_else(|| Error::Shape("empty scan".into()))?;
        let peak = refined_peak(&depth, idx);
        if peak < MIN_VISIBILITY {
            return Err(Error::NoDip {
                visibility: peak,
                threshold: MIN_VISIBILITY,
            });
        }
        let (left, right) = half_max_crossings(&scan.delays, &depth)?;
        let (center, width) = (0.5 * (left + right), right - left);
        Ok(Self {
            offsets: scan.delays.iter().map(|t| (t - center) / width).collect(),
            depth: depth.iter().map(|d| d / peak).collect(),
        })
    }

    /// Zero outside the tabulated range.
    pub fn eval(&self, u: f64) -> f64 {
        let x = &self.offsets;
        if u < x[0] || u > x[x.len() - 1] {
            return 0.0;
        }
        let i = x.partition_point(|&a| a <= u).clamp(1, x.len() - 1);
        let w = (u - x[i - 1]) / (x[i] - x[i - 1]);
        self.depth[i - 1] + w * (self.depth[i] - self.depth[i - 1])
    }

    pub fn span(&self) -> (f64, f64) {
        (self.offsets[0], self.offsets[self.offsets.len() - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DipModel {
    Gaussian,
    Kernel(DipKernel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DipModelKind {
    GaussianDip,
    SincKernelDip,
}

impl DipModel {
    pub fn kind(&self) -> DipModelKind {
        match self {
            Self::Gaussian => DipModelKind::GaussianDip,
            Self::Kernel(_) => DipModelKind::SincKernelDip,
        }
    }

    /// Unit-peak, unit-FWHM dip shape.
    pub fn shape(&self, u: f64) -> f64 {
        match self {
            Self::Gaussian => (-4.0 * LN2 * u * u).exp(),
            Self::Kernel(k) => k.eval(u),
        }
    }

    /// `[baseline, visibility, center, width]`, delays in the same unit as
    /// center and width.
    fn predict(&self, p: &[f64; N_PARAMS], tau: f64) -> f64 {
        p[0] * (1.0 - p[1] * self.shape((tau - p[2]) / p[3]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyMethod {
    /// Covariance from user-supplied per-point uncertainties.
    SuppliedSigma,
    /// Poisson variances, refined to the fitted model after a first pass.
    PoissonCovariance,
    /// Unit weights, covariance scaled by the reduced chi-square.
    ResidualScaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Dip FWHM (s).
    pub t_c: f64,
    pub t_c_sigma: f64,
    pub visibility: f64,
    pub visibility_sigma: f64,
    pub baseline: f64,
    pub baseline_sigma: f64,
    /// Delay of the dip center (s).
    pub center: f64,
    pub center_sigma: f64,
    pub model: DipModelKind,
    /// RMS of unweighted residuals, in count units.
    pub residual_rms: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub uncertainty_method: UncertaintyMethod,
    pub warnings: Vec<String>,
}

impl FitReport {
    /// Fitted curve at the given delays (s).
    pub fn curve(&self, model: &DipModel, delays: &[f64]) -> Vec<f64> {
        let p = [
            self.baseline,
            self.visibility,
            units::to_ps(self.center),
            units::to_ps(self.t_c),
        ];
        delays
            .iter()
            .map(|&t| model.predict(&p, units::to_ps(t)))
            .collect()
    }
}

struct Problem<'a> {
    model: &'a DipModel,
    /// Delays in ps.
    x: Vec<f64>,
    y: &'a [f64],
    sigma: Vec<f64>,
}

struct Solution {
    params: [f64; N_PARAMS],
    chi2: f64,
    jacobian: DMatrix<f64>,
    iterations: usize,
}

impl Problem<'_> {
    fn residuals(&self, p: &[f64; N_PARAMS]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(&self.sigma)
                .map(|((&t, &y), &s)| (y - self.model.predict(p, t)) / s),
        )
    }

    /// Jacobian of the weighted model, `d(m_i / s_i) / d p_k`, by central
    /// differences.
    fn jacobian(&self, p: &[f64; N_PARAMS]) -> DMatrix<f64> {
        let scales = [p[0].abs().max(1e-12), p[1].abs().max(1e-3), p[3], p[3]];
        let mut jac = DMatrix::zeros(self.x.len(), N_PARAMS);
        for k in 0..N_PARAMS {
            let h = 1e-6 * scales[k];
            let (mut up, mut down) = (*p, *p);
            up[k] += h;
            down[k] -= h;
            for (i, (&t, &s)) in self.x.iter().zip(&self.sigma).enumerate() {
                jac[(i, k)] =
                    (self.model.predict(&up, t) - self.model.predict(&down, t)) / (2.0 * h * s);
            }
        }
        jac
    }

    fn solve(&self, start: [f64; N_PARAMS]) -> Result<Solution> {
        let mut p = start;
        let mut chi2 = self.residuals(&p).norm_squared();
        let mut lambda = 1e-3;
        for iteration in 1..=MAX_ITERATIONS {
            let jac = self.jacobian(&p);
            let r = self.residuals(&p);
            let jtj = jac.transpose() * &jac;
            let grad = jac.transpose() * &r;
            let mut improved = None;
            while lambda < 1e12 {
                let mut a = jtj.clone();
                for k in 0..N_PARAMS {
                    a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
                }
                let Some(step) = a.cholesky().map(|c| c.solve(&grad)) else {
                    lambda *= 10.0;
                    continue;
                };
                let mut trial = p;
                for k in 0..N_PARAMS {
                    trial[k] += step[k];
                }
                let chi2_trial = if trial[3] > 0.0 {
                    self.residuals(&trial).norm_squared()
                } else {
                    f64::INFINITY
                };
                if chi2_trial <= chi2 {
                    improved = Some((trial, chi2_trial, step));
                    lambda = (lambda / 10.0).max(1e-12);
                    break;
                }
                lambda *= 10.0;
            }
            let Some((trial, chi2_trial, step)) = improved else {
                // no downhill step at any damping: a minimum to working precision
                return Ok(Solution {
                    params: p,
                    chi2,
                    jacobian: jac,
                    iterations: iteration,
                });
            };
            let decrease = chi2 - chi2_trial;
            let step_small = (0..N_PARAMS).all(|k| {
                let scale = if k >= 2 { trial[3] } else { trial[k].abs().max(1e-3) };
                step[k].abs() <= 1e-10 * scale
            });
            p = trial;
            chi2 = chi2_trial;
            if step_small || decrease <= 1e-12 * chi2 + 1e-300 {
                return Ok(Solution {
                    params: p,
                    chi2,
                    jacobian: self.jacobian(&p),
                    iterations: iteration,
                });
            }
        }
        Err(Error::Fit(format!(
            "no convergence after {MAX_ITERATIONS} iterations; last parameters \
             baseline {:.6e}, visibility {:.6e}, center {:.6e} ps, width {:.6e} ps, chi2 {:.6e}",
            p[0], p[1], p[2], p[3], chi2
        )))
    }
}

/// Initial guess from the scan shape: outer-tenth baseline, half-depth
/// region for center and width.
fn initial_guess(x: &[f64], y: &[f64]) -> Result<[f64; N_PARAMS]> {
    let n = x.len();
    let edge = (n / 10).max(2);
    let baseline = (y[..edge].iter().sum::<f64>() + y[n - edge..].iter().sum::<f64>())
        / (2 * edge) as f64;
    if !(baseline > 0.0) {
        return Err(Error::Degenerate("scan has no positive baseline".into()));
    }
    let depth: Vec<f64> = y.iter().map(|v| baseline - v).collect();
    let max_depth = depth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = x[n - 1] - x[0];
    let inside: Vec<usize> = (0..n).filter(|&i| depth[i] > 0.5 * max_depth).collect();
    let (center, width) = match (inside.first(), inside.last()) {
        (Some(&a), Some(&b)) if max_depth > 0.0 => {
            let weight: f64 = inside.iter().map(|&i| depth[i]).sum();
            let c = inside.iter().map(|&i| depth[i] * x[i]).sum::<f64>() / weight;
            (c, (x[b] - x[a]).max(span / n as f64))
        }
        _ => (0.5 * (x[0] + x[n - 1]), 0.25 * span),
    };
    let visibility = (max_depth / baseline).clamp(0.05, 1.0);
    Ok([baseline, visibility, center, width])
}

/// Fits `model` to `scan`. Raw integer counts without uncertainties get
/// Poisson weights; rates without uncertainties get unit weights.
pub fn fit_dip(scan: &MeasuredScan, model: &DipModel) -> Result<FitReport> {
    if !scan.counts.iter().any(|&c| c > 0.0) {
        return Err(Error::Degenerate("scan has no counts".into()));
    }
    let x: Vec<f64> = scan.delays.iter().map(|&t| units::to_ps(t)).collect();
    let start = initial_guess(&x, &scan.counts)?;
    let n = x.len();

    let (method, solution, problem) = if let Some(sigma) = &scan.sigma {
        let problem = Problem { model, x, y: &scan.counts, sigma: sigma.clone() };
        (UncertaintyMethod::SuppliedSigma, problem.solve(start)?, problem)
    } else if scan.is_raw_counts() {
        let first = Problem {
            model,
            x: x.clone(),
            y: &scan.counts,
            sigma: scan.counts.iter().map(|c| c.max(1.0).sqrt()).collect(),
        };
        let pass = first.solve(start)?;
        let sigma = x
            .iter()
            .map(|&t| model.predict(&pass.params, t).max(1.0).sqrt())
            .collect();
        let problem = Problem { model, x, y: &scan.counts, sigma };
        let mut refined = problem.solve(pass.params)?;
        refined.iterations += pass.iterations;
        (UncertaintyMethod::PoissonCovariance, refined, problem)
    } else {
        let problem = Problem { model, x, y: &scan.counts, sigma: vec![1.0; n] };
        (UncertaintyMethod::ResidualScaled, problem.solve(start)?, problem)
    };

    let dof = n.saturating_sub(N_PARAMS).max(1) as f64;
    let reduced_chi2 = solution.chi2 / dof;
    let jac = &solution.jacobian;
    let mut cov = (jac.transpose() * jac)
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal matrix at the optimum".into()))?;
    if method == UncertaintyMethod::ResidualScaled {
        cov *= reduced_chi2;
    }
    let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();
    let p = solution.params;

    let residual_rms = (problem
        .x
        .iter()
        .zip(problem.y)
        .map(|(&t, &y)| (y - model.predict(&p, t)).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let mut warnings = Vec::new();
    if !(0.0..=VISIBILITY_CEILING).contains(&p[1]) {
        warnings.push(format!(
            "model mismatch: fitted visibility {:.4} outside [0, {VISIBILITY_CEILING}]",
            p[1]
        ));
    }
    let step = (problem.x[n - 1] - problem.x[0]) / (n - 1) as f64;
    if p[3] < 3.0 * step {
        warnings.push("dip is resolved by fewer than 3 samples per FWHM".into());
    }
    if p[2] - p[3] < problem.x[0] || p[2] + p[3] > problem.x[n - 1] {
        warnings.push("scan does not extend one FWHM beyond the dip on both sides".into());
    }
    if let DipModel::Kernel(k) = model {
        let (lo, hi) = k.span();
        if (problem.x[0] - p[2]) / p[3] < lo || (problem.x[n - 1] - p[2]) / p[3] > hi {
            warnings.push("scan extends beyond the tabulated kernel".into());
        }
    }

    Ok(FitReport {
        t_c: units::ps(p[3]),
        t_c_sigma: units::ps(sd(3)),
        visibility: p[1],
        visibility_sigma: sd(1),
        baseline: p[0],
        baseline_sigma: sd(0),
        center: units::ps(p[2]),
        center_sigma: units::ps(sd(2)),
        model: model.kind(),
        residual_rms,
        reduced_chi2,
        iterations: solution.iterations,
        uncertainty_method: method,
        warnings,
    })
}

/// Turns a simulated unit-baseline scan into a rate scan for fitting.
pub fn scan_from_rates(scan: &DelayScan) -> Result<MeasuredScan> {
    MeasuredScan::new(
        scan.delays.clone(),
        scan.rates.iter().map(|r| r.max(0.0)).collect(),
        None,
    )
}

/// Poisson counts with mean `baseline_counts * rate` at each delay.
pub fn synthetic_counts(scan: &DelayScan, baseline_counts: f64, seed: u64) -> Result<MeasuredScan> {
    if !(baseline_counts > 0.0) {
        return Err(Error::Domain("baseline counts must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = scan
        .rates
        .iter()
        .map(|&r| {
            let mean = baseline_counts * r.max(0.0);
            if mean > 0.0 {
                Poisson::new(mean)
                    .map(|d| d.sample(&mut rng))
                    .map_err(|e| Error::Domain(e.to_string()))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    MeasuredScan::new(scan.delays.clone(), counts, None)
}
