use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use biphoton::fit::{fit_dip, synthetic_counts, DipKernel, DipModel, FitReport};
use biphoton::grid::FrequencyGrid;
use biphoton::hom::{
    coincidence_scan, correlation_time_gaussian, default_delays, delay_grid, extract_dip,
    extract_dip_as, gaussian_dip_sigma, gaussian_scan, visibility_coefficient, DEFAULT_DELAY_POINTS,
};
use biphoton::io::{
    export_delay_scan, export_jsa_csv, export_jsi_csv, export_marginals_csv, export_scan, fmt_float,
    load_scan,
};
use biphoton::jsa::{
    apply_spectral_filter, build_jsa, correlation_classification,
    correlation_classification_with_floor, jsi, marginal_fwhms, FilterTarget, GaussianJsaParams,
    JointSpectralAmplitude, Normalization, SpectralFilter, SINC_SIDELOBE_FLOOR,
};
use biphoton::preset::BUILTIN;
use biphoton::report::table_report;
use biphoton::schmidt::schmidt_decompose;
use biphoton::temporal::{jta_from_jsa, timing_gain};
use biphoton::units::{
    angular_width_to_wavelength, frequency_fwhm, fwhm_to_sigma, nm, ps, to_nm, to_ps, wavelength_from_angular,
};
use biphoton::{HomModel, PhasematchSpec, Profile, SourcePreset};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{output_dir, sig9, write, Provenance, ResolvedSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    /// Quadrature over the sinc-profile JSA.
    NumericSinc,
    /// Quadrature over the Gaussian-profile JSA.
    NumericGaussian,
    /// Closed-form Gaussian dip.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArmArg {
    Signal,
    Idler,
    Both,
}

impl From<ArmArg> for FilterTarget {
    fn from(a: ArmArg) -> Self {
        match a {
            ArmArg::Signal => FilterTarget::Signal,
            ArmArg::Idler => FilterTarget::Idler,
            ArmArg::Both => FilterTarget::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pump FWHM in nm.
    PumpFwhm,
    /// Waveguide length in mm.
    Length,
    /// Pump chirp in fs^2.
    Chirp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModelArg {
    Gaussian,
    /// Kernel tabulated from the sinc-profile simulation of the source.
    SincKernel,
}

fn model_jsa(source: &ResolvedSource) -> Result<JointSpectralAmplitude> {
    let (pump, pm) = (&source.preset.pump, &source.preset.pm);
    let grid = FrequencyGrid::auto(pump, pm, source.grid_n)?;
    Ok(build_jsa(pump, pm, &grid, Normalization::Peak)?)
}

fn nm_widths(pm: &PhasematchSpec, fs: f64, fi: f64) -> (f64, f64) {
    (
        to_nm(angular_width_to_wavelength(wavelength_from_angular(pm.omega_s0), fs)),
        to_nm(angular_width_to_wavelength(wavelength_from_angular(pm.omega_i0), fi)),
    )
}

fn json_text(provenance: &Provenance, body: Value) -> Result<String> {
    let mut doc = json!({ "provenance": provenance });
    if let (Some(doc), Value::Object(body)) = (doc.as_object_mut(), body) {
        doc.extend(body);
    }
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn simulate(source: &ResolvedSource, out: &Path) -> Result<()> {
    let provenance = Provenance::new("simulate", source)?;
    let out = output_dir(out)?;
    let jsa = model_jsa(source)?;
    let header = provenance.csv_line()?;
    write(&out, "jsa.csv", &(header.clone() + &export_jsa_csv(&jsa)?))?;
    write(&out, "jsi.csv", &(header.clone() + &export_jsi_csv(&jsa)?))?;
    write(&out, "marginals.csv", &(header + &export_marginals_csv(&jsa)?))?;

    let schmidt = schmidt_decompose(&jsa)?;
    let leading = schmidt.coefficients[0];
    let coefficients: Vec<f64> = schmidt
        .coefficients
        .iter()
        .take_while(|&&c| c > 1e-10 * leading)
        .map(|&c| sig9(c))
        .collect();
    let intensity = jsi(&jsa);
    let plain = correlation_classification(&jsa.grid, &intensity)?;
    let floored =
        correlation_classification_with_floor(&jsa.grid, &intensity, SINC_SIDELOBE_FLOOR)?;
    let (fs, fi) = marginal_fwhms(&jsa)?;
    let (ls, li) = nm_widths(&source.preset.pm, fs, fi);
    let body = json!({
        "schmidt_number": sig9(schmidt.schmidt_number),
        "entropy_bits": sig9(schmidt.entropy_bits),
        "schmidt_coefficients": coefficients,
        "correlation": {
            "label": floored.label,
            "rho": sig9(floored.rho),
            "rho_floor": SINC_SIDELOBE_FLOOR,
            "rho_unfloored": sig9(plain.rho),
        },
        "marginal_fwhm_nm": { "signal": sig9(ls), "idler": sig9(li) },
        "grid": jsa.grid,
        "diagnostics": jsa.provenance.notes,
    });
    write(&out, "schmidt.json", &json_text(&provenance, body)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomOptions {
    pub model: ModelArg,
    /// Delay half-span in ps; default four Gaussian dip widths.
    pub delay_span_ps: Option<f64>,
    pub delay_points: usize,
    pub filter_nm: Option<f64>,
    pub filter_arm: ArmArg,
    pub counts: Option<f64>,
    pub seed: u64,
}

fn with_model(source: &ResolvedSource, model: ModelArg) -> ResolvedSource {
    let mut s = source.clone();
    s.preset.pm = match model {
        ModelArg::NumericSinc => s.preset.pm.with_profile(Profile::Sinc),
        ModelArg::NumericGaussian | ModelArg::Gaussian => s.preset.pm.with_profile(Profile::Gaussian),
    };
    s
}

/// `filter`: angular FWHM of an applied spectral filter, which widens the dip.
fn delays_for(pm: &PhasematchSpec, filter: Option<f64>, opts: &HomOptions) -> Result<Vec<f64>> {
    if opts.delay_points < 3 {
        bail!("--delay-points must be at least 3");
    }
    Ok(match (opts.delay_span_ps, filter) {
        (Some(span), _) if span > 0.0 => delay_grid(ps(span), opts.delay_points),
        (Some(span), _) => bail!("--delay-span-ps must be positive, got {span}"),
        (None, Some(width)) => {
            let sigma = (gaussian_dip_sigma(pm)?.powi(2) + fwhm_to_sigma(width).powi(-2)).sqrt();
            delay_grid(6.0 * sigma, opts.delay_points)
        }
        (None, None) if opts.delay_points == DEFAULT_DELAY_POINTS => default_delays(pm)?,
        (None, None) => delay_grid(4.0 * gaussian_dip_sigma(pm)?, opts.delay_points),
    })
}

struct HomRun {
    t_c: f64,
    visibility: f64,
    scan: biphoton::DelayScan,
    jsa: Option<JointSpectralAmplitude>,
}

fn run_hom(source: &ResolvedSource, opts: &HomOptions) -> Result<HomRun> {
    let source = with_model(source, opts.model);
    let (pump, pm) = (&source.preset.pump, &source.preset.pm);
    if opts.model == ModelArg::Gaussian {
        if opts.filter_nm.is_some() {
            bail!("spectral filters need a numeric model");
        }
        let delays = delays_for(pm, None, opts)?;
        let dip = extract_dip_as(&gaussian_scan(pump, pm, &delays)?, HomModel::GaussianAnalytic)?;
        return Ok(HomRun {
            t_c: dip.t_c,
            visibility: dip.visibility,
            scan: dip.scan,
            jsa: None,
        });
    }
    let mut jsa = model_jsa(&source)?;
    let filter = match opts.filter_nm {
        Some(width_nm) => {
            let center = wavelength_from_angular(pm.omega_s0);
            Some(2.0 * PI * frequency_fwhm(center, nm(width_nm))?)
        }
        None => None,
    };
    if let Some(width) = filter {
        jsa = apply_spectral_filter(&jsa, &SpectralFilter::gaussian(0.0, width, opts.filter_arm.into()))?;
    }
    let delays = delays_for(pm, filter, opts)?;
    // the sampled scan repeats with period 2 pi / d_nu
    let alias_free = PI / jsa.grid.d_nu_s().max(jsa.grid.d_nu_i());
    let reach = delays.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if reach > alias_free {
        bail!(
            "delays reach {:.3} ps but a {}-point grid only resolves +-{:.3} ps; raise --grid-n",
            to_ps(reach),
            source.grid_n,
            to_ps(alias_free)
        );
    }
    let dip = extract_dip(&coincidence_scan(&jsa, &delays)?)?;
    Ok(HomRun {
        t_c: dip.t_c,
        visibility: dip.visibility,
        scan: dip.scan,
        jsa: Some(jsa),
    })
}

pub fn hom(source: &ResolvedSource, opts: &HomOptions, out: &Path) -> Result<()> {
    let provenance = Provenance::new("hom", &(source, opts))?;
    let run = run_hom(source, opts)?;
    let out = output_dir(out)?;
    write(&out, "scan.csv", &(provenance.csv_line()? + &export_delay_scan(&run.scan)))?;

    let gaussian_pm = source.preset.pm.with_profile(Profile::Gaussian);
    let mut body = json!({
        "model": opts.model,
        "t_c_ps": sig9(to_ps(run.t_c)),
        "visibility": sig9(run.visibility),
        "closed_form": {
            "t_c_ps": sig9(to_ps(correlation_time_gaussian(&gaussian_pm)?)),
            "visibility": sig9(visibility_coefficient(&source.preset.pump, &gaussian_pm)?),
        },
    });
    if let Some(jsa) = &run.jsa {
        let timing = timing_gain(&jta_from_jsa(jsa)?, &source.preset.pump)?;
        body["timing"] = json!({
            "dt_minus_ps": sig9(to_ps(timing.dt_minus)),
            "dt_plus_ps": sig9(to_ps(timing.dt_plus)),
            "pump_duration_ps": sig9(to_ps(timing.pump_duration)),
            "gain_minus": sig9(timing.gain_minus),
            "gain_plus": sig9(timing.gain_plus),
            "note": "gain = pump duration / biphoton time width; a derived figure of merit",
        });
        if jsa.provenance.notes.iter().any(|n| n.starts_with("warning")) {
            body["diagnostics"] = json!(jsa.provenance.notes);
        }
    }
    if let Some(baseline) = opts.counts {
        let counts = synthetic_counts(&run.scan, baseline, opts.seed)?;
        write(&out, "counts.csv", &(provenance.csv_line()? + &export_scan(&counts)))?;
        body["synthetic_counts"] = json!({ "baseline": baseline, "seed": opts.seed });
    }
    write(&out, "hom.json", &json_text(&provenance, body)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOptions {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub hom: HomOptions,
}

/// Either explicit values or an inclusive linear range.
pub fn sweep_values(
    values: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> Result<Vec<f64>> {
    match (values, from, to, steps) {
        (Some(v), None, None, None) if !v.is_empty() => Ok(v),
        (None, Some(a), Some(b), Some(n)) if n >= 2 => Ok((0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()),
        (None, Some(a), Some(_), Some(1)) => Ok(vec![a]),
        _ => bail!("give either --values or all of --from, --to and --steps"),
    }
}

fn sweep_point(
    source: &ResolvedSource,
    axis: SweepAxis,
    value: f64,
    opts: &HomOptions,
) -> Result<String> {
    use biphoton::units::{fs2, wavelength_fwhm_to_sigma};
    let mut s = source.clone();
    match axis {
        SweepAxis::PumpFwhm => {
            let sigma = wavelength_fwhm_to_sigma(s.preset.pump.center_wavelength(), nm(value))?;
            s.preset.pump = s.preset.pump.with_sigma(sigma)?;
        }
        SweepAxis::Length => s.preset.pm = s.preset.pm.with_length(value * 1e-3)?,
        SweepAxis::Chirp => s.preset.pump = s.preset.pump.with_chirp(fs2(value)),
    }
    let run = run_hom(&s, opts).with_context(|| format!("sweep point {value}"))?;
    let (fs, fi, rho) = match &run.jsa {
        Some(jsa) => {
            let (fs, fi) = marginal_fwhms(jsa)?;
            let corr =
                correlation_classification_with_floor(&jsa.grid, &jsi(jsa), SINC_SIDELOBE_FLOOR)?;
            (fs, fi, corr.rho)
        }
        None => {
            let pm = s.preset.pm.with_profile(Profile::Gaussian);
            let params = GaussianJsaParams::new(&s.preset.pump, &pm)?;
            let (fs, fi) = params.marginal_fwhms()?;
            (fs, fi, params.intensity_correlation())
        }
    };
    let (ls, li) = nm_widths(&s.preset.pm, fs, fi);
    Ok([value, to_ps(run.t_c), run.visibility, ls, li, rho]
        .iter()
        .map(|&x| fmt_float(x))
        .collect::<Vec<_>>()
        .join(","))
}

pub fn sweep(source: &ResolvedSource, opts: &SweepOptions, out: &Path) -> Result<()> {
    let provenance = Provenance::new("sweep", &(source, opts))?;
    let rows = opts
        .values
        .par_iter()
        .map(|&v| sweep_point(source, opts.axis, v, &opts.hom))
        .collect::<Result<Vec<_>>>()?;
    let column = match opts.axis {
        SweepAxis::PumpFwhm => "pump_fwhm_nm",
        SweepAxis::Length => "length_mm",
        SweepAxis::Chirp => "chirp_fs2",
    };
    let mut text = provenance.csv_line()?;
    text.push_str(&format!(
        "{column},t_c_ps,visibility,signal_fwhm_nm,idler_fwhm_nm,rho\n"
    ));
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    let out = output_dir(out)?;
    write(&out, "sweep.csv", &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeOptions {
    pub scan: PathBuf,
    pub model: FitModelArg,
    pub table: bool,
}

fn sinc_kernel(source: &ResolvedSource) -> Result<DipKernel> {
    let sinc = with_model(source, ModelArg::NumericSinc);
    let jsa = model_jsa(&sinc)?;
    let half = 8.0 * gaussian_dip_sigma(&sinc.preset.pm)?;
    Ok(DipKernel::from_scan(&coincidence_scan(&jsa, &delay_grid(half, 801))?)?)
}

fn fit_text(fit: &FitReport, scan: &Path) -> String {
    let rows = [
        ("scan", scan.display().to_string()),
        ("model", serde_json::to_value(fit.model).map(|v| v.to_string()).unwrap_or_default()),
        ("t_c [ps]", format!("{:.4} +/- {:.4}", to_ps(fit.t_c), to_ps(fit.t_c_sigma))),
        ("visibility", format!("{:.4} +/- {:.4}", fit.visibility, fit.visibility_sigma)),
        ("baseline", format!("{:.4} +/- {:.4}", fit.baseline, fit.baseline_sigma)),
        ("center [ps]", format!("{:.4} +/- {:.4}", to_ps(fit.center), to_ps(fit.center_sigma))),
        ("residual rms", format!("{:.4}", fit.residual_rms)),
        ("reduced chi2", format!("{:.4}", fit.reduced_chi2)),
        ("iterations", fit.iterations.to_string()),
        (
            "uncertainties",
            serde_json::to_value(fit.uncertainty_method)
                .map(|v| v.to_string())
                .unwrap_or_default(),
        ),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:<width$}  {}\n", v.trim_matches('"')));
    }
    for w in &fit.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

pub fn analyze(source: &ResolvedSource, opts: &AnalyzeOptions, out: &Path) -> Result<()> {
    let scan_text = std::fs::read_to_string(&opts.scan)
        .with_context(|| format!("reading {}", opts.scan.display()))?;
    let provenance = Provenance::new("analyze", &(source, opts, &scan_text))?;
    let scan = load_scan(&opts.scan).with_context(|| format!("loading {}", opts.scan.display()))?;
    let model = match opts.model {
        FitModelArg::Gaussian => DipModel::Gaussian,
        FitModelArg::SincKernel => DipModel::Kernel(sinc_kernel(source)?),
    };
    let fit = fit_dip(&scan, &model)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let out = output_dir(out)?;
    let body = json!({
        "scan": opts.scan.display().to_string(),
        "t_c_ps": sig9(to_ps(fit.t_c)),
        "t_c_sigma_ps": sig9(to_ps(fit.t_c_sigma)),
        "fit": fit,
    });
    write(&out, "fit.json", &json_text(&provenance, body)?)?;
    write(&out, "fit.txt", &(provenance.csv_line()? + &fit_text(&fit, &opts.scan)))?;
    if opts.table {
        let report = table_report(std::slice::from_ref(&source.preset), source.grid_n, &[Some(fit)])?;
        let body = serde_json::to_value(&report)?;
        write(&out, "table.json", &json_text(&provenance, body)?)?;
        write(&out, "table.txt", &(provenance.csv_line()? + &report.to_text()))?;
    }
    Ok(())
}

pub fn presets(show: Option<&str>) -> Result<()> {
    match show {
        Some(name) => print!("{}", SourcePreset::builtin(name)?.to_toml_string()?),
        None => {
            for name in BUILTIN {
                let p = SourcePreset::builtin(name)?;
                println!(
                    "{name}\tpump {:.1} nm\tL = {} mm\ttau_s/tau_i = {:.4}/{:.4} ps\t{}",
                    to_nm(p.pump.center_wavelength()),
                    p.pm.length * 1e3,
                    to_ps(p.pm.tau_s),
                    to_ps(p.pm.tau_i),
                    p.pm.profile
                );
            }
        }
    }
    Ok(())
}
