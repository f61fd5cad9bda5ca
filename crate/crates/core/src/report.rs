//! Source characterization table: simulated correlation time, marginal
//! bandwidths, transform-limited durations and, optionally, fitted dips.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::FitReport;
use crate::grid::FrequencyGrid;
use crate::hom::{coincidence_scan, default_delays, extract_dip};
use crate::jsa::{
    build_jsa, correlation_classification_with_floor, jsi, marginal_fwhms, CorrelationLabel,
    Normalization, SINC_SIDELOBE_FLOOR,
};
use crate::preset::SourcePreset;
use crate::units::{self, angular_width_to_wavelength, transform_limited_duration};

/// Duration of a pulse convolved from two independent Gaussian contributions.
pub fn convolved_duration(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub t_c_ps: f64,
    pub t_c_sigma_ps: f64,
    pub visibility: f64,
    pub visibility_sigma: f64,
}

impl From<&FitReport> for FitSummary {
    fn from(r: &FitReport) -> Self {
        Self {
            t_c_ps: units::to_ps(r.t_c),
            t_c_sigma_ps: units::to_ps(r.t_c_sigma),
            visibility: r.visibility,
            visibility_sigma: r.visibility_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: CorrelationLabel,
    pub rho: f64,
    pub t_c_ps: f64,
    pub visibility: f64,
    pub signal_fwhm_nm: f64,
    pub idler_fwhm_nm: f64,
    pub pump_fwhm_nm: f64,
    pub signal_duration_ps: f64,
    pub idler_duration_ps: f64,
    pub pump_duration_ps: f64,
    /// `sqrt(signal_duration^2 + idler_duration^2)`.
    pub convolved_duration_ps: f64,
    pub fit: Option<FitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub preset: String,
    pub rows: Vec<TableRow>,
    pub notes: Vec<String>,
}

/// One row per preset: numeric HOM scan of the preset's own profile on an
/// `grid_n`-square grid, marginals from the same JSA. `fits[i]`, when
/// present, is attached to row `i`.
pub fn table_report(
    presets: &[SourcePreset],
    grid_n: usize,
    fits: &[Option<FitReport>],
) -> Result<TableReport> {
    let mut rows = Vec::with_capacity(presets.len());
    for (i, preset) in presets.iter().enumerate() {
        let (pump, pm) = (&preset.pump, &preset.pm);
        let grid = FrequencyGrid::auto(pump, pm, grid_n)?;
        let jsa = build_jsa(pump, pm, &grid, Normalization::Peak)?;
        let dip = extract_dip(&coincidence_scan(&jsa, &default_delays(pm)?)?)?;
        let (fs, fi) = marginal_fwhms(&jsa)?;
        let corr = correlation_classification_with_floor(&grid, &jsi(&jsa), SINC_SIDELOBE_FLOOR)?;

        let lambda_s = units::wavelength_from_angular(pm.omega_s0);
        let lambda_i = units::wavelength_from_angular(pm.omega_i0);
        let lambda_p = pump.center_wavelength();
        let dl_s = angular_width_to_wavelength(lambda_s, fs);
        let dl_i = angular_width_to_wavelength(lambda_i, fi);
        let dl_p = units::sigma_to_wavelength_fwhm(lambda_p, pump.sigma_p)?;
        let dt_s = transform_limited_duration(lambda_s, dl_s)?;
        let dt_i = transform_limited_duration(lambda_i, dl_i)?;
        let dt_p = transform_limited_duration(lambda_p, dl_p)?;
        rows.push(TableRow {
            label: corr.label,
            rho: corr.rho,
            t_c_ps: units::to_ps(dip.t_c),
            visibility: dip.visibility,
            signal_fwhm_nm: units::to_nm(dl_s),
            idler_fwhm_nm: units::to_nm(dl_i),
            pump_fwhm_nm: units::to_nm(dl_p),
            signal_duration_ps: units::to_ps(dt_s),
            idler_duration_ps: units::to_ps(dt_i),
            pump_duration_ps: units::to_ps(dt_p),
            convolved_duration_ps: units::to_ps(convolved_duration(dt_s, dt_i)),
            fit: fits.get(i).and_then(|f| f.as_ref()).map(FitSummary::from),
        });
    }
    let mut notes = vec![
        "durations are transform-limited Gaussian values from the listed bandwidths".to_string(),
        format!("correlation labels ignore JSI samples below {SINC_SIDELOBE_FLOOR} of the peak"),
    ];
    if fits.iter().any(Option::is_some) {
        notes.push("fit uncertainties are one-sigma values from the parameter covariance".into());
    }
    Ok(TableReport {
        preset: presets.first().map(|p| p.name.clone()).unwrap_or_default(),
        rows,
        notes,
    })
}

impl TableReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut header = vec![
            "state", "rho", "T_c[ps]", "vis", "dl_s[nm]", "dl_i[nm]", "dl_p[nm]", "dt_s[ps]",
            "dt_i[ps]", "dt_p[ps]", "dt_conv[ps]",
        ];
        let with_fit = self.rows.iter().any(|r| r.fit.is_some());
        if with_fit {
            header.extend(["fit T_c[ps]", "fit vis"]);
        }
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for r in &self.rows {
            let mut row = vec![
                r.label.to_string(),
                format!("{:+.3}", r.rho),
                format!("{:.3}", r.t_c_ps),
                format!("{:.3}", r.visibility),
                format!("{:.2}", r.signal_fwhm_nm),
                format!("{:.2}", r.idler_fwhm_nm),
                format!("{:.2}", r.pump_fwhm_nm),
                format!("{:.2}", r.signal_duration_ps),
                format!("{:.2}", r.idler_duration_ps),
                format!("{:.2}", r.pump_duration_ps),
                format!("{:.2}", r.convolved_duration_ps),
            ];
            if with_fit {
                match &r.fit {
                    Some(f) => {
                        row.push(format!("{:.3} +/- {:.3}", f.t_c_ps, f.t_c_sigma_ps));
                        row.push(format!("{:.3} +/- {:.3}", f.visibility, f.visibility_sigma));
                    }
                    None => row.extend(["-".to_string(), "-".to_string()]),
                }
            }
            cells.push(row);
        }
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = format!("# {}\n", self.preset);
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("# {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::ppktp_with_pump_fwhm;
    use crate::units::nm;

    #[test]
    fn convolved_durations() {
        assert!((convolved_duration(1.0, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        let round2 = |x: f64| (x * 100.0).round() / 100.0;
        assert_eq!(round2(convolved_duration(0.80, 0.63)), 1.02);
        assert_eq!(round2(convolved_duration(0.59, 0.34)), 0.68);
    }

    #[test]
    fn decorrelated_row() {
        let preset = ppktp_with_pump_fwhm(nm(2.0)).unwrap();
        let report = table_report(&[preset], 256, &[]).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.label, CorrelationLabel::Decorrelated);
        assert!((row.pump_fwhm_nm - 2.0).abs() < 1e-9);
        assert!((row.t_c_ps - 1.16).abs() < 0.06, "{}", row.t_c_ps);
        assert!(
            (row.convolved_duration_ps - row.signal_duration_ps.hypot(row.idler_duration_ps)).abs()
                < 1e-12
        );
        let text = report.to_text();
        assert!(text.contains("decorrelated"));
        assert!(text.lines().nth(1).unwrap().contains("T_c[ps]"));
        let back: TableReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }
}
