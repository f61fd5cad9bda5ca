//! CSV formats for measured scans and joint spectra.
//!
//! Scan files carry a header `delay_<unit>,coincidences[,sigma]`. The delay
//! unit is part of the header key and never inferred from the numbers:
//! `delay_ps`, `delay_fs`, or `delay_mm` (translation-stage travel, converted
//! as a double pass, `tau = 2 x / c`).
//!
//! Joint spectra are written as `nu_s,nu_i,re,im` (amplitude) or
//! `nu_s,nu_i,intensity` with detunings in rad/s, preceded by a `#` line
//! holding a JSON header with the grid metadata. Measured JSIs may also use
//! `lambda_s_nm,lambda_i_nm,intensity`.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::hom::DelayScan;
use crate::jsa::{jsi, JointSpectralAmplitude, Provenance, Source};
use crate::units::{self, SPEED_OF_LIGHT};

pub const MIN_SCAN_POINTS: usize = 10;

/// Formats with 9 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayUnit {
    Picoseconds,
    Femtoseconds,
    /// Stage travel in mm, double pass.
    StageMillimeters,
}

impl DelayUnit {
    fn from_header(key: &str) -> Option<Self> {
        match key {
            "delay_ps" => Some(Self::Picoseconds),
            "delay_fs" => Some(Self::Femtoseconds),
            "delay_mm" => Some(Self::StageMillimeters),
            _ => None,
        }
    }

    pub fn to_seconds(self, v: f64) -> f64 {
        match self {
            Self::Picoseconds => v * 1e-12,
            Self::Femtoseconds => v * 1e-15,
            Self::StageMillimeters => 2.0 * v * 1e-3 / SPEED_OF_LIGHT,
        }
    }
}

/// A measured HOM scan.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredScan {
    /// Delays (s), strictly increasing.
    pub delays: Vec<f64>,
    /// Coincidence counts or rates, non-negative.
    pub counts: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl MeasuredScan {
    pub fn new(delays: Vec<f64>, counts: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if delays.len() != counts.len() || sigma.as_ref().is_some_and(|s| s.len() != delays.len())
        {
            return Err(Error::Shape("scan columns differ in length".into()));
        }
        if delays.len() < MIN_SCAN_POINTS {
            return Err(Error::Shape(format!(
                "scan needs at least {MIN_SCAN_POINTS} points, got {}",
                delays.len()
            )));
        }
        if delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("delays must be strictly increasing".into()));
        }
        if counts.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::Domain("counts must be non-negative".into()));
        }
        if sigma
            .as_ref()
            .is_some_and(|s| s.iter().any(|v| !(*v > 0.0 && v.is_finite())))
        {
            return Err(Error::Domain("uncertainties must be positive".into()));
        }
        Ok(Self {
            delays,
            counts,
            sigma,
        })
    }

    /// Counts are raw event numbers: no explicit uncertainties and every
    /// value integral. Such scans are fitted with Poisson weights.
    pub fn is_raw_counts(&self) -> bool {
        self.sigma.is_none() && self.counts.iter().all(|c| c.fract() == 0.0)
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn parse_field(record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
    let line = line_of(record);
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::parse(line, format!("missing column '{name}'")))?;
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(line, format!("'{raw}' is not a number ({name})")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite {name}")));
    }
    Ok(v)
}

pub fn parse_scan(text: &str) -> Result<MeasuredScan> {
    let mut reader = csv_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let header_line = line_of(&headers).max(1);
    let cols: Vec<&str> = headers.iter().collect();
    let unit = cols
        .first()
        .and_then(|k| DelayUnit::from_header(k))
        .ok_or_else(|| {
            Error::parse(
                header_line,
                "first column must be delay_ps, delay_fs or delay_mm",
            )
        })?;
    if cols.get(1) != Some(&"coincidences") {
        return Err(Error::parse(header_line, "second column must be 'coincidences'"));
    }
    let has_sigma = match cols.get(2) {
        None => false,
        Some(&"sigma") if cols.len() == 3 => true,
        _ => return Err(Error::parse(header_line, "optional third column must be 'sigma'")),
    };

    let (mut delays, mut counts, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = line_of(&record);
        if record.len() != cols.len() {
            return Err(Error::parse(
                line,
                format!("expected {} columns, found {}", cols.len(), record.len()),
            ));
        }
        let delay = unit.to_seconds(parse_field(&record, 0, cols[0])?);
        if let Some(&prev) = delays.last() {
            if !(delay > prev) {
                return Err(Error::parse(line, "delays must be strictly increasing"));
            }
        }
        let c = parse_field(&record, 1, "coincidences")?;
        if c < 0.0 {
            return Err(Error::parse(line, "negative coincidence count"));
        }
        delays.push(delay);
        counts.push(c);
        if has_sigma {
            let s = parse_field(&record, 2, "sigma")?;
            if !(s > 0.0) {
                return Err(Error::parse(line, "sigma must be positive"));
            }
            sigma.push(s);
        }
    }
    MeasuredScan::new(delays, counts, has_sigma.then_some(sigma))
}

pub fn load_scan(path: &Path) -> Result<MeasuredScan> {
    parse_scan(&std::fs::read_to_string(path)?)
}

/// Canonical scan CSV: `delay_ps` header and 9-significant-digit floats.
pub fn export_scan(scan: &MeasuredScan) -> String {
    let mut out = String::from("delay_ps,coincidences");
    if scan.sigma.is_some() {
        out.push_str(",sigma");
    }
    out.push('\n');
    for i in 0..scan.len() {
        out.push_str(&fmt_float(units::to_ps(scan.delays[i])));
        out.push(',');
        out.push_str(&fmt_float(scan.counts[i]));
        if let Some(s) = &scan.sigma {
            out.push(',');
            out.push_str(&fmt_float(s[i]));
        }
        out.push('\n');
    }
    out
}

/// Simulated scan as `tau_ps,rate`.
pub fn export_delay_scan(scan: &DelayScan) -> String {
    let mut out = String::from("tau_ps,rate\n");
    for (t, r) in scan.delays.iter().zip(&scan.rates) {
        out.push_str(&format!("{},{}\n", fmt_float(units::to_ps(*t)), fmt_float(*r)));
    }
    out
}

#[derive(Serialize)]
struct SpectrumHeader<'a> {
    grid: &'a FrequencyGrid,
    provenance: &'a Provenance,
    units: &'static str,
}

fn spectrum_header(jsa: &JointSpectralAmplitude) -> Result<String> {
    let header = SpectrumHeader {
        grid: &jsa.grid,
        provenance: &jsa.provenance,
        units: "detunings in rad/s",
    };
    Ok(format!("# {}\n", serde_json::to_string(&header)?))
}

/// JSA as `nu_s,nu_i,re,im`, signal-major.
pub fn export_jsa_csv(jsa: &JointSpectralAmplitude) -> Result<String> {
    let mut out = spectrum_header(jsa)?;
    out.push_str("nu_s,nu_i,re,im\n");
    for ((j, k), z) in jsa.amplitude.indexed_iter() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(jsa.grid.nu_s(j)),
            fmt_float(jsa.grid.nu_i(k)),
            fmt_float(z.re),
            fmt_float(z.im)
        ));
    }
    Ok(out)
}

/// JSI as `nu_s,nu_i,intensity`, signal-major.
pub fn export_jsi_csv(jsa: &JointSpectralAmplitude) -> Result<String> {
    let mut out = spectrum_header(jsa)?;
    out.push_str("nu_s,nu_i,intensity\n");
    for ((j, k), v) in jsi(jsa).indexed_iter() {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_float(jsa.grid.nu_s(j)),
            fmt_float(jsa.grid.nu_i(k)),
            fmt_float(*v)
        ));
    }
    Ok(out)
}

/// Center wavelengths (nm) used when importing a wavelength-axis JSI.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsiImport {
    pub center_s_nm: Option<f64>,
    pub center_i_nm: Option<f64>,
}

enum Layout {
    Detuning { complex: bool },
    Wavelength,
}

struct Table {
    layout: Layout,
    /// (axis_s, axis_i, re, im)
    rows: Vec<(f64, f64, f64, f64)>,
}

fn read_table(text: &str) -> Result<Table> {
    let mut reader = csv_reader(text);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let header_line = line_of(&headers).max(1);
    let cols: Vec<&str> = headers.iter().collect();
    let layout = match cols.as_slice() {
        ["nu_s", "nu_i", "re", "im"] => Layout::Detuning { complex: true },
        ["nu_s", "nu_i", "intensity"] => Layout::Detuning { complex: false },
        ["lambda_s_nm", "lambda_i_nm", "intensity"] => Layout::Wavelength,
        _ => {
            return Err(Error::parse(
                header_line,
                format!("unrecognized spectrum header {cols:?}"),
            ))
        }
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = line_of(&record);
        if record.len() != cols.len() {
            return Err(Error::parse(
                line,
                format!("expected {} columns, found {}", cols.len(), record.len()),
            ));
        }
        let a = parse_field(&record, 0, cols[0])?;
        let b = parse_field(&record, 1, cols[1])?;
        let (re, im) = match layout {
            Layout::Detuning { complex: true } => {
                (parse_field(&record, 2, "re")?, parse_field(&record, 3, "im")?)
            }
            _ => {
                let v = parse_field(&record, 2, "intensity")?;
                if v < 0.0 {
                    return Err(Error::parse(line, "negative intensity"));
                }
                (v, 0.0)
            }
        };
        if matches!(layout, Layout::Wavelength) && !(a > 0.0 && b > 0.0) {
            return Err(Error::parse(line, "wavelengths must be positive"));
        }
        rows.push((a, b, re, im));
    }
    Ok(Table { layout, rows })
}

/// Sorted distinct values, merging those that agree to 1e-9 relative.
fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
    v
}

fn index_of(axis: &[f64], x: f64) -> usize {
    let i = axis.partition_point(|&a| a < x - 1e-9 * x.abs().max(1e-300));
    i.min(axis.len() - 1)
}

fn gridded(table: &Table) -> Result<(Vec<f64>, Vec<f64>, Array2<Complex64>)> {
    let axis_s = distinct(table.rows.iter().map(|r| r.0));
    let axis_i = distinct(table.rows.iter().map(|r| r.1));
    if axis_s.len() < 2 || axis_i.len() < 2 {
        return Err(Error::Shape("spectrum needs at least 2 samples per axis".into()));
    }
    if axis_s.len() * axis_i.len() != table.rows.len() {
        return Err(Error::Shape(format!(
            "{} rows do not form a full {}x{} grid",
            table.rows.len(),
            axis_s.len(),
            axis_i.len()
        )));
    }
    let mut values = Array2::from_elem((axis_s.len(), axis_i.len()), Complex64::new(f64::NAN, 0.0));
    for &(a, b, re, im) in &table.rows {
        values[[index_of(&axis_s, a), index_of(&axis_i, b)]] = Complex64::new(re, im);
    }
    if values.iter().any(|z| z.re.is_nan()) {
        return Err(Error::Shape("duplicate grid points in spectrum".into()));
    }
    Ok((axis_s, axis_i, values))
}

fn check_uniform(axis: &[f64]) -> Result<()> {
    let step = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if axis
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > 1e-6 * step.abs())
    {
        return Err(Error::Shape("detuning axis is not uniformly spaced".into()));
    }
    Ok(())
}

/// Linear interpolation of `y(x)` (x increasing) at `t`, zero outside.
fn interp(x: &[f64], y: &[f64], t: f64) -> f64 {
    if t < x[0] || t > x[x.len() - 1] {
        return 0.0;
    }
    let i = x.partition_point(|&a| a <= t).clamp(1, x.len() - 1);
    let (x0, x1) = (x[i - 1], x[i]);
    y[i - 1] + (y[i] - y[i - 1]) * (t - x0) / (x1 - x0)
}

fn measured(origin: &str, notes: Vec<String>) -> Provenance {
    Provenance {
        source: Source::Measured {
            origin: origin.to_string(),
        },
        normalized: false,
        notes,
    }
}

/// Reads a joint spectrum. Intensity-only files become amplitudes
/// `sqrt(I)` with zero phase, flagged in the provenance. Wavelength axes are
/// converted to detunings from the given (or midpoint) center wavelengths and
/// resampled onto a uniform detuning grid with the same sample counts.
pub fn parse_jsi(text: &str, import: JsiImport) -> Result<JointSpectralAmplitude> {
    let table = read_table(text)?;
    let (axis_s, axis_i, values) = gridded(&table)?;
    let zero_phase = "intensity only: zero spectral phase assumed, HOM predictions approximate";
    match table.layout {
        Layout::Detuning { complex } => {
            check_uniform(&axis_s)?;
            check_uniform(&axis_i)?;
            let grid = FrequencyGrid::new(
                axis_s.len(),
                axis_i.len(),
                (axis_s[0], axis_s[axis_s.len() - 1]),
                (axis_i[0], axis_i[axis_i.len() - 1]),
            )?;
            let (amplitude, notes) = if complex {
                (values, vec![])
            } else {
                (
                    values.mapv(|z| Complex64::new(z.re.sqrt(), 0.0)),
                    vec![zero_phase.to_string()],
                )
            };
            JointSpectralAmplitude::from_parts(grid, amplitude, measured("csv", notes))
        }
        Layout::Wavelength => {
            let mid = |axis: &[f64]| 0.5 * (axis[0] + axis[axis.len() - 1]);
            let center_s = import.center_s_nm.unwrap_or_else(|| mid(&axis_s));
            let center_i = import.center_i_nm.unwrap_or_else(|| mid(&axis_i));
            let detune = |axis: &[f64], center: f64| -> Vec<f64> {
                // increasing wavelength is decreasing frequency; reverse
                axis.iter()
                    .rev()
                    .map(|&l| {
                        units::angular_frequency(units::nm(l))
                            - units::angular_frequency(units::nm(center))
                    })
                    .collect()
            };
            let nu_s = detune(&axis_s, center_s);
            let nu_i = detune(&axis_i, center_i);
            let (n_s, n_i) = (nu_s.len(), nu_i.len());
            let grid = FrequencyGrid::new(
                n_s,
                n_i,
                (nu_s[0], nu_s[n_s - 1]),
                (nu_i[0], nu_i[n_i - 1]),
            )?;
            // intensity reordered to increasing detuning on both axes
            let intensity =
                Array2::from_shape_fn((n_s, n_i), |(j, k)| values[[n_s - 1 - j, n_i - 1 - k]].re);
            // resample along the idler axis, then the signal axis
            let uniform_i = grid.idler_axis();
            let uniform_s = grid.signal_axis();
            let stage = Array2::from_shape_fn((n_s, n_i), |(j, k)| {
                let row: Vec<f64> = intensity.row(j).to_vec();
                interp(&nu_i, &row, uniform_i[k])
            });
            let amplitude = Array2::from_shape_fn((n_s, n_i), |(j, k)| {
                let col: Vec<f64> = stage.column(k).to_vec();
                Complex64::new(interp(&nu_s, &col, uniform_s[j]).max(0.0).sqrt(), 0.0)
            });
            let notes = vec![
                zero_phase.to_string(),
                format!(
                    "wavelength axes resampled to uniform detuning around {center_s} nm / {center_i} nm"
                ),
            ];
            JointSpectralAmplitude::from_parts(grid, amplitude, measured("csv (nm axes)", notes))
        }
    }
}

pub fn load_jsi(path: &Path, import: JsiImport) -> Result<JointSpectralAmplitude> {
    parse_jsi(&std::fs::read_to_string(path)?, import)
}

/// Marginals as `nu,signal,idler` for square grids, else two blocks.
pub fn export_marginals_csv(jsa: &JointSpectralAmplitude) -> Result<String> {
    let (ms, mi) = crate::jsa::marginals(jsa)?;
    let mut out = spectrum_header(jsa)?;
    out.push_str("axis,nu,intensity\n");
    let mut rows: BTreeMap<(u8, usize), String> = BTreeMap::new();
    for (j, v) in ms.iter().enumerate() {
        rows.insert(
            (0, j),
            format!("signal,{},{}\n", fmt_float(jsa.grid.nu_s(j)), fmt_float(*v)),
        );
    }
    for (k, v) in mi.iter().enumerate() {
        rows.insert(
            (1, k),
            format!("idler,{},{}\n", fmt_float(jsa.grid.nu_i(k)), fmt_float(*v)),
        );
    }
    out.extend(rows.into_values());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canonical(rows: usize, sigma: bool) -> String {
        let scan = MeasuredScan::new(
            (0..rows).map(|i| (i as f64 - 10.0) * 1e-13).collect(),
            (0..rows).map(|i| 1000.0 + i as f64).collect(),
            sigma.then(|| (0..rows).map(|i| 30.0 + 0.1 * i as f64).collect()),
        )
        .unwrap();
        export_scan(&scan)
    }

    #[test]
    fn three_column_scan() {
        let scan = parse_scan(&canonical(20, true)).unwrap();
        assert_eq!(scan.len(), 20);
        assert!(scan.sigma.is_some());
        assert!(!scan.is_raw_counts());
        let scan = parse_scan(&canonical(20, false)).unwrap();
        assert!(scan.is_raw_counts());
    }

    #[test]
    fn shuffled_delays_are_rejected() {
        let mut lines: Vec<String> = canonical(12, false).lines().map(String::from).collect();
        lines.swap(4, 5);
        let text = lines.join("\n");
        match parse_scan(&text) {
            // rows 4 and 5 swapped: the decrease shows on file line 6
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let bad = "delay_ps,coincidences\n1,2\nx,3\n";
        assert!(matches!(parse_scan(bad), Err(Error::Parse { line: 3, .. })));
        let neg = "delay_ps,coincidences\n1,2\n2,-3\n";
        assert!(matches!(parse_scan(neg), Err(Error::Parse { line: 3, .. })));
        let header = "time,coincidences\n1,2\n";
        assert!(matches!(parse_scan(header), Err(Error::Parse { line: 1, .. })));
        let short = "delay_ps,coincidences\n1,2\n2\n";
        assert!(matches!(parse_scan(short), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn too_few_points() {
        let text = "delay_ps,coincidences\n1,5\n2,4\n3,5\n4,6\n5,5\n";
        assert!(matches!(parse_scan(text), Err(Error::Shape(_))));
    }

    #[test]
    fn delay_units_from_header() {
        let mut text = String::from("# stage scan\ndelay_mm,coincidences\n");
        for i in 0..12 {
            text.push_str(&format!("{},{}\n", i as f64 * 0.01, 100 + i));
        }
        let scan = parse_scan(&text).unwrap();
        let expected = 2.0 * 0.01e-3 / SPEED_OF_LIGHT;
        assert!((scan.delays[1] - expected).abs() < 1e-24);
        let fs = text.replace("delay_mm", "delay_fs");
        assert!((parse_scan(&fs).unwrap().delays[1] - 0.01e-15).abs() < 1e-30);
    }

    #[test]
    fn nm_grid_conversion() {
        // 5 x 5 grid at 1.8 nm pitch around 1535 nm
        let pitch = 1.8;
        let mut text = String::from("lambda_s_nm,lambda_i_nm,intensity\n");
        for a in 0..5 {
            for b in 0..5 {
                let ls = 1535.0 + (a as f64 - 2.0) * pitch;
                let li = 1535.0 + (b as f64 - 2.0) * pitch;
                text.push_str(&format!("{ls},{li},{}\n", 1.0 + a as f64 + 10.0 * b as f64));
            }
        }
        let jsa = parse_jsi(&text, JsiImport::default()).unwrap();
        let w = |l: f64| 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (l * 1e-9);
        let lo = w(1535.0 + 2.0 * pitch) - w(1535.0);
        let hi = w(1535.0 - 2.0 * pitch) - w(1535.0);
        assert!((jsa.grid.nu_s_min - lo).abs() < 1e-6 * lo.abs());
        assert!((jsa.grid.nu_s_max - hi).abs() < 1e-6 * hi);
        let approx_step = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * pitch * 1e-9
            / (1535e-9f64).powi(2);
        assert!((jsa.grid.d_nu_s() - approx_step).abs() / approx_step < 0.01);
        // endpoints are not resampled: longest wavelengths land at index 0
        assert!((jsa.amplitude[[0, 0]].re - (1.0f64 + 4.0 + 40.0).sqrt()).abs() < 1e-12);
        assert!((jsa.amplitude[[4, 4]].re - 1.0).abs() < 1e-12);
        assert!(jsa.provenance.is_approximate());
    }

    #[test]
    fn incomplete_grid() {
        let text = "nu_s,nu_i,intensity\n0,0,1\n1,0,1\n0,1,1\n";
        assert!(matches!(parse_jsi(text, JsiImport::default()), Err(Error::Shape(_))));
    }

    #[test]
    fn jsa_csv_round_trip() {
        use crate::jsa::{build_jsa, Normalization};
        use crate::spectral::{PhasematchSpec, Profile, PumpSpec};
        let pump = PumpSpec::new(2.4e15, 3e12, 2e-26).unwrap();
        let pm = PhasematchSpec {
            length: 1e-2,
            tau_s: 1.3e-12,
            tau_i: -0.6e-12,
            gamma: 0.193,
            profile: Profile::Gaussian,
            omega_s0: 1.2e15,
            omega_i0: 1.2e15,
        };
        let grid = FrequencyGrid::auto(&pump, &pm, 16).unwrap();
        let jsa = build_jsa(&pump, &pm, &grid, Normalization::Peak).unwrap();
        let back = parse_jsi(&export_jsa_csv(&jsa).unwrap(), JsiImport::default()).unwrap();
        for (a, b) in back.amplitude.iter().zip(jsa.amplitude.iter()) {
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1e-300));
        }
        let back = parse_jsi(&export_jsi_csv(&jsa).unwrap(), JsiImport::default()).unwrap();
        assert!(back.provenance.is_approximate());
        assert_eq!(back.grid.n_s, 16);
    }

    proptest! {
        #[test]
        fn canonical_scan_round_trip(
            counts in proptest::collection::vec(0u32..100_000, 10..40),
            step in 1e-3f64..1.0,
            start in -50.0f64..0.0,
        ) {
            let mut text = String::from("delay_ps,coincidences\n");
            for (i, c) in counts.iter().enumerate() {
                let d = start + i as f64 * step;
                text.push_str(&format!("{},{}\n", fmt_float(d), fmt_float(*c as f64)));
            }
            let scan = parse_scan(&text).unwrap();
            prop_assert_eq!(export_scan(&scan), text);
        }
    }
}
