use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biphoton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .env_remove("BIPHOTON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = biphoton(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Parses sweep.csv into (value, t_c_ps) pairs.
fn sweep_tc(path: &Path) -> Vec<(f64, f64)> {
    data_rows(path)
        .iter()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_preset_fails() {
    let out = biphoton(&["simulate", "--preset", "bbo-2mm", "--out", "/nonexistent/x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

#[test]
fn presets_list_and_show() {
    let list = ok(&["presets"]);
    assert!(String::from_utf8_lossy(&list.stdout).contains("ppktp-8mm"));
    let show = ok(&["presets", "--show", "ppktp-8mm"]);
    let text = String::from_utf8(show.stdout).unwrap();
    let back = biphoton::SourcePreset::from_toml_str(&text).unwrap();
    assert_eq!(back, biphoton::SourcePreset::builtin("ppktp-8mm").unwrap());
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    ok(&["simulate", "--pump-fwhm-nm", "2.0", "--grid-n", "128", "--out", arg(&out)]);
    for name in ["jsa.csv", "jsi.csv", "marginals.csv", "schmidt.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let s = json(&out.join("schmidt.json"));
    assert!(s["schmidt_number"].as_f64().unwrap() >= 1.0);
    assert_eq!(s["grid"]["n_s"], 128);
    assert_eq!(data_rows(&out.join("jsi.csv")).len(), 1 + 128 * 128);
}

#[test]
fn chirp_leaves_jsi_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--pump-fwhm-nm", "0.7", "--grid-n", "96", "--out", arg(&a)]);
    ok(&[
        "simulate", "--pump-fwhm-nm", "0.7", "--grid-n", "96", "--chirp-fs2", "-8000", "--out",
        arg(&b),
    ]);
    // provenance lines differ by the config hash; the data must not
    assert_eq!(data_rows(&a.join("jsi.csv")), data_rows(&b.join("jsi.csv")));
    assert_ne!(data_rows(&a.join("jsa.csv")), data_rows(&b.join("jsa.csv")));
}

#[test]
fn hom_numeric_sinc_correlation_time() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["hom", "--pump-fwhm-nm", "2.0", "--out", arg(dir.path())]);
    let h = json(&dir.path().join("hom.json"));
    let t_c = h["t_c_ps"].as_f64().unwrap();
    assert!((t_c / 1.16 - 1.0).abs() < 0.05, "t_c {t_c}");
    assert!(h["timing"]["dt_minus_ps"].as_f64().unwrap() > 0.0);
    assert_eq!(data_rows(&dir.path().join("scan.csv")).len(), 1 + 201);
}

#[test]
fn narrow_delay_span_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&[
        "hom", "--grid-n", "128", "--delay-span-ps", "0.2", "--out", arg(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("coverage"));
}

#[test]
fn gaussian_model_ignores_pump_width() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sweep", "--axis", "pump_fwhm", "--from", "0.5", "--to", "5.0", "--steps", "10", "--model",
        "gaussian", "--out", arg(dir.path()),
    ]);
    let rows = sweep_tc(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 10);
    for (_, t_c) in &rows {
        assert!((t_c / rows[0].1 - 1.0).abs() < 1e-3);
    }
}

#[test]
fn correlation_time_scales_with_length() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sweep", "--axis", "length", "--values", "8,16,32", "--model", "numeric-gaussian",
        "--grid-n", "256", "--out", arg(dir.path()),
    ]);
    let rows = sweep_tc(&dir.path().join("sweep.csv"));
    for (length, t_c) in &rows[1..] {
        let ratio = t_c / rows[0].1;
        let expected = length / rows[0].0;
        assert!((ratio / expected - 1.0).abs() < 5e-3, "{length}: {ratio}");
    }
}

#[test]
fn sinc_correlation_time_grows_with_pump_width() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sweep", "--axis", "pump_fwhm", "--values", "0.7,2.0,4.5", "--out", arg(dir.path()),
    ]);
    let rows = sweep_tc(&dir.path().join("sweep.csv"));
    assert!(rows.windows(2).all(|w| w[1].1 > w[0].1), "{rows:?}");
}

#[test]
fn analyze_recovers_simulated_dip() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&[
        "hom", "--model", "numeric-gaussian", "--grid-n", "256", "--counts", "5000", "--seed", "3",
        "--out", arg(&sim),
    ]);
    let truth = json(&sim.join("hom.json"))["t_c_ps"].as_f64().unwrap();
    let fit_dir = dir.path().join("fit");
    ok(&[
        "analyze", "--scan", arg(&sim.join("counts.csv")), "--grid-n", "128", "--table", "--out",
        arg(&fit_dir),
    ]);
    let fit = json(&fit_dir.join("fit.json"));
    let t_c = fit["t_c_ps"].as_f64().unwrap();
    let sigma = fit["t_c_sigma_ps"].as_f64().unwrap();
    assert!((t_c - truth).abs() < 4.0 * sigma, "{t_c} +/- {sigma} vs {truth}");
    assert!(fit_dir.join("table.txt").exists());
    assert!(json(&fit_dir.join("table.json"))["rows"][0]["fit"].is_object());
}

#[test]
fn config_file_and_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "pump_fwhm_nm = 4.5\ngrid_n = 64\n").unwrap();
    let out = dir.path().join("env_out");
    let status = Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(["hom", "--model", "gaussian", "--config", arg(&cfg)])
        .env("BIPHOTON_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("hom.json").exists());
    std::fs::write(&cfg, "pump_width_nm = 4.5\n").unwrap();
    assert!(!biphoton(&["hom", "--config", arg(&cfg), "--out", arg(&out)]).status.success());
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let out = dir.path().join(i.to_string());
            ok(&["simulate", "--grid-n", "128", "--out", arg(&out)]);
            ok(&[
                "sweep", "--axis", "chirp", "--values", "0,2000,4000", "--grid-n", "128", "--delay-points",
                "101", "--out", arg(&out),
            ]);
            out
        })
        .collect();
    for name in ["jsa.csv", "jsi.csv", "marginals.csv", "schmidt.json", "sweep.csv"] {
        let a = std::fs::read(runs[0].join(name)).unwrap();
        let b = std::fs::read(runs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn filter_widens_dip() {
    let dir = tempfile::tempdir().unwrap();
    let (plain, filtered) = (dir.path().join("p"), dir.path().join("f"));
    ok(&["hom", "--model", "numeric-gaussian", "--grid-n", "256", "--out", arg(&plain)]);
    ok(&[
        "hom", "--model", "numeric-gaussian", "--grid-n", "256", "--filter-nm", "1", "--filter-arm",
        "both", "--out", arg(&filtered),
    ]);
    let t = |d: &Path| json(&d.join("hom.json"))["t_c_ps"].as_f64().unwrap();
    assert!(t(&filtered) > 3.0 * t(&plain));
}

#[test]
fn delays_beyond_grid_resolution_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = biphoton(&[
        "hom", "--grid-n", "64", "--delay-span-ps", "40", "--out", arg(dir.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--grid-n"));
}
