//! Run configuration: preset defaults, then the config file, then flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use biphoton::grid::DEFAULT_POINTS;
use biphoton::units::{fs2, nm, wavelength_fwhm_to_sigma};
use biphoton::{PhasematchSpec, Profile, PumpSpec, SourcePreset};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_PRESET: &str = "ppktp-8mm";
pub const MIN_GRID_POINTS: usize = 16;

/// Source overrides shared by every simulating subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SourceArgs {
    /// Built-in preset name or path to a preset TOML file.
    #[arg(long)]
    pub preset: Option<String>,

    /// Pump intensity FWHM in nm.
    #[arg(long)]
    pub pump_fwhm_nm: Option<f64>,

    /// Pump chirp (quadratic spectral phase) in fs^2.
    #[arg(long, allow_hyphen_values = true)]
    pub chirp_fs2: Option<f64>,

    /// Waveguide length in mm; walk-offs scale with it.
    #[arg(long)]
    pub length_mm: Option<f64>,

    /// Phasematching profile: gaussian or sinc.
    #[arg(long)]
    pub profile: Option<Profile>,

    /// Points per axis of the square frequency grid.
    #[arg(long)]
    pub grid_n: Option<usize>,
}

/// Config file layout: the same keys as the flags (with underscores) plus an
/// optional inline source given as `[pump]` and `[pm]` tables.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    pump_fwhm_nm: Option<f64>,
    chirp_fs2: Option<f64>,
    length_mm: Option<f64>,
    profile: Option<Profile>,
    grid_n: Option<usize>,
    pump: Option<PumpSpec>,
    pm: Option<PhasematchSpec>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSource {
    pub preset: SourcePreset,
    pub grid_n: usize,
}

impl SourceArgs {
    fn or(self, fallback: SourceArgs) -> SourceArgs {
        SourceArgs {
            preset: self.preset.or(fallback.preset),
            pump_fwhm_nm: self.pump_fwhm_nm.or(fallback.pump_fwhm_nm),
            chirp_fs2: self.chirp_fs2.or(fallback.chirp_fs2),
            length_mm: self.length_mm.or(fallback.length_mm),
            profile: self.profile.or(fallback.profile),
            grid_n: self.grid_n.or(fallback.grid_n),
        }
    }

    /// Applies flags over `config` over the preset.
    pub fn resolve(&self, config: Option<&Path>) -> Result<ResolvedSource> {
        let file = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<ConfigFile>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        let merged = self.clone().or(SourceArgs {
            preset: file.preset,
            pump_fwhm_nm: file.pump_fwhm_nm,
            chirp_fs2: file.chirp_fs2,
            length_mm: file.length_mm,
            profile: file.profile,
            grid_n: file.grid_n,
        });

        let mut preset = match (file.pump, file.pm, &self.preset) {
            (Some(pump), Some(pm), None) => SourcePreset {
                name: "inline".into(),
                notes: "source given inline in the config file".into(),
                pump,
                pm,
            },
            (Some(_), None, None) | (None, Some(_), None) => {
                bail!("inline config sources need both [pump] and [pm] tables")
            }
            _ => load_preset(merged.preset.as_deref().unwrap_or(DEFAULT_PRESET))?,
        };

        if let Some(fwhm) = merged.pump_fwhm_nm {
            let sigma = wavelength_fwhm_to_sigma(preset.pump.center_wavelength(), nm(fwhm))?;
            preset.pump = preset.pump.with_sigma(sigma)?;
        }
        if let Some(chirp) = merged.chirp_fs2 {
            preset.pump = preset.pump.with_chirp(fs2(chirp));
        }
        if let Some(length) = merged.length_mm {
            preset.pm = preset.pm.with_length(length * 1e-3)?;
        }
        if let Some(profile) = merged.profile {
            preset.pm = preset.pm.with_profile(profile);
        }
        preset.pump.validate()?;
        preset.pm.validate()?;
        let grid_n = merged.grid_n.unwrap_or(DEFAULT_POINTS);
        if grid_n < MIN_GRID_POINTS {
            bail!("--grid-n must be at least {MIN_GRID_POINTS}, got {grid_n}");
        }
        Ok(ResolvedSource { preset, grid_n })
    }
}

fn load_preset(name: &str) -> Result<SourcePreset> {
    if name.ends_with(".toml") {
        return SourcePreset::load(Path::new(name))
            .with_context(|| format!("loading preset file {name}"));
    }
    Ok(SourcePreset::builtin(name)?)
}

/// Header written into every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
}

impl Provenance {
    /// Hashes the canonical JSON of the fully resolved run configuration.
    pub fn new<T: Serialize>(command: &str, resolved: &T) -> Result<Self> {
        let canonical = serde_json::to_string(resolved)?;
        Ok(Self {
            tool: "biphoton",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
        })
    }

    pub fn csv_line(&self) -> Result<String> {
        Ok(format!("# {}\n", serde_json::to_string(self)?))
    }
}

/// Output directory, created if needed.
pub fn output_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Rounds to 9 significant digits so JSON numbers match the CSV precision.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}
