//! Campaign and ship files.
//!
//! Both are TOML with every key checked: unknown keys are rejected and parse
//! errors carry the file path and line number. Relative paths inside a
//! campaign are resolved against the campaign file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use surfride_core::deterministic::ClassifyConfig;
use surfride_core::seaway::{ForceAmplitudeModel, LinearGain, SeawaySpec, DEFAULT_BAND, DEFAULT_COMPONENTS};
use surfride_core::ship_model::ShipParams;
use surfride_core::stochastic::{NoiseMethod, SystemKind};
use surfride_core::{Error, Result};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "SURFRIDE_OUTPUT_ROOT";

pub fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Parse {
            path: path.into(),
            line,
            message: e.message().trim().to_string(),
        }
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShipFile {
    length: f64,
    mass: f64,
    added_mass: f64,
    r1: f64,
    r2: f64,
    r3: f64,
    r4: f64,
    r5: f64,
    thrust_deduction: f64,
    wake_fraction: f64,
    prop_diameter: f64,
    kt0: f64,
    kt1: f64,
    kt2: f64,
    #[serde(default = "default_density")]
    water_density: f64,
    #[serde(default = "default_gravity")]
    gravity: f64,
    u_max: Option<f64>,
}

fn default_density() -> f64 {
    1000.0
}

fn default_gravity() -> f64 {
    9.81
}

pub fn parse_ship(path: &Path, text: &str) -> Result<ShipParams> {
    let f: ShipFile = parse(path, text)?;
    let p = ShipParams {
        length: f.length,
        mass: f.mass,
        added_mass: f.added_mass,
        resistance: [f.r1, f.r2, f.r3, f.r4, f.r5],
        thrust_deduction: f.thrust_deduction,
        wake_fraction: f.wake_fraction,
        prop_diameter: f.prop_diameter,
        kt: [f.kt0, f.kt1, f.kt2],
        water_density: f.water_density,
        gravity: f.gravity,
        u_max: f.u_max,
    };
    p.validate()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(p)
}

pub fn load_ship(path: &Path) -> Result<ShipParams> {
    parse_ship(path, &read(path)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub ship: PathBuf,
    /// Worker threads; 0 uses every core. Never changes results.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub force: ForceSection,
    pub seaway: Option<SeawaySection>,
    pub simulation: Option<SimulationSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub regular_wave: RegularWaveSection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub classify: ClassifyConfig,
    pub portrait: Option<PortraitSection>,
    pub fpk: Option<FpkSection>,
    pub output: OutputSection,
}

/// Surge-force amplitude per unit wave amplitude: a constant or a CSV table.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSection {
    pub gain: Option<f64>,
    pub gain_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeawaySection {
    pub h13: f64,
    pub t01: f64,
    #[serde(default = "default_components")]
    pub n_components: usize,
    /// Band limits as multiples of the peak frequency.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    pub seed: u64,
}

fn default_components() -> usize {
    DEFAULT_COMPONENTS
}

fn default_band() -> [f64; 2] {
    [DEFAULT_BAND.0, DEFAULT_BAND.1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_system")]
    pub system: SystemKind,
    /// Operating point of `simulate`.
    pub froude: Option<f64>,
    /// Step in seconds; defaults to T_01 / 200.
    pub dt: Option<f64>,
    pub horizon: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub guard: Option<f64>,
    /// Discarded start of every path in seconds; defaults to 100 T_01.
    pub transient: Option<f64>,
}

fn default_system() -> SystemKind {
    SystemKind::Colored
}

fn one() -> usize {
    1
}

fn default_paths() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub froude: Vec<f64>,
    /// Seconds between position samples entering the uniformity test;
    /// defaults to 5 T_01.
    pub ks_spacing: Option<f64>,
    #[serde(default = "default_qq_points")]
    pub qq_points: usize,
}

fn default_qq_points() -> usize {
    512
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum NoiseMethodName {
    Spectral,
    Encounter,
    TotalVariance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub method: NoiseMethodName,
    /// Spectral reference frequency, defaults to the peak frequency.
    pub omega_ref: Option<f64>,
    pub bandwidth: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            method: NoiseMethodName::Spectral,
            omega_ref: None,
            bandwidth: None,
        }
    }
}

impl NoiseSection {
    pub fn method(&self, omega_wp: f64) -> Result<NoiseMethod> {
        Ok(match self.method {
            NoiseMethodName::Spectral => NoiseMethod::Spectral {
                omega_ref: self.omega_ref.unwrap_or(omega_wp),
            },
            NoiseMethodName::Encounter => NoiseMethod::Encounter,
            NoiseMethodName::TotalVariance => NoiseMethod::TotalVariance {
                bandwidth: self
                    .bandwidth
                    .ok_or_else(|| Error::Config("[noise] total_variance needs `bandwidth`".into()))?,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularWaveSection {
    /// Wavelength over ship length; defaults to the seaway peak wavelength.
    pub wavelength_ratio: Option<f64>,
    #[serde(default = "default_steepness")]
    pub steepness: f64,
    #[serde(default = "default_max_steepness")]
    pub max_steepness: f64,
}

fn default_steepness() -> f64 {
    0.04
}

fn default_max_steepness() -> f64 {
    surfride_core::deterministic::DEFAULT_MAX_STEEPNESS
}

impl Default for RegularWaveSection {
    fn default() -> Self {
        RegularWaveSection {
            wavelength_ratio: None,
            steepness: default_steepness(),
            max_steepness: default_max_steepness(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub froude_range: [f64; 2],
    pub scan_points: usize,
    pub phases: usize,
    pub tol: f64,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            froude_range: [0.15, 1.0],
            scan_points: 17,
            phases: surfride_core::deterministic::STANDARD_PHASES,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSection {
    pub froude: f64,
    #[serde(default = "default_portrait_phases")]
    pub phases: usize,
}

fn default_portrait_phases() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpkSection {
    pub froude: f64,
    #[serde(default = "default_pdf_points")]
    pub points: usize,
    /// Stride of the white-noise samples entering `compare`.
    #[serde(default = "one")]
    pub record_stride: usize,
    /// `compare` run length and ensemble size; default to [simulation].
    /// The white-noise system has no recurrence, so long runs are fine.
    pub horizon: Option<f64>,
    pub paths: Option<usize>,
}

fn default_pdf_points() -> usize {
    401
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// A parsed campaign with its referenced files loaded.
pub struct Loaded {
    pub campaign: Campaign,
    pub base: PathBuf,
    pub ship: ShipParams,
    pub force: Box<dyn ForceAmplitudeModel + Send>,
    /// SHA-256 over the campaign, ship and gain-table bytes.
    pub hash: String,
}

pub fn parse_campaign(path: &Path, text: &str) -> Result<Campaign> {
    parse(path, text)
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let campaign = parse_campaign(path, &text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());

    let ship_path = base.join(&campaign.ship);
    let ship_text = read(&ship_path)?;
    hasher.update(b"\0ship\0");
    hasher.update(ship_text.as_bytes());
    let ship = parse_ship(&ship_path, &ship_text)?;

    let force: Box<dyn ForceAmplitudeModel + Send> = match (&campaign.force.gain, &campaign.force.gain_table) {
        (Some(g), None) => {
            if !(*g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("[force] gain must be finite and >= 0, got {g}")));
            }
            Box::new(LinearGain::constant(*g))
        }
        (None, Some(table)) => {
            let p = base.join(table);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            hasher.update(b"\0gain\0");
            hasher.update(&bytes);
            Box::new(LinearGain::from_csv(&p)?)
        }
        (None, None) => Box::new(LinearGain::constant(0.0)),
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "[force] takes either `gain` or `gain_table`, not both".into(),
            ));
        }
    };
    let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded {
        campaign,
        base,
        ship,
        force,
        hash,
    })
}

impl Loaded {
    pub fn seaway(&self) -> Result<SeawaySpec> {
        let s = self
            .campaign
            .seaway
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [seaway] section".into()))?;
        SeawaySpec::with_band_multipliers(
            s.h13,
            s.t01,
            s.n_components,
            s.seed,
            self.ship.gravity,
            (s.band[0], s.band[1]),
        )
        .map_err(|e| Error::Config(format!("[seaway]: {e}")))
    }

    pub fn simulation(&self) -> Result<&SimulationSection> {
        self.campaign
            .simulation
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [simulation] section".into()))
    }

    /// Output directory: `--output` wins, then `SURFRIDE_OUTPUT_ROOT` joined
    /// with a relative `[output] dir`, then `dir` relative to the campaign.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag {
            return dir.to_path_buf();
        }
        let dir = &self.campaign.output.dir;
        if dir.is_absolute() {
            return dir.clone();
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
            _ => self.base.join(dir),
        }
    }
}
