//! Experiment configuration read from TOML.
//!
//! Every field has a default, so an empty file describes the standard desk
//! experiment. The resolved configuration is echoed into the manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use urbanepi_core::contacts::Configuration;
use urbanepi_core::epidemic::{DEFAULT_MAX_DAYS, DEFAULT_OUTBREAK_THRESHOLD};
use urbanepi_core::network::HouseholdSizes;
use urbanepi_core::population::AgeDistribution;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    /// 0 uses every available core.
    pub workers: usize,
    pub territory: TerritoryConfig,
    pub population: PopulationConfig,
    pub network: NetworkConfig,
    pub epidemic: EpidemicConfig,
    pub scan: Option<ScanConfig>,
    pub placement: PlacementConfig,
    pub outputs: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("output"),
            workers: 0,
            territory: TerritoryConfig::default(),
            population: PopulationConfig::default(),
            network: NetworkConfig::default(),
            epidemic: EpidemicConfig::default(),
            scan: None,
            placement: PlacementConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerritoryConfig {
    pub width: f64,
    pub height: f64,
    pub tile_side: f64,
    pub min_tile_population: u32,
    pub density: DensityConfig,
}

impl Default for TerritoryConfig {
    fn default() -> Self {
        Self {
            width: 6000.0,
            height: 6000.0,
            tile_side: 500.0,
            min_tile_population: 10,
            density: DensityConfig::Radial { total: 5000.0, center: None, scale: 1500.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Uniform {
        total: f64,
    },
    /// Density decaying as `exp(-r / scale)` from `center` (default: the
    /// middle of the bounding box).
    Radial {
        total: f64,
        center: Option<[f64; 2]>,
        scale: f64,
    },
    /// CSV with columns `row,col,population`.
    Grid {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Children, young, adults, elderly.
    pub age_distribution: [f64; 4],
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self { age_distribution: AgeDistribution::italian_default().probabilities() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Probabilities of household sizes 1, 2, ...
    pub household_sizes: Vec<f64>,
    /// `"default"` or a CSV path holding the 4x4 matrix.
    pub mixing: String,
    /// Mean acquaintance degree.
    pub kappa: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            household_sizes: HouseholdSizes::italian_default().probabilities().to_vec(),
            mixing: "default".into(),
            kappa: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicConfig {
    pub configurations: Vec<String>,
    pub r0: f64,
    pub mu: f64,
    /// Overrides the calibration from `r0` when set.
    pub beta: Option<f64>,
    pub replicas: usize,
    pub max_days: u32,
    pub outbreak_threshold: f64,
    /// Seeds every run in this tile instead of anywhere.
    pub index_tile: Option<u32>,
    /// Days sampled for the contact-degree histogram.
    pub degree_days: u32,
}

impl Default for EpidemicConfig {
    fn default() -> Self {
        Self {
            configurations: Configuration::ALL.iter().map(|c| c.acronym().to_string()).collect(),
            r0: 1.3,
            mu: 1.0 / 3.0,
            beta: None,
            replicas: 100,
            max_days: DEFAULT_MAX_DAYS,
            outbreak_threshold: DEFAULT_OUTBREAK_THRESHOLD,
            index_tile: None,
            degree_days: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Explicit β values; takes precedence over `start`/`stop`/`step`.
    pub betas: Vec<f64>,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub replicas: usize,
    pub degree_days: u32,
    /// Defaults to the epidemic configurations.
    pub configurations: Option<Vec<String>>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            betas: Vec::new(),
            start: 0.005,
            stop: 0.08,
            step: 0.0025,
            replicas: 100,
            degree_days: 20,
            configurations: None,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if !self.betas.is_empty() {
            return Ok(self.betas.clone());
        }
        if !(self.step > 0.0) || !(self.stop >= self.start) || self.start < 0.0 {
            return Err(CliError::Config("scan: need 0 <= start <= stop and step > 0".into()));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // rounded so that 0.005 + 11 * 0.0025 prints as 0.0325
        Ok((0..n).map(|k| ((self.start + k as f64 * self.step) * 1e12).round() / 1e12).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    Random,
    Central,
    Peripheral,
}

impl PlacementMode {
    pub const ALL: [PlacementMode; 3] = [PlacementMode::Random, PlacementMode::Central, PlacementMode::Peripheral];

    pub fn name(self) -> &'static str {
        match self {
            PlacementMode::Random => "random",
            PlacementMode::Central => "central",
            PlacementMode::Peripheral => "peripheral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementConfig {
    pub modes: Vec<PlacementMode>,
    /// Replaces the most populated tile.
    pub central_tile: Option<u32>,
    /// Replaces the tile farthest from the population centroid.
    pub peripheral_tile: Option<u32>,
    /// Defaults to the epidemic replica count.
    pub replicas: Option<usize>,
    /// Defaults to the epidemic configurations.
    pub configurations: Option<Vec<String>>,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        Self { modes: PlacementMode::ALL.to_vec(), central_tile: None, peripheral_tile: None, replicas: None, configurations: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Per-replica event logs and daily tables.
    pub replica_files: bool,
    /// Infectious-side contact logs, one file per replica.
    pub contact_log: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { replica_files: true, contact_log: false }
    }
}

impl ExperimentConfig {
    /// Parses a TOML file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let DensityConfig::Grid { path } = &mut cfg.territory.density {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if cfg.network.mixing != "default" && Path::new(&cfg.network.mixing).is_relative() {
            cfg.network.mixing = base.join(&cfg.network.mixing).to_string_lossy().into_owned();
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("{key}: {msg}")));
        let t = &self.territory;
        if !(t.width > 0.0 && t.height > 0.0) {
            return bad("territory.width/height", format!("must be positive, got {} x {}", t.width, t.height));
        }
        if !(t.tile_side > 0.0) {
            return bad("territory.tile_side", format!("must be positive, got {}", t.tile_side));
        }
        if t.min_tile_population == 0 {
            return bad("territory.min_tile_population", "must be at least 1".into());
        }
        match &t.density {
            DensityConfig::Uniform { total } | DensityConfig::Radial { total, .. } if !(*total > 0.0) => {
                return bad("territory.density.total", format!("must be positive, got {total}"));
            }
            DensityConfig::Radial { scale, .. } if !(*scale > 0.0) => {
                return bad("territory.density.scale", format!("must be positive, got {scale}"));
            }
            DensityConfig::Grid { path } if !path.exists() => {
                return bad("territory.density.path", format!("{} does not exist", path.display()));
            }
            _ => {}
        }
        if let Err(e) = AgeDistribution::new(self.population.age_distribution) {
            return bad("population.age_distribution", e.to_string());
        }
        if let Err(e) = HouseholdSizes::new(self.network.household_sizes.clone()) {
            return bad("network.household_sizes", e.to_string());
        }
        if self.network.mixing != "default" && !Path::new(&self.network.mixing).exists() {
            return bad("network.mixing", format!("{} does not exist", self.network.mixing));
        }
        if !(self.network.kappa > 0.0) {
            return bad("network.kappa", format!("must be positive, got {}", self.network.kappa));
        }
        let e = &self.epidemic;
        parse_configurations(&e.configurations, "epidemic.configurations")?;
        if !(e.r0 >= 0.0) {
            return bad("epidemic.r0", format!("must be nonnegative, got {}", e.r0));
        }
        if !(e.mu > 0.0 && e.mu <= 1.0) {
            return bad("epidemic.mu", format!("must lie in (0, 1], got {}", e.mu));
        }
        if let Some(b) = e.beta {
            if !(0.0..=1.0).contains(&b) {
                return bad("epidemic.beta", format!("must lie in [0, 1], got {b}"));
            }
        }
        if e.replicas == 0 {
            return bad("epidemic.replicas", "must be at least 1".into());
        }
        if e.max_days == 0 {
            return bad("epidemic.max_days", "must be at least 1".into());
        }
        if !(0.0..1.0).contains(&e.outbreak_threshold) {
            return bad("epidemic.outbreak_threshold", format!("must lie in [0, 1), got {}", e.outbreak_threshold));
        }
        if let Some(s) = &self.scan {
            let grid = s.grid()?;
            if grid.len() < 10 {
                return bad("scan.betas", format!("need at least 10 values, got {}", grid.len()));
            }
            if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|b| !(0.0..=1.0).contains(b)) {
                return bad("scan.betas", "must be strictly increasing within [0, 1]".into());
            }
            if s.replicas == 0 {
                return bad("scan.replicas", "must be at least 1".into());
            }
            if let Some(c) = &s.configurations {
                parse_configurations(c, "scan.configurations")?;
            }
        }
        if let Some(c) = &self.placement.configurations {
            parse_configurations(c, "placement.configurations")?;
        }
        if self.placement.replicas == Some(0) {
            return bad("placement.replicas", "must be at least 1".into());
        }
        Ok(())
    }

    pub fn configurations(&self) -> Vec<Configuration> {
        parse_configurations(&self.epidemic.configurations, "epidemic.configurations").unwrap_or_default()
    }

    pub fn scan_configurations(&self) -> Vec<Configuration> {
        match self.scan.as_ref().and_then(|s| s.configurations.as_ref()) {
            Some(c) => parse_configurations(c, "scan.configurations").unwrap_or_default(),
            None => self.configurations(),
        }
    }

    pub fn placement_configurations(&self) -> Vec<Configuration> {
        match &self.placement.configurations {
            Some(c) => parse_configurations(c, "placement.configurations").unwrap_or_default(),
            None => self.configurations(),
        }
    }
}

fn parse_configurations(names: &[String], key: &str) -> Result<Vec<Configuration>, CliError> {
    if names.is_empty() {
        return Err(CliError::Config(format!("{key}: list at least one configuration")));
    }
    let mut out: Vec<Configuration> = Vec::new();
    for name in names {
        let c: Configuration = name.parse().map_err(|e| CliError::Config(format!("{key}: {e}")))?;
        if out.contains(&c) {
            return Err(CliError::Config(format!("{key}: {c} listed twice")));
        }
        out.push(c);
    }
    Ok(out)
}
