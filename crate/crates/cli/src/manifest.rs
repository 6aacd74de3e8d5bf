//! `manifest.json`: what an output directory holds and how it was produced.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::OutputTree;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub network: NetworkSummary,
    /// Stages finished so far, e.g. `build`, `run:HN`, `scan:AN`, `place:central:SN`.
    pub stages: Vec<String>,
    /// Error that stopped the last command, if any.
    pub failure: Option<String>,
    pub runs: BTreeMap<String, RunSummary>,
    pub scans: BTreeMap<String, ScanSummary>,
    /// Placement mode, then configuration.
    pub placements: BTreeMap<String, BTreeMap<String, PlacementSummary>>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub agents: usize,
    pub tiles: usize,
    pub households: usize,
    pub household_edges: usize,
    pub acquaintance_edges: usize,
    pub mean_degree: f64,
    pub household_mean_degree: f64,
    pub acquaintance_mean_degree: f64,
    pub child_heads: u64,
    pub unsupervised_children: u64,
    pub distant_partners: u64,
    /// Digest of the tile, agent and edge tables, in that order.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub directory: String,
    pub beta: f64,
    pub mu: f64,
    pub mean_contacts: f64,
    pub fortuitous_mass: f64,
    pub master_seed: u64,
    pub replicas: usize,
    pub outbreaks: usize,
    pub incomplete_runs: usize,
    pub mean_attack_rate: f64,
    pub mean_outbreak_attack_rate: Option<f64>,
    pub mean_index_secondary: f64,
    pub mean_outbreak_index_secondary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub directory: String,
    pub master_seed: u64,
    pub betas: usize,
    pub replicas_per_beta: usize,
    pub beta_c_variability: Option<f64>,
    pub beta_c_hmf: Option<f64>,
    pub lambda_c_hmf: Option<f64>,
    pub degree_mean: f64,
    pub degree_second_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub directory: String,
    /// `None` for placement anywhere in the territory.
    pub tile: Option<u32>,
    pub beta: f64,
    pub master_seed: u64,
    pub replicas: usize,
    pub outbreaks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_files(paths: &[&Path]) -> Result<String, CliError> {
    let mut h = Sha256::new();
    for p in paths {
        h.update(std::fs::read(p).map_err(|e| CliError::io(p, e))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, network: NetworkSummary) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            seed: config.seed,
            config: config.clone(),
            network,
            stages: Vec::new(),
            failure: None,
            runs: BTreeMap::new(),
            scans: BTreeMap::new(),
            placements: BTreeMap::new(),
            files: Vec::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Continues the manifest already in `root` when it describes the same
    /// seed and network, so that `run`, `scan` and `place` can share one tree.
    pub fn open(root: &Path, config: &ExperimentConfig, network: NetworkSummary) -> Self {
        let fresh = Self::new(config, network);
        match Self::read(&root.join(MANIFEST_FILE)) {
            Ok(old) if old.format_version == FORMAT_VERSION && old.seed == fresh.seed && old.network == fresh.network => {
                Self { config: fresh.config, failure: None, ..old }
            }
            _ => fresh,
        }
    }

    pub fn complete(&mut self, stage: impl Into<String>) {
        let stage = stage.into();
        if !self.stages.contains(&stage) {
            self.stages.push(stage);
        }
    }

    /// Refreshes the file inventory and writes `manifest.json`.
    pub fn write(&mut self, out: &OutputTree) -> Result<(), CliError> {
        let mut entries: BTreeMap<String, FileEntry> = BTreeMap::new();
        let listed = self.files.iter().map(|f| f.path.clone()).collect::<Vec<_>>();
        for rel in listed.iter().map(String::as_str).chain(out.files()) {
            if rel == MANIFEST_FILE || entries.contains_key(rel) {
                continue;
            }
            let path = out.root().join(rel);
            if let Ok(bytes) = std::fs::read(&path) {
                entries.insert(rel.to_string(), FileEntry { path: rel.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
            }
        }
        self.files = entries.into_values().collect();
        let path = out.root().join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Input(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
