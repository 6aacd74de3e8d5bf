//! CSV readers and writers for inputs, network tables, runs and metrics.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use urbanepi_core::epidemic::SimulationResult;
use urbanepi_core::network::{Layer, MixingMatrix, SocialGraph};
use urbanepi_core::population::{AgeGroup, GridCell, Population, Territory};

use crate::error::CliError;

pub type CsvWriter = csv::Writer<BufWriter<File>>;

/// Output directory that remembers every file written below it.
#[derive(Debug, Clone)]
pub struct OutputTree {
    root: PathBuf,
    files: BTreeSet<String>,
}

impl OutputTree {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self { root, files: BTreeSet::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths use `/` on every platform.
    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(String::as_str)
    }

    pub fn create(&mut self, rel: &str) -> Result<CsvWriter, CliError> {
        let path = self.register(rel)?;
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(csv::Writer::from_writer(BufWriter::new(file)))
    }

    pub fn register(&mut self, rel: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        self.files.insert(rel.to_string());
        Ok(path)
    }
}

fn finish(mut w: CsvWriter, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

macro_rules! record {
    ($w:expr, $path:expr, [$($x:expr),* $(,)?]) => {
        $w.write_record(&[$($x.to_string()),*]).map_err(|e| CliError::csv($path, e))?
    };
}

#[derive(Deserialize)]
struct DensityRow {
    row: u32,
    col: u32,
    population: f64,
}

/// Reads `row,col,population` cells.
pub fn read_density_csv(path: &Path) -> Result<Vec<GridCell>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    r.deserialize::<DensityRow>()
        .map(|row| {
            let row = row.map_err(|e| CliError::csv(path, e))?;
            if !(row.population.is_finite() && row.population >= 0.0) {
                return Err(CliError::Input(format!(
                    "{}: cell ({}, {}) has population {}",
                    path.display(),
                    row.row,
                    row.col,
                    row.population
                )));
            }
            Ok(GridCell { row: row.row, col: row.col, population: row.population })
        })
        .collect()
}

/// Reads a 4x4 matrix with header `group,children,young,adults,elderly`.
pub fn read_mixing_csv(path: &Path) -> Result<MixingMatrix, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let mut m = [[0.0; 4]; 4];
    let mut seen = [false; 4];
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        if rec.len() != 5 {
            return Err(CliError::Input(format!("{}: expected 5 columns, got {}", path.display(), rec.len())));
        }
        let g: AgeGroup = rec[0].trim().parse().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        for j in 0..4 {
            m[g.index()][j] = rec[j + 1]
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{}: `{}` is not a number", path.display(), &rec[j + 1])))?;
        }
        seen[g.index()] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(CliError::Input(format!("{}: every age group needs a row", path.display())));
    }
    MixingMatrix::new(m).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_mixing_csv(path: &Path, m: &MixingMatrix) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    record!(w, path, ["group", "children", "young", "adults", "elderly"]);
    for g in AgeGroup::ALL {
        let row = m.entries()[g.index()];
        record!(w, path, [g.name(), row[0], row[1], row[2], row[3]]);
    }
    finish(w, path)
}

pub fn write_tiles(out: &mut OutputTree, rel: &str, territory: &Territory) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    record!(w, &path, ["tile", "row", "col", "x", "y", "population"]);
    for t in territory.tiles() {
        record!(w, &path, [t.id, t.row, t.col, t.center.0, t.center.1, t.population]);
    }
    finish(w, &path)
}

pub fn write_agents(out: &mut OutputTree, rel: &str, population: &Population, graph: &SocialGraph) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    record!(w, &path, ["id", "tile", "age_group", "fitness", "household"]);
    for a in &population.agents {
        let hh = graph.households().household_of(a.id);
        record!(w, &path, [a.id, a.tile, a.age.name(), graph.fitness()[a.id as usize], hh]);
    }
    finish(w, &path)
}

pub fn write_edges(out: &mut OutputTree, rel: &str, graph: &SocialGraph) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    record!(w, &path, ["u", "v", "layer"]);
    for &(u, v) in graph.household_edges() {
        record!(w, &path, [u, v, Layer::Household.tag()]);
    }
    for &(u, v) in graph.acquaintance_edges() {
        record!(w, &path, [u, v, Layer::Acquaintance.tag()]);
    }
    finish(w, &path)
}

/// `agent,infection_day,infector,recovery_day`; the index case has infector
/// -1 and agents still infectious at the end have recovery day -1.
pub fn write_events(out: &mut OutputTree, rel: &str, r: &SimulationResult) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    record!(w, &path, ["agent", "infection_day", "infector", "recovery_day"]);
    for e in &r.events {
        let infector = e.infector.map_or(-1, i64::from);
        let recovery = e.recovery_day.map_or(-1, i64::from);
        record!(w, &path, [e.agent, e.infection_day, infector, recovery]);
    }
    finish(w, &path)
}

pub fn write_daily(out: &mut OutputTree, rel: &str, r: &SimulationResult) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    record!(w, &path, ["t", "S", "I", "R", "new_infections"]);
    for d in &r.daily {
        record!(w, &path, [d.t, d.susceptible, d.infectious, d.recovered, d.new_infections]);
    }
    finish(w, &path)
}

/// Wide table `t,tile_0,tile_1,...` of infectious residents per tile.
pub fn write_daily_tiles(out: &mut OutputTree, rel: &str, r: &SimulationResult) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    let mut header = vec!["t".to_string()];
    header.extend((0..r.tile_count).map(|j| format!("tile_{j}")));
    w.write_record(&header).map_err(|e| CliError::csv(&path, e))?;
    for t in 0..r.days() {
        let mut row = vec![t.to_string()];
        row.extend(r.tile_prevalence_at(t).iter().map(u32::to_string));
        w.write_record(&row).map_err(|e| CliError::csv(&path, e))?;
    }
    finish(w, &path)
}

pub fn write_daily_age(out: &mut OutputTree, rel: &str, r: &SimulationResult) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    let mut header = vec!["t"];
    header.extend(AgeGroup::ALL.iter().map(|g| g.name()));
    w.write_record(&header).map_err(|e| CliError::csv(&path, e))?;
    for (t, a) in r.age_prevalence.iter().enumerate() {
        record!(w, &path, [t, a[0], a[1], a[2], a[3]]);
    }
    finish(w, &path)
}

/// Streams `t,u,v,layer` rows; `u` is the infectious side.
pub struct ContactLog {
    writer: CsvWriter,
    path: PathBuf,
    error: Option<csv::Error>,
}

impl ContactLog {
    /// Opens a log at a path already registered with the output tree.
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        record!(writer, path, ["t", "u", "v", "layer"]);
        Ok(Self { writer, path: path.to_path_buf(), error: None })
    }

    pub fn push(&mut self, t: u32, u: u32, v: u32, layer: Layer) {
        if self.error.is_none() {
            let rec = [t.to_string(), u.to_string(), v.to_string(), layer.tag().to_string()];
            if let Err(e) = self.writer.write_record(&rec) {
                self.error = Some(e);
            }
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if let Some(e) = self.error {
            return Err(CliError::csv(&self.path, e));
        }
        finish(self.writer, &self.path)
    }
}

/// Tidy metric table `config,replica[,replica_b],t_or_bin,value`.
///
/// `replica` holds a replica index, or a label such as `mean` for rows
/// aggregated over replicas.
#[derive(Debug, Clone)]
pub struct MetricTable {
    config: String,
    paired: bool,
    rows: Vec<Vec<String>>,
}

impl MetricTable {
    pub fn new(config: impl Into<String>) -> Self {
        Self { config: config.into(), paired: false, rows: Vec::new() }
    }

    pub fn paired(config: impl Into<String>) -> Self {
        Self { config: config.into(), paired: true, rows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, replica: impl ToString, t_or_bin: impl ToString, value: f64) {
        debug_assert!(!self.paired);
        self.rows.push(vec![self.config.clone(), replica.to_string(), t_or_bin.to_string(), value.to_string()]);
    }

    pub fn push_pair(&mut self, a: impl ToString, b: impl ToString, t_or_bin: impl ToString, value: f64) {
        debug_assert!(self.paired);
        self.rows.push(vec![self.config.clone(), a.to_string(), b.to_string(), t_or_bin.to_string(), value.to_string()]);
    }

    pub fn write(&self, out: &mut OutputTree, rel: &str) -> Result<(), CliError> {
        let path = out.root().join(rel);
        let mut w = out.create(rel)?;
        if self.paired {
            record!(w, &path, ["config", "replica", "replica_b", "t_or_bin", "value"]);
        } else {
            record!(w, &path, ["config", "replica", "t_or_bin", "value"]);
        }
        for row in &self.rows {
            w.write_record(row).map_err(|e| CliError::csv(&path, e))?;
        }
        finish(w, &path)
    }
}
