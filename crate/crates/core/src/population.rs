//! Territory grid and age-stratified synthetic population.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::rng::{self, stage};
use crate::{Error, Result};

/// The four age groups agents are stratified into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgeGroup {
    /// 0 to 17 years.
    Children,
    /// 18 to 34 years.
    Young,
    /// 35 to 64 years.
    Adults,
    /// 65 years and over.
    Elderly,
}

impl AgeGroup {
    pub const ALL: [AgeGroup; 4] = [
        AgeGroup::Children,
        AgeGroup::Young,
        AgeGroup::Adults,
        AgeGroup::Elderly,
    ];
    pub const COUNT: usize = 4;

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn from_age(years: u32) -> Self {
        match years {
            0..=17 => AgeGroup::Children,
            18..=34 => AgeGroup::Young,
            35..=64 => AgeGroup::Adults,
            _ => AgeGroup::Elderly,
        }
    }

    /// Inclusive year bounds; the upper bound of `Elderly` is open.
    pub fn bounds(self) -> (u32, Option<u32>) {
        match self {
            AgeGroup::Children => (0, Some(17)),
            AgeGroup::Young => (18, Some(34)),
            AgeGroup::Adults => (35, Some(64)),
            AgeGroup::Elderly => (65, None),
        }
    }

    pub fn is_child(self) -> bool {
        self == AgeGroup::Children
    }

    /// Members that satisfy the "older than the children" household rule.
    pub fn can_head_family(self) -> bool {
        matches!(self, AgeGroup::Adults | AgeGroup::Elderly)
    }

    pub fn is_adjacent(self, other: AgeGroup) -> bool {
        self.index().abs_diff(other.index()) == 1
    }

    pub fn name(self) -> &'static str {
        match self {
            AgeGroup::Children => "children",
            AgeGroup::Young => "young",
            AgeGroup::Adults => "adults",
            AgeGroup::Elderly => "elderly",
        }
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgeGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown age group `{s}`")))
    }
}

/// Axis-aligned rectangle in a local metric plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self { min_x, min_y, max_x, max_y }
    }

    /// Box anchored at the origin with the given side lengths.
    pub fn with_size(width: f64, height: f64) -> Self {
        Self::new(0.0, 0.0, width, height)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub id: u32,
    pub row: u32,
    pub col: u32,
    /// Center in meters.
    pub center: (f64, f64),
    pub population: u32,
}

/// Where per-cell population mass comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySource {
    /// The same mass in every grid cell, `total` overall.
    Uniform { total: f64 },
    /// Mass proportional to `exp(-r / scale)`, `r` being the distance of the
    /// cell center from `center`, rescaled to `total`.
    RadialExponential {
        total: f64,
        center: (f64, f64),
        scale: f64,
    },
    /// Explicit per-cell masses; unlisted cells are empty.
    Grid(Vec<GridCell>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub row: u32,
    pub col: u32,
    pub population: f64,
}

impl DensitySource {
    /// Raw masses in row-major order for a `rows x cols` grid.
    pub fn cell_masses(&self, bbox: &BoundingBox, tile_side: f64, rows: u32, cols: u32) -> Result<Vec<f64>> {
        let n = rows as usize * cols as usize;
        let masses = match self {
            DensitySource::Uniform { total } => {
                check_total(*total)?;
                vec![total / n as f64; n]
            }
            DensitySource::RadialExponential { total, center, scale } => {
                check_total(*total)?;
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Input(format!("radial density scale must be positive, got {scale}")));
                }
                let mut w = Vec::with_capacity(n);
                for row in 0..rows {
                    for col in 0..cols {
                        let (x, y) = cell_center(bbox, tile_side, row, col);
                        let r = libm::hypot(x - center.0, y - center.1);
                        w.push(libm::exp(-r / scale));
                    }
                }
                let sum: f64 = w.iter().sum();
                w.iter().map(|v| v / sum * total).collect()
            }
            DensitySource::Grid(cells) => {
                let mut m = vec![0.0; n];
                let mut seen = vec![false; n];
                for c in cells {
                    if c.row >= rows || c.col >= cols {
                        return Err(Error::Input(format!(
                            "density cell ({}, {}) lies outside the {rows}x{cols} grid",
                            c.row, c.col
                        )));
                    }
                    if !c.population.is_finite() || c.population < 0.0 {
                        return Err(Error::Input(format!(
                            "density cell ({}, {}) has invalid population {}",
                            c.row, c.col, c.population
                        )));
                    }
                    let k = c.row as usize * cols as usize + c.col as usize;
                    if seen[k] {
                        return Err(Error::Input(format!("density cell ({}, {}) listed twice", c.row, c.col)));
                    }
                    seen[k] = true;
                    m[k] = c.population;
                }
                m
            }
        };
        Ok(masses)
    }
}

fn check_total(total: f64) -> Result<()> {
    if total.is_finite() && total >= 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("density total must be a nonnegative number, got {total}")))
    }
}

fn cell_center(bbox: &BoundingBox, l: f64, row: u32, col: u32) -> (f64, f64) {
    (
        bbox.min_x + (col as f64 + 0.5) * l,
        bbox.min_y + (row as f64 + 0.5) * l,
    )
}

/// Rounds fractional masses to integers whose sum is `round(Σ masses)`,
/// handing the leftover units to the largest fractional parts (lower index
/// first on ties).
pub fn largest_remainder(masses: &[f64]) -> Vec<u32> {
    let target = libm::round(masses.iter().sum::<f64>()) as i64;
    let mut out: Vec<u32> = masses.iter().map(|m| libm::floor(*m) as u32).collect();
    let assigned: i64 = out.iter().map(|v| *v as i64).sum();
    let mut leftover = target - assigned;
    if leftover > 0 {
        let mut order: Vec<usize> = (0..masses.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = masses[a] - libm::floor(masses[a]);
            let fb = masses[b] - libm::floor(masses[b]);
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for k in order {
            if leftover == 0 {
                break;
            }
            out[k] += 1;
            leftover -= 1;
        }
    }
    out
}

/// Rectangular territory cut into square tiles; only sufficiently populated
/// tiles are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Territory {
    pub bbox: BoundingBox,
    pub tile_side: f64,
    pub rows: u32,
    pub cols: u32,
    pub min_tile_population: u32,
    tiles: Vec<Tile>,
}

impl Territory {
    /// Assembles a territory from already retained tiles. Tile ids must be
    /// dense and in order.
    pub fn from_tiles(bbox: BoundingBox, tile_side: f64, rows: u32, cols: u32, min_tile_population: u32, tiles: Vec<Tile>) -> Result<Self> {
        if !(tile_side > 0.0) {
            return Err(Error::Config(format!("tile side must be positive, got {tile_side}")));
        }
        if tiles.is_empty() {
            return Err(Error::NoTilesRetained { min_population: min_tile_population });
        }
        for (i, t) in tiles.iter().enumerate() {
            if t.id as usize != i {
                return Err(Error::Input(format!("tile ids must be dense; position {i} holds id {}", t.id)));
            }
            if t.population < min_tile_population {
                return Err(Error::Input(format!(
                    "tile {} has {} residents, below the minimum {min_tile_population}",
                    t.id, t.population
                )));
            }
        }
        Ok(Self { bbox, tile_side, rows, cols, min_tile_population, tiles })
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile(&self, id: u32) -> &Tile {
        &self.tiles[id as usize]
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn total_population(&self) -> u64 {
        self.tiles.iter().map(|t| t.population as u64).sum()
    }

    pub fn tile_at(&self, row: u32, col: u32) -> Option<u32> {
        self.tiles.iter().find(|t| t.row == row && t.col == col).map(|t| t.id)
    }

    /// Discretized distance between two tiles, see [`tile_distance`].
    #[inline]
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        tile_distance(self.tile(a), self.tile(b), self.tile_side)
    }

    /// Tile with the most residents (lowest id on ties).
    pub fn most_populated_tile(&self) -> u32 {
        let mut best = &self.tiles[0];
        for t in &self.tiles[1..] {
            if t.population > best.population {
                best = t;
            }
        }
        best.id
    }

    /// Retained tile whose center is farthest from the population centroid
    /// (lowest id on ties).
    pub fn most_peripheral_tile(&self) -> u32 {
        let total = self.total_population() as f64;
        let (mut cx, mut cy) = (0.0, 0.0);
        for t in &self.tiles {
            cx += t.center.0 * t.population as f64;
            cy += t.center.1 * t.population as f64;
        }
        cx /= total;
        cy /= total;
        let mut best = 0u32;
        let mut best_d = -1.0;
        for t in &self.tiles {
            let d = libm::hypot(t.center.0 - cx, t.center.1 - cy);
            if d > best_d {
                best_d = d;
                best = t.id;
            }
        }
        best
    }
}

/// `max(l/2, d*)` with `d*` the Euclidean distance between tile centers.
#[inline]
pub fn tile_distance(a: &Tile, b: &Tile, tile_side: f64) -> f64 {
    let d = libm::hypot(a.center.0 - b.center.0, a.center.1 - b.center.1);
    d.max(tile_side / 2.0)
}

/// Cuts `bbox` into tiles of side `tile_side`, assigns each an integer
/// population from `density` and drops tiles below `min_population`.
/// Dropped mass is not redistributed.
pub fn build_grid(bbox: BoundingBox, tile_side: f64, density: &DensitySource, min_population: u32) -> Result<Territory> {
    if !(tile_side > 0.0) || !tile_side.is_finite() {
        return Err(Error::Config(format!("tile side must be positive, got {tile_side}")));
    }
    if bbox.width() < tile_side || bbox.height() < tile_side {
        return Err(Error::Config(format!(
            "bounding box {}x{} m is smaller than one {tile_side} m tile",
            bbox.width(),
            bbox.height()
        )));
    }
    if min_population == 0 {
        return Err(Error::Config("minimum tile population must be at least 1".into()));
    }
    let rows = libm::ceil(bbox.height() / tile_side - 1e-9) as u32;
    let cols = libm::ceil(bbox.width() / tile_side - 1e-9) as u32;
    let masses = density.cell_masses(&bbox, tile_side, rows, cols)?;
    let populations = largest_remainder(&masses);

    let mut tiles = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let population = populations[row as usize * cols as usize + col as usize];
            if population >= min_population {
                tiles.push(Tile {
                    id: tiles.len() as u32,
                    row,
                    col,
                    center: cell_center(&bbox, tile_side, row, col),
                    population,
                });
            }
        }
    }
    if tiles.is_empty() {
        return Err(Error::NoTilesRetained { min_population });
    }
    Ok(Territory { bbox, tile_side, rows, cols, min_tile_population: min_population, tiles })
}

/// Categorical distribution over the four age groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgeDistribution([f64; 4]);

impl AgeDistribution {
    pub fn new(probabilities: [f64; 4]) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Input(format!("age probabilities must be nonnegative, got {p}")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("age probabilities must sum to 1, got {sum}")));
        }
        Ok(Self(probabilities))
    }

    /// Italian-census-style shares of the four groups.
    pub fn italian_default() -> Self {
        Self([0.16, 0.17, 0.44, 0.23])
    }

    pub fn probabilities(&self) -> [f64; 4] {
        self.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AgeGroup {
        let x = rng.random::<f64>();
        let mut acc = 0.0;
        for (i, p) in self.0.iter().enumerate() {
            acc += p;
            if x < acc {
                return AgeGroup::ALL[i];
            }
        }
        // rounding slack: last group with positive mass
        let last = self.0.iter().rposition(|p| *p > 0.0).unwrap_or(3);
        AgeGroup::ALL[last]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub id: u32,
    pub tile: u32,
    pub age: AgeGroup,
}

/// Territory plus its residents. Agent ids are dense and agents are stored
/// grouped by tile in tile order.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub territory: Territory,
    pub agents: Vec<Agent>,
    tile_offsets: Vec<usize>,
}

impl Population {
    pub fn new(territory: Territory, agents: Vec<Agent>) -> Result<Self> {
        let mut counts = vec![0usize; territory.tile_count()];
        let mut last_tile = 0u32;
        for (i, a) in agents.iter().enumerate() {
            if a.id as usize != i {
                return Err(Error::Input(format!("agent ids must be dense; position {i} holds id {}", a.id)));
            }
            if a.tile as usize >= counts.len() {
                return Err(Error::Input(format!("agent {} refers to unknown tile {}", a.id, a.tile)));
            }
            if a.tile < last_tile {
                return Err(Error::Input("agents must be grouped by tile in tile order".into()));
            }
            last_tile = a.tile;
            counts[a.tile as usize] += 1;
        }
        for t in territory.tiles() {
            if counts[t.id as usize] != t.population as usize {
                return Err(Error::Input(format!(
                    "tile {} declares {} residents but {} agents live there",
                    t.id, t.population, counts[t.id as usize]
                )));
            }
        }
        let mut tile_offsets = Vec::with_capacity(counts.len() + 1);
        tile_offsets.push(0);
        for c in counts {
            tile_offsets.push(tile_offsets.last().unwrap() + c);
        }
        Ok(Self { territory, agents, tile_offsets })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    #[inline]
    pub fn tile_of(&self, agent: u32) -> u32 {
        self.agents[agent as usize].tile
    }

    #[inline]
    pub fn age_of(&self, agent: u32) -> AgeGroup {
        self.agents[agent as usize].age
    }

    /// Residents of a tile.
    pub fn residents(&self, tile: u32) -> &[Agent] {
        &self.agents[self.tile_offsets[tile as usize]..self.tile_offsets[tile as usize + 1]]
    }

    pub fn age_counts(&self) -> [u64; 4] {
        let mut c = [0u64; 4];
        for a in &self.agents {
            c[a.age.index()] += 1;
        }
        c
    }
}

/// Creates `N_j` agents in every tile with independently sampled age groups.
pub fn populate(territory: Territory, ages: &AgeDistribution, seed: u64) -> Result<Population> {
    let mut rng = rng::stream(seed, &[stage::POPULATION]);
    let mut agents = Vec::with_capacity(territory.total_population() as usize);
    for tile in territory.tiles() {
        for _ in 0..tile.population {
            agents.push(Agent {
                id: agents.len() as u32,
                tile: tile.id,
                age: ages.sample(&mut rng),
            });
        }
    }
    Population::new(territory, agents)
}
