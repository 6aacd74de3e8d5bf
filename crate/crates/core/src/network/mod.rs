//! The urban social network: household cliques plus the acquaintance graph.

mod acquaintances;
mod households;

pub use acquaintances::{acquaintance_weight, build_acquaintances, AcquaintanceGraph};
pub use households::{build_households, Household, HouseholdReport, HouseholdSizes, Households};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::population::{AgeGroup, Population};
use crate::rng::{self, stage};
use crate::{Error, Result};

/// Which relation a contact or edge stems from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Household,
    Acquaintance,
    Fortuitous,
}

impl Layer {
    pub fn tag(self) -> char {
        match self {
            Layer::Household => 'H',
            Layer::Acquaintance => 'A',
            Layer::Fortuitous => 'F',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            'H' => Some(Layer::Household),
            'A' => Some(Layer::Acquaintance),
            'F' => Some(Layer::Fortuitous),
            _ => None,
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Symmetric, nonnegative 4x4 age mixing propensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingMatrix([[f64; 4]; 4]);

impl MixingMatrix {
    pub fn new(entries: [[f64; 4]; 4]) -> Result<Self> {
        let mut any_positive = false;
        for i in 0..4 {
            for j in 0..4 {
                let v = entries[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Input(format!("mixing entry ({i}, {j}) must be nonnegative, got {v}")));
                }
                let w = entries[j][i];
                if (v - w).abs() > 1e-12 * v.abs().max(w.abs()).max(1.0) {
                    return Err(Error::Input(format!("mixing matrix is not symmetric at ({i}, {j}): {v} vs {w}")));
                }
                any_positive |= v > 0.0;
            }
        }
        if !any_positive {
            return Err(Error::Input("mixing matrix is all zeros".into()));
        }
        Ok(Self(entries))
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new([[value; 4]; 4])
    }

    /// Per-capita contact propensities between the four age groups, built
    /// from survey-style daily contact counts divided by group shares and
    /// symmetrized. Children and young adults mix most, mostly among
    /// themselves.
    pub fn default_urban() -> Self {
        Self([
            [62.5, 13.6, 15.0, 6.9],
            [13.6, 41.0, 16.0, 6.6],
            [15.0, 16.0, 15.9, 6.7],
            [6.9, 6.6, 6.7, 15.2],
        ])
    }

    #[inline]
    pub fn get(&self, a: AgeGroup, b: AgeGroup) -> f64 {
        self.0[a.index()][b.index()]
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn is_constant(&self) -> bool {
        let v = self.0[0][0];
        self.0.iter().flatten().all(|x| *x == v)
    }
}

/// Draws `f_u = 1 + X`, `X ~ LogNormal(ln 2, 1/4)`, for `n` agents.
pub fn sample_fitness(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[stage::FITNESS]);
    sample_fitness_with(n, &mut rng)
}

pub fn sample_fitness_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let dist = LogNormal::new(core::f64::consts::LN_2, 0.25).expect("valid lognormal parameters");
    (0..n).map(|_| 1.0 + dist.sample(rng)).collect()
}

/// Degree histogram with first and second moments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DegreeStats {
    /// `histogram[k]` counts vertices (or vertex-days) of degree `k`.
    pub histogram: Vec<u64>,
    pub count: u64,
    pub mean: f64,
    pub second_moment: f64,
}

impl DegreeStats {
    pub fn from_degrees<I: IntoIterator<Item = u32>>(degrees: I) -> Self {
        let mut s = Self::default();
        s.extend(degrees);
        s
    }

    pub fn from_histogram(histogram: Vec<u64>) -> Self {
        let mut s = Self { histogram, ..Self::default() };
        s.refresh();
        s
    }

    pub fn extend<I: IntoIterator<Item = u32>>(&mut self, degrees: I) {
        for d in degrees {
            let d = d as usize;
            if d >= self.histogram.len() {
                self.histogram.resize(d + 1, 0);
            }
            self.histogram[d] += 1;
        }
        self.refresh();
    }

    fn refresh(&mut self) {
        let mut count = 0u64;
        let mut s1 = 0u128;
        let mut s2 = 0u128;
        for (k, c) in self.histogram.iter().enumerate() {
            count += c;
            s1 += *c as u128 * k as u128;
            s2 += *c as u128 * (k * k) as u128;
        }
        self.count = count;
        if count == 0 {
            self.mean = 0.0;
            self.second_moment = 0.0;
        } else {
            self.mean = s1 as f64 / count as f64;
            self.second_moment = s2 as f64 / count as f64;
        }
    }

    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
}

/// `G = (V, E_H ∪ E_A)` with per-agent fitness and household membership.
///
/// Adjacency is kept in CSR form with neighbors sorted by id, so edge lookups
/// are a binary search.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    households: Households,
    fitness: Vec<f64>,
    household_edges: Vec<(u32, u32)>,
    acquaintance_edges: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    layers: Vec<Layer>,
}

impl SocialGraph {
    /// Validates and indexes the two layers. Acquaintance edges are
    /// normalized to `(min, max)` and sorted.
    pub fn new(households: Households, fitness: Vec<f64>, mut acquaintance_edges: Vec<(u32, u32)>) -> Result<Self> {
        let n = households.agent_count();
        if fitness.len() != n {
            return Err(Error::Input(format!("{} fitness values for {n} agents", fitness.len())));
        }
        if let Some(f) = fitness.iter().find(|f| !(**f > 1.0) || !f.is_finite()) {
            return Err(Error::Input(format!("fitness must exceed 1, got {f}")));
        }
        let household_edges = households.edges();
        for e in acquaintance_edges.iter_mut() {
            if e.0 == e.1 {
                return Err(Error::Input(format!("self-loop on agent {}", e.0)));
            }
            if e.0 as usize >= n || e.1 as usize >= n {
                return Err(Error::Input(format!("edge ({}, {}) refers to an unknown agent", e.0, e.1)));
            }
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        acquaintance_edges.sort_unstable();
        if let Some(w) = acquaintance_edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Input(format!("duplicate acquaintance edge ({}, {})", w[0].0, w[0].1)));
        }
        if let Some(e) = acquaintance_edges.iter().find(|e| households.same_household(e.0, e.1)) {
            return Err(Error::Input(format!("acquaintance edge ({}, {}) joins a household", e.0, e.1)));
        }

        let mut degree = vec![0usize; n];
        for &(u, v) in household_edges.iter().chain(&acquaintance_edges) {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut slots: Vec<(u32, Layer)> = vec![(0, Layer::Household); total];
        let mut fill = offsets.clone();
        let tagged = household_edges
            .iter()
            .map(|e| (e, Layer::Household))
            .chain(acquaintance_edges.iter().map(|e| (e, Layer::Acquaintance)));
        for (&(u, v), layer) in tagged {
            slots[fill[u as usize]] = (v, layer);
            fill[u as usize] += 1;
            slots[fill[v as usize]] = (u, layer);
            fill[v as usize] += 1;
        }
        for u in 0..n {
            slots[offsets[u]..offsets[u + 1]].sort_unstable_by_key(|s| s.0);
        }
        let (neighbors, layers) = slots.into_iter().unzip();

        Ok(Self {
            households,
            fitness,
            household_edges,
            acquaintance_edges,
            offsets,
            neighbors,
            layers,
        })
    }

    pub fn agent_count(&self) -> usize {
        self.fitness.len()
    }

    pub fn households(&self) -> &Households {
        &self.households
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn household_edges(&self) -> &[(u32, u32)] {
        &self.household_edges
    }

    pub fn acquaintance_edges(&self) -> &[(u32, u32)] {
        &self.acquaintance_edges
    }

    /// `|E| = |E_H| + |E_A|`.
    pub fn edge_count(&self) -> usize {
        self.household_edges.len() + self.acquaintance_edges.len()
    }

    #[inline]
    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.neighbors[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    #[inline]
    pub fn neighbor_layers(&self, u: u32) -> &[Layer] {
        &self.layers[self.offsets[u as usize]..self.offsets[u as usize + 1]]
    }

    #[inline]
    pub fn degree(&self, u: u32) -> u32 {
        (self.offsets[u as usize + 1] - self.offsets[u as usize]) as u32
    }

    /// Layer of edge `(u, v)`, if any.
    #[inline]
    pub fn edge_layer(&self, u: u32, v: u32) -> Option<Layer> {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        let start = self.offsets[a as usize];
        self.neighbors(a).binary_search(&b).ok().map(|i| self.layers[start + i])
    }

    #[inline]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.edge_layer(u, v).is_some()
    }

    /// Mean household degree ν = 2|E_H| / N.
    pub fn household_mean_degree(&self) -> f64 {
        2.0 * self.household_edges.len() as f64 / self.agent_count() as f64
    }

    pub fn acquaintance_mean_degree(&self) -> f64 {
        2.0 * self.acquaintance_edges.len() as f64 / self.agent_count() as f64
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.agent_count() as f64
    }

    pub fn degree_stats(&self) -> DegreeStats {
        DegreeStats::from_degrees((0..self.agent_count() as u32).map(|u| self.degree(u)))
    }
}

/// Builds the whole social network for a population: households, fitness,
/// then acquaintances calibrated to mean acquaintance degree `kappa`.
pub fn build_social_graph(
    population: &Population,
    sizes: &HouseholdSizes,
    mixing: &MixingMatrix,
    kappa: f64,
    seed: u64,
) -> Result<(SocialGraph, HouseholdReport)> {
    let (households, report) = build_households(population, sizes, seed)?;
    let fitness = sample_fitness(population.len(), seed);
    let acq = build_acquaintances(population, &fitness, &households, mixing, kappa, seed)?;
    let graph = SocialGraph::new(households, fitness, acq.edges)?;
    Ok((graph, report))
}
