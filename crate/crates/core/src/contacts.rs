//! Daily contact kernels for the six contact configurations.
//!
//! Every configuration assigns each unordered pair a daily contact
//! probability `p(u, v)` and all of them share the total mass
//! `Σ_{u<v} p(u, v) = |E|`:
//!
//! | config | household | acquaintance | other pairs |
//! |--------|-----------|--------------|-------------|
//! | HM     | uniform   | uniform      | uniform |
//! | SN     | 1         | 1            | 0 |
//! | HN     | 1         | 0.5          | uniform, total `W_F` |
//! | AN     | 1         | 0.5          | ∝ `s(g_u, g_v)`, total `W_F` |
//! | DN     | 1         | 0.5          | ∝ `1 / d(u, v)`, total `W_F` |
//! | ADN    | 1         | 0.5          | ∝ `s(g_u, g_v) / d(u, v)`, total `W_F` |
//!
//! with `W_F = |E| − |E_H| − |E_A| / 2`. Fortuitous weights only depend on
//! the agents' (tile, age group) cell, so the kernel stores one weight per
//! cell pair.
//!
//! Fortuitous and homogeneous contacts are drawn as a Poisson number of
//! weighted pair draws. By Poisson splitting each pair's daily contact count
//! is then `Poisson(p(u, v))`: the mean matches `p(u, v)` exactly and a pair
//! can, rarely, meet twice on the same day.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::alias::AliasTable;
use crate::network::{Layer, MixingMatrix, SocialGraph};
use crate::population::Population;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Configuration {
    HomogeneousMixing,
    StaticNetwork,
    HomogeneousNoise,
    AgeNoise,
    DistanceNoise,
    AgeDistanceNoise,
}

impl Configuration {
    pub const ALL: [Configuration; 6] = [
        Configuration::HomogeneousMixing,
        Configuration::StaticNetwork,
        Configuration::HomogeneousNoise,
        Configuration::AgeNoise,
        Configuration::DistanceNoise,
        Configuration::AgeDistanceNoise,
    ];

    pub fn acronym(self) -> &'static str {
        match self {
            Configuration::HomogeneousMixing => "HM",
            Configuration::StaticNetwork => "SN",
            Configuration::HomogeneousNoise => "HN",
            Configuration::AgeNoise => "AN",
            Configuration::DistanceNoise => "DN",
            Configuration::AgeDistanceNoise => "ADN",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn uses_age(self) -> bool {
        matches!(self, Configuration::AgeNoise | Configuration::AgeDistanceNoise)
    }

    fn uses_distance(self) -> bool {
        matches!(self, Configuration::DistanceNoise | Configuration::AgeDistanceNoise)
    }

    fn has_fortuitous_layer(self) -> bool {
        !matches!(self, Configuration::HomogeneousMixing | Configuration::StaticNetwork)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.acronym())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.acronym().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown configuration `{s}` (expected HM, SN, HN, AN, DN or ADN)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Contact {
    pub u: u32,
    pub v: u32,
    pub layer: Layer,
}

/// Contacts sampled for one day, `E^t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactSet {
    pub day: u32,
    pub contacts: Vec<Contact>,
}

impl ContactSet {
    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    /// Per-agent number of contacts (with multiplicity).
    pub fn degrees(&self, n: usize) -> Vec<u32> {
        let mut d = vec![0u32; n];
        for c in &self.contacts {
            d[c.u as usize] += 1;
            d[c.v as usize] += 1;
        }
        d
    }
}

/// Analytic `Σ_{u<v} p(u, v)` split by the layer the pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBreakdown {
    pub household: f64,
    pub acquaintance: f64,
    pub fortuitous: f64,
}

impl MassBreakdown {
    pub fn total(&self) -> f64 {
        self.household + self.acquaintance + self.fortuitous
    }
}

/// Agents grouped by the attributes the fortuitous weight depends on.
#[derive(Debug, Clone)]
struct CellIndex {
    cell_of: Vec<u32>,
    members: Vec<u32>,
    offsets: Vec<usize>,
}

impl CellIndex {
    fn new(cell_of: Vec<u32>, count: usize) -> Self {
        let mut sizes = vec![0usize; count];
        for c in &cell_of {
            sizes[*c as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(count + 1);
        offsets.push(0);
        for s in &sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        let mut fill = offsets.clone();
        let mut members = vec![0u32; cell_of.len()];
        for (u, c) in cell_of.iter().enumerate() {
            members[fill[*c as usize]] = u as u32;
            fill[*c as usize] += 1;
        }
        Self { cell_of, members, offsets }
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    fn members(&self, c: usize) -> &[u32] {
        &self.members[self.offsets[c]..self.offsets[c + 1]]
    }

    #[inline]
    fn size(&self, c: usize) -> u64 {
        (self.offsets[c + 1] - self.offsets[c]) as u64
    }
}

#[derive(Debug, Clone)]
struct Fortuitous {
    /// `W_F`.
    mass: f64,
    /// `W_F / Σ w · nonedges`, so `p(u, v) = scale · w(cell_u, cell_v)`.
    scale: f64,
    cells: CellIndex,
    /// symmetric `K x K` cell weights
    weights: Vec<f64>,
    /// non-edge pair counts per cell pair, `K x K`, filled for `a <= b`
    nonedges: Vec<u64>,
    pair_cells: Vec<(u32, u32)>,
    pair_alias: Option<AliasTable>,
    /// per cell `a`, draws `b` with weight `w(a, b) · |b|`
    rows: Vec<Option<AliasTable>>,
    agent_mass: Vec<f64>,
}

impl Fortuitous {
    #[inline]
    fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.cells.len() + b]
    }
}

/// Per-configuration machinery producing each day's contacts.
#[derive(Debug, Clone)]
pub struct ContactKernel<'a> {
    config: Configuration,
    population: &'a Population,
    graph: &'a SocialGraph,
    acquaintance_p: f64,
    /// HM per-pair probability.
    uniform_p: f64,
    fortuitous: Option<Fortuitous>,
}

/// Builds the kernel of `config` over a fixed population and social network.
pub fn make_kernel<'a>(
    config: Configuration,
    population: &'a Population,
    graph: &'a SocialGraph,
    mixing: &MixingMatrix,
) -> Result<ContactKernel<'a>> {
    let n = population.len();
    if n < 2 || graph.agent_count() != n {
        return Err(Error::Config(format!(
            "kernel needs a nonempty graph matching the population ({} agents, {} graph vertices)",
            n,
            graph.agent_count()
        )));
    }
    let edges = graph.edge_count() as f64;
    let all_pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let acquaintance_p = match config {
        Configuration::StaticNetwork => 1.0,
        _ => 0.5,
    };
    let uniform_p = if config == Configuration::HomogeneousMixing { edges / all_pairs } else { 0.0 };
    let fortuitous = if config.has_fortuitous_layer() {
        Some(build_fortuitous(config, population, graph, mixing)?)
    } else {
        None
    };
    Ok(ContactKernel { config, population, graph, acquaintance_p, uniform_p, fortuitous })
}

fn build_fortuitous(config: Configuration, population: &Population, graph: &SocialGraph, mixing: &MixingMatrix) -> Result<Fortuitous> {
    let territory = &population.territory;
    let tiles = territory.tile_count();
    let (k, cell_of): (usize, Vec<u32>) = match (config.uses_distance(), config.uses_age()) {
        (false, false) => (1, vec![0; population.len()]),
        (false, true) => (4, population.agents.iter().map(|a| a.age.index() as u32).collect()),
        (true, false) => (tiles, population.agents.iter().map(|a| a.tile).collect()),
        (true, true) => (4 * tiles, population.agents.iter().map(|a| a.tile * 4 + a.age.index() as u32).collect()),
    };
    let cells = CellIndex::new(cell_of, k);
    let tile_of_cell = |c: usize| -> u32 { if config.uses_age() { (c / 4) as u32 } else { c as u32 } };
    let age_of_cell = |c: usize| crate::population::AgeGroup::ALL[if config.uses_distance() { c % 4 } else { c }];

    let mut weights = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let mut w = 1.0;
            if config.uses_age() {
                w *= mixing.get(age_of_cell(a), age_of_cell(b));
            }
            if config.uses_distance() {
                w /= territory.distance(tile_of_cell(a), tile_of_cell(b));
            }
            weights[a * k + b] = w;
            weights[b * k + a] = w;
        }
    }

    let mut nonedges = vec![0u64; k * k];
    for a in 0..k {
        let na = cells.size(a);
        nonedges[a * k + a] = na * na.saturating_sub(1) / 2;
        for b in a + 1..k {
            nonedges[a * k + b] = na * cells.size(b);
        }
    }
    for &(u, v) in graph.household_edges().iter().chain(graph.acquaintance_edges()) {
        let (cu, cv) = (cells.cell_of[u as usize] as usize, cells.cell_of[v as usize] as usize);
        nonedges[cu.min(cv) * k + cu.max(cv)] -= 1;
    }

    let mass = graph.edge_count() as f64 - graph.household_edges().len() as f64 - graph.acquaintance_edges().len() as f64 / 2.0;
    if mass < 0.0 {
        return Err(Error::Invariant(format!("negative fortuitous mass {mass}")));
    }

    let mut pair_cells = Vec::new();
    let mut pair_weights = Vec::new();
    let mut z = 0.0;
    let mut w_max: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            let m = weights[a * k + b] * nonedges[a * k + b] as f64;
            if m > 0.0 {
                z += m;
                w_max = w_max.max(weights[a * k + b]);
                pair_cells.push((a as u32, b as u32));
                pair_weights.push(m);
            }
        }
    }
    let scale = if mass == 0.0 {
        0.0
    } else if z > 0.0 {
        mass / z
    } else {
        return Err(Error::Config(format!(
            "{config}: no pair outside the social network has positive fortuitous weight"
        )));
    };
    if scale * w_max > 1.0 {
        return Err(Error::Config(format!(
            "{config}: fortuitous contact probability {} exceeds 1; the network is too dense for this configuration",
            scale * w_max
        )));
    }
    let pair_alias = AliasTable::new(&pair_weights);

    let mut rows = Vec::with_capacity(k);
    let mut row_mass = vec![0.0; k];
    for a in 0..k {
        let row: Vec<f64> = (0..k).map(|b| weights[a * k + b] * cells.size(b) as f64).collect();
        row_mass[a] = row.iter().sum::<f64>() - weights[a * k + a];
        rows.push(AliasTable::new(&row));
    }
    let mut agent_mass = vec![0.0; population.len()];
    for (u, m) in agent_mass.iter_mut().enumerate() {
        let a = cells.cell_of[u] as usize;
        let mut w = row_mass[a];
        for &v in graph.neighbors(u as u32) {
            w -= weights[a * k + cells.cell_of[v as usize] as usize];
        }
        *m = (scale * w).max(0.0);
    }

    Ok(Fortuitous { mass, scale, cells, weights, nonedges, pair_cells, pair_alias, rows, agent_mass })
}

fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn attempt_budget(draws: u64) -> u64 {
    100 * draws + 100
}

impl<'a> ContactKernel<'a> {
    pub fn configuration(&self) -> Configuration {
        self.config
    }

    pub fn population(&self) -> &'a Population {
        self.population
    }

    pub fn graph(&self) -> &'a SocialGraph {
        self.graph
    }

    pub fn agent_count(&self) -> usize {
        self.population.len()
    }

    /// `|E|`, the total daily contact mass shared by all configurations.
    pub fn target_mass(&self) -> f64 {
        self.graph.edge_count() as f64
    }

    /// `W_F` for the noise configurations, 0 otherwise.
    pub fn fortuitous_mass(&self) -> f64 {
        self.fortuitous.as_ref().map_or(0.0, |f| f.mass)
    }

    pub fn acquaintance_probability(&self) -> f64 {
        if self.config == Configuration::HomogeneousMixing {
            self.uniform_p
        } else {
            self.acquaintance_p
        }
    }

    /// Daily contact probability of the pair `(u, v)`.
    pub fn pair_probability(&self, u: u32, v: u32) -> f64 {
        if u == v {
            return 0.0;
        }
        if self.config == Configuration::HomogeneousMixing {
            return self.uniform_p;
        }
        match self.graph.edge_layer(u, v) {
            Some(Layer::Household) => 1.0,
            Some(_) => self.acquaintance_p,
            None => match &self.fortuitous {
                Some(f) => f.scale * f.weight(f.cells.cell_of[u as usize] as usize, f.cells.cell_of[v as usize] as usize),
                None => 0.0,
            },
        }
    }

    /// Expected daily contacts of `u`, `Σ_v p(u, v)`.
    pub fn expected_contacts(&self, u: u32) -> f64 {
        if self.config == Configuration::HomogeneousMixing {
            return self.uniform_p * (self.agent_count() as f64 - 1.0);
        }
        let mut m = 0.0;
        for layer in self.graph.neighbor_layers(u) {
            m += if *layer == Layer::Household { 1.0 } else { self.acquaintance_p };
        }
        m + self.fortuitous.as_ref().map_or(0.0, |f| f.agent_mass[u as usize])
    }

    /// Analytic per-layer sum of `p(u, v)` over all unordered pairs.
    pub fn analytic_mass(&self) -> MassBreakdown {
        let hh = self.graph.household_edges().len() as f64;
        let acq = self.graph.acquaintance_edges().len() as f64;
        if self.config == Configuration::HomogeneousMixing {
            let n = self.agent_count() as f64;
            let others = n * (n - 1.0) / 2.0 - hh - acq;
            return MassBreakdown {
                household: self.uniform_p * hh,
                acquaintance: self.uniform_p * acq,
                fortuitous: self.uniform_p * others,
            };
        }
        let fortuitous = match &self.fortuitous {
            Some(f) => {
                let k = f.cells.len();
                let mut total = 0.0;
                for a in 0..k {
                    for b in a..k {
                        total += f.scale * f.weight(a, b) * f.nonedges[a * k + b] as f64;
                    }
                }
                total
            }
            None => 0.0,
        };
        MassBreakdown { household: hh, acquaintance: self.acquaintance_p * acq, fortuitous }
    }

    /// Samples the full contact set `E^t`.
    pub fn sample_day<R: Rng + ?Sized>(&self, day: u32, rng: &mut R) -> Result<ContactSet> {
        let mut contacts = Vec::with_capacity(self.graph.edge_count() + 16);
        let n = self.agent_count() as u32;
        if self.config == Configuration::HomogeneousMixing {
            let m = poisson(rng, self.target_mass());
            for _ in 0..m {
                let u = rng.random_range(0..n);
                let mut v = rng.random_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                contacts.push(Contact { u: u.min(v), v: u.max(v), layer: Layer::Fortuitous });
            }
            return Ok(ContactSet { day, contacts });
        }

        for &(u, v) in self.graph.household_edges() {
            contacts.push(Contact { u, v, layer: Layer::Household });
        }
        for &(u, v) in self.graph.acquaintance_edges() {
            if self.acquaintance_p >= 1.0 || rng.random::<f64>() < self.acquaintance_p {
                contacts.push(Contact { u, v, layer: Layer::Acquaintance });
            }
        }
        if let Some(f) = &self.fortuitous {
            let Some(alias) = &f.pair_alias else {
                return Ok(ContactSet { day, contacts });
            };
            let m = poisson(rng, f.mass);
            let budget = attempt_budget(m);
            let mut attempts = 0u64;
            for _ in 0..m {
                let (a, b) = f.pair_cells[alias.sample(rng)];
                let (ma, mb) = (f.cells.members(a as usize), f.cells.members(b as usize));
                loop {
                    attempts += 1;
                    if attempts > budget {
                        return Err(Error::RejectionLimit { attempts });
                    }
                    let u = ma[rng.random_range(0..ma.len())];
                    let v = mb[rng.random_range(0..mb.len())];
                    if u != v && !self.graph.has_edge(u, v) {
                        contacts.push(Contact { u: u.min(v), v: u.max(v), layer: Layer::Fortuitous });
                        break;
                    }
                }
            }
        }
        Ok(ContactSet { day, contacts })
    }

    /// Samples one day's contacts of agent `u` into `out` as `(partner, layer)`.
    ///
    /// Drawing this for every infectious agent of a day has the same
    /// distribution, restricted to pairs with an infectious end, as
    /// [`sample_day`](Self::sample_day).
    pub fn sample_contacts_of<R: Rng + ?Sized>(&self, u: u32, rng: &mut R, out: &mut Vec<(u32, Layer)>) -> Result<()> {
        let n = self.agent_count() as u32;
        if self.config == Configuration::HomogeneousMixing {
            let m = poisson(rng, self.uniform_p * (n as f64 - 1.0));
            for _ in 0..m {
                let mut v = rng.random_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                out.push((v, Layer::Fortuitous));
            }
            return Ok(());
        }
        for (&v, &layer) in self.graph.neighbors(u).iter().zip(self.graph.neighbor_layers(u)) {
            if layer == Layer::Household || self.acquaintance_p >= 1.0 || rng.random::<f64>() < self.acquaintance_p {
                out.push((v, layer));
            }
        }
        if let Some(f) = &self.fortuitous {
            let m = poisson(rng, f.agent_mass[u as usize]);
            if m == 0 {
                return Ok(());
            }
            let a = f.cells.cell_of[u as usize] as usize;
            let row = f.rows[a].as_ref().ok_or(Error::Invariant(format!("agent {u} has fortuitous mass but no partners")))?;
            let budget = attempt_budget(m);
            let mut attempts = 0u64;
            for _ in 0..m {
                loop {
                    attempts += 1;
                    if attempts > budget {
                        return Err(Error::RejectionLimit { attempts });
                    }
                    let members = f.cells.members(row.sample(rng));
                    let v = members[rng.random_range(0..members.len())];
                    if v != u && !self.graph.has_edge(u, v) {
                        out.push((v, Layer::Fortuitous));
                        break;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `β = R0 · μ / m̄` with `m̄ = 2|E| / N`, the mean daily contacts of a
/// uniformly chosen index case.
pub fn calibrate_beta(kernel: &ContactKernel<'_>, r0: f64, mu: f64) -> Result<f64> {
    if !(r0 >= 0.0) || !r0.is_finite() {
        return Err(Error::Config(format!("target R0 must be nonnegative, got {r0}")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::Config(format!("recovery probability must be in (0, 1], got {mu}")));
    }
    let edges = kernel.graph().edge_count();
    if edges == 0 {
        return Err(Error::Config("the social network has no edges; β cannot be calibrated".into()));
    }
    let mean_contacts = 2.0 * edges as f64 / kernel.agent_count() as f64;
    Ok(r0 * mu / mean_contacts)
}

/// Analytic and sampled total contact mass of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub target: f64,
    pub analytic: MassBreakdown,
    pub sampled_mean: f64,
    pub sampled_std_error: f64,
    pub days: u32,
}

impl MassReport {
    pub fn analytic_relative_error(&self) -> f64 {
        (self.analytic.total() - self.target).abs() / self.target
    }

    /// Distance of the sampled mean from the target in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.sampled_std_error > 0.0 {
            (self.sampled_mean - self.target) / self.sampled_std_error
        } else if self.sampled_mean == self.target {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn kernel_mass_check(kernel: &ContactKernel<'_>, days: u32, seed: u64) -> Result<MassReport> {
    let mut rng = rng::stream(seed, &[rng::stage::CONTACT_DEGREES, kernel.configuration().index() as u64]);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..days {
        let size = kernel.sample_day(t, &mut rng)?.len() as f64;
        sum += size;
        sum_sq += size * size;
    }
    let d = days.max(1) as f64;
    let mean = sum / d;
    let var = if days > 1 { (sum_sq - d * mean * mean).max(0.0) / (d - 1.0) } else { 0.0 };
    Ok(MassReport {
        target: kernel.target_mass(),
        analytic: kernel.analytic_mass(),
        sampled_mean: mean,
        sampled_std_error: libm::sqrt(var / d),
        days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_social_graph, HouseholdSizes};
    use crate::population::{build_grid, populate, AgeDistribution, BoundingBox, DensitySource};

    fn world(total: f64, width: f64, seed: u64) -> (Population, SocialGraph) {
        let t = build_grid(
            BoundingBox::with_size(width, width),
            500.0,
            &DensitySource::RadialExponential { total, center: (width / 2.0, width / 2.0), scale: width / 3.0 },
            5,
        )
        .unwrap();
        let pop = populate(t, &AgeDistribution::italian_default(), seed).unwrap();
        let (g, _) = build_social_graph(&pop, &HouseholdSizes::italian_default(), &MixingMatrix::default_urban(), 6.0, seed).unwrap();
        (pop, g)
    }

    #[test]
    fn configuration_names_round_trip() {
        for c in Configuration::ALL {
            assert_eq!(c.acronym().parse::<Configuration>().unwrap(), c);
        }
        assert!("XX".parse::<Configuration>().is_err());
    }

    #[test]
    fn static_network_probabilities_are_binary() {
        let (pop, g) = world(300.0, 2000.0, 1);
        let s = MixingMatrix::default_urban();
        let k = make_kernel(Configuration::StaticNetwork, &pop, &g, &s).unwrap();
        let n = pop.len() as u32;
        let mut total = 0.0;
        for u in 0..n {
            for v in u + 1..n {
                let p = k.pair_probability(u, v);
                assert!(p == 0.0 || p == 1.0);
                total += p;
            }
        }
        assert_eq!(total, g.edge_count() as f64);
        let mut rng = rng::stream(3, &[]);
        for t in 0..3 {
            assert_eq!(k.sample_day(t, &mut rng).unwrap().len(), g.edge_count());
        }
    }

    #[test]
    fn homogeneous_mixing_uniform_probability() {
        let (pop, g) = world(300.0, 2000.0, 2);
        let k = make_kernel(Configuration::HomogeneousMixing, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let n = pop.len() as f64;
        let p = g.edge_count() as f64 / (n * (n - 1.0) / 2.0);
        assert!((k.pair_probability(0, 5) - p).abs() < 1e-15);
        assert!((k.analytic_mass().total() - g.edge_count() as f64).abs() < 1e-9 * g.edge_count() as f64);
    }

    #[test]
    fn expected_contacts_average_to_mean_degree() {
        let (pop, g) = world(600.0, 2500.0, 4);
        for c in Configuration::ALL {
            let k = make_kernel(c, &pop, &g, &MixingMatrix::default_urban()).unwrap();
            let mean = (0..pop.len() as u32).map(|u| k.expected_contacts(u)).sum::<f64>() / pop.len() as f64;
            assert!((mean - g.mean_degree()).abs() < 1e-9, "{c}: {mean} vs {}", g.mean_degree());
        }
    }

    #[test]
    fn zero_mixing_row_excludes_group_from_fortuitous_contacts() {
        let (pop, g) = world(500.0, 2500.0, 5);
        let mut m = *MixingMatrix::default_urban().entries();
        for j in 0..4 {
            m[3][j] = 0.0;
            m[j][3] = 0.0;
        }
        let s = MixingMatrix::new(m).unwrap();
        let k = make_kernel(Configuration::AgeNoise, &pop, &g, &s).unwrap();
        let mut rng = rng::stream(6, &[]);
        let elderly = |u: u32| pop.age_of(u) == crate::population::AgeGroup::Elderly;
        for t in 0..200 {
            let day = k.sample_day(t, &mut rng).unwrap();
            for c in day.contacts.iter().filter(|c| c.layer == Layer::Fortuitous) {
                assert!(!elderly(c.u) && !elderly(c.v));
            }
        }
        for u in (0..pop.len() as u32).filter(|u| elderly(*u)) {
            let mut out = Vec::new();
            k.sample_contacts_of(u, &mut rng, &mut out).unwrap();
            assert!(out.iter().all(|(_, l)| *l != Layer::Fortuitous));
        }
    }

    #[test]
    fn beta_calibration() {
        let (pop, g) = world(300.0, 2000.0, 7);
        let k = make_kernel(Configuration::HomogeneousNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        assert_eq!(calibrate_beta(&k, 0.0, 1.0 / 3.0).unwrap(), 0.0);
        let b = calibrate_beta(&k, 1.3, 1.0 / 3.0).unwrap();
        assert!((b - 1.3 / 3.0 / g.mean_degree()).abs() < 1e-15);
        assert!(calibrate_beta(&k, 1.3, 0.0).is_err());
    }
}
