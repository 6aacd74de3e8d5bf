//! Acquaintance graph: every non-household pair `(u, v)` is linked
//! independently with probability `min(1, C · s(g_u, g_v) · f_u · f_v / d(u, v))`.
//!
//! The pair space is never enumerated directly. Agents are grouped into cells
//! by (tile, age group); inside a cell pair the weight factor `s / d` is
//! constant, so the normalization only needs per-cell fitness sums. Edges are
//! drawn per cell pair by geometric skipping over the candidate index space
//! with the cell pair's largest probability, then thinned to each pair's own
//! probability, which is exact Bernoulli sampling in time proportional to the
//! number of edges.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Households, MixingMatrix};
use crate::population::{Agent, AgeGroup, Population, Territory};
use crate::rng::{self, stage};
use crate::{Error, Result};

const KAPPA_TOLERANCE: f64 = 1e-6;
const MAX_ITERATIONS: usize = 10_000;

/// Unnormalized acquaintance weight `s(g_u, g_v) · f_u · f_v / d(u, v)`.
pub fn acquaintance_weight(u: &Agent, f_u: f64, v: &Agent, f_v: f64, mixing: &MixingMatrix, territory: &Territory) -> f64 {
    mixing.get(u.age, v.age) * f_u * f_v / territory.distance(u.tile, v.tile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquaintanceGraph {
    pub edges: Vec<(u32, u32)>,
    /// Normalization `C` with `ψ = min(1, C · w)`.
    pub normalization: f64,
    /// `2 Σ ψ / N` at the final normalization.
    pub expected_mean_degree: f64,
}

struct Cells<'a> {
    population: &'a Population,
    fitness: &'a [f64],
    households: &'a Households,
    mixing: &'a MixingMatrix,
    /// members of cell `tile * 4 + age`
    members: Vec<Vec<u32>>,
    fsum: Vec<f64>,
    fsq: Vec<f64>,
    fmax: Vec<f64>,
    /// same-tile household fitness products per `(tile, ga, gb)`, `ga <= gb`
    hh_weight: Vec<f64>,
    hh_count: Vec<u64>,
}

impl<'a> Cells<'a> {
    fn new(population: &'a Population, fitness: &'a [f64], households: &'a Households, mixing: &'a MixingMatrix) -> Self {
        let t = population.territory.tile_count();
        let k = 4 * t;
        let mut members = vec![Vec::new(); k];
        for a in &population.agents {
            members[cell_of(a)].push(a.id);
        }
        let mut fsum = vec![0.0; k];
        let mut fsq = vec![0.0; k];
        let mut fmax = vec![0.0f64; k];
        for (c, m) in members.iter().enumerate() {
            for &u in m {
                let f = fitness[u as usize];
                fsum[c] += f;
                fsq[c] += f * f;
                fmax[c] = fmax[c].max(f);
            }
        }
        let mut hh_weight = vec![0.0; 16 * t];
        let mut hh_count = vec![0u64; 16 * t];
        for (u, v) in households.edges() {
            let (au, av) = (&population.agents[u as usize], &population.agents[v as usize]);
            let (ga, gb) = ordered(au.age, av.age);
            let slot = au.tile as usize * 16 + ga * 4 + gb;
            hh_weight[slot] += fitness[u as usize] * fitness[v as usize];
            hh_count[slot] += 1;
        }
        Self { population, fitness, households, mixing, members, fsum, fsq, fmax, hh_weight, hh_count }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    fn tile(&self, c: usize) -> u32 {
        (c / 4) as u32
    }

    fn age(&self, c: usize) -> AgeGroup {
        AgeGroup::ALL[c % 4]
    }

    fn factor(&self, a: usize, b: usize) -> f64 {
        let s = self.mixing.get(self.age(a), self.age(b));
        if s == 0.0 {
            return 0.0;
        }
        s / self.population.territory.distance(self.tile(a), self.tile(b))
    }

    fn household_slot(&self, a: usize, b: usize) -> Option<usize> {
        if self.tile(a) != self.tile(b) {
            return None;
        }
        let (ga, gb) = ordered(self.age(a), self.age(b));
        Some(self.tile(a) as usize * 16 + ga * 4 + gb)
    }

    /// Candidate (non-household) pairs and their summed fitness products.
    fn candidates(&self, a: usize, b: usize) -> (u64, f64) {
        let (na, nb) = (self.members[a].len() as u64, self.members[b].len() as u64);
        let (mut count, mut prod) = if a == b {
            (na * na.saturating_sub(1) / 2, (self.fsum[a] * self.fsum[a] - self.fsq[a]) / 2.0)
        } else {
            (na * nb, self.fsum[a] * self.fsum[b])
        };
        if let Some(slot) = self.household_slot(a, b) {
            count -= self.hh_count[slot];
            prod -= self.hh_weight[slot];
        }
        (count, prod.max(0.0))
    }

    fn for_each_pair(&self, a: usize, b: usize, mut f: impl FnMut(u32, u32)) {
        let same_tile = self.tile(a) == self.tile(b);
        for (i, &u) in self.members[a].iter().enumerate() {
            let others = if a == b { &self.members[b][i + 1..] } else { &self.members[b][..] };
            for &v in others {
                if same_tile && self.households.same_household(u, v) {
                    continue;
                }
                f(u, v);
            }
        }
    }

    /// Returns `(capped pairs, summed weight of uncapped pairs)` at normalization `c`.
    fn split_at(&self, c: f64) -> (f64, f64) {
        let mut capped = 0.0;
        let mut uncapped = 0.0;
        for a in 0..self.len() {
            if self.members[a].is_empty() {
                continue;
            }
            for b in a..self.len() {
                if self.members[b].is_empty() {
                    continue;
                }
                let factor = self.factor(a, b);
                if factor == 0.0 {
                    continue;
                }
                if c * factor * self.fmax[a] * self.fmax[b] <= 1.0 {
                    uncapped += factor * self.candidates(a, b).1;
                } else {
                    self.for_each_pair(a, b, |u, v| {
                        let w = factor * self.fitness[u as usize] * self.fitness[v as usize];
                        if c * w >= 1.0 {
                            capped += 1.0;
                        } else {
                            uncapped += w;
                        }
                    });
                }
            }
        }
        (capped, uncapped)
    }

    fn positive_candidates(&self) -> u64 {
        let mut total = 0;
        for a in 0..self.len() {
            for b in a..self.len() {
                if self.factor(a, b) > 0.0 {
                    total += self.candidates(a, b).0;
                }
            }
        }
        total
    }

    fn sample_cell_pair<R: Rng + ?Sized>(&self, a: usize, b: usize, c: f64, rng: &mut R, out: &mut Vec<(u32, u32)>) {
        let factor = self.factor(a, b);
        let (ma, mb) = (&self.members[a], &self.members[b]);
        if factor == 0.0 || ma.is_empty() || mb.is_empty() {
            return;
        }
        let p_max = (c * factor * self.fmax[a] * self.fmax[b]).min(1.0);
        if !(p_max > 0.0) {
            return;
        }
        let space = ma.len() as u64 * mb.len() as u64;
        let log_q = libm::log1p(-p_max);
        let same_tile = self.tile(a) == self.tile(b);
        let mut k: u64 = 0;
        let mut first = true;
        loop {
            let skip = if p_max >= 1.0 {
                0.0
            } else {
                libm::floor(libm::log(1.0 - rng.random::<f64>()) / log_q)
            };
            let step = if first { skip } else { skip + 1.0 };
            first = false;
            if (k as f64) + step >= space as f64 {
                break;
            }
            k += step as u64;
            let i = (k / mb.len() as u64) as usize;
            let j = (k % mb.len() as u64) as usize;
            if a == b && i >= j {
                continue;
            }
            let (u, v) = (ma[i], mb[j]);
            if same_tile && self.households.same_household(u, v) {
                continue;
            }
            let p = (c * factor * self.fitness[u as usize] * self.fitness[v as usize]).min(1.0);
            if p >= p_max || rng.random::<f64>() * p_max < p {
                out.push((u.min(v), u.max(v)));
            }
        }
    }
}

fn cell_of(a: &Agent) -> usize {
    a.tile as usize * 4 + a.age.index()
}

fn ordered(a: AgeGroup, b: AgeGroup) -> (usize, usize) {
    let (x, y) = (a.index(), b.index());
    (x.min(y), x.max(y))
}

/// Samples `E_A` so that its expected mean degree is `kappa`.
///
/// The normalization is found by iterating `C ← (κN/2 − #capped) / Σ_uncapped w`
/// until the expected mean degree is within 1e-6 of `kappa`; this sequence
/// increases monotonically towards the solution.
pub fn build_acquaintances(
    population: &Population,
    fitness: &[f64],
    households: &Households,
    mixing: &MixingMatrix,
    kappa: f64,
    seed: u64,
) -> Result<AcquaintanceGraph> {
    let n = population.len();
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::Config(alloc::format!("mean acquaintance degree must be positive, got {kappa}")));
    }
    if fitness.len() != n || households.agent_count() != n {
        return Err(Error::Input("fitness and households must cover every agent".into()));
    }
    let cells = Cells::new(population, fitness, households, mixing);
    let target = kappa * n as f64 / 2.0;
    let candidates = cells.positive_candidates();
    if target >= candidates as f64 {
        return Err(Error::InfeasibleDegree {
            requested: kappa,
            max_achievable: 2.0 * candidates as f64 / n as f64,
        });
    }

    let (_, total) = cells.split_at(0.0);
    let mut c = target / total;
    let mut expected = target;
    for _ in 0..MAX_ITERATIONS {
        let (capped, uncapped) = cells.split_at(c);
        expected = capped + c * uncapped;
        if (2.0 * (expected - target) / n as f64).abs() <= KAPPA_TOLERANCE {
            break;
        }
        if !(uncapped > 0.0) {
            return Err(Error::InfeasibleDegree {
                requested: kappa,
                max_achievable: 2.0 * capped / n as f64,
            });
        }
        c = (target - capped) / uncapped;
    }

    let mut edges = Vec::new();
    for a in 0..cells.len() {
        if cells.members[a].is_empty() {
            continue;
        }
        let mut rng = rng::stream(seed, &[stage::ACQUAINTANCES, a as u64]);
        for b in a..cells.len() {
            cells.sample_cell_pair(a, b, c, &mut rng, &mut edges);
        }
    }
    edges.sort_unstable();

    Ok(AcquaintanceGraph {
        edges,
        normalization: c,
        expected_mean_degree: 2.0 * expected / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_households, sample_fitness, HouseholdSizes};
    use crate::population::{build_grid, populate, AgeDistribution, BoundingBox, DensitySource};

    fn setup(total: f64, width: f64, seed: u64) -> (Population, Vec<f64>, Households) {
        let t = build_grid(
            BoundingBox::with_size(width, width),
            500.0,
            &DensitySource::RadialExponential { total, center: (width / 2.0, width / 2.0), scale: width / 4.0 },
            1,
        )
        .unwrap();
        let pop = populate(t, &AgeDistribution::italian_default(), seed).unwrap();
        let (h, _) = build_households(&pop, &HouseholdSizes::italian_default(), seed).unwrap();
        let f = sample_fitness(pop.len(), seed);
        (pop, f, h)
    }

    #[test]
    fn weight_examples() {
        let (pop, _, _) = setup(50.0, 1000.0, 1);
        let s1 = MixingMatrix::constant(1.0).unwrap();
        let a = pop.agents[0];
        let b = pop.residents(a.tile)[1];
        assert!((acquaintance_weight(&a, 1.0, &b, 1.0, &s1, &pop.territory) - 1.0 / 250.0).abs() < 1e-15);
        let w = acquaintance_weight(&a, 1.5, &b, 2.5, &s1, &pop.territory);
        let w4 = acquaintance_weight(&a, 3.0, &b, 5.0, &s1, &pop.territory);
        assert!((w4 - 4.0 * w).abs() < 1e-15);
        assert_eq!(acquaintance_weight(&a, 1.5, &b, 2.5, &s1, &pop.territory), acquaintance_weight(&b, 2.5, &a, 1.5, &s1, &pop.territory));
        let mut zero = [[1.0; 4]; 4];
        zero[a.age.index()][b.age.index()] = 0.0;
        zero[b.age.index()][a.age.index()] = 0.0;
        let z = MixingMatrix::new(zero).unwrap();
        assert_eq!(acquaintance_weight(&a, 5.0, &b, 5.0, &z, &pop.territory), 0.0);
    }

    #[test]
    fn disjoint_from_households_and_calibrated() {
        let (pop, f, h) = setup(10_000.0, 5000.0, 2);
        let s = MixingMatrix::default_urban();
        let g = build_acquaintances(&pop, &f, &h, &s, 8.0, 2).unwrap();
        assert!((g.expected_mean_degree - 8.0).abs() < 1e-6);
        assert!(g.edges.iter().all(|&(u, v)| u < v && !h.same_household(u, v)));
        assert!(g.edges.windows(2).all(|w| w[0] < w[1]));
        let realized = 2.0 * g.edges.len() as f64 / pop.len() as f64;
        // Var|E_A| <= κN/2, so the mean degree has sd <= 2 sqrt(κN/2) / N
        let sd = 2.0 * libm::sqrt(8.0 * pop.len() as f64 / 2.0) / pop.len() as f64;
        assert!((realized - 8.0).abs() < 3.0 * sd, "realized {realized}, sd {sd}");
    }

    #[test]
    fn vanishing_kappa_gives_empty_graph() {
        let (pop, f, h) = setup(2000.0, 2500.0, 3);
        let g = build_acquaintances(&pop, &f, &h, &MixingMatrix::default_urban(), 1e-9, 3).unwrap();
        assert!(g.edges.is_empty());
        assert!(build_acquaintances(&pop, &f, &h, &MixingMatrix::default_urban(), 0.0, 3).is_err());
    }

    #[test]
    fn infeasible_kappa_reports_maximum() {
        let (pop, f, h) = setup(30.0, 1000.0, 4);
        let err = build_acquaintances(&pop, &f, &h, &MixingMatrix::constant(1.0).unwrap(), 100.0, 4).unwrap_err();
        match err {
            Error::InfeasibleDegree { max_achievable, .. } => {
                let n = pop.len() as f64;
                let pairs = n * (n - 1.0) / 2.0 - h.edges().len() as f64;
                assert!((max_achievable - 2.0 * pairs / n).abs() < 1e-9);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_binds_on_dense_toy() {
        // κ close to the pair count forces many ψ to 1
        let (pop, f, h) = setup(20.0, 1000.0, 5);
        let n = pop.len() as f64;
        let pairs = n * (n - 1.0) / 2.0 - h.edges().len() as f64;
        let kappa = 0.9 * 2.0 * pairs / n;
        let g = build_acquaintances(&pop, &f, &h, &MixingMatrix::constant(1.0).unwrap(), kappa, 5).unwrap();
        assert!((g.expected_mean_degree - kappa).abs() < 1e-6);
    }
}
