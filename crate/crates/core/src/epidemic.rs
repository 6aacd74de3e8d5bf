//! Discrete-day stochastic SIR on sampled contact sets.
//!
//! Day `t` runs in three steps. Every contact between an infectious and a
//! susceptible agent transmits independently with probability `β`; then each
//! infectious agent recovers with probability `μ`; then the newly infected
//! agents become infectious. An agent's `infection_day` is therefore its first
//! infectious day, one after the day of the transmitting contact, and its
//! `recovery_day` is its first day in R.
//!
//! Only contacts with an infectious endpoint can change the state, so a run
//! samples each infectious agent's contacts with
//! [`ContactKernel::sample_contacts_of`] instead of the whole `E^t`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::contacts::{Configuration, ContactKernel};
use crate::network::Layer;
use crate::population::Population;
use crate::rng::{self, SimRng};
use crate::{Error, Result};

pub const DEFAULT_MAX_DAYS: u32 = 365;
pub const DEFAULT_OUTBREAK_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexCaseMode {
    UniformPopulation,
    UniformInTile(u32),
    Agent(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    beta: f64,
    mu: f64,
    max_days: u32,
    index_case: IndexCaseMode,
}

impl EpidemicParams {
    pub fn new(beta: f64, mu: f64, max_days: u32, index_case: IndexCaseMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("β must lie in [0, 1], got {beta}")));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Config(format!("μ must lie in (0, 1], got {mu}")));
        }
        if max_days == 0 {
            return Err(Error::Config("max_days must be at least 1".into()));
        }
        Ok(Self { beta, mu, max_days, index_case })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn max_days(&self) -> u32 {
        self.max_days
    }

    pub fn index_case(&self) -> IndexCaseMode {
        self.index_case
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(beta, self.mu, self.max_days, self.index_case)
    }

    pub fn with_index_case(self, index_case: IndexCaseMode) -> Self {
        Self { index_case, ..self }
    }

    pub fn check_index_case(&self, population: &Population) -> Result<()> {
        match self.index_case {
            IndexCaseMode::UniformPopulation if population.is_empty() => Err(Error::Config("empty population".into())),
            IndexCaseMode::UniformInTile(tile) if tile as usize >= population.territory.tile_count() => {
                Err(Error::Config(format!("index-case tile {tile} is not a retained tile")))
            }
            IndexCaseMode::Agent(a) if a as usize >= population.len() => {
                Err(Error::Config(format!("index case {a} is not an agent")))
            }
            _ => Ok(()),
        }
    }

    fn pick_index<R: Rng + ?Sized>(&self, population: &Population, rng: &mut R) -> Result<u32> {
        self.check_index_case(population)?;
        Ok(match self.index_case {
            IndexCaseMode::UniformPopulation => rng.random_range(0..population.len() as u32),
            IndexCaseMode::UniformInTile(tile) => {
                let residents = population.residents(tile);
                residents[rng.random_range(0..residents.len())].id
            }
            IndexCaseMode::Agent(a) => a,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfectionEvent {
    pub agent: u32,
    pub infection_day: u32,
    /// `None` for the index case.
    pub infector: Option<u32>,
    /// `None` while still infectious at the end of the run.
    pub recovery_day: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DailyCounts {
    pub t: u32,
    pub susceptible: u32,
    pub infectious: u32,
    pub recovered: u32,
    /// Agents whose first infectious day is `t`, the index case included.
    pub new_infections: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub seed: u64,
    pub configuration: Option<Configuration>,
    pub population: usize,
    pub tile_count: usize,
    pub index_case: u32,
    /// Days `0..=last`, where `last` has no infectious agent unless the run
    /// hit its day limit.
    pub daily: Vec<DailyCounts>,
    /// `I_j(t)`, day-major.
    pub tile_prevalence: Vec<u32>,
    pub age_prevalence: Vec<[u32; 4]>,
    pub tile_attack: Vec<u32>,
    pub events: Vec<InfectionEvent>,
    pub completed: bool,
}

impl SimulationResult {
    /// Aggregates a full event log over days `0..=last_day`.
    ///
    /// Rejects logs where an infector was not infectious on the day before
    /// its infectee's `infection_day`.
    pub fn from_event_log(
        population: &Population,
        events: Vec<InfectionEvent>,
        last_day: u32,
        seed: u64,
        configuration: Option<Configuration>,
    ) -> Result<Self> {
        let n = population.len();
        let tiles = population.territory.tile_count();
        let mut slot = vec![u32::MAX; n];
        let mut index_case = None;
        for (i, e) in events.iter().enumerate() {
            let a = e.agent as usize;
            if a >= n || slot[a] != u32::MAX {
                return Err(Error::Invariant(format!("event log lists agent {} twice or out of range", e.agent)));
            }
            slot[a] = i as u32;
            if let Some(r) = e.recovery_day {
                if r <= e.infection_day {
                    return Err(Error::Invariant(format!("agent {} recovers before being infectious", e.agent)));
                }
            }
            if e.infection_day > last_day {
                return Err(Error::Invariant(format!("agent {} infected after the last day", e.agent)));
            }
            if e.infector.is_none() && (index_case.replace(e.agent).is_some() || e.infection_day != 0) {
                return Err(Error::Invariant("event log needs exactly one index case, infectious on day 0".into()));
            }
        }
        let index_case = index_case.ok_or_else(|| Error::Invariant("event log has no index case".into()))?;
        for e in &events {
            if let Some(src) = e.infector {
                let s = slot.get(src as usize).copied().unwrap_or(u32::MAX);
                if s == u32::MAX {
                    return Err(Error::Invariant(format!("infector {src} of agent {} was never infected", e.agent)));
                }
                let inf = &events[s as usize];
                let contact_day = e.infection_day.checked_sub(1);
                let ok = contact_day.is_some_and(|d| inf.infection_day <= d && inf.recovery_day.is_none_or(|r| d < r));
                if !ok {
                    return Err(Error::Invariant(format!(
                        "agent {} infected on day {} by {src}, who was not infectious the day before",
                        e.agent, e.infection_day
                    )));
                }
            }
        }

        let days = last_day as usize + 1;
        // difference arrays over days, global and per tile/age
        let mut d_inf = vec![0i64; days + 1];
        let mut d_rec = vec![0i64; days + 1];
        let mut new = vec![0u32; days];
        let mut d_tile = vec![0i64; (days + 1) * tiles];
        let mut d_age = vec![[0i64; 4]; days + 1];
        let mut tile_attack = vec![0u32; tiles];
        for e in &events {
            let start = e.infection_day as usize;
            let end = e.recovery_day.map_or(days, |r| (r as usize).min(days));
            let tile = population.tile_of(e.agent) as usize;
            let age = population.age_of(e.agent).index();
            new[start] += 1;
            tile_attack[tile] += 1;
            d_inf[start] += 1;
            d_inf[end] -= 1;
            d_rec[end] += 1;
            d_tile[start * tiles + tile] += 1;
            d_tile[end * tiles + tile] -= 1;
            d_age[start][age] += 1;
            d_age[end][age] -= 1;
        }
        let mut daily = Vec::with_capacity(days);
        let mut tile_prevalence = vec![0u32; days * tiles];
        let mut age_prevalence = Vec::with_capacity(days);
        let (mut i, mut r, mut ever) = (0i64, 0i64, 0i64);
        let mut tile_run = vec![0i64; tiles];
        let mut age_run = [0i64; 4];
        for t in 0..days {
            i += d_inf[t];
            r += d_rec[t];
            ever += new[t] as i64;
            daily.push(DailyCounts {
                t: t as u32,
                susceptible: (n as i64 - ever) as u32,
                infectious: i as u32,
                recovered: r as u32,
                new_infections: new[t],
            });
            for j in 0..tiles {
                tile_run[j] += d_tile[t * tiles + j];
                tile_prevalence[t * tiles + j] = tile_run[j] as u32;
            }
            for g in 0..4 {
                age_run[g] += d_age[t][g];
            }
            age_prevalence.push(age_run.map(|x| x as u32));
        }
        let completed = daily.last().is_some_and(|d| d.infectious == 0);
        Ok(Self {
            seed,
            configuration,
            population: n,
            tile_count: tiles,
            index_case,
            daily,
            tile_prevalence,
            age_prevalence,
            tile_attack,
            events,
            completed,
        })
    }

    pub fn days(&self) -> usize {
        self.daily.len()
    }

    /// `ρ = R_∞ / N`, read on the last simulated day.
    pub fn attack_rate(&self) -> f64 {
        self.daily.last().map_or(0.0, |d| d.recovered as f64) / self.population as f64
    }

    pub fn total_infected(&self) -> usize {
        self.events.len()
    }

    pub fn tile_prevalence_at(&self, t: usize) -> &[u32] {
        &self.tile_prevalence[t * self.tile_count..(t + 1) * self.tile_count]
    }

    /// Day of maximal `I_t`, earliest on ties.
    pub fn peak_day(&self) -> u32 {
        let mut best = 0;
        for d in &self.daily {
            if d.infectious > self.daily[best as usize].infectious {
                best = d.t;
            }
        }
        best
    }

    pub fn peak_prevalence(&self) -> u32 {
        self.daily.iter().map(|d| d.infectious).max().unwrap_or(0)
    }

    /// Lifetime secondary infections of each event's agent, aligned with `events`.
    pub fn secondary_counts(&self) -> Vec<u32> {
        let mut slot = vec![u32::MAX; self.population];
        for (i, e) in self.events.iter().enumerate() {
            slot[e.agent as usize] = i as u32;
        }
        let mut counts = vec![0u32; self.events.len()];
        for e in &self.events {
            if let Some(src) = e.infector {
                counts[slot[src as usize] as usize] += 1;
            }
        }
        counts
    }

    /// Infections caused directly by the index case.
    pub fn index_secondary(&self) -> u32 {
        self.events.iter().filter(|e| e.infector == Some(self.index_case)).count() as u32
    }
}

/// Receives every contact sampled from the infectious side during a run.
pub trait ContactObserver {
    fn contact(&mut self, day: u32, infectious: u32, other: u32, layer: Layer);
}

impl ContactObserver for () {
    fn contact(&mut self, _: u32, _: u32, _: u32, _: Layer) {}
}

impl<F: FnMut(u32, u32, u32, Layer)> ContactObserver for F {
    fn contact(&mut self, day: u32, infectious: u32, other: u32, layer: Layer) {
        self(day, infectious, other, layer)
    }
}

pub fn run(kernel: &ContactKernel<'_>, params: &EpidemicParams, seed: u64) -> Result<SimulationResult> {
    run_observed(kernel, params, seed, &mut ())
}

const SUSCEPTIBLE: u8 = 0;
const INFECTIOUS: u8 = 1;
const RECOVERED: u8 = 2;

/// [`run`] that also reports each sampled contact to `observer`.
///
/// Contacts between two infectious agents are sampled, and reported, once
/// from each side; they never transmit.
pub fn run_observed<O: ContactObserver + ?Sized>(
    kernel: &ContactKernel<'_>,
    params: &EpidemicParams,
    seed: u64,
    observer: &mut O,
) -> Result<SimulationResult> {
    let population = kernel.population();
    let n = population.len();
    let mut rng: SimRng = rng::stream(seed, &[rng::stage::EPIDEMIC]);
    let index = params.pick_index(population, &mut rng)?;

    let mut state = vec![SUSCEPTIBLE; n];
    let mut slot = vec![u32::MAX; n];
    let mut events = vec![InfectionEvent { agent: index, infection_day: 0, infector: None, recovery_day: None }];
    state[index as usize] = INFECTIOUS;
    slot[index as usize] = 0;
    let mut infectious = vec![index];

    let mut hits = vec![0u32; n];
    let mut chosen = vec![0u32; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut buf = Vec::new();
    let mut t = 0u32;
    while !infectious.is_empty() && t < params.max_days {
        for &u in &infectious {
            buf.clear();
            kernel.sample_contacts_of(u, &mut rng, &mut buf)?;
            for &(v, layer) in &buf {
                observer.contact(t, u, v, layer);
                if state[v as usize] != SUSCEPTIBLE || !(rng.random::<f64>() < params.beta) {
                    continue;
                }
                let h = &mut hits[v as usize];
                if *h == 0 {
                    touched.push(v);
                }
                *h += 1;
                // uniform choice among the day's successful infectors
                if *h == 1 || rng.random_range(0..*h) == 0 {
                    chosen[v as usize] = u;
                }
            }
        }
        infectious.retain(|&u| {
            if rng.random::<f64>() < params.mu {
                state[u as usize] = RECOVERED;
                events[slot[u as usize] as usize].recovery_day = Some(t + 1);
                false
            } else {
                true
            }
        });
        for v in touched.drain(..) {
            hits[v as usize] = 0;
            state[v as usize] = INFECTIOUS;
            slot[v as usize] = events.len() as u32;
            events.push(InfectionEvent { agent: v, infection_day: t + 1, infector: Some(chosen[v as usize]), recovery_day: None });
            infectious.push(v);
        }
        t += 1;
    }
    SimulationResult::from_event_log(population, events, t, seed, Some(kernel.configuration()))
}

/// Runs replica jobs, returning results in job order.
pub trait Executor {
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..jobs).map(f).collect()
    }
}

pub fn replica_seed(master_seed: u64, replica: usize) -> u64 {
    rng::derive_seed(master_seed, &[replica as u64])
}

pub fn run_ensemble<E: Executor + ?Sized>(
    kernel: &ContactKernel<'_>,
    params: &EpidemicParams,
    replicas: usize,
    master_seed: u64,
    executor: &E,
) -> Result<Vec<SimulationResult>> {
    if replicas == 0 {
        return Err(Error::Config("an ensemble needs at least one replica".into()));
    }
    params.check_index_case(kernel.population())?;
    executor.map(replicas, |r| run(kernel, params, replica_seed(master_seed, r))).into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct OutbreakPartition<'r> {
    pub outbreaks: Vec<&'r SimulationResult>,
    pub extinctions: Vec<&'r SimulationResult>,
}

/// Splits runs by `ρ > threshold`.
pub fn outbreak_filter(results: &[SimulationResult], threshold: f64) -> OutbreakPartition<'_> {
    let (outbreaks, extinctions): (Vec<_>, Vec<_>) = results.iter().partition(|r| r.attack_rate() > threshold);
    if outbreaks.is_empty() && !results.is_empty() {
        log::warn!("none of {} runs exceeded attack rate {threshold}; outbreak metrics will be empty", results.len());
    }
    OutbreakPartition { outbreaks, extinctions }
}

/// Secondary infections of the index case, one entry per run.
pub fn r0_index<'r, I: IntoIterator<Item = &'r SimulationResult>>(results: I) -> Vec<u32> {
    results.into_iter().map(SimulationResult::index_secondary).collect()
}

/// Transmissions by a uniformly chosen index case over its whole infectious
/// period, with every contact treated as susceptible.
///
/// Its mean is `E[Σ_v p(u, v)] · β / μ`, the quantity `β` is calibrated on.
pub fn one_generation<R: Rng + ?Sized>(kernel: &ContactKernel<'_>, beta: f64, mu: f64, rng: &mut R) -> Result<u32> {
    let n = kernel.agent_count() as u32;
    let u = rng.random_range(0..n);
    let mut buf = Vec::new();
    let mut count = 0;
    loop {
        buf.clear();
        kernel.sample_contacts_of(u, rng, &mut buf)?;
        for _ in &buf {
            if rng.random::<f64>() < beta {
                count += 1;
            }
        }
        if rng.random::<f64>() < mu {
            return Ok(count);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contacts::make_kernel;
    use crate::network::{build_social_graph, HouseholdSizes, MixingMatrix, SocialGraph};
    use crate::population::{build_grid, populate, AgeDistribution, BoundingBox, DensitySource};

    fn world(seed: u64) -> (Population, SocialGraph) {
        let t = build_grid(
            BoundingBox::with_size(3000.0, 3000.0),
            500.0,
            &DensitySource::RadialExponential { total: 1500.0, center: (1500.0, 1500.0), scale: 900.0 },
            5,
        )
        .unwrap();
        let pop = populate(t, &AgeDistribution::italian_default(), seed).unwrap();
        let (g, _) = build_social_graph(&pop, &HouseholdSizes::italian_default(), &MixingMatrix::default_urban(), 8.0, seed).unwrap();
        (pop, g)
    }

    #[test]
    fn params_validation() {
        assert!(EpidemicParams::new(1.5, 0.3, 10, IndexCaseMode::UniformPopulation).is_err());
        assert!(EpidemicParams::new(0.1, 0.0, 10, IndexCaseMode::UniformPopulation).is_err());
        assert!(EpidemicParams::new(0.1, 0.3, 0, IndexCaseMode::UniformPopulation).is_err());
        assert!(EpidemicParams::new(0.0, 1.0, 1, IndexCaseMode::UniformPopulation).is_ok());
    }

    #[test]
    fn no_transmission_leaves_index_only() {
        let (pop, g) = world(1);
        let k = make_kernel(Configuration::AgeDistanceNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let p = EpidemicParams::new(0.0, 1.0 / 3.0, DEFAULT_MAX_DAYS, IndexCaseMode::UniformPopulation).unwrap();
        for s in 0..20 {
            let r = run(&k, &p, s).unwrap();
            assert_eq!(r.total_infected(), 1);
            assert_eq!(r.daily.last().unwrap().recovered, 1);
            assert_eq!(r.index_secondary(), 0);
            assert!(r.completed);
        }
    }

    #[test]
    fn runs_conserve_and_are_monotone() {
        let (pop, g) = world(2);
        let k = make_kernel(Configuration::HomogeneousNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let beta = crate::contacts::calibrate_beta(&k, 2.5, 1.0 / 3.0).unwrap();
        let p = EpidemicParams::new(beta, 1.0 / 3.0, DEFAULT_MAX_DAYS, IndexCaseMode::UniformPopulation).unwrap();
        for s in 0..10 {
            let r = run(&k, &p, s).unwrap();
            for w in r.daily.windows(2) {
                assert!(w[1].susceptible <= w[0].susceptible);
                assert!(w[1].recovered >= w[0].recovered);
            }
            for (t, d) in r.daily.iter().enumerate() {
                assert_eq!(d.susceptible + d.infectious + d.recovered, pop.len() as u32);
                assert_eq!(r.tile_prevalence_at(t).iter().sum::<u32>(), d.infectious);
                assert_eq!(r.age_prevalence[t].iter().sum::<u32>(), d.infectious);
            }
        }
    }

    #[test]
    fn same_seed_same_run() {
        let (pop, g) = world(3);
        let k = make_kernel(Configuration::AgeNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let beta = crate::contacts::calibrate_beta(&k, 2.0, 1.0 / 3.0).unwrap();
        let p = EpidemicParams::new(beta, 1.0 / 3.0, DEFAULT_MAX_DAYS, IndexCaseMode::UniformPopulation).unwrap();
        assert_eq!(run(&k, &p, 9).unwrap(), run(&k, &p, 9).unwrap());
        let one = run_ensemble(&k, &p, 1, 77, &Sequential).unwrap();
        assert_eq!(one[0], run(&k, &p, replica_seed(77, 0)).unwrap());
    }

    #[test]
    fn index_case_in_tile() {
        let (pop, g) = world(4);
        let k = make_kernel(Configuration::StaticNetwork, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let tile = pop.territory.most_peripheral_tile();
        let p = EpidemicParams::new(0.05, 0.5, 50, IndexCaseMode::UniformInTile(tile)).unwrap();
        for s in 0..20 {
            assert_eq!(pop.tile_of(run(&k, &p, s).unwrap().index_case), tile);
        }
        let bad = p.with_index_case(IndexCaseMode::UniformInTile(10_000));
        assert!(run(&k, &bad, 0).is_err());
    }

    #[test]
    fn outbreak_filter_partitions() {
        let (pop, g) = world(5);
        let k = make_kernel(Configuration::StaticNetwork, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let p = EpidemicParams::new(0.0, 1.0, 5, IndexCaseMode::UniformPopulation).unwrap();
        let rs = run_ensemble(&k, &p, 5, 1, &Sequential).unwrap();
        let part = outbreak_filter(&rs, DEFAULT_OUTBREAK_THRESHOLD);
        assert!(part.outbreaks.is_empty());
        assert_eq!(part.extinctions.len(), 5);
        assert_eq!(outbreak_filter(&rs, 0.0).outbreaks.len(), 5);
        assert_eq!(r0_index(&rs), vec![0; 5]);
    }
}
