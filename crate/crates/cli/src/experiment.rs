//! The `build`, `run`, `scan` and `place` commands.
//!
//! Every command builds the same population and network from the master seed,
//! writes them under `network/`, and then adds its own outputs:
//!
//! ```text
//! manifest.json
//! network/{tiles,agents,edges}.csv
//! <CFG>/runs.csv, <CFG>/<metric>.csv, <CFG>/replicas/r<k>_*.csv   (run)
//! scan/<CFG>/*.csv                                                (scan)
//! placement/<mode>/<CFG>/*.csv                                    (place)
//! ```

use std::path::Path;

use log::info;
use urbanepi_core::contacts::{calibrate_beta, make_kernel, ContactKernel};
use urbanepi_core::epidemic::{
    outbreak_filter, replica_seed, run_ensemble, run_observed, EpidemicParams, Executor, IndexCaseMode, SimulationResult,
};
use urbanepi_core::metrics;
use urbanepi_core::network::{build_social_graph, HouseholdReport, HouseholdSizes, MixingMatrix, SocialGraph};
use urbanepi_core::population::{build_grid, populate, AgeDistribution, AgeGroup, BoundingBox, DensitySource, Population};
use urbanepi_core::rng::{self, stage};

use crate::config::{DensityConfig, ExperimentConfig, PlacementMode};
use crate::error::CliError;
use crate::executor::RayonExecutor;
use crate::io::{self, ContactLog, MetricTable, OutputTree};
use crate::manifest::{sha256_files, Manifest, NetworkSummary, PlacementSummary, RunSummary, ScanSummary};

pub struct World {
    pub population: Population,
    pub graph: SocialGraph,
    pub report: HouseholdReport,
    pub mixing: MixingMatrix,
}

pub fn build_world(cfg: &ExperimentConfig) -> Result<World, CliError> {
    let t = &cfg.territory;
    let bbox = BoundingBox::with_size(t.width, t.height);
    let density = match &t.density {
        DensityConfig::Uniform { total } => DensitySource::Uniform { total: *total },
        DensityConfig::Radial { total, center, scale } => DensitySource::RadialExponential {
            total: *total,
            center: center.map_or((t.width / 2.0, t.height / 2.0), |c| (c[0], c[1])),
            scale: *scale,
        },
        DensityConfig::Grid { path } => DensitySource::Grid(io::read_density_csv(path)?),
    };
    let territory = build_grid(bbox, t.tile_side, &density, t.min_tile_population)?;
    let ages = AgeDistribution::new(cfg.population.age_distribution)?;
    let population = populate(territory, &ages, cfg.seed)?;
    let mixing = if cfg.network.mixing == "default" {
        MixingMatrix::default_urban()
    } else {
        io::read_mixing_csv(Path::new(&cfg.network.mixing))?
    };
    let sizes = HouseholdSizes::new(cfg.network.household_sizes.clone())?;
    let (graph, report) = build_social_graph(&population, &sizes, &mixing, cfg.network.kappa, cfg.seed)?;
    info!(
        "built {} agents in {} tiles, {} household and {} acquaintance edges (mean degree {:.3})",
        population.len(),
        population.territory.tile_count(),
        graph.household_edges().len(),
        graph.acquaintance_edges().len(),
        graph.mean_degree()
    );
    Ok(World { population, graph, report, mixing })
}

/// One command's output tree, manifest and worker pool.
struct Session<'c> {
    cfg: &'c ExperimentConfig,
    out: OutputTree,
    manifest: Manifest,
    executor: RayonExecutor,
}

impl<'c> Session<'c> {
    fn open(cfg: &'c ExperimentConfig) -> Result<(World, Self), CliError> {
        let world = build_world(cfg)?;
        let mut out = OutputTree::new(&cfg.output)?;
        io::write_tiles(&mut out, "network/tiles.csv", &world.population.territory)?;
        io::write_agents(&mut out, "network/agents.csv", &world.population, &world.graph)?;
        io::write_edges(&mut out, "network/edges.csv", &world.graph)?;
        let root = out.root();
        let sha = sha256_files(&[
            &root.join("network/tiles.csv"),
            &root.join("network/agents.csv"),
            &root.join("network/edges.csv"),
        ])?;
        let g = &world.graph;
        let network = NetworkSummary {
            agents: world.population.len(),
            tiles: world.population.territory.tile_count(),
            households: g.households().len(),
            household_edges: g.household_edges().len(),
            acquaintance_edges: g.acquaintance_edges().len(),
            mean_degree: g.mean_degree(),
            household_mean_degree: g.household_mean_degree(),
            acquaintance_mean_degree: g.acquaintance_mean_degree(),
            child_heads: world.report.child_heads as u64,
            unsupervised_children: world.report.unsupervised_children as u64,
            distant_partners: world.report.distant_partners as u64,
            sha256: sha,
        };
        let mut manifest = Manifest::open(out.root(), cfg, network);
        manifest.complete("build");
        let executor = RayonExecutor::new(cfg.workers)?;
        Ok((world, Self { cfg, out, manifest, executor }))
    }

    /// Writes the manifest, recording the failure of `outcome` if any.
    fn finish(mut self, outcome: Result<(), CliError>) -> Result<Manifest, CliError> {
        if let Err(e) = &outcome {
            self.manifest.failure = Some(e.to_string());
        }
        self.manifest.write(&self.out)?;
        outcome.map(|_| self.manifest)
    }

    fn params(&self, kernel: &ContactKernel<'_>, index: IndexCaseMode) -> Result<EpidemicParams, CliError> {
        let e = &self.cfg.epidemic;
        let beta = match e.beta {
            Some(b) => b,
            None => calibrate_beta(kernel, e.r0, e.mu)?,
        };
        Ok(EpidemicParams::new(beta, e.mu, e.max_days, index)?)
    }

    fn index_mode(&self, world: &World) -> Result<IndexCaseMode, CliError> {
        match self.cfg.epidemic.index_tile {
            None => Ok(IndexCaseMode::UniformPopulation),
            Some(t) if (t as usize) < world.population.territory.tile_count() => Ok(IndexCaseMode::UniformInTile(t)),
            Some(t) => Err(CliError::Config(format!("epidemic.index_tile: tile {t} is not a retained tile"))),
        }
    }

    /// Runs an ensemble, optionally logging every replica's contacts.
    fn ensemble(
        &mut self,
        kernel: &ContactKernel<'_>,
        params: &EpidemicParams,
        replicas: usize,
        master: u64,
        dir: &str,
    ) -> Result<Vec<SimulationResult>, CliError> {
        if !self.cfg.outputs.contact_log {
            return Ok(run_ensemble(kernel, params, replicas, master, &self.executor)?);
        }
        params.check_index_case(kernel.population())?;
        let paths = (0..replicas)
            .map(|r| self.out.register(&format!("{dir}/replicas/r{r:04}_contacts.csv")))
            .collect::<Result<Vec<_>, _>>()?;
        self.executor
            .map(replicas, |r| {
                let mut log = ContactLog::open(&paths[r])?;
                let mut observe = |t: u32, u: u32, v: u32, layer| log.push(t, u, v, layer);
                let result = run_observed(kernel, params, replica_seed(master, r), &mut observe)?;
                log.finish()?;
                Ok(result)
            })
            .into_iter()
            .collect()
    }
}

pub fn build(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let (_, session) = Session::open(cfg)?;
    session.finish(Ok(()))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let (world, mut session) = Session::open(cfg)?;
    let outcome = run_all(&mut session, &world);
    session.finish(outcome)
}

fn run_all(s: &mut Session<'_>, world: &World) -> Result<(), CliError> {
    let index = s.index_mode(world)?;
    for c in s.cfg.configurations() {
        let kernel = make_kernel(c, &world.population, &world.graph, &world.mixing)?;
        let params = s.params(&kernel, index)?;
        let master = rng::derive_seed(s.cfg.seed, &[stage::EPIDEMIC, c.index() as u64]);
        let dir = c.acronym().to_string();
        info!("{c}: β = {:.5}, {} replicas", params.beta(), s.cfg.epidemic.replicas);
        let results = s.ensemble(&kernel, &params, s.cfg.epidemic.replicas, master, &dir)?;
        let summary = write_run_outputs(s, world, &kernel, &params, master, &dir, &results)?;
        s.manifest.runs.insert(c.acronym().to_string(), summary);
        s.manifest.complete(format!("run:{c}"));
    }
    Ok(())
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    metrics_mean(xs.into_iter().map(Some))
}

fn metrics_mean(xs: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs.into_iter().flatten() {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

fn write_runs_table(out: &mut OutputTree, rel: &str, results: &[SimulationResult], population: &Population, threshold: f64) -> Result<(), CliError> {
    let path = out.root().join(rel);
    let mut w = out.create(rel)?;
    let header = ["replica", "seed", "index_case", "index_tile", "attack_rate", "peak_day", "peak_prevalence", "days", "completed", "outbreak", "index_secondary"];
    w.write_record(header).map_err(|e| CliError::csv(&path, e))?;
    for (r, res) in results.iter().enumerate() {
        let row = [
            r.to_string(),
            res.seed.to_string(),
            res.index_case.to_string(),
            population.tile_of(res.index_case).to_string(),
            res.attack_rate().to_string(),
            res.peak_day().to_string(),
            res.peak_prevalence().to_string(),
            res.days().to_string(),
            res.completed.to_string(),
            (res.attack_rate() > threshold).to_string(),
            res.index_secondary().to_string(),
        ];
        w.write_record(&row).map_err(|e| CliError::csv(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))
}

/// Prevalence geography and cross-replica overlap of the outbreak runs.
fn write_spread_metrics(
    out: &mut OutputTree,
    dir: &str,
    label: &str,
    results: &[SimulationResult],
    outbreak_ids: &[usize],
    population: &Population,
) -> Result<(), CliError> {
    let mut tau = MetricTable::new(label);
    let mut entropy = MetricTable::new(label);
    let mut prevalence = MetricTable::new(label);
    for &r in outbreak_ids {
        for (t, p) in metrics::geo_series(&results[r], &population.territory).iter().enumerate() {
            tau.push(r, t, p.tau);
            prevalence.push(r, t, p.prevalence);
            if let Some(h) = p.entropy {
                entropy.push(r, t, h);
            }
        }
    }
    tau.write(out, &format!("{dir}/tau.csv"))?;
    entropy.write(out, &format!("{dir}/entropy.csv"))?;
    prevalence.write(out, &format!("{dir}/prevalence.csv"))?;

    let runs: Vec<&SimulationResult> = outbreak_ids.iter().map(|&r| &results[r]).collect();
    let series = metrics::overlap_series(&runs);
    let mut pairs = MetricTable::paired(label);
    for (a, b, values) in &series.values {
        for (k, v) in values.iter().enumerate() {
            if let Some(v) = v {
                pairs.push_pair(outbreak_ids[*a], outbreak_ids[*b], series.time[k], *v);
            }
        }
    }
    pairs.write(out, &format!("{dir}/overlap.csv"))?;
    let mut band = MetricTable::new(label);
    for k in 0..series.time.len() {
        for (name, col) in [("mean", &series.mean), ("p2.5", &series.lower), ("p97.5", &series.upper)] {
            if let Some(v) = col[k] {
                band.push(name, series.time[k], v);
            }
        }
    }
    band.write(out, &format!("{dir}/overlap_band.csv"))
}

fn write_run_outputs(
    s: &mut Session<'_>,
    world: &World,
    kernel: &ContactKernel<'_>,
    params: &EpidemicParams,
    master: u64,
    dir: &str,
    results: &[SimulationResult],
) -> Result<RunSummary, CliError> {
    let cfg = s.cfg;
    let pop = &world.population;
    let out = &mut s.out;
    let label = kernel.configuration().acronym();
    let threshold = cfg.epidemic.outbreak_threshold;
    write_runs_table(out, &format!("{dir}/runs.csv"), results, pop, threshold)?;
    if cfg.outputs.replica_files {
        for (r, res) in results.iter().enumerate() {
            io::write_events(out, &format!("{dir}/replicas/r{r:04}_events.csv"), res)?;
            io::write_daily(out, &format!("{dir}/replicas/r{r:04}_daily.csv"), res)?;
            io::write_daily_tiles(out, &format!("{dir}/replicas/r{r:04}_daily_tiles.csv"), res)?;
            io::write_daily_age(out, &format!("{dir}/replicas/r{r:04}_daily_age.csv"), res)?;
        }
    }

    let partition = outbreak_filter(results, threshold);
    let outbreak_ids: Vec<usize> = (0..results.len()).filter(|&r| results[r].attack_rate() > threshold).collect();
    let outbreaks = &partition.outbreaks;

    let mut attack = MetricTable::new(label);
    let mut index_secondary = MetricTable::new(label);
    for (r, res) in results.iter().enumerate() {
        attack.push(r, "final", res.attack_rate());
        index_secondary.push(r, "final", res.index_secondary() as f64);
    }
    attack.write(out, &format!("{dir}/attack_rate.csv"))?;
    index_secondary.write(out, &format!("{dir}/r0_index.csv"))?;

    let mut reproduction = MetricTable::new(label);
    let mut series = Vec::new();
    for &r in &outbreak_ids {
        let rs = metrics::reproduction_series(&results[r]);
        for t in 0..rs.len() {
            if let Some(v) = rs.r(t) {
                reproduction.push(r, t, v);
            }
        }
        series.push(rs);
    }
    for (t, v) in metrics::mean_reproduction(&series).iter().enumerate() {
        if let Some(v) = v {
            reproduction.push("mean", t, *v);
        }
    }
    reproduction.write(out, &format!("{dir}/reproduction.csv"))?;

    write_spread_metrics(out, dir, label, results, &outbreak_ids, pop)?;

    let aligned = metrics::aligned_prevalence(outbreaks);
    let mut aligned_table = MetricTable::new(label);
    for (k, v) in aligned.values.iter().enumerate() {
        aligned_table.push("mean", aligned.start + k as i64, *v);
    }
    aligned_table.write(out, &format!("{dir}/prevalence_aligned.csv"))?;

    let ages = metrics::age_series(outbreaks, pop);
    for g in AgeGroup::ALL {
        let mut prev = MetricTable::new(label);
        let mut repro = MetricTable::new(label);
        for (k, row) in ages.prevalence.iter().enumerate() {
            prev.push("mean", ages.start + k as i64, row[g.index()]);
        }
        for (k, row) in ages.reproduction.iter().enumerate() {
            if let Some(v) = row[g.index()] {
                repro.push("mean", ages.start + k as i64, v);
            }
        }
        prev.write(out, &format!("{dir}/age_prevalence_{}.csv", g.name()))?;
        repro.write(out, &format!("{dir}/age_reproduction_{}.csv", g.name()))?;
    }

    let tiles = metrics::tile_stats(outbreaks, &pop.territory);
    let mut first = MetricTable::new(label);
    let mut interval = MetricTable::new(label);
    let mut tile_attack = MetricTable::new(label);
    for t in &tiles.per_tile {
        if let Some(v) = t.mean_first_day {
            first.push("mean", t.tile, v);
        }
        if let Some(v) = t.mean_peak_interval {
            interval.push("mean", t.tile, v);
        }
        tile_attack.push("mean", t.tile, t.mean_attack_rate);
    }
    first.write(out, &format!("{dir}/tile_first_infection.csv"))?;
    interval.write(out, &format!("{dir}/tile_peak_interval.csv"))?;
    tile_attack.write(out, &format!("{dir}/tile_attack_rate.csv"))?;
    let mut first = MetricTable::new(label);
    let mut interval = MetricTable::new(label);
    let mut tile_attack = MetricTable::new(label);
    for b in &tiles.bins {
        let lower = 1u64 << b.log2_lower;
        if let Some(v) = b.mean_first_day {
            first.push("mean", lower, v);
        }
        if let Some(v) = b.mean_peak_interval {
            interval.push("mean", lower, v);
        }
        tile_attack.push("mean", lower, b.mean_attack_rate);
    }
    first.write(out, &format!("{dir}/tile_first_infection_binned.csv"))?;
    interval.write(out, &format!("{dir}/tile_peak_interval_binned.csv"))?;
    tile_attack.write(out, &format!("{dir}/tile_attack_rate_binned.csv"))?;

    let degree_seed = rng::derive_seed(cfg.seed, &[stage::CONTACT_DEGREES]);
    let degrees = metrics::contact_degree_distribution(kernel, cfg.epidemic.degree_days, degree_seed)?;
    let mut deg = MetricTable::new(label);
    for (k, c) in degrees.histogram.iter().enumerate() {
        deg.push("pooled", k, *c as f64);
    }
    deg.write(out, &format!("{dir}/contact_degree.csv"))?;

    let n = pop.len() as f64;
    let mean_contacts = 2.0 * world.graph.edge_count() as f64 / n;
    let mut mf = MetricTable::new(label);
    for p in metrics::mean_field_trajectory(n, params.beta(), mean_contacts, params.mu(), 1.0, cfg.epidemic.max_days) {
        mf.push("mean_field", p.t, p.infectious / n);
    }
    mf.write(out, &format!("{dir}/mean_field.csv"))?;

    Ok(RunSummary {
        directory: dir.to_string(),
        beta: params.beta(),
        mu: params.mu(),
        mean_contacts,
        fortuitous_mass: kernel.fortuitous_mass(),
        master_seed: master,
        replicas: results.len(),
        outbreaks: outbreaks.len(),
        incomplete_runs: results.iter().filter(|r| !r.completed).count(),
        mean_attack_rate: mean(results.iter().map(|r| r.attack_rate())).unwrap_or(0.0),
        mean_outbreak_attack_rate: mean(outbreaks.iter().map(|r| r.attack_rate())),
        mean_index_secondary: mean(results.iter().map(|r| r.index_secondary() as f64)).unwrap_or(0.0),
        mean_outbreak_index_secondary: mean(outbreaks.iter().map(|r| r.index_secondary() as f64)),
    })
}

pub fn scan(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let Some(scan_cfg) = cfg.scan.clone() else {
        return Err(CliError::Config("scan: the configuration has no [scan] section".into()));
    };
    let (world, mut session) = Session::open(cfg)?;
    let outcome = (|| {
        let grid = scan_cfg.grid()?;
        let index = session.index_mode(&world)?;
        for c in cfg.scan_configurations() {
            let kernel = make_kernel(c, &world.population, &world.graph, &world.mixing)?;
            let params = session.params(&kernel, index)?;
            let master = rng::derive_seed(cfg.seed, &[stage::SCAN, c.index() as u64]);
            info!("{c}: scanning {} β values x {} replicas", grid.len(), scan_cfg.replicas);
            let result = metrics::threshold_scan(&kernel, &params, &grid, scan_cfg.replicas, scan_cfg.degree_days, master, &session.executor)?;
            let dir = format!("scan/{}", c.acronym());
            let label = c.acronym();
            let out = &mut session.out;
            let mut attack = MetricTable::new(label);
            let mut mean_attack = MetricTable::new(label);
            let mut delta = MetricTable::new(label);
            for p in &result.points {
                for (r, rho) in p.attack_rates.iter().enumerate() {
                    attack.push(r, p.beta, *rho);
                }
                mean_attack.push("all", p.beta, p.mean_attack_rate);
                if let Some(d) = p.variability {
                    delta.push("all", p.beta, d);
                }
            }
            attack.write(out, &format!("{dir}/threshold_attack.csv"))?;
            mean_attack.write(out, &format!("{dir}/threshold_mean_attack.csv"))?;
            delta.write(out, &format!("{dir}/threshold_variability.csv"))?;
            let mut est = MetricTable::new(label);
            if let Some(b) = result.beta_c_variability {
                est.push("all", "beta_c_variability", b);
            }
            if let Some(h) = result.hmf {
                est.push("all", "beta_c_hmf", h.beta_c);
                est.push("all", "lambda_c_hmf", h.lambda_c);
            }
            est.push("all", "degree_mean", result.degrees.mean);
            est.push("all", "degree_second_moment", result.degrees.second_moment);
            est.write(out, &format!("{dir}/threshold_estimates.csv"))?;
            let mut deg = MetricTable::new(label);
            for (k, n) in result.degrees.histogram.iter().enumerate() {
                deg.push("pooled", k, *n as f64);
            }
            deg.write(out, &format!("{dir}/contact_degree.csv"))?;
            session.manifest.scans.insert(
                label.to_string(),
                ScanSummary {
                    directory: dir,
                    master_seed: master,
                    betas: grid.len(),
                    replicas_per_beta: scan_cfg.replicas,
                    beta_c_variability: result.beta_c_variability,
                    beta_c_hmf: result.hmf.map(|h| h.beta_c),
                    lambda_c_hmf: result.hmf.map(|h| h.lambda_c),
                    degree_mean: result.degrees.mean,
                    degree_second_moment: result.degrees.second_moment,
                },
            );
            session.manifest.complete(format!("scan:{c}"));
        }
        Ok(())
    })();
    session.finish(outcome)
}

/// Index-case tile of a placement mode; `None` places anywhere.
pub fn placement_tile(cfg: &ExperimentConfig, population: &Population, mode: PlacementMode) -> Result<Option<u32>, CliError> {
    let territory = &population.territory;
    let check = |tile: u32, key: &str| {
        if (tile as usize) < territory.tile_count() {
            Ok(Some(tile))
        } else {
            Err(CliError::Config(format!("{key}: tile {tile} is not a retained tile")))
        }
    };
    match mode {
        PlacementMode::Random => Ok(None),
        PlacementMode::Central => check(cfg.placement.central_tile.unwrap_or_else(|| territory.most_populated_tile()), "placement.central_tile"),
        PlacementMode::Peripheral => {
            check(cfg.placement.peripheral_tile.unwrap_or_else(|| territory.most_peripheral_tile()), "placement.peripheral_tile")
        }
    }
}

pub fn place(cfg: &ExperimentConfig) -> Result<Manifest, CliError> {
    let (world, mut session) = Session::open(cfg)?;
    let outcome = (|| {
        let replicas = cfg.placement.replicas.unwrap_or(cfg.epidemic.replicas);
        let threshold = cfg.epidemic.outbreak_threshold;
        for mode in cfg.placement.modes.clone() {
            let tile = placement_tile(cfg, &world.population, mode)?;
            let index = tile.map_or(IndexCaseMode::UniformPopulation, IndexCaseMode::UniformInTile);
            for c in cfg.placement_configurations() {
                let kernel = make_kernel(c, &world.population, &world.graph, &world.mixing)?;
                let params = session.params(&kernel, index)?;
                // shared across modes, so modes differ only in where the index case lives
                let master = rng::derive_seed(cfg.seed, &[stage::PLACEMENT, c.index() as u64]);
                let dir = format!("placement/{}/{}", mode.name(), c.acronym());
                info!("{c}: placement {} ({replicas} replicas)", mode.name());
                let results = session.ensemble(&kernel, &params, replicas, master, &dir)?;
                let outbreak_ids: Vec<usize> = (0..results.len()).filter(|&r| results[r].attack_rate() > threshold).collect();
                if outbreak_ids.is_empty() {
                    log::warn!("{c}: no outbreaks with placement {}", mode.name());
                }
                let out = &mut session.out;
                write_runs_table(out, &format!("{dir}/runs.csv"), &results, &world.population, threshold)?;
                let mut attack = MetricTable::new(c.acronym());
                for (r, res) in results.iter().enumerate() {
                    attack.push(r, "final", res.attack_rate());
                }
                attack.write(out, &format!("{dir}/attack_rate.csv"))?;
                write_spread_metrics(out, &dir, c.acronym(), &results, &outbreak_ids, &world.population)?;
                session.manifest.placements.entry(mode.name().to_string()).or_default().insert(
                    c.acronym().to_string(),
                    PlacementSummary { directory: dir, tile, beta: params.beta(), master_seed: master, replicas, outbreaks: outbreak_ids.len() },
                );
                session.manifest.complete(format!("place:{}:{c}", mode.name()));
            }
        }
        Ok(())
    })();
    session.finish(outcome)
}
