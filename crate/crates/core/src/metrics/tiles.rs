use alloc::vec;
use alloc::vec::Vec;

use crate::epidemic::SimulationResult;
use crate::population::Territory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileRunStats {
    pub first_day: Option<u32>,
    /// Days from first infection to the tile's (earliest) prevalence peak.
    pub peak_interval: Option<u32>,
    pub attack_rate: f64,
}

pub fn tile_run_stats(result: &SimulationResult, territory: &Territory) -> Vec<TileRunStats> {
    let tiles = result.tile_count;
    let mut first = vec![None; tiles];
    let mut peak = vec![(0u32, 0u32); tiles];
    for t in 0..result.days() {
        for (j, &i) in result.tile_prevalence_at(t).iter().enumerate() {
            if i > 0 && first[j].is_none() {
                first[j] = Some(t as u32);
            }
            if i > peak[j].1 {
                peak[j] = (t as u32, i);
            }
        }
    }
    (0..tiles)
        .map(|j| TileRunStats {
            first_day: first[j],
            peak_interval: first[j].map(|f| peak[j].0 - f),
            attack_rate: result.tile_attack[j] as f64 / territory.tiles()[j].population as f64,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileAggregate {
    pub tile: u32,
    pub population: u32,
    /// Runs in which the tile had an infection.
    pub infected_runs: usize,
    pub mean_first_day: Option<f64>,
    pub mean_peak_interval: Option<f64>,
    pub mean_attack_rate: f64,
}

/// Tiles with `2^k ≤ N_j < 2^(k+1)` pooled together.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationBin {
    pub log2_lower: u32,
    pub tiles: usize,
    pub mean_first_day: Option<f64>,
    pub mean_peak_interval: Option<f64>,
    pub mean_attack_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileStats {
    pub per_tile: Vec<TileAggregate>,
    pub bins: Vec<PopulationBin>,
}

/// Tile statistics averaged over runs and over tiles of similar population.
///
/// A tile that stays uninfected in a run has no first-infection day or peak
/// interval for it, and an attack rate of 0.
pub fn tile_stats(results: &[&SimulationResult], territory: &Territory) -> TileStats {
    let per_run: Vec<Vec<TileRunStats>> = results.iter().map(|r| tile_run_stats(r, territory)).collect();
    let runs = results.len().max(1) as f64;
    let per_tile: Vec<TileAggregate> = territory
        .tiles()
        .iter()
        .enumerate()
        .map(|(j, tile)| {
            let col = || per_run.iter().map(move |s| s[j]);
            TileAggregate {
                tile: tile.id,
                population: tile.population,
                infected_runs: col().filter(|s| s.first_day.is_some()).count(),
                mean_first_day: super::mean_defined(col().map(|s| s.first_day.map(f64::from))),
                mean_peak_interval: super::mean_defined(col().map(|s| s.peak_interval.map(f64::from))),
                mean_attack_rate: col().map(|s| s.attack_rate).sum::<f64>() / runs,
            }
        })
        .collect();

    let mut bins: Vec<PopulationBin> = Vec::new();
    let bin_of = |n: u32| 31 - n.max(1).leading_zeros();
    let mut keys: Vec<u32> = territory.tiles().iter().map(|t| bin_of(t.population)).collect();
    keys.sort_unstable();
    keys.dedup();
    for k in keys {
        let members: Vec<usize> = (0..territory.tile_count()).filter(|&j| bin_of(territory.tiles()[j].population) == k).collect();
        let samples = || members.iter().flat_map(|&j| per_run.iter().map(move |s| s[j]));
        let count = samples().count().max(1) as f64;
        bins.push(PopulationBin {
            log2_lower: k,
            tiles: members.len(),
            mean_first_day: super::mean_defined(samples().map(|s| s.first_day.map(f64::from))),
            mean_peak_interval: super::mean_defined(samples().map(|s| s.peak_interval.map(f64::from))),
            mean_attack_rate: samples().map(|s| s.attack_rate).sum::<f64>() / count,
        });
    }
    TileStats { per_tile, bins }
}
