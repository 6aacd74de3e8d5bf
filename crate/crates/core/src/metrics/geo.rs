use alloc::vec::Vec;

use crate::epidemic::SimulationResult;
use crate::population::Territory;

/// Geographic spread of prevalence on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPoint {
    /// Fraction of tiles with at least one infectious resident.
    pub tau: f64,
    /// Global prevalence `Σ_j I_j / N`.
    pub prevalence: f64,
    /// Tile prevalences `I_j / N_j` normalized to sum 1.
    pub q: Option<Vec<f64>>,
    /// Share of the infectious agents living in each tile.
    pub pi: Option<Vec<f64>>,
    /// Entropy of `q` divided by `ln T`; 0 on a one-tile territory.
    pub entropy: Option<f64>,
}

pub fn geo_point(prevalence: &[u32], tile_population: &[u32]) -> GeoPoint {
    let tiles = prevalence.len();
    let total_pop: u64 = tile_population.iter().map(|&n| n as u64).sum();
    let infected: u64 = prevalence.iter().map(|&i| i as u64).sum();
    let tau = prevalence.iter().filter(|&&i| i > 0).count() as f64 / tiles as f64;
    let global = infected as f64 / total_pop as f64;
    if infected == 0 {
        return GeoPoint { tau, prevalence: global, q: None, pi: None, entropy: None };
    }
    let local: Vec<f64> = prevalence.iter().zip(tile_population).map(|(&i, &n)| i as f64 / n as f64).collect();
    let local_sum: f64 = local.iter().sum();
    let q: Vec<f64> = local.iter().map(|x| x / local_sum).collect();
    let pi: Vec<f64> = prevalence.iter().map(|&i| i as f64 / infected as f64).collect();
    let entropy = if tiles > 1 {
        let h: f64 = q.iter().filter(|&&x| x > 0.0).map(|&x| -x * libm::log(x)).sum();
        (h / libm::log(tiles as f64)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    GeoPoint { tau, prevalence: global, q: Some(q), pi: Some(pi), entropy: Some(entropy) }
}

pub fn geo_series(result: &SimulationResult, territory: &Territory) -> Vec<GeoPoint> {
    let pops: Vec<u32> = territory.tiles().iter().map(|t| t.population).collect();
    (0..result.days()).map(|t| geo_point(result.tile_prevalence_at(t), &pops)).collect()
}
