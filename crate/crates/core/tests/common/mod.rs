#![allow(dead_code)]

use urbanepi_core::network::{build_social_graph, Household, HouseholdSizes, Households, MixingMatrix, SocialGraph};
use urbanepi_core::population::{
    build_grid, populate, Agent, AgeDistribution, AgeGroup, BoundingBox, DensitySource, Population, Territory, Tile,
};

pub const TILE: f64 = 500.0;

/// Territory from `(row, col, population)` tiles on a grid of side 500 m.
pub fn territory(tiles: &[(u32, u32, u32)]) -> Territory {
    let rows = tiles.iter().map(|t| t.0).max().unwrap() + 1;
    let cols = tiles.iter().map(|t| t.1).max().unwrap() + 1;
    let tiles = tiles
        .iter()
        .enumerate()
        .map(|(i, &(row, col, population))| Tile {
            id: i as u32,
            row,
            col,
            center: ((col as f64 + 0.5) * TILE, (row as f64 + 0.5) * TILE),
            population,
        })
        .collect();
    Territory::from_tiles(BoundingBox::with_size(cols as f64 * TILE, rows as f64 * TILE), TILE, rows, cols, 1, tiles).unwrap()
}

/// Population whose agents fill the tiles in order with the given ages.
pub fn population(tiles: &[(u32, u32, u32)], ages: &[AgeGroup]) -> Population {
    let t = territory(tiles);
    let mut agents = Vec::new();
    for tile in t.tiles() {
        for _ in 0..tile.population {
            let id = agents.len() as u32;
            agents.push(Agent { id, tile: tile.id, age: ages[id as usize % ages.len()] });
        }
    }
    Population::new(t, agents).unwrap()
}

pub fn graph(population: &Population, households: &[Vec<u32>], acquaintances: &[(u32, u32)], fitness: f64) -> SocialGraph {
    let n = population.len();
    let mut list: Vec<Household> = households
        .iter()
        .enumerate()
        .map(|(i, m)| Household { id: i as u32, tile: population.tile_of(m[0]), members: m.clone() })
        .collect();
    let mut covered = vec![false; n];
    for m in households.iter().flatten() {
        covered[*m as usize] = true;
    }
    for u in 0..n as u32 {
        if !covered[u as usize] {
            let id = list.len() as u32;
            list.push(Household { id, tile: population.tile_of(u), members: vec![u] });
        }
    }
    let hh = Households::new(list, n).unwrap();
    SocialGraph::new(hh, vec![fitness; n], acquaintances.to_vec()).unwrap()
}

/// Twenty agents in three tiles with 10 household and 20 acquaintance edges.
pub fn toy_world() -> (Population, SocialGraph) {
    let pop = population(&[(0, 0, 8), (0, 1, 7), (1, 1, 5)], &AgeGroup::ALL);
    let households = vec![vec![0, 1, 2, 3], vec![4, 5], vec![8, 9], vec![10, 11], vec![15, 16]];
    let mut acq = Vec::new();
    let mut u = 0u32;
    while acq.len() < 20 {
        let v = (u * 7 + 3) % 20;
        let (a, b) = (u.min(v), u.max(v));
        let same_hh = households.iter().any(|h| h.contains(&a) && h.contains(&b));
        if a != b && !same_hh && !acq.contains(&(a, b)) {
            acq.push((a, b));
        }
        u += 1;
        if u == 20 {
            u = 0;
            // second sweep with another stride
            for k in 0..20u32 {
                let v = (k * 3 + 1) % 20;
                let (a, b) = (k.min(v), k.max(v));
                let same_hh = households.iter().any(|h| h.contains(&a) && h.contains(&b));
                if a != b && !same_hh && !acq.contains(&(a, b)) && acq.len() < 20 {
                    acq.push((a, b));
                }
            }
        }
    }
    let g = graph(&pop, &households, &acq, 2.0);
    (pop, g)
}

/// Synthetic city with a dense center, built by the regular pipeline.
pub fn city(total: f64, side: f64, kappa: f64, seed: u64) -> (Population, SocialGraph) {
    let t = build_grid(
        BoundingBox::with_size(side, side),
        TILE,
        &DensitySource::RadialExponential { total, center: (side / 2.0, side / 2.0), scale: side / 4.0 },
        3,
    )
    .unwrap();
    let pop = populate(t, &AgeDistribution::italian_default(), seed).unwrap();
    let (g, _) = build_social_graph(&pop, &HouseholdSizes::italian_default(), &MixingMatrix::default_urban(), kappa, seed).unwrap();
    (pop, g)
}
