mod common;

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use urbanepi_core::contacts::{calibrate_beta, make_kernel, Configuration};
use urbanepi_core::epidemic::{
    one_generation, run, run_observed, EpidemicParams, IndexCaseMode, DEFAULT_MAX_DAYS,
};
use urbanepi_core::network::{Layer, MixingMatrix, SocialGraph};
use urbanepi_core::population::{AgeGroup, Population};
use urbanepi_core::rng;

fn random_toy_graph(n: u32, seed: u64) -> (Population, SocialGraph) {
    let mut r = rng::stream(seed, &[]);
    let pop = common::population(&[(0, 0, n)], &AgeGroup::ALL);
    let mut ids: Vec<u32> = (0..n).collect();
    ids.shuffle(&mut r);
    let mut households = Vec::new();
    let mut rest = &ids[..];
    while !rest.is_empty() {
        let size = r.random_range(1..=4usize).min(rest.len());
        households.push(rest[..size].to_vec());
        rest = &rest[size..];
    }
    let same = |a: u32, b: u32| households.iter().any(|h: &Vec<u32>| h.contains(&a) && h.contains(&b));
    let mut acq = HashSet::new();
    let wanted = r.random_range(0..=n as usize);
    for _ in 0..wanted * 4 {
        if acq.len() >= wanted || n < 2 {
            break;
        }
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b && !same(a, b) {
            acq.insert((a.min(b), a.max(b)));
        }
    }
    let acq: Vec<_> = acq.into_iter().collect();
    let g = common::graph(&pop, &households, &acq, 2.0);
    (pop, g)
}

fn bfs(g: &SocialGraph, src: u32) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.agent_count()];
    dist[src as usize] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(dist[u as usize].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#[test]
fn certain_transmission_follows_breadth_first_layers() {
    let s = MixingMatrix::default_urban();
    for (i, n) in [2u32, 3, 5, 8, 13, 21, 34, 55, 89, 100].into_iter().enumerate() {
        let (pop, g) = random_toy_graph(n, i as u64);
        let k = make_kernel(Configuration::StaticNetwork, &pop, &g, &s).unwrap();
        for src in 0..n {
            let p = EpidemicParams::new(1.0, 1.0, DEFAULT_MAX_DAYS, IndexCaseMode::Agent(src)).unwrap();
            let r = run(&k, &p, src as u64).unwrap();
            let dist = bfs(&g, src);
            let mut seen = vec![None; n as usize];
            for e in &r.events {
                seen[e.agent as usize] = Some(e.infection_day);
                assert_eq!(e.recovery_day, Some(e.infection_day + 1));
            }
            assert_eq!(seen, dist, "n = {n}, source {src}");
        }
    }
}

#[test]
fn every_infection_follows_a_sampled_contact() {
    let (pop, g) = common::city(1500.0, 2500.0, 8.0, 3);
    for c in Configuration::ALL {
        let k = make_kernel(c, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let beta = calibrate_beta(&k, 2.0, 1.0 / 3.0).unwrap();
        let p = EpidemicParams::new(beta, 1.0 / 3.0, DEFAULT_MAX_DAYS, IndexCaseMode::UniformPopulation).unwrap();
        for seed in 0..4 {
            let mut seen = HashSet::new();
            let mut log = |day: u32, u: u32, v: u32, layer: Layer| {
                if c != Configuration::HomogeneousMixing && layer != Layer::Fortuitous {
                    assert!(g.has_edge(u, v));
                }
                seen.insert((day, u, v));
            };
            let r = run_observed(&k, &p, seed, &mut log).unwrap();
            assert_eq!(r, run(&k, &p, seed).unwrap());
            for e in &r.events {
                if let Some(src) = e.infector {
                    assert!(seen.contains(&(e.infection_day - 1, src, e.agent)), "{c}: {e:?}");
                }
            }
        }
    }
}

#[test]
fn toy_one_generation_mean_matches_target() {
    let (pop, g) = common::toy_world();
    let mu = 1.0 / 3.0;
    for c in Configuration::ALL {
        let k = make_kernel(c, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let beta = calibrate_beta(&k, 1.3, mu).unwrap();
        assert!((beta - 0.14444).abs() < 1e-4);
        let mut r = rng::stream(42, &[c.index() as u64]);
        let episodes = 100_000;
        let xs: Vec<f64> = (0..episodes).map(|_| one_generation(&k, beta, mu, &mut r).unwrap() as f64).collect();
        let mean = xs.iter().sum::<f64>() / episodes as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (episodes as f64 - 1.0);
        let se = (var / episodes as f64).sqrt();
        assert!((mean - 1.3).abs() < 3.0 * se, "{c}: {mean} ± {se}");
    }
}
