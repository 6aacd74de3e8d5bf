mod common;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use urbanepi_core::contacts::{calibrate_beta, kernel_mass_check, make_kernel, Configuration, ContactKernel};
use urbanepi_core::network::{Layer, MixingMatrix};
use urbanepi_core::population::AgeGroup;
use urbanepi_core::rng;

fn all_pairs(n: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..n).flat_map(move |u| (u + 1..n).map(move |v| (u, v)))
}

#[test]
fn toy_homogeneous_noise_mass() {
    let (pop, g) = common::toy_world();
    assert_eq!(g.household_edges().len(), 10);
    assert_eq!(g.acquaintance_edges().len(), 20);
    let k = make_kernel(Configuration::HomogeneousNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
    assert_eq!(k.fortuitous_mass(), 10.0);
    let nonedges = 190.0 - 30.0;
    for (u, v) in all_pairs(20) {
        let expected = match g.edge_layer(u, v) {
            Some(Layer::Household) => 1.0,
            Some(_) => 0.5,
            None => 10.0 / nonedges,
        };
        assert!((k.pair_probability(u, v) - expected).abs() < 1e-15);
    }
    let b = calibrate_beta(&k, 1.3, 1.0 / 3.0).unwrap();
    assert!((b - 1.3 / 9.0).abs() < 1e-15);
}

#[test]
fn analytic_mass_is_edge_count_everywhere() {
    let (pop, g) = common::toy_world();
    let worlds = [
        common::city(1200.0, 2500.0, 6.0, 11),
        common::city(2000.0, 3000.0, 8.0, 12),
        common::city(900.0, 2000.0, 4.0, 13),
    ];
    let s = MixingMatrix::default_urban();
    for c in Configuration::ALL {
        let k = make_kernel(c, &pop, &g, &s).unwrap();
        let brute: f64 = all_pairs(20).map(|(u, v)| k.pair_probability(u, v)).sum();
        assert!((brute - 30.0).abs() < 1e-9 * 30.0, "{c}: {brute}");
        assert!((k.analytic_mass().total() - 30.0).abs() < 1e-9 * 30.0);
        for (p, g) in &worlds {
            let k = make_kernel(c, p, g, &s).unwrap();
            let e = g.edge_count() as f64;
            assert!((k.analytic_mass().total() - e).abs() <= 1e-9 * e, "{c}");
            for u in (0..p.len() as u32).step_by(97) {
                for v in (0..p.len() as u32).step_by(89) {
                    let q = k.pair_probability(u, v);
                    assert!((0.0..=1.0).contains(&q));
                    assert_eq!(q, k.pair_probability(v, u));
                }
            }
        }
    }
}

#[test]
fn sampled_day_sizes_center_on_edge_count() {
    let (pop, g) = common::toy_world();
    let k = make_kernel(Configuration::HomogeneousNoise, &pop, &g, &MixingMatrix::default_urban()).unwrap();
    let report = kernel_mass_check(&k, 10_000, 5).unwrap();
    assert!(report.z_score().abs() < 3.0, "{report:?}");
    assert_eq!(report.analytic_relative_error(), 0.0);

    let mut rng = rng::stream(6, &[]);
    let days = 10_000u32;
    let mut acq_hits = 0u64;
    for t in 0..days {
        let day = k.sample_day(t, &mut rng).unwrap();
        let hh = day.contacts.iter().filter(|c| c.layer == Layer::Household).count();
        assert_eq!(hh, 10);
        acq_hits += day.contacts.iter().filter(|c| c.layer == Layer::Acquaintance).count() as u64;
        assert!(day.contacts.iter().all(|c| c.u < c.v));
    }
    let trials = days as f64 * 20.0;
    let z = (acq_hits as f64 - trials * 0.5) / (trials * 0.25).sqrt();
    assert!(z.abs() < 3.0, "acquaintance frequency z = {z}");
}

/// Chi-square p-value of per-pair contact counts against the kernel.
fn pair_frequency_p_value(k: &ContactKernel<'_>, counts: &[u64], days: u32) -> f64 {
    let n = k.agent_count() as u32;
    let d = days as f64;
    let (mut stat, mut dof) = (0.0, 0usize);
    for (idx, (u, v)) in all_pairs(n).enumerate() {
        let p = k.pair_probability(u, v);
        let o = counts[idx] as f64;
        if p == 0.0 || p == 1.0 {
            assert_eq!(o, p * d, "{}: pair ({u}, {v})", k.configuration());
            continue;
        }
        // acquaintance contacts are Bernoulli, the rest Poisson per day
        let var = if k.configuration() != Configuration::HomogeneousMixing && g_layer(k, u, v) == Some(Layer::Acquaintance) {
            d * p * (1.0 - p)
        } else {
            d * p
        };
        stat += (o - d * p).powi(2) / var;
        dof += 1;
    }
    if dof == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
}

fn g_layer(k: &ContactKernel<'_>, u: u32, v: u32) -> Option<Layer> {
    k.graph().edge_layer(u, v)
}

fn pair_index(n: u32, u: u32, v: u32) -> usize {
    let (u, v) = (u.min(v) as usize, u.max(v) as usize);
    let n = n as usize;
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

#[test]
fn toy_pair_frequencies_match_kernel() {
    let (pop, g) = common::toy_world();
    let days = 20_000;
    for c in Configuration::ALL {
        let k = make_kernel(c, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let mut rng = rng::stream(100 + c.index() as u64, &[]);
        let mut counts = vec![0u64; 190];
        for t in 0..days {
            for ct in k.sample_day(t, &mut rng).unwrap().contacts {
                counts[pair_index(20, ct.u, ct.v)] += 1;
            }
        }
        let p = pair_frequency_p_value(&k, &counts, days);
        assert!(p > 0.01, "{c}: p = {p}");
    }
}

#[test]
fn per_agent_sampler_matches_kernel() {
    let (pop, g) = common::toy_world();
    let days = 20_000;
    for c in Configuration::ALL {
        let k = make_kernel(c, &pop, &g, &MixingMatrix::default_urban()).unwrap();
        let mut rng = rng::stream(200 + c.index() as u64, &[]);
        // pair (u, v) is drawn from u's side when u < v
        let mut counts = vec![0u64; 190];
        let mut buf = Vec::new();
        for _ in 0..days {
            for u in 0..20u32 {
                buf.clear();
                k.sample_contacts_of(u, &mut rng, &mut buf).unwrap();
                for &(v, _) in &buf {
                    assert_ne!(u, v);
                    if u < v {
                        counts[pair_index(20, u, v)] += 1;
                    }
                }
            }
        }
        let p = pair_frequency_p_value(&k, &counts, days);
        assert!(p > 0.01, "{c}: p = {p}");
    }
}

#[test]
fn one_tile_geometry_reduces_distance_kernels() {
    let pop = common::population(&[(0, 0, 30)], &AgeGroup::ALL);
    let hh = vec![vec![0, 1, 2], vec![3, 4], vec![10, 11, 12, 13]];
    let acq = vec![(0, 5), (1, 7), (2, 20), (6, 29), (14, 15), (8, 9), (3, 25)];
    let g = common::graph(&pop, &hh, &acq, 2.5);
    let s = MixingMatrix::default_urban();
    let kernel = |c| make_kernel(c, &pop, &g, &s).unwrap();
    let (hn, an, dn, adn) = (
        kernel(Configuration::HomogeneousNoise),
        kernel(Configuration::AgeNoise),
        kernel(Configuration::DistanceNoise),
        kernel(Configuration::AgeDistanceNoise),
    );
    for (u, v) in all_pairs(30) {
        assert!((dn.pair_probability(u, v) - hn.pair_probability(u, v)).abs() < 1e-12);
        assert!((adn.pair_probability(u, v) - an.pair_probability(u, v)).abs() < 1e-12);
    }
}

#[test]
fn constant_mixing_reduces_age_kernels() {
    let (pop, g) = common::city(600.0, 2000.0, 5.0, 21);
    let s = MixingMatrix::constant(3.0).unwrap();
    let kernel = |c| make_kernel(c, &pop, &g, &s).unwrap();
    let (hn, an, dn, adn) = (
        kernel(Configuration::HomogeneousNoise),
        kernel(Configuration::AgeNoise),
        kernel(Configuration::DistanceNoise),
        kernel(Configuration::AgeDistanceNoise),
    );
    let n = pop.len() as u32;
    for (u, v) in all_pairs(n).step_by(37) {
        assert!((an.pair_probability(u, v) - hn.pair_probability(u, v)).abs() < 1e-12);
        assert!((adn.pair_probability(u, v) - dn.pair_probability(u, v)).abs() < 1e-12);
    }
}
