mod common;

use urbanepi_core::epidemic::{InfectionEvent, SimulationResult};
use urbanepi_core::metrics::*;
use urbanepi_core::network::DegreeStats;
use urbanepi_core::population::AgeGroup;

fn ev(agent: u32, day: u32, infector: Option<u32>, recovery: Option<u32>) -> InfectionEvent {
    InfectionEvent { agent, infection_day: day, infector, recovery_day: recovery }
}

#[test]
fn three_tile_entropy_and_coverage() {
    let p = geo_point(&[2, 1, 0], &[10, 10, 10]);
    let h = -(2.0 / 3.0 * (2.0f64 / 3.0).ln() + 1.0 / 3.0 * (1.0f64 / 3.0).ln()) / 3.0f64.ln();
    assert!((p.entropy.unwrap() - h).abs() < 1e-12);
    assert!((h - 0.5794).abs() < 1e-4);
    assert!((p.tau - 2.0 / 3.0).abs() < 1e-12);
    let q = p.q.unwrap();
    for (a, b) in q.iter().zip([2.0 / 3.0, 1.0 / 3.0, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    let pi = p.pi.unwrap();
    for (a, b) in pi.iter().zip([2.0 / 3.0, 1.0 / 3.0, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((p.prevalence - 0.1).abs() < 1e-12);
}

#[test]
fn entropy_extremes() {
    let point = geo_point(&[0, 7, 0, 0], &[10, 20, 30, 40]);
    assert_eq!(point.entropy, Some(0.0));
    assert_eq!(point.tau, 0.25);
    let even = geo_point(&[1, 2, 3, 4], &[10, 20, 30, 40]);
    assert!((even.entropy.unwrap() - 1.0).abs() < 1e-12);
    let none = geo_point(&[0, 0], &[5, 5]);
    assert!(none.entropy.is_none() && none.q.is_none() && none.pi.is_none());
    assert_eq!(geo_point(&[3], &[10]).entropy, Some(0.0));
}

#[test]
fn two_tile_overlap() {
    let theta = overlap(0.5, &[1.0, 0.0], 0.5, &[0.5, 0.5]);
    assert!((theta - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((overlap(0.3, &[0.2, 0.8], 0.3, &[0.2, 0.8]) - 1.0).abs() < 1e-12);
    assert_eq!(overlap(0.4, &[1.0, 0.0], 0.4, &[0.0, 1.0]), 0.0);
}

/// Hand-built log on 5 agents in one tile:
/// 0 infects 1 and 2 (day 1); 1 infects 3 (day 3); 2 infects 4 (day 3).
fn five_agent_log() -> (urbanepi_core::population::Population, SimulationResult) {
    let pop = common::population(&[(0, 0, 5)], &[AgeGroup::Adults]);
    let events = vec![
        ev(0, 0, None, Some(2)),
        ev(1, 1, Some(0), Some(4)),
        ev(2, 1, Some(0), Some(3)),
        ev(3, 3, Some(1), Some(5)),
        ev(4, 3, Some(2), Some(4)),
    ];
    let r = SimulationResult::from_event_log(&pop, events, 5, 0, None).unwrap();
    (pop, r)
}

#[test]
fn five_agent_reproduction() {
    let (_, r) = five_agent_log();
    let s = reproduction_series(&r);
    assert_eq!(s.cohort, vec![1, 2, 0, 2, 0, 0]);
    assert_eq!(s.r(0), Some(2.0));
    assert_eq!(s.r(1), Some(1.0));
    assert_eq!(s.r(2), None);
    assert_eq!(s.r(3), Some(0.0));
    let weighted: f64 = (0..s.len()).filter_map(|t| s.r(t).map(|x| x * s.cohort[t] as f64)).sum();
    assert_eq!(weighted, 4.0);
    assert_eq!(s.total_secondary(), 4);
    assert_eq!(r.index_secondary(), 2);

    let infectious: Vec<u32> = r.daily.iter().map(|d| d.infectious).collect();
    assert_eq!(infectious, vec![1, 3, 2, 3, 1, 0]);
    let recovered: Vec<u32> = r.daily.iter().map(|d| d.recovered).collect();
    assert_eq!(recovered, vec![0, 0, 1, 2, 4, 5]);
    assert!(r.completed);
    assert_eq!(r.peak_day(), 1);
    assert_eq!(r.attack_rate(), 1.0);
}

#[test]
fn inconsistent_logs_are_rejected() {
    let pop = common::population(&[(0, 0, 3)], &[AgeGroup::Adults]);
    // infector recovered before the contact day
    let late = vec![ev(0, 0, None, Some(1)), ev(1, 2, Some(0), Some(3))];
    assert!(SimulationResult::from_event_log(&pop, late, 3, 0, None).is_err());
    let no_index = vec![ev(1, 1, Some(0), Some(2))];
    assert!(SimulationResult::from_event_log(&pop, no_index, 3, 0, None).is_err());
    let twice = vec![ev(0, 0, None, Some(2)), ev(0, 1, Some(0), Some(2))];
    assert!(SimulationResult::from_event_log(&pop, twice, 3, 0, None).is_err());
}

#[test]
fn two_tile_statistics() {
    // tile 0 holds agents 0..4, tile 1 agents 4..6
    let pop = common::population(&[(0, 0, 4), (0, 1, 2)], &[AgeGroup::Adults]);
    let events = vec![
        ev(0, 0, None, Some(3)),
        ev(1, 1, Some(0), Some(2)),
        ev(4, 2, Some(0), Some(6)),
        ev(2, 2, Some(1), Some(4)),
        ev(5, 3, Some(4), Some(5)),
    ];
    let r = SimulationResult::from_event_log(&pop, events, 6, 0, None).unwrap();
    // tile 0: I = 1,2,2,1,0 ... peak 2 first on day 1
    // tile 1: I = 0,0,1,2,1,1,0, peak 2 on day 3
    let s = tile_run_stats(&r, &pop.territory);
    assert_eq!(s[0].first_day, Some(0));
    assert_eq!(s[0].peak_interval, Some(1));
    assert_eq!(s[0].attack_rate, 0.75);
    assert_eq!(s[1].first_day, Some(2));
    assert_eq!(s[1].peak_interval, Some(1));
    assert_eq!(s[1].attack_rate, 1.0);

    let quiet = SimulationResult::from_event_log(&pop, vec![ev(1, 0, None, Some(2))], 2, 1, None).unwrap();
    let agg = tile_stats(&[&r, &quiet], &pop.territory);
    assert_eq!(agg.per_tile[1].infected_runs, 1);
    assert_eq!(agg.per_tile[1].mean_first_day, Some(2.0));
    assert_eq!(agg.per_tile[1].mean_attack_rate, 0.5);
    assert_eq!(agg.per_tile[0].mean_first_day, Some(0.0));
    assert_eq!(agg.per_tile[0].mean_attack_rate, (0.75 + 0.25) / 2.0);
    // populations 4 and 2 fall into bins [4, 8) and [2, 4)
    assert_eq!(agg.bins.iter().map(|b| b.log2_lower).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn two_group_age_tallies() {
    let pop = common::population(&[(0, 0, 4)], &[AgeGroup::Children, AgeGroup::Elderly]);
    // children are agents 0 and 2, elderly 1 and 3
    let events = vec![ev(0, 0, None, Some(2)), ev(1, 1, Some(0), Some(3)), ev(2, 1, Some(0), Some(2)), ev(3, 2, Some(1), Some(4))];
    let r = SimulationResult::from_event_log(&pop, events, 4, 0, None).unwrap();
    let children: Vec<u32> = r.age_prevalence.iter().map(|a| a[AgeGroup::Children.index()]).collect();
    let elderly: Vec<u32> = r.age_prevalence.iter().map(|a| a[AgeGroup::Elderly.index()]).collect();
    assert_eq!(children, vec![1, 2, 0, 0, 0]);
    assert_eq!(elderly, vec![0, 1, 2, 1, 0]);
    let by_age = reproduction_by_age(&r, &pop);
    assert_eq!(by_age[AgeGroup::Children.index()].r(0), Some(2.0));
    assert_eq!(by_age[AgeGroup::Children.index()].r(1), Some(0.0));
    assert_eq!(by_age[AgeGroup::Elderly.index()].r(1), Some(1.0));

    // global peak is day 1 (I = 3), so offsets start at -1
    let a = age_series(&[&r], &pop);
    assert_eq!(a.start, -1);
    assert_eq!(a.prevalence[1], [2.0, 0.0, 0.0, 1.0]);
}

#[test]
fn single_group_curve_equals_global() {
    let (pop, r) = five_agent_log();
    let a = age_series(&[&r], &pop);
    let g = aligned_prevalence(&[&r]);
    assert_eq!(a.start, g.start);
    for (row, v) in a.prevalence.iter().zip(&g.values) {
        assert_eq!(row[AgeGroup::Adults.index()], *v);
    }
}

#[test]
fn identical_runs_overlap_fully() {
    let (_, r) = five_agent_log();
    let n = normalized_run(&r);
    for theta in pairwise_overlap(&n, &n).into_iter().flatten() {
        assert!((theta - 1.0).abs() < 1e-12);
    }
    let series = overlap_series(&[&r, &r]);
    assert_eq!(series.time.len(), NORMALIZED_POINTS);
    assert!((series.time[NORMALIZED_POINTS - 1] - NORMALIZED_SPAN).abs() < 1e-12);
    for m in series.mean.iter().flatten() {
        assert!((m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hmf_threshold_on_toy_histograms() {
    // degrees {1, 1, 2, 3}: <k> = 7/4, <k^2> = 15/4
    let h = hmf_threshold(&DegreeStats::from_histogram(vec![0, 2, 1, 1]), 0.5).unwrap();
    assert_eq!(h.lambda_c, 7.0 / 8.0);
    assert_eq!(h.beta_c, 7.0 / 16.0);
    // regular degree 4: <k>/(<k^2> - <k>) = 4/12
    let h = hmf_threshold(&DegreeStats::from_degrees([4, 4, 4, 4]), 1.0).unwrap();
    assert_eq!(h.lambda_c, 1.0 / 3.0);
    // all degrees <= 1 leave no threshold
    assert!(hmf_threshold(&DegreeStats::from_degrees([0, 1, 1]), 1.0).is_none());
}

#[test]
fn variability_examples() {
    assert_eq!(variability(&[0.3; 8]), Some(0.0));
    assert_eq!(variability(&[0.0, 0.0]), None);
    // {0, 1}: mean 1/2, sd 1/2
    assert_eq!(variability(&[0.0, 1.0]), Some(1.0));
}

#[test]
fn final_size_fixed_point() {
    let rho = final_size(1.3);
    assert!((rho - (1.0 - (-1.3 * rho).exp())).abs() < 1e-12);
    assert!((rho - 0.4235).abs() < 1e-3);
    assert_eq!(final_size(0.9), 0.0);
}

#[test]
fn mean_field_matches_final_size() {
    let traj = mean_field_trajectory(1e6, 0.0436, 9.94, 1.0 / 3.0, 1.0, 2000);
    let last = traj.last().unwrap();
    let rho = last.recovered / 1e6;
    let r0 = 0.0436 * 9.94 * 3.0;
    assert!((rho - final_size(r0)).abs() < 2e-3, "{rho}");
    for p in &traj {
        assert!((p.susceptible + p.infectious + p.recovered - 1e6).abs() < 1e-6);
    }
}

#[test]
fn percentile_interpolates() {
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(percentile(&xs, 0.5), Some(3.0));
    assert_eq!(percentile(&xs, 0.0), Some(1.0));
    assert_eq!(percentile(&xs, 0.975), Some(4.9));
    assert_eq!(percentile(&[], 0.5), None);
}
