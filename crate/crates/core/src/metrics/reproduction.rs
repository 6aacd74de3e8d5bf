use alloc::vec;
use alloc::vec::Vec;

use crate::epidemic::SimulationResult;
use crate::population::Population;

/// Cohort reproduction numbers of one run, indexed by infection day.
///
/// `R(t)` is the mean number of infections eventually caused by the agents
/// whose infection day is `t`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReproductionSeries {
    pub cohort: Vec<u32>,
    pub secondary: Vec<u64>,
}

impl ReproductionSeries {
    pub fn len(&self) -> usize {
        self.cohort.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cohort.is_empty()
    }

    pub fn r(&self, t: usize) -> Option<f64> {
        match self.cohort.get(t) {
            Some(&c) if c > 0 => Some(self.secondary[t] as f64 / c as f64),
            _ => None,
        }
    }

    /// `Σ_t cohort(t) · R(t)` in integer form, the number of non-index infections.
    pub fn total_secondary(&self) -> u64 {
        self.secondary.iter().sum()
    }
}

fn series_where(result: &SimulationResult, keep: impl Fn(u32) -> bool) -> ReproductionSeries {
    let days = result.days();
    let mut s = ReproductionSeries { cohort: vec![0; days], secondary: vec![0; days] };
    for (e, sec) in result.events.iter().zip(result.secondary_counts()) {
        if keep(e.agent) {
            let t = e.infection_day as usize;
            s.cohort[t] += 1;
            s.secondary[t] += sec as u64;
        }
    }
    s
}

pub fn reproduction_series(result: &SimulationResult) -> ReproductionSeries {
    series_where(result, |_| true)
}

/// Cohort series restricted to the infectors of each age group.
pub fn reproduction_by_age(result: &SimulationResult, population: &Population) -> [ReproductionSeries; 4] {
    core::array::from_fn(|g| series_where(result, |a| population.age_of(a).index() == g))
}

/// Per-day mean of `R(t)` over the runs where the cohort is nonempty.
pub fn mean_reproduction(series: &[ReproductionSeries]) -> Vec<Option<f64>> {
    let days = series.iter().map(ReproductionSeries::len).max().unwrap_or(0);
    (0..days).map(|t| super::mean_defined(series.iter().map(|s| s.r(t)))).collect()
}
