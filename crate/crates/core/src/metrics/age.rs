use alloc::vec;
use alloc::vec::Vec;

use super::reproduction::reproduction_by_age;
use crate::epidemic::SimulationResult;
use crate::population::Population;

/// Run-averaged series on a time axis shifted so that each run's global
/// prevalence peak falls on offset 0. Entry `k` is offset `start + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub start: i64,
    pub values: Vec<f64>,
}

impl AlignedSeries {
    pub fn at(&self, offset: i64) -> f64 {
        usize::try_from(offset - self.start).ok().and_then(|k| self.values.get(k)).copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn aligned_axis(results: &[&SimulationResult]) -> (i64, usize) {
    let start = -(results.iter().map(|r| r.peak_day() as i64).max().unwrap_or(0));
    let end = results.iter().map(|r| r.days() as i64 - 1 - r.peak_day() as i64).max().unwrap_or(0);
    (start, (end - start + 1) as usize)
}

/// Peak-aligned mean of `I_t`; a run counts as 0 outside its own days.
pub fn aligned_prevalence(results: &[&SimulationResult]) -> AlignedSeries {
    let (start, len) = aligned_axis(results);
    let mut values = vec![0.0; len];
    for r in results {
        let shift = r.peak_day() as i64;
        for d in &r.daily {
            values[(d.t as i64 - shift - start) as usize] += d.infectious as f64;
        }
    }
    let n = results.len().max(1) as f64;
    values.iter_mut().for_each(|v| *v /= n);
    AlignedSeries { start, values }
}

/// Per-age-group prevalence and reproduction numbers, peak-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeSeries {
    pub start: i64,
    pub prevalence: Vec<[f64; 4]>,
    /// Mean cohort `R` of each group over the runs where that cohort exists.
    pub reproduction: Vec<[Option<f64>; 4]>,
}

pub fn age_series(results: &[&SimulationResult], population: &Population) -> AgeSeries {
    let (start, len) = aligned_axis(results);
    let mut prevalence = vec![[0.0; 4]; len];
    let mut r_sum = vec![[(0.0, 0usize); 4]; len];
    for r in results {
        let shift = r.peak_day() as i64;
        for (t, counts) in r.age_prevalence.iter().enumerate() {
            let k = (t as i64 - shift - start) as usize;
            for g in 0..4 {
                prevalence[k][g] += counts[g] as f64;
            }
        }
        for (g, series) in reproduction_by_age(r, population).iter().enumerate() {
            for t in 0..series.len() {
                if let Some(x) = series.r(t) {
                    let k = (t as i64 - shift - start) as usize;
                    r_sum[k][g].0 += x;
                    r_sum[k][g].1 += 1;
                }
            }
        }
    }
    let n = results.len().max(1) as f64;
    for row in &mut prevalence {
        row.iter_mut().for_each(|v| *v /= n);
    }
    let reproduction = r_sum.iter().map(|row| row.map(|(s, c)| (c > 0).then(|| s / c as f64))).collect();
    AgeSeries { start, prevalence, reproduction }
}
