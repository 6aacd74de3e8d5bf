use alloc::vec;
use alloc::vec::Vec;

use crate::epidemic::SimulationResult;

/// Points on the peak-normalized time axis.
pub const NORMALIZED_POINTS: usize = 100;
/// The axis spans `t / t_peak ∈ [0, NORMALIZED_SPAN]`.
pub const NORMALIZED_SPAN: f64 = 2.0;

/// `Σ_j √(x_j y_j)`.
pub fn hellinger_affinity(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| libm::sqrt(a * b)).sum()
}

/// Similarity of two replicas at one time: affinity of `(i, 1 − i)` times
/// affinity of the spatial distributions `π`.
pub fn overlap(i_a: f64, pi_a: &[f64], i_b: f64, pi_b: &[f64]) -> f64 {
    let global = hellinger_affinity(&[i_a, 1.0 - i_a], &[i_b, 1.0 - i_b]);
    (global * hellinger_affinity(pi_a, pi_b)).clamp(0.0, 1.0)
}

/// A run's prevalence resampled on the peak-normalized axis.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRun {
    pub prevalence: Vec<f64>,
    /// `None` where no agent is infectious.
    pub pi: Vec<Option<Vec<f64>>>,
}

/// Grid value `k` of the normalized axis.
pub fn normalized_time(k: usize) -> f64 {
    NORMALIZED_SPAN * k as f64 / (NORMALIZED_POINTS - 1) as f64
}

/// Maps day `t` to `t / t_peak` and linearly interpolates `I_j(t)` onto the
/// normalized grid. A run peaking on day 0 keeps its own time scale.
pub fn normalized_run(result: &SimulationResult) -> NormalizedRun {
    let peak = result.peak_day().max(1) as f64;
    let tiles = result.tile_count;
    let last = result.days() - 1;
    let mut prevalence = Vec::with_capacity(NORMALIZED_POINTS);
    let mut pi = Vec::with_capacity(NORMALIZED_POINTS);
    let mut counts = vec![0.0; tiles];
    for k in 0..NORMALIZED_POINTS {
        let t = normalized_time(k) * peak;
        let lo = (libm::floor(t) as usize).min(last);
        let hi = (lo + 1).min(last);
        let w = if t > last as f64 { 0.0 } else { t - lo as f64 };
        let (a, b) = (result.tile_prevalence_at(lo), result.tile_prevalence_at(hi));
        let mut total = 0.0;
        for j in 0..tiles {
            counts[j] = (1.0 - w) * a[j] as f64 + w * b[j] as f64;
            total += counts[j];
        }
        prevalence.push(total / result.population as f64);
        pi.push((total > 0.0).then(|| counts.iter().map(|c| c / total).collect()));
    }
    NormalizedRun { prevalence, pi }
}

/// `θ^{a,b}` on each normalized grid point where both runs have prevalence.
pub fn pairwise_overlap(a: &NormalizedRun, b: &NormalizedRun) -> Vec<Option<f64>> {
    (0..NORMALIZED_POINTS)
        .map(|k| match (&a.pi[k], &b.pi[k]) {
            (Some(pa), Some(pb)) => Some(overlap(a.prevalence[k], pa, b.prevalence[k], pb)),
            _ => None,
        })
        .collect()
}

/// Linear-interpolation percentile of sorted data, `p ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Distribution of `θ` over all unordered pairs of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSeries {
    pub time: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    pub pairs: Vec<usize>,
    /// `(a, b, θ per grid point)` with `a < b` indexing the input runs.
    pub values: Vec<(usize, usize, Vec<Option<f64>>)>,
}

pub fn overlap_series(runs: &[&SimulationResult]) -> OverlapSeries {
    let normalized: Vec<NormalizedRun> = runs.iter().map(|r| normalized_run(r)).collect();
    let mut values = Vec::new();
    for a in 0..normalized.len() {
        for b in a + 1..normalized.len() {
            values.push((a, b, pairwise_overlap(&normalized[a], &normalized[b])));
        }
    }
    let mut mean = Vec::with_capacity(NORMALIZED_POINTS);
    let mut lower = Vec::with_capacity(NORMALIZED_POINTS);
    let mut upper = Vec::with_capacity(NORMALIZED_POINTS);
    let mut pairs = Vec::with_capacity(NORMALIZED_POINTS);
    for k in 0..NORMALIZED_POINTS {
        let mut xs: Vec<f64> = values.iter().filter_map(|(_, _, v)| v[k]).collect();
        xs.sort_by(f64::total_cmp);
        pairs.push(xs.len());
        mean.push(super::mean_defined(xs.iter().map(|&x| Some(x))));
        lower.push(percentile(&xs, 0.025));
        upper.push(percentile(&xs, 0.975));
    }
    OverlapSeries { time: (0..NORMALIZED_POINTS).map(normalized_time).collect(), mean, lower, upper, pairs, values }
}
