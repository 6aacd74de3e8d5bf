use alloc::format;
use alloc::vec::Vec;

use crate::contacts::ContactKernel;
use crate::epidemic::{self, EpidemicParams, Executor};
use crate::network::DegreeStats;
use crate::rng;
use crate::{Error, Result};

/// Coefficient of variation of the attack rates, using the population
/// variance. `None` when the mean is 0.
pub fn variability(attack_rates: &[f64]) -> Option<f64> {
    if attack_rates.is_empty() {
        return None;
    }
    let n = attack_rates.len() as f64;
    let mean = attack_rates.iter().sum::<f64>() / n;
    if !(mean > 0.0) {
        return None;
    }
    // deviations from the first sample keep constant ensembles exactly at 0
    let x0 = attack_rates[0];
    let shift = attack_rates.iter().map(|r| r - x0).sum::<f64>() / n;
    let var = attack_rates.iter().map(|r| (r - x0) * (r - x0)).sum::<f64>() / n - shift * shift;
    Some(libm::sqrt(var.max(0.0)) / mean)
}

/// Heterogeneous mean-field threshold from contact-degree moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmfThreshold {
    /// `⟨k⟩ / (⟨k²⟩ − ⟨k⟩)`, the critical `β/μ`.
    pub lambda_c: f64,
    /// `μ · λ_c`, the critical per-contact daily transmission probability.
    pub beta_c: f64,
}

pub fn hmf_threshold(stats: &DegreeStats, mu: f64) -> Option<HmfThreshold> {
    let denom = stats.second_moment - stats.mean;
    if !(denom > 0.0) {
        return None;
    }
    let lambda_c = stats.mean / denom;
    Some(HmfThreshold { lambda_c, beta_c: mu * lambda_c })
}

/// Pooled per-agent contact counts over `days` sampled days.
pub fn contact_degree_distribution(kernel: &ContactKernel<'_>, days: u32, seed: u64) -> Result<DegreeStats> {
    let mut rng = rng::stream(seed, &[rng::stage::CONTACT_DEGREES, kernel.configuration().index() as u64]);
    let mut stats = DegreeStats::default();
    for t in 0..days {
        let day = kernel.sample_day(t, &mut rng)?;
        stats.extend(day.degrees(kernel.agent_count()));
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub beta: f64,
    pub attack_rates: Vec<f64>,
    pub mean_attack_rate: f64,
    pub variability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub points: Vec<ScanPoint>,
    /// Grid value maximizing the variability, earliest on ties.
    pub beta_c_variability: Option<f64>,
    pub degrees: DegreeStats,
    pub hmf: Option<HmfThreshold>,
}

/// Runs `replicas` unfiltered epidemics at each `β` of an increasing grid.
///
/// Replica `r` uses the same seed at every grid point, so neighbouring points
/// differ only through `β`.
pub fn threshold_scan<E: Executor + ?Sized>(
    kernel: &ContactKernel<'_>,
    params: &EpidemicParams,
    grid: &[f64],
    replicas: usize,
    degree_days: u32,
    seed: u64,
    executor: &E,
) -> Result<ThresholdScan> {
    if grid.len() < 10 {
        return Err(Error::Config(format!("threshold scan needs at least 10 β values, got {}", grid.len())));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("threshold-scan β grid must be strictly increasing".into()));
    }
    if replicas == 0 {
        return Err(Error::Config("threshold scan needs at least one replica per β".into()));
    }
    let per_beta: Vec<EpidemicParams> = grid.iter().map(|&b| params.with_beta(b)).collect::<Result<_>>()?;
    params.check_index_case(kernel.population())?;
    let rates: Vec<f64> = executor
        .map(grid.len() * replicas, |job| {
            let (i, r) = (job / replicas, job % replicas);
            let s = rng::derive_seed(seed, &[rng::stage::SCAN, r as u64]);
            epidemic::run(kernel, &per_beta[i], s).map(|res| res.attack_rate())
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let points: Vec<ScanPoint> = grid
        .iter()
        .zip(rates.chunks(replicas))
        .map(|(&beta, chunk)| ScanPoint {
            beta,
            attack_rates: chunk.to_vec(),
            mean_attack_rate: chunk.iter().sum::<f64>() / chunk.len() as f64,
            variability: variability(chunk),
        })
        .collect();
    let mut best: Option<(f64, f64)> = None;
    for p in &points {
        if let Some(d) = p.variability {
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((p.beta, d));
            }
        }
    }
    let degrees = contact_degree_distribution(kernel, degree_days, seed)?;
    let hmf = hmf_threshold(&degrees, params.mu());
    Ok(ThresholdScan { points, beta_c_variability: best.map(|(b, _)| b), degrees, hmf })
}
