//! Observables computed from simulation results.

mod age;
mod geo;
mod meanfield;
mod overlap;
mod reproduction;
mod threshold;
mod tiles;

pub use age::{age_series, aligned_prevalence, AgeSeries, AlignedSeries};
pub use geo::{geo_point, geo_series, GeoPoint};
pub use meanfield::{final_size, mean_field_trajectory, MeanFieldPoint};
pub use overlap::{
    hellinger_affinity, normalized_run, overlap, overlap_series, pairwise_overlap, percentile, NormalizedRun, OverlapSeries,
    NORMALIZED_POINTS, NORMALIZED_SPAN,
};
pub use reproduction::{mean_reproduction, reproduction_by_age, reproduction_series, ReproductionSeries};
pub use threshold::{
    contact_degree_distribution, hmf_threshold, threshold_scan, variability, HmfThreshold, ScanPoint, ThresholdScan,
};
pub use tiles::{tile_run_stats, tile_stats, PopulationBin, TileAggregate, TileRunStats, TileStats};

/// Mean of the defined entries, `None` if there are none.
pub(crate) fn mean_defined<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.into_iter().flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}
