//! Series-to-model steps shared by the commands.

use symdyn::depth::{estimate_depth, one_step_matrix, DepthEstimate};
use symdyn::dmarkov::{estimate_model, DMarkovModel};
use symdyn::ingest::{
    autocorrelation, default_max_lag, downsample_all_phases, find_downsampling_lag, mean_std, normalize, LagChoice,
    RawSeries, SegmentedSeries,
};
use symdyn::reduce::{hierarchical_cluster, pairwise_kl_distance, Dendrogram};
use symdyn::symbolize::{encode, mep_partition, PartitionSpec, SymbolSequence};

use crate::config::PipelineConfig;
use crate::error::CliResult;
use crate::model_file::Preprocessing;

/// Applies stored normalization and downsampling to a raw series.
pub fn segment(samples: &[f64], pre: &Preprocessing) -> CliResult<SegmentedSeries> {
    let scale = |x: f64| (x - pre.mean) / pre.std;
    if pre.normalize_first {
        let raw = RawSeries::new(samples.iter().map(|&x| scale(x)).collect())?;
        Ok(downsample_all_phases(&raw, pre.lag)?)
    } else {
        let seg = downsample_all_phases(&RawSeries::new(samples.to_vec())?, pre.lag)?;
        let segments = seg.segments().iter().map(|s| s.iter().map(|&x| scale(x)).collect()).collect();
        Ok(SegmentedSeries::new(segments, pre.lag)?)
    }
}

/// Picks the lag and normalization constants for a raw series.
pub fn choose_preprocessing(samples: &[f64], cfg: &PipelineConfig) -> CliResult<(Preprocessing, LagChoice)> {
    let raw = RawSeries::new(samples.to_vec())?;
    let normalized = normalize(&raw)?;
    let horizon = default_max_lag(raw.len()).min(raw.len() - 1);
    let (lag_choice, mean, std) = if cfg.normalize_first {
        let (mean, std) = mean_std(raw.samples());
        (find_downsampling_lag(&autocorrelation(&normalized, horizon)?), mean, std)
    } else {
        let lag = find_downsampling_lag(&autocorrelation(&raw, horizon)?);
        let pooled: Vec<f64> = downsample_all_phases(&raw, lag.lag)?.iter_samples().collect();
        let (mean, std) = mean_std(&pooled);
        (lag, mean, std)
    };
    let pre = Preprocessing {
        lag: lag_choice.lag,
        lag_rule: lag_choice.rule,
        normalize_first: cfg.normalize_first,
        mean,
        std,
    };
    Ok((pre, lag_choice))
}

/// Everything produced by the fitting stage.
#[derive(Debug, Clone)]
pub struct Fit {
    pub preprocessing: Preprocessing,
    pub lag: LagChoice,
    pub segmented: SegmentedSeries,
    pub partition: PartitionSpec,
    pub sequence: SymbolSequence,
    pub depth: DepthEstimate,
    pub model: DMarkovModel,
}

pub fn fit_series(samples: &[f64], cfg: &PipelineConfig) -> CliResult<Fit> {
    let (preprocessing, lag) = choose_preprocessing(samples, cfg)?;
    let segmented = segment(samples, &preprocessing)?;
    let partition = mep_partition(&segmented, cfg.alphabet_size)?;
    let sequence = encode(&segmented, &partition);
    let one_step = one_step_matrix(&sequence, cfg.prior_weight)?;
    let depth = estimate_depth(&one_step, cfg.depth_options())?;
    let model = estimate_model(&sequence, depth.depth, cfg.prior_weight)?;
    Ok(Fit { preprocessing, lag, segmented, partition, sequence, depth, model })
}

/// Symbols of a series under a stored partition and preprocessing.
pub fn resymbolize(samples: &[f64], pre: &Preprocessing, partition: &PartitionSpec) -> CliResult<SymbolSequence> {
    Ok(encode(&segment(samples, pre)?, partition))
}

pub fn cluster_states(model: &DMarkovModel) -> CliResult<Dendrogram> {
    Ok(hierarchical_cluster(&pairwise_kl_distance(model)?)?)
}
