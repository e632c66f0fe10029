use serde::{Deserialize, Serialize};
use symdyn::depth::{DepthOptions, DEFAULT_DEPTH_FLOOR, DEFAULT_D_MAX};
use symdyn::dmarkov::DEFAULT_PRIOR_WEIGHT;
use symdyn::json;
use symdyn::reduce::Weighting;
use symdyn::select::Criterion;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// Pick from the file extension: `.f32`, `.f64`, otherwise CSV.
    #[default]
    Auto,
    Csv,
    /// Raw little-endian 32-bit floats.
    F32,
    /// Raw little-endian 64-bit floats.
    F64,
}

/// Every knob of the pipeline; copied verbatim into each output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub alphabet_size: usize,
    #[serde(with = "json::real")]
    pub epsilon: f64,
    pub d_max: usize,
    pub depth_floor: usize,
    #[serde(with = "json::real")]
    pub prior_weight: f64,
    pub weighting: Weighting,
    pub criterion: Criterion,
    pub seed: u64,
    /// Zero-based CSV column holding the signal.
    pub column: usize,
    pub skip_header: bool,
    pub input_format: InputFormat,
    /// Normalize the whole series before downsampling instead of after.
    pub normalize_first: bool,
    /// Sequence length used for the Hamming bound column of the score table.
    pub bound_length: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alphabet_size: 3,
            epsilon: 0.05,
            d_max: DEFAULT_D_MAX,
            depth_floor: DEFAULT_DEPTH_FLOOR,
            prior_weight: DEFAULT_PRIOR_WEIGHT,
            weighting: Weighting::Stationary,
            criterion: Criterion::Bic,
            seed: 0,
            column: 0,
            skip_header: false,
            input_format: InputFormat::Auto,
            normalize_first: true,
            bound_length: 1000,
        }
    }
}

impl PipelineConfig {
    pub fn depth_options(&self) -> DepthOptions {
        DepthOptions { epsilon: self.epsilon, d_max: self.d_max, depth_floor: self.depth_floor }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(2..=symdyn::symbolize::MAX_ALPHABET).contains(&self.alphabet_size) {
            return bad(format!("alphabet size {} outside [2, 256]", self.alphabet_size));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon {} outside (0, 1)", self.epsilon));
        }
        if self.depth_floor == 0 || self.depth_floor > self.d_max {
            return bad(format!("need 1 <= depth floor ({}) <= dmax ({})", self.depth_floor, self.d_max));
        }
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return bad(format!("prior weight {} must be finite and non-negative", self.prior_weight));
        }
        Ok(())
    }
}
