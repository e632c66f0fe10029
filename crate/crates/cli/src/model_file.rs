//! On-disk layouts for full and reduced models.

use std::path::Path;

use serde::{Deserialize, Serialize};
use symdyn::dmarkov::{Counts, DMarkovModel, WordSpace};
use symdyn::ingest::LagRule;
use symdyn::json;
use symdyn::reduce::{ClusterMap, ReducedModel, Weighting};
use symdyn::symbolize::PartitionSpec;
use symdyn::Matrix;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::io;

pub const MODEL_FORMAT: &str = "symdyn-model";
pub const REDUCED_FORMAT: &str = "symdyn-reduced-model";
pub const FORMAT_VERSION: u32 = 1;

/// Where an output came from: the configuration and a hash of every input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: PipelineConfig,
    pub inputs: Vec<InputDigest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    /// File name only, so outputs do not depend on the working directory.
    pub name: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(role: &str, path: &Path, bytes: &[u8]) -> Self {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        Self { role: role.into(), name, sha256: io::sha256_hex(bytes) }
    }
}

/// Steps that turn a raw series into the downsampled, normalized segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub lag: usize,
    pub lag_rule: LagRule,
    pub normalize_first: bool,
    #[serde(with = "json::real")]
    pub mean: f64,
    #[serde(with = "json::real")]
    pub std: f64,
}

/// One non-zero transition `[from, to, probability]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triple(pub usize, pub usize, #[serde(with = "json::real")] pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub alphabet_size: usize,
    pub depth: usize,
    #[serde(with = "json::real")]
    pub prior_weight: f64,
    pub partition: PartitionSpec,
    pub preprocessing: Preprocessing,
    pub counts: Vec<Vec<u64>>,
    #[serde(with = "json::matrix")]
    pub emission: Matrix,
    pub transition_sparse: Vec<Triple>,
    #[serde(with = "json::reals")]
    pub stationary: Vec<f64>,
    pub provenance: Provenance,
}

fn schema(msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(msg.to_string())
}

fn check_header(format: &str, version: u32, want: &str) -> CliResult<()> {
    if format != want || version != FORMAT_VERSION {
        return Err(schema(format!("expected {want} v{FORMAT_VERSION}, found {format} v{version}")));
    }
    Ok(())
}

impl ModelFile {
    pub fn new(
        model: &DMarkovModel,
        partition: PartitionSpec,
        preprocessing: Preprocessing,
        provenance: Provenance,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: FORMAT_VERSION,
            alphabet_size: model.alphabet_size(),
            depth: model.depth(),
            prior_weight: model.prior_weight(),
            partition,
            preprocessing,
            counts: model.counts().to_rows(),
            emission: model.emission().clone(),
            transition_sparse: model.transition().triples().into_iter().map(|(a, b, p)| Triple(a, b, p)).collect(),
            stationary: model.stationary().to_vec(),
            provenance,
        }
    }

    /// Reads and parses a model file; returns it with the raw bytes for hashing.
    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = io::read_bytes(path)?;
        let file: Self = serde_json::from_slice(&bytes).map_err(|e| schema(format!("{}: {e}", path.display())))?;
        check_header(&file.format, file.version, MODEL_FORMAT)?;
        Ok((file, bytes))
    }

    /// Rebuilds the model from counts and emissions, checking every stored shape.
    pub fn to_model(&self) -> CliResult<DMarkovModel> {
        let space = WordSpace::new(self.alphabet_size, self.depth).map_err(schema)?;
        if self.partition.alphabet_size() != self.alphabet_size {
            return Err(schema("partition alphabet does not match the model"));
        }
        PartitionSpec::new(self.partition.edges().to_vec()).map_err(schema)?;
        if self.preprocessing.lag == 0 || !(self.preprocessing.std > 0.0) {
            return Err(schema("preprocessing needs a positive lag and deviation"));
        }
        let counts = Counts::from_rows(space, &self.counts).map_err(schema)?;
        let model = DMarkovModel::from_parts(space, self.prior_weight, counts, self.emission.clone()).map_err(schema)?;
        if self.stationary.len() != model.n_states() {
            return Err(schema("stationary vector length does not match the state count"));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFile {
    pub format: String,
    pub version: u32,
    pub alphabet_size: usize,
    pub depth: usize,
    pub n_states: usize,
    /// Cluster of each full-model word, in lexicographic word order.
    pub cluster_map: Vec<usize>,
    #[serde(with = "json::matrix")]
    pub transition: Matrix,
    #[serde(with = "json::matrix")]
    pub emission: Matrix,
    #[serde(with = "json::reals")]
    pub stationary: Vec<f64>,
    pub weighting: Weighting,
    pub zero_mass_clusters: Vec<usize>,
    #[serde(with = "json::real")]
    pub log_likelihood: f64,
    #[serde(with = "json::real")]
    pub kappa: f64,
    #[serde(with = "json::real")]
    pub hamming_bound: f64,
    pub provenance: Provenance,
}

impl ReducedFile {
    pub fn new(
        model: &DMarkovModel,
        reduced: &ReducedModel,
        log_likelihood: f64,
        kappa: f64,
        hamming_bound: f64,
        provenance: Provenance,
    ) -> Self {
        Self {
            format: REDUCED_FORMAT.into(),
            version: FORMAT_VERSION,
            alphabet_size: model.alphabet_size(),
            depth: model.depth(),
            n_states: reduced.n_states(),
            cluster_map: reduced.cluster_map.assignment().to_vec(),
            transition: reduced.transition.clone(),
            emission: reduced.emission.clone(),
            stationary: reduced.stationary.clone(),
            weighting: reduced.weighting,
            zero_mass_clusters: reduced.zero_mass_clusters.clone(),
            log_likelihood,
            kappa,
            hamming_bound,
            provenance,
        }
    }

    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = io::read_bytes(path)?;
        let file: Self = serde_json::from_slice(&bytes).map_err(|e| schema(format!("{}: {e}", path.display())))?;
        check_header(&file.format, file.version, REDUCED_FORMAT)?;
        Ok((file, bytes))
    }

    /// Cluster map and emission rows, checked against the full model.
    pub fn parts_for(&self, model: &DMarkovModel) -> CliResult<(ClusterMap, Matrix)> {
        if self.alphabet_size != model.alphabet_size() || self.depth != model.depth() {
            return Err(schema("reduced model was built from a different alphabet or depth"));
        }
        let map = ClusterMap::new(self.cluster_map.clone()).map_err(schema)?;
        if map.n_states() != model.n_states() || map.n_clusters() != self.n_states {
            return Err(schema("cluster map does not fit the model"));
        }
        if self.emission.rows() != self.n_states || self.emission.cols() != self.alphabet_size {
            return Err(schema("reduced emission has the wrong shape"));
        }
        self.emission.check_row_stochastic(1e-9).map_err(schema)?;
        Ok((map, self.emission.clone()))
    }
}
