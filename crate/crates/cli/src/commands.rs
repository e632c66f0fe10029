//! One function per subcommand. Each returns the paths it wrote, in order.

use std::path::{Path, PathBuf};

use serde::Serialize;
use symdyn::depth::DepthEstimate;
use symdyn::distort::{coupled_pair, monte_carlo_hamming, DistortionReport};
use symdyn::dmarkov::DMarkovModel;
use symdyn::ingest::LagRule;
use symdyn::json;
use symdyn::metrics::{cluster_divergence, discrepancy_statistic, simplex_coordinates, symbol_marginal, AnomalyRecord};
use symdyn::par::{self, Exec};
use symdyn::reduce::{cut, reduce_emission, ClusterMap, Dendrogram, Merge, ReducedModel};
use symdyn::select::{score_all_cuts_with, ScoreOptions, ScoreTable};
use symdyn::symbolize::entropy;
use symdyn::Matrix;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, write_csv, write_json};
use crate::model_file::{InputDigest, ModelFile, Preprocessing, Provenance, ReducedFile};
use crate::pipeline::{cluster_states, fit_series, resymbolize, Fit};

/// Lossless shortest decimal form for CSV cells.
fn cell(x: f64) -> String {
    x.to_string()
}

fn load_series(path: &Path, cfg: &PipelineConfig) -> CliResult<(Vec<f64>, InputDigest)> {
    let bytes = io::read_bytes(path)?;
    let samples = io::parse_series(path, &bytes, cfg)?;
    Ok((samples, InputDigest::new("series", path, &bytes)))
}

#[derive(Serialize)]
struct LagReport {
    lag: usize,
    rule: LagRule,
    /// No autocorrelation minimum or zero crossing inside the search horizon.
    warning: bool,
}

#[derive(Serialize)]
struct SolverReport {
    iterations: usize,
    #[serde(with = "json::real")]
    residual: f64,
    lazy: bool,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    format: &'static str,
    series_length: usize,
    lag: LagReport,
    preprocessing: &'a Preprocessing,
    #[serde(with = "json::reals")]
    partition: &'a [f64],
    occupancy: Vec<usize>,
    /// Largest gap between a cell count and the equal-frequency target.
    #[serde(with = "json::real")]
    occupancy_deviation: f64,
    #[serde(with = "json::real")]
    symbol_entropy: f64,
    #[serde(with = "json::reals")]
    symbol_frequencies: Vec<f64>,
    /// Stationary-weighted symbol marginal of the fitted model.
    #[serde(with = "json::reals")]
    stationary_marginal: Vec<f64>,
    depth: &'a DepthEstimate,
    n_states: usize,
    scored_emissions: usize,
    stationary_solver: SolverReport,
    provenance: &'a Provenance,
}

fn diagnostics<'a>(fit: &'a Fit, len: usize, provenance: &'a Provenance) -> CliResult<Diagnostics<'a>> {
    let occupancy = fit.partition.occupancy(fit.segmented.iter_samples());
    let target = fit.segmented.total_len() as f64 / occupancy.len() as f64;
    let freqs = fit.sequence.symbol_frequencies();
    let solve = fit.model.stationary_solve();
    Ok(Diagnostics {
        format: "symdyn-diagnostics",
        series_length: len,
        lag: LagReport { lag: fit.lag.lag, rule: fit.lag.rule, warning: fit.lag.is_warning() },
        preprocessing: &fit.preprocessing,
        partition: fit.partition.edges(),
        occupancy_deviation: occupancy.iter().map(|&c| (c as f64 - target).abs()).fold(0.0, f64::max),
        occupancy,
        symbol_entropy: entropy(&freqs),
        symbol_frequencies: freqs,
        stationary_marginal: symbol_marginal(fit.model.emission(), fit.model.stationary())?,
        depth: &fit.depth,
        n_states: fit.model.n_states(),
        scored_emissions: fit.model.space().scored_emissions(&fit.sequence),
        stationary_solver: SolverReport { iterations: solve.iterations, residual: solve.residual, lazy: solve.lazy },
        provenance,
    })
}

/// Series -> full-order model plus fitting diagnostics.
pub fn cmd_fit(input: &Path, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let (samples, digest) = load_series(input, cfg)?;
    let fit = fit_series(&samples, cfg)?;
    let provenance = Provenance { config: cfg.clone(), inputs: vec![digest] };
    let model = ModelFile::new(&fit.model, fit.partition.clone(), fit.preprocessing.clone(), provenance.clone());
    Ok(vec![
        write_json(&out_dir.join("model.json"), &model)?,
        write_json(&out_dir.join("diagnostics.json"), &diagnostics(&fit, samples.len(), &provenance)?)?,
    ])
}

#[derive(Serialize)]
struct DendrogramFile<'a> {
    format: &'static str,
    leaves: usize,
    /// Word spelled by each leaf.
    leaf_labels: Vec<String>,
    merges: &'a [Merge],
    provenance: &'a Provenance,
}

fn score_rows(table: &ScoreTable) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["N", "L", "K", "AIC", "BIC", "kappa", "bound"].map(String::from).to_vec();
    let rows = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n_states.to_string(),
                cell(r.log_likelihood),
                r.k.to_string(),
                cell(r.aic),
                cell(r.bic),
                cell(r.kappa),
                cell(r.hamming_bound),
            ]
        })
        .collect();
    (header, rows)
}

fn reduced_file(
    model: &DMarkovModel,
    tree: &Dendrogram,
    table: &ScoreTable,
    n: usize,
    cfg: &PipelineConfig,
    provenance: &Provenance,
) -> CliResult<ReducedFile> {
    let map = cut(tree, n)?;
    let reduced = ReducedModel::build(model, &map, cfg.weighting)?;
    let row = table.row(n).ok_or_else(|| CliError::Usage(format!("cut {n} was not scored")))?;
    Ok(ReducedFile::new(model, &reduced, row.log_likelihood, row.kappa, row.hamming_bound, provenance.clone()))
}

/// Full model + its series -> score table, dendrogram and reduced models.
///
/// Reduced models are written for every cut in the `(min, max)` range when
/// either end is given (missing ends default to 1 and |Q|), otherwise for the
/// AIC and BIC choices only.
pub fn cmd_reduce(
    model_path: &Path,
    input: &Path,
    range: (Option<usize>, Option<usize>),
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let (file, model_bytes) = ModelFile::load(model_path)?;
    let model = file.to_model()?;
    let range = match range {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(1), hi.unwrap_or(model.n_states()))),
    };
    let (samples, digest) = load_series(input, cfg)?;
    let seq = resymbolize(&samples, &file.preprocessing, &file.partition)?;
    let provenance = Provenance {
        config: cfg.clone(),
        inputs: vec![InputDigest::new("model", model_path, &model_bytes), digest],
    };
    let tree = cluster_states(&model)?;
    let opts = ScoreOptions { weighting: cfg.weighting, bound_length: cfg.bound_length, range, exec: Exec::Parallel };
    let table = score_all_cuts_with(&model, &tree, &seq, opts)?;

    let mut written = Vec::new();
    let (header, rows) = score_rows(&table);
    written.push(write_csv(&out_dir.join("scores.csv"), &header, &rows)?);
    let space = model.space();
    let dendrogram = DendrogramFile {
        format: "symdyn-dendrogram",
        leaves: tree.leaves,
        leaf_labels: (0..tree.leaves).map(|q| space.label(q)).collect(),
        merges: &tree.merges,
        provenance: &provenance,
    };
    written.push(write_json(&out_dir.join("dendrogram.json"), &dendrogram)?);

    let mut cuts: Vec<usize> = match range {
        Some((lo, hi)) => (lo..=hi).collect(),
        None => vec![table.selected_aic, table.selected_bic],
    };
    cuts.sort_unstable();
    cuts.dedup();
    let files: Vec<CliResult<ReducedFile>> =
        par::map_slice(Exec::Parallel, &cuts, |&n| reduced_file(&model, &tree, &table, n, cfg, &provenance));
    for (n, file) in cuts.iter().zip(files) {
        written.push(write_json(&out_dir.join("reduced").join(format!("n{n:05}.json")), &file?)?);
    }
    let chosen = table.selected(cfg.criterion);
    let selected = reduced_file(&model, &tree, &table, chosen, cfg, &provenance)?;
    written.push(write_json(&out_dir.join("selected.json"), &selected)?);
    Ok(written)
}

/// Which reduction of the model to couple against in `simulate`.
#[derive(Debug, Clone)]
pub enum Reduction {
    Identity,
    /// Cut the model's own dendrogram into this many states.
    States(usize),
    File(PathBuf),
}

#[derive(Serialize)]
struct DistortionFile<'a> {
    format: &'static str,
    n_states: usize,
    full_states: usize,
    report: &'a DistortionReport,
    provenance: &'a Provenance,
}

/// Coupled realizations of the full and a reduced model, and their distances.
pub fn cmd_simulate(
    model_path: &Path,
    reduction: &Reduction,
    length: usize,
    trials: usize,
    cfg: &PipelineConfig,
    out_dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    let (file, model_bytes) = ModelFile::load(model_path)?;
    let model = file.to_model()?;
    let mut inputs = vec![InputDigest::new("model", model_path, &model_bytes)];
    let (map, emission): (ClusterMap, Matrix) = match reduction {
        Reduction::Identity => (ClusterMap::identity(model.n_states()), model.emission().clone()),
        Reduction::States(n) => {
            let map = cut(&cluster_states(&model)?, *n)?;
            let em = reduce_emission(&model, &map, cfg.weighting)?.matrix;
            (map, em)
        }
        Reduction::File(path) => {
            let (reduced, bytes) = ReducedFile::load(path)?;
            inputs.push(InputDigest::new("reduced_model", path, &bytes));
            reduced.parts_for(&model)?
        }
    };
    let provenance = Provenance { config: cfg.clone(), inputs };
    let report = monte_carlo_hamming(&model, &emission, &map, length, trials, cfg.seed)?;

    let seq_header = ["trial", "chain", "symbols"].map(String::from).to_vec();
    let mut seq_rows = Vec::with_capacity(2 * trials);
    for t in 0..trials {
        let pair = coupled_pair(&model, &emission, &map, length, cfg.seed, t)?;
        let join = |s: &[u8]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        seq_rows.push(vec![t.to_string(), "full".into(), join(&pair.full)]);
        seq_rows.push(vec![t.to_string(), "reduced".into(), join(&pair.reduced)]);
    }
    let box_header = ["n_states", "trial", "distance"].map(String::from).to_vec();
    let box_rows: Vec<Vec<String>> = report
        .distances
        .iter()
        .enumerate()
        .map(|(t, &d)| vec![map.n_clusters().to_string(), t.to_string(), cell(d)])
        .collect();
    let out = DistortionFile {
        format: "symdyn-distortion",
        n_states: map.n_clusters(),
        full_states: model.n_states(),
        report: &report,
        provenance: &provenance,
    };
    Ok(vec![
        write_json(&out_dir.join("distortion.json"), &out)?,
        write_csv(&out_dir.join("sequences.csv"), &seq_header, &seq_rows)?,
        write_csv(&out_dir.join("boxplot.csv"), &box_header, &box_rows)?,
    ])
}

#[derive(Debug, Clone, Serialize)]
struct FileStatus {
    sample_id: String,
    name: String,
    sha256: Option<String>,
    ok: bool,
    error: Option<String>,
    exit: Option<i32>,
    message: Option<String>,
}

#[derive(Serialize)]
struct BatchSummary<'a> {
    format: &'static str,
    succeeded: usize,
    failed: usize,
    files: Vec<FileStatus>,
    config: &'a PipelineConfig,
}

/// Runs `work` on every batch file in parallel and keeps results in file order.
fn run_batch<T: Send>(
    files: &[PathBuf],
    cfg: &PipelineConfig,
    work: impl Fn(&Path, &[f64]) -> CliResult<T> + Sync + Send,
) -> Vec<(FileStatus, Option<T>)> {
    par::map_slice(Exec::Parallel, files, |path| {
        let mut status = FileStatus {
            sample_id: io::sample_id(path),
            name: path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
            sha256: None,
            ok: false,
            error: None,
            exit: None,
            message: None,
        };
        let result = load_series(path, cfg).and_then(|(samples, digest)| {
            status.sha256 = Some(digest.sha256);
            work(path, &samples)
        });
        match result {
            Ok(v) => {
                status.ok = true;
                (status, Some(v))
            }
            Err(e) => {
                status.error = Some(e.kind());
                status.exit = Some(e.exit_code());
                status.message = Some(e.to_string());
                (status, None)
            }
        }
    })
}

fn write_summary(out_dir: &Path, statuses: Vec<FileStatus>, cfg: &PipelineConfig) -> CliResult<PathBuf> {
    for s in statuses.iter().filter(|s| !s.ok) {
        eprintln!(
            "warning file={} error={} exit={}",
            s.name,
            s.error.as_deref().unwrap_or(""),
            s.exit.unwrap_or(1)
        );
    }
    let failed = statuses.iter().filter(|s| !s.ok).count();
    let summary = BatchSummary {
        format: "symdyn-batch-summary",
        succeeded: statuses.len() - failed,
        failed,
        files: statuses,
        config: cfg,
    };
    write_json(&out_dir.join("batch_summary.json"), &summary)
}

fn batch_files(dir: &Path, cfg: &PipelineConfig) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let files = io::list_batch(dir)?;
    if files.is_empty() {
        return Err(CliError::io(dir, "no series files found"));
    }
    Ok(files)
}

pub fn analyze_series(samples: &[f64], sample_id: &str, cfg: &PipelineConfig) -> CliResult<AnomalyRecord> {
    let fit = fit_series(samples, cfg)?;
    let tree = cluster_states(&fit.model)?;
    let opts = ScoreOptions { weighting: cfg.weighting, bound_length: cfg.bound_length, range: None, exec: Exec::Sequential };
    let table = score_all_cuts_with(&fit.model, &tree, &fit.sequence, opts)?;
    Ok(AnomalyRecord {
        sample_id: sample_id.to_string(),
        delta_m: cluster_divergence(&fit.model)?,
        h_m: discrepancy_statistic(&fit.model)?,
        depth: fit.model.depth(),
        selected_n: table.selected(cfg.criterion),
    })
}

/// Batch of series -> one anomaly-trend row per readable file.
pub fn cmd_analyze(batch: &Path, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let files = batch_files(batch, cfg)?;
    let results = run_batch(&files, cfg, |path, samples| analyze_series(samples, &io::sample_id(path), cfg));
    let header = ["sample_id", "delta_m", "h_m", "depth", "selected_n"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut statuses = Vec::new();
    for (status, record) in results {
        if let Some(r) = record {
            rows.push(vec![r.sample_id, cell(r.delta_m), cell(r.h_m), r.depth.to_string(), r.selected_n.to_string()]);
        }
        statuses.push(status);
    }
    Ok(vec![
        write_csv(&out_dir.join("anomaly_trend.csv"), &header, &rows)?,
        write_summary(out_dir, statuses, cfg)?,
    ])
}

pub fn reduce_series(samples: &[f64], n_states: usize, cfg: &PipelineConfig) -> CliResult<ReducedModel> {
    let fit = fit_series(samples, cfg)?;
    let map = cut(&cluster_states(&fit.model)?, n_states)?;
    Ok(ReducedModel::build(&fit.model, &map, cfg.weighting)?)
}

/// Batch of series -> flattened reduced emission rows for external classifiers.
pub fn cmd_features(batch: &Path, n_states: usize, cfg: &PipelineConfig, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let files = batch_files(batch, cfg)?;
    let ids: Vec<String> = files.iter().map(|p| io::sample_id(p)).collect();
    let results = run_batch(&files, cfg, |_, samples| reduce_series(samples, n_states, cfg));
    let k = cfg.alphabet_size;
    let mut header = vec!["sample_id".to_string()];
    header.extend((0..n_states).flat_map(|q| (0..k).map(move |s| format!("e{q}_{s}"))));
    let mut simplex_header = vec!["sample_id".to_string(), "state".to_string()];
    simplex_header.extend((0..k).map(|s| format!("p{s}")));
    let (mut rows, mut simplex_rows, mut statuses) = (Vec::new(), Vec::new(), Vec::new());
    for ((status, reduced), id) in results.into_iter().zip(ids) {
        if let Some(r) = reduced {
            let mut row = vec![id.clone()];
            row.extend(r.emission.as_slice().iter().map(|&x| cell(x)));
            rows.push(row);
            for point in simplex_coordinates(&r, &id) {
                let mut line = vec![point.sample_id, point.state.to_string()];
                line.extend(point.coordinates.iter().map(|&x| cell(x)));
                simplex_rows.push(line);
            }
        }
        statuses.push(status);
    }
    Ok(vec![
        write_csv(&out_dir.join("features.csv"), &header, &rows)?,
        write_csv(&out_dir.join("simplex.csv"), &simplex_header, &simplex_rows)?,
        write_summary(out_dir, statuses, cfg)?,
    ])
}
