//! Distortion of a reduced model: the sup-norm emission gap and the normalized
//! Hamming distance between coupled realizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dmarkov::{sample_index, DMarkovModel};
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::Matrix;
use crate::par::{self, Exec};
use crate::reduce::ClusterMap;
use crate::symbolize::Symbol;

fn check_shapes(model: &DMarkovModel, reduced_emission: &Matrix, map: &ClusterMap) -> Result<()> {
    if map.n_states() != model.n_states() {
        return Err(Error::ClusterMapMismatch { map: map.n_states(), model: model.n_states() });
    }
    if reduced_emission.rows() != map.n_clusters() || reduced_emission.cols() != model.alphabet_size() {
        return Err(Error::InvalidMatrix("reduced emission shape does not match the cluster map".into()));
    }
    Ok(())
}

/// `max_{q,s} (A[q][s] - E[f(q)][s]) / A[q][s]`, floored at zero.
pub fn kappa(model: &DMarkovModel, reduced_emission: &Matrix, map: &ClusterMap) -> Result<f64> {
    check_shapes(model, reduced_emission, map)?;
    let full = model.emission();
    let mut worst = 0.0f64;
    for q in 0..model.n_states() {
        let reduced = reduced_emission.row(map.cluster_of(q));
        for (s, (&a, &e)) in full.row(q).iter().zip(reduced).enumerate() {
            if !(a > 0.0) {
                return Err(Error::ZeroProbability { state: q, symbol: s });
            }
            worst = worst.max((a - e) / a);
        }
    }
    Ok(worst)
}

/// `sqrt((n - D - 1) * kappa / (2 n))`; values above one carry no information.
pub fn hamming_bound(kappa: f64, n: usize, depth: usize) -> Result<f64> {
    if n <= depth + 1 {
        return Err(Error::BadLength { n, depth });
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!("kappa must be non-negative, got {kappa}")));
    }
    Ok(((n - depth - 1) as f64 * kappa / (2.0 * n as f64)).sqrt())
}

/// Five-number summary plus mean, with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "json::real")]
    pub mean: f64,
    #[serde(with = "json::real")]
    pub min: f64,
    #[serde(with = "json::real")]
    pub q1: f64,
    #[serde(with = "json::real")]
    pub median: f64,
    #[serde(with = "json::real")]
    pub q3: f64,
    #[serde(with = "json::real")]
    pub max: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    #[serde(with = "json::real")]
    pub kappa: f64,
    #[serde(with = "json::real")]
    pub bound: f64,
    pub vacuous: bool,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub coupling: String,
    pub empirical: Summary,
    #[serde(with = "json::reals")]
    pub distances: Vec<f64>,
}

/// One coupled pair of realizations.
///
/// Both chains start in `initial_state` and consume the same uniform at every
/// step. The reduced chain keeps its own full word and emits from the row of
/// that word's cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledPair {
    pub full: Vec<Symbol>,
    pub reduced: Vec<Symbol>,
}

impl CoupledPair {
    pub fn hamming(&self) -> f64 {
        let diff = self.full.iter().zip(&self.reduced).filter(|(a, b)| a != b).count();
        diff as f64 / self.full.len() as f64
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_coupled(
    model: &DMarkovModel,
    reduced_emission: &Matrix,
    map: &ClusterMap,
    initial_state: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
    mut sink: impl FnMut(Symbol, Symbol),
) {
    let space = model.space();
    let full = model.emission();
    let (mut q, mut r) = (initial_state, initial_state);
    for _ in 0..n {
        let u = rng.random::<f64>();
        let a = sample_index(full.row(q), u) as Symbol;
        let b = sample_index(reduced_emission.row(map.cluster_of(r)), u) as Symbol;
        sink(a, b);
        q = space.successor(q, a);
        r = space.successor(r, b);
    }
}

/// Realization pair for trial `trial`, using the same stream as the Monte Carlo run.
pub fn coupled_pair(
    model: &DMarkovModel,
    reduced_emission: &Matrix,
    map: &ClusterMap,
    n: usize,
    seed: u64,
    trial: usize,
) -> Result<CoupledPair> {
    check_shapes(model, reduced_emission, map)?;
    if n == 0 {
        return Err(Error::BadLength { n, depth: model.depth() });
    }
    let mut rng = trial_rng(seed, trial);
    let mut pair = CoupledPair { full: Vec::with_capacity(n), reduced: Vec::with_capacity(n) };
    run_coupled(model, reduced_emission, map, trial % model.n_states(), n, &mut rng, |a, b| {
        pair.full.push(a);
        pair.reduced.push(b);
    });
    Ok(pair)
}

pub fn monte_carlo_hamming(
    model: &DMarkovModel,
    reduced_emission: &Matrix,
    map: &ClusterMap,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<DistortionReport> {
    monte_carlo_hamming_with(model, reduced_emission, map, n, trials, seed, Exec::default())
}

/// Trial `t` starts in state `t mod |Q|` and draws from stream `t` of the seeded
/// generator, so results do not depend on scheduling.
pub fn monte_carlo_hamming_with(
    model: &DMarkovModel,
    reduced_emission: &Matrix,
    map: &ClusterMap,
    n: usize,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<DistortionReport> {
    let k = kappa(model, reduced_emission, map)?;
    let bound = hamming_bound(k, n, model.depth())?;
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let states = model.n_states();
    let distances = par::map_indexed(exec, trials, |t| {
        let mut rng = trial_rng(seed, t);
        let mut diff = 0usize;
        run_coupled(model, reduced_emission, map, t % states, n, &mut rng, |a, b| diff += usize::from(a != b));
        diff as f64 / n as f64
    });
    Ok(DistortionReport {
        kappa: k,
        bound,
        vacuous: bound > 1.0,
        n,
        trials,
        seed,
        coupling: "common_random_numbers".into(),
        empirical: Summary::of(&distances).expect("trials > 0"),
        distances,
    })
}
