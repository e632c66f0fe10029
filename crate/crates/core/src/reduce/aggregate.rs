//! Reduced-order parameters for a state partition.

use serde::{Deserialize, Serialize};

use crate::dmarkov::{score_with, DMarkovModel, LogLikelihood};
use crate::error::{Error, Result};
use crate::matrix::{Matrix, SparseStochastic};
use crate::par::{self, Exec};
use crate::reduce::cluster::ClusterMap;
use crate::symbolize::SymbolSequence;

/// Weights used to pool member emission rows into a cluster row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Stationary,
    Empirical,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stationary" => Ok(Self::Stationary),
            "empirical" => Ok(Self::Empirical),
            other => Err(Error::InvalidArgument(format!("unknown weighting {other:?}"))),
        }
    }
}

/// A reduced matrix plus the clusters whose row had to be set uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub matrix: Matrix,
    pub zero_mass: Vec<usize>,
}

fn check_map(map: &ClusterMap, states: usize) -> Result<()> {
    if map.n_states() != states {
        return Err(Error::ClusterMapMismatch { map: map.n_states(), model: states });
    }
    Ok(())
}

/// Cluster transition matrix by chaining the Bayes steps:
///
/// 1. `Pr(Q_k = q | Q_{k+1} = q') = P(q, q') pi(q) / sum_r P(r, q') pi(r)`
/// 2. `Pr(C_k = i | Q_{k+1} = q')` sums step 1 over `q` in cluster `i`
/// 3. `Pr(Q_{k+1} = q' | C_k = i)` by Bayes with `pi(q')` as the prior
/// 4. `Pr(C_{k+1} = j | C_k = i)` sums step 3 over `q'` in cluster `j`
///
/// The identity partition returns the transition matrix unchanged.
pub fn reduce_transition(model: &DMarkovModel, map: &ClusterMap) -> Result<Aggregated> {
    chained_bayes_transition(model.transition(), model.stationary(), map)
}

pub fn chained_bayes_transition(p: &SparseStochastic, pi: &[f64], map: &ClusterMap) -> Result<Aggregated> {
    let n = p.order();
    check_map(map, n)?;
    if map.is_identity() {
        return Ok(Aggregated { matrix: p.to_dense(), zero_mass: Vec::new() });
    }
    // step 1 denominators: sum_r P(r, q') pi(r)
    let column_mass = p.left_mul(pi);
    let members = map.members();
    let rows: Vec<Option<Vec<f64>>> = par::map_indexed(Exec::default(), map.n_clusters(), |ci| {
        // step 2
        let mut given_next = vec![0.0; n];
        for &q in &members[ci] {
            for &(q2, prob) in p.row(q) {
                if column_mass[q2] > 0.0 {
                    given_next[q2] += prob * pi[q] / column_mass[q2];
                }
            }
        }
        // step 3
        let evidence: f64 = given_next.iter().zip(pi).map(|(a, b)| a * b).sum();
        if !(evidence > 0.0) {
            return None;
        }
        // step 4
        let mut row = vec![0.0; map.n_clusters()];
        for (q2, g) in given_next.iter().enumerate() {
            row[map.cluster_of(q2)] += g * pi[q2] / evidence;
        }
        Some(row)
    });
    Ok(collect_rows(rows, map.n_clusters()))
}

/// `P~(i, j) = sum_{q in i} pi(q) sum_{q' in j} P(q, q') / sum_{q in i} pi(q)`.
pub fn closed_form_transition(p: &SparseStochastic, pi: &[f64], map: &ClusterMap) -> Result<Aggregated> {
    let n = p.order();
    check_map(map, n)?;
    let members = map.members();
    let rows = members
        .iter()
        .map(|qs| {
            let mass: f64 = qs.iter().map(|&q| pi[q]).sum();
            if !(mass > 0.0) {
                return None;
            }
            let mut row = vec![0.0; map.n_clusters()];
            for &q in qs {
                for &(q2, prob) in p.row(q) {
                    row[map.cluster_of(q2)] += pi[q] * prob;
                }
            }
            row.iter_mut().for_each(|v| *v /= mass);
            Some(row)
        })
        .collect();
    Ok(collect_rows(rows, map.n_clusters()))
}

fn collect_rows(rows: Vec<Option<Vec<f64>>>, cols: usize) -> Aggregated {
    let mut matrix = Matrix::zeros(rows.len(), cols);
    let mut zero_mass = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Some(r) => matrix.row_mut(i).copy_from_slice(&r),
            None => {
                matrix.row_mut(i).fill(1.0 / cols as f64);
                zero_mass.push(i);
            }
        }
    }
    Aggregated { matrix, zero_mass }
}

/// Weighted mixture of member emission rows.
///
/// Singleton clusters copy their row whatever their weight. With empirical weighting and rows that
/// came straight from the counts, `n_q * A[q][s]` is evaluated from the counts
/// so that unsmoothed pooling is exact.
pub fn reduce_emission(model: &DMarkovModel, map: &ClusterMap, weighting: Weighting) -> Result<Aggregated> {
    let states = model.n_states();
    check_map(map, states)?;
    let k = model.alphabet_size();
    let emission = model.emission();
    let prior = model.prior_weight();
    let counts = model.counts();
    let visits = counts.visits();
    let weight = |q: usize| match weighting {
        Weighting::Stationary => model.stationary()[q],
        Weighting::Empirical => visits[q] as f64,
    };
    let weighted = |q: usize, s: usize| -> f64 {
        let a = emission[(q, s)];
        match weighting {
            Weighting::Stationary => model.stationary()[q] * a,
            Weighting::Empirical => {
                let n = visits[q] as f64;
                let c = counts.get(q, s) as f64 + prior;
                let denom = n + k as f64 * prior;
                if denom > 0.0 && c / denom == a {
                    n * c / denom
                } else {
                    n * a
                }
            }
        }
    };
    let rows = map
        .members()
        .iter()
        .map(|qs| {
            if let [q] = qs[..] {
                return Some(emission.row(q).to_vec());
            }
            let mass: f64 = qs.iter().map(|&q| weight(q)).sum();
            if !(mass > 0.0) {
                return None;
            }
            Some(
                (0..k)
                    .map(|s| qs.iter().filter(|&&q| weight(q) > 0.0).map(|&q| weighted(q, s)).sum::<f64>() / mass)
                    .collect(),
            )
        })
        .collect();
    Ok(collect_rows(rows, k))
}

/// Log-likelihood under the reduced emissions, indexing states by the full word mapped through `f`.
pub fn reduced_log_likelihood(
    model: &DMarkovModel,
    reduced_emission: &Matrix,
    map: &ClusterMap,
    seq: &SymbolSequence,
) -> Result<LogLikelihood> {
    check_map(map, model.n_states())?;
    if reduced_emission.rows() != map.n_clusters() || reduced_emission.cols() != model.alphabet_size() {
        return Err(Error::InvalidMatrix("reduced emission shape does not match the cluster map".into()));
    }
    score_with(model.space(), seq, |q| reduced_emission.row(map.cluster_of(q)))
}

/// Aggregated state set with its transition and emission matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub cluster_map: ClusterMap,
    pub transition: Matrix,
    pub emission: Matrix,
    pub stationary: Vec<f64>,
    pub weighting: Weighting,
    pub zero_mass_clusters: Vec<usize>,
}

impl ReducedModel {
    pub fn build(model: &DMarkovModel, map: &ClusterMap, weighting: Weighting) -> Result<Self> {
        let transition = reduce_transition(model, map)?;
        let emission = reduce_emission(model, map, weighting)?;
        let mut stationary = vec![0.0; map.n_clusters()];
        for (q, &p) in model.stationary().iter().enumerate() {
            stationary[map.cluster_of(q)] += p;
        }
        let mut zero_mass = transition.zero_mass;
        zero_mass.extend(emission.zero_mass);
        zero_mass.sort_unstable();
        zero_mass.dedup();
        Ok(Self {
            cluster_map: map.clone(),
            transition: transition.matrix,
            emission: emission.matrix,
            stationary,
            weighting,
            zero_mass_clusters: zero_mass,
        })
    }

    pub fn n_states(&self) -> usize {
        self.cluster_map.n_clusters()
    }

    pub fn log_likelihood(&self, model: &DMarkovModel, seq: &SymbolSequence) -> Result<LogLikelihood> {
        reduced_log_likelihood(model, &self.emission, &self.cluster_map, seq)
    }
}
