//! Anomaly statistics computed from inferred models.

use serde::{Deserialize, Serialize};

use crate::dmarkov::DMarkovModel;
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::Matrix;
use crate::par::Exec;
use crate::reduce::{check_positive, kl_divergence, pairwise_kl_distance_with, symmetric_kl, ReducedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub sample_id: String,
    /// Largest distance between any two states.
    #[serde(with = "json::real")]
    pub delta_m: f64,
    /// Stationary-weighted distance of the state rows from the symbol marginal.
    #[serde(with = "json::real")]
    pub h_m: f64,
    pub depth: usize,
    pub selected_n: usize,
}

/// How each emission row is compared with the symbol marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    #[default]
    Symmetric,
    /// `D_KL(row || marginal)` only.
    OneSided,
}

impl std::str::FromStr for Divergence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "symmetric" => Ok(Self::Symmetric),
            "one_sided" => Ok(Self::OneSided),
            other => Err(Error::InvalidArgument(format!("unknown divergence {other:?}"))),
        }
    }
}

/// Maximum pairwise symmetric K-L distance over all state pairs.
pub fn cluster_divergence(model: &DMarkovModel) -> Result<f64> {
    cluster_divergence_of(model.emission())
}

pub fn cluster_divergence_of(emission: &Matrix) -> Result<f64> {
    let d = pairwise_kl_distance_with(emission, Exec::Sequential)?;
    Ok(d.as_slice().iter().copied().fold(0.0, f64::max))
}

/// Symbol marginal `sum_q pi(q) A[q][.]`.
pub fn symbol_marginal(emission: &Matrix, stationary: &[f64]) -> Result<Vec<f64>> {
    if stationary.len() != emission.rows() {
        return Err(Error::InvalidMatrix(format!(
            "{} stationary weights for {} emission rows",
            stationary.len(),
            emission.rows()
        )));
    }
    let mut marginal = vec![0.0; emission.cols()];
    for (row, &w) in emission.iter_rows().zip(stationary) {
        for (m, &a) in marginal.iter_mut().zip(row) {
            *m += w * a;
        }
    }
    Ok(marginal)
}

pub fn discrepancy_statistic(model: &DMarkovModel) -> Result<f64> {
    discrepancy_of(model.emission(), model.stationary(), Divergence::Symmetric)
}

pub fn discrepancy_of(emission: &Matrix, stationary: &[f64], divergence: Divergence) -> Result<f64> {
    check_positive(emission)?;
    let marginal = symbol_marginal(emission, stationary)?;
    if let Some(symbol) = marginal.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::ZeroProbability { state: usize::MAX, symbol });
    }
    Ok(emission
        .iter_rows()
        .zip(stationary)
        .map(|(row, &w)| {
            w * match divergence {
                Divergence::Symmetric => symmetric_kl(row, &marginal),
                Divergence::OneSided => kl_divergence(row, &marginal),
            }
        })
        .sum())
}

/// One reduced emission row placed on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    pub sample_id: String,
    pub state: usize,
    #[serde(with = "json::reals")]
    pub coordinates: Vec<f64>,
}

pub fn simplex_coordinates(reduced: &ReducedModel, sample_id: &str) -> Vec<SimplexPoint> {
    reduced
        .emission
        .iter_rows()
        .enumerate()
        .map(|(state, row)| SimplexPoint { sample_id: sample_id.to_owned(), state, coordinates: row.to_vec() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::pairwise_kl_distance;

    fn model(rows: &[Vec<f64>], depth: usize) -> DMarkovModel {
        DMarkovModel::from_emission(rows[0].len(), depth, Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn iid_model_scores_zero() {
        let m = model(&vec![vec![0.2, 0.3, 0.5]; 9], 2);
        assert_eq!(cluster_divergence(&m).unwrap(), 0.0);
        assert!(discrepancy_statistic(&m).unwrap().abs() < 1e-12);
    }

    #[test]
    fn two_states_equal_their_distance() {
        let m = model(&[vec![0.5, 0.5], vec![0.25, 0.75]], 1);
        assert_eq!(cluster_divergence(&m).unwrap(), symmetric_kl(&[0.5, 0.5], &[0.25, 0.75]));
    }

    #[test]
    fn divergence_is_matrix_max() {
        let rows = vec![vec![0.1, 0.9], vec![0.6, 0.4], vec![0.3, 0.7], vec![0.8, 0.2]];
        let m = model(&rows, 2);
        let d = pairwise_kl_distance(&m).unwrap();
        let max = d.as_slice().iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(cluster_divergence(&m).unwrap(), max);
    }

    #[test]
    fn discrepancy_direct_sum() {
        let rows = vec![vec![0.1, 0.9], vec![0.6, 0.4], vec![0.3, 0.7], vec![0.8, 0.2]];
        let m = model(&rows, 2);
        let pi = m.stationary();
        let marg: Vec<f64> = (0..2).map(|s| (0..4).map(|q| pi[q] * rows[q][s]).sum()).collect();
        let mut want = 0.0;
        let mut one_sided = 0.0;
        for q in 0..4 {
            for s in 0..2 {
                let (a, b) = (rows[q][s], marg[s]);
                want += pi[q] * (a * (a / b).ln() + b * (b / a).ln());
                one_sided += pi[q] * a * (a / b).ln();
            }
        }
        assert!((discrepancy_statistic(&m).unwrap() - want).abs() < 1e-14);
        let os = discrepancy_of(m.emission(), pi, Divergence::OneSided).unwrap();
        assert!((os - one_sided).abs() < 1e-14);
        assert!(want > 0.0);
    }

    #[test]
    fn zero_probability_propagates() {
        let m = model(&[vec![1.0, 0.0], vec![0.5, 0.5]], 1);
        assert!(matches!(cluster_divergence(&m), Err(Error::ZeroProbability { .. })));
        assert!(matches!(discrepancy_statistic(&m), Err(Error::ZeroProbability { .. })));
    }

    #[test]
    fn divergence_names() {
        assert_eq!("one-sided".parse::<Divergence>().unwrap(), Divergence::OneSided);
        assert!("x".parse::<Divergence>().is_err());
    }
}
