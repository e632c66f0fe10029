//! Temporal depth from the spectral decay of the one-step symbol matrix.
//!
//! With eigenvalue magnitudes `1 = |l_1| >= |l_2| >= ...` of the one-step
//! matrix, the depth is the smallest `D` with `sum_{j>=2} |l_j|^(D+1) < eps`.
//! Sub-unit magnitudes make the sum decreasing in the exponent, so checking
//! `n = D + 1` alone covers every `n > D`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dmarkov::{count_dgrams, emission_from_counts};
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::Matrix;
use crate::symbolize::SymbolSequence;

pub const MAX_DENSE_ALPHABET: usize = 64;
pub const DEFAULT_D_MAX: usize = 8;
pub const DEFAULT_DEPTH_FLOOR: usize = 1;
/// Magnitudes at least this close to one count as non-decaying.
const UNIT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthOptions {
    pub epsilon: f64,
    pub d_max: usize,
    pub depth_floor: usize,
}

impl Default for DepthOptions {
    fn default() -> Self {
        Self { epsilon: 0.05, d_max: DEFAULT_D_MAX, depth_floor: DEFAULT_DEPTH_FLOOR }
    }
}

impl DepthOptions {
    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} must lie in (0, 1)", self.epsilon)));
        }
        if self.d_max == 0 || self.depth_floor == 0 || self.depth_floor > self.d_max {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= depth_floor ({}) <= d_max ({})",
                self.depth_floor, self.d_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    pub depth: usize,
    #[serde(with = "json::real")]
    pub epsilon: f64,
    #[serde(with = "json::reals")]
    pub eigen_magnitudes: Vec<f64>,
    /// The spectrum did not decay below epsilon by `d_max`, or has a second unit eigenvalue.
    pub capped: bool,
    /// Repeated non-leading eigenvalues with more than two symbols; the trace
    /// bound assumes a diagonalizable matrix.
    #[serde(default)]
    pub repeated_eigenvalues: bool,
}

/// One-step (`|A| x |A|`) symbol transition matrix with additive smoothing.
pub fn one_step_matrix(seq: &SymbolSequence, prior_weight: f64) -> Result<Matrix> {
    let counts = count_dgrams(seq, 1)?;
    Ok(emission_from_counts(&counts, prior_weight))
}

fn complex_eigenvalues(m: &Matrix) -> Result<Vec<nalgebra::Complex<f64>>> {
    let n = m.rows();
    if n != m.cols() || n == 0 {
        return Err(Error::InvalidMatrix("one-step matrix must be square and non-empty".into()));
    }
    if n > MAX_DENSE_ALPHABET {
        return Err(Error::InvalidArgument(format!("dense eigen solve limited to {MAX_DENSE_ALPHABET} symbols")));
    }
    let dense = DMatrix::from_row_slice(n, n, m.as_slice());
    Ok(dense.complex_eigenvalues().iter().copied().collect())
}

/// Magnitudes of all (complex) eigenvalues, sorted descending.
pub fn eigenvalue_magnitudes(m: &Matrix) -> Result<Vec<f64>> {
    let mut mags: Vec<f64> = complex_eigenvalues(m)?.iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(mags)
}

/// Depth for a given descending magnitude list; returns `(depth, capped)`.
pub fn depth_from_magnitudes(magnitudes: &[f64], opts: DepthOptions) -> Result<(usize, bool)> {
    opts.validate()?;
    let tail = magnitudes.get(1..).unwrap_or(&[]);
    if tail.iter().any(|&m| m >= 1.0 - UNIT_MARGIN) {
        return Ok((opts.d_max, true));
    }
    let decay = |n: usize| tail.iter().map(|m| m.powi(n as i32)).sum::<f64>();
    Ok((opts.depth_floor..=opts.d_max)
        .find(|&d| decay(d + 1) < opts.epsilon)
        .map_or((opts.d_max, true), |d| (d, false)))
}

pub fn estimate_depth(one_step: &Matrix, opts: DepthOptions) -> Result<DepthEstimate> {
    let eig = complex_eigenvalues(one_step)?;
    let mut order: Vec<usize> = (0..eig.len()).collect();
    order.sort_by(|&a, &b| eig[b].norm().total_cmp(&eig[a].norm()));
    let magnitudes: Vec<f64> = order.iter().map(|&i| eig[i].norm()).collect();
    let (depth, capped) = depth_from_magnitudes(&magnitudes, opts)?;
    let rest: Vec<_> = order.iter().skip(1).map(|&i| eig[i]).collect();
    let repeated = eig.len() > 2
        && rest
            .iter()
            .enumerate()
            .any(|(i, a)| rest[i + 1..].iter().any(|b| (a - b).norm() < 1e-6 && a.norm() > 1e-9));
    Ok(DepthEstimate {
        depth,
        epsilon: opts.epsilon,
        eigen_magnitudes: magnitudes,
        capped,
        repeated_eigenvalues: repeated,
    })
}
