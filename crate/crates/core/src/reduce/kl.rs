use crate::dmarkov::DMarkovModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par::{self, Exec};

/// One-sided `D_KL(p || q)` in nats. Terms with `p = 0` contribute zero.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).ln())
        .sum()
}

/// `D_KL(p || q) + D_KL(q || p)`.
pub fn symmetric_kl(p: &[f64], q: &[f64]) -> f64 {
    kl_divergence(p, q) + kl_divergence(q, p)
}

/// Fails on the first zero emission probability.
pub fn check_positive(emission: &Matrix) -> Result<()> {
    for (state, row) in emission.iter_rows().enumerate() {
        if let Some(symbol) = row.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::ZeroProbability { state, symbol });
        }
    }
    Ok(())
}

/// Symmetric K-L distance between every pair of emission rows.
pub fn pairwise_kl_distance(model: &DMarkovModel) -> Result<Matrix> {
    pairwise_kl_distance_with(model.emission(), Exec::default())
}

pub fn pairwise_kl_distance_with(emission: &Matrix, exec: Exec) -> Result<Matrix> {
    check_positive(emission)?;
    let n = emission.rows();
    let upper: Vec<Vec<f64>> = par::map_indexed(exec, n, |i| {
        (i + 1..n).map(|j| symmetric_kl(emission.row(i), emission.row(j))).collect()
    });
    let mut d = Matrix::zeros(n, n);
    for (i, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}
