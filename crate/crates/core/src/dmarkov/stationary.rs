//! Stationary vector of a row-stochastic matrix by power iteration.

use crate::error::{Error, Result};
use crate::matrix::SparseStochastic;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub max_iterations: usize,
    /// Stop once `||x P - x||_inf` falls below this.
    pub tolerance: f64,
    /// Switch to the lazy chain `(P + I) / 2` when the residual stalls.
    pub lazy_fallback: bool,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self { max_iterations: 100_000, tolerance: 1e-13, lazy_fallback: true }
    }
}

/// Result of the stationary solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    pub iterations: usize,
    /// `||pi P - pi||_inf` of the returned vector.
    pub residual: f64,
    /// True when the periodicity fallback was used.
    pub lazy: bool,
}

const STALL_WINDOW: usize = 512;
const STALL_RATIO: f64 = 0.95;

fn residual(p: &SparseStochastic, x: &[f64]) -> f64 {
    p.left_mul(x).iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn normalize(x: &mut [f64]) {
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        x.iter_mut().for_each(|v| *v /= total);
    }
}

/// Power iteration from the uniform vector with default options.
pub fn stationary_distribution(p: &SparseStochastic) -> Result<Stationary> {
    stationary_distribution_with(p, StationaryOptions::default())
}

pub fn stationary_distribution_with(p: &SparseStochastic, opts: StationaryOptions) -> Result<Stationary> {
    let n = p.order();
    if n == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut lazy = false;
    let mut last_window = f64::INFINITY;
    let mut res = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let mut y = p.left_mul(&x);
        if lazy {
            y.iter_mut().zip(&x).for_each(|(a, b)| *a = 0.5 * (*a + b));
        }
        normalize(&mut y);
        // For the lazy chain the step size is half the true residual.
        let step = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        res = if lazy { 2.0 * step } else { step };
        x = y;
        if res < opts.tolerance {
            let residual = residual(p, &x);
            return Ok(Stationary { distribution: x, iterations: it, residual, lazy });
        }
        if it % STALL_WINDOW == 0 {
            if opts.lazy_fallback && !lazy && it >= 4 * STALL_WINDOW && res > STALL_RATIO * last_window {
                lazy = true;
                last_window = f64::INFINITY;
                continue;
            }
            last_window = res;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, residual: res })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn sparse(rows: &[Vec<f64>]) -> SparseStochastic {
        SparseStochastic::from_dense(&Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_two_state() {
        for rows in [vec![vec![0.5, 0.5], vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.1, 0.9]]] {
            let s = stationary_distribution(&sparse(&rows)).unwrap();
            assert!((s.distribution[0] - 0.5).abs() < 1e-12);
            assert!(s.residual < 1e-10);
        }
    }

    #[test]
    fn asymmetric_two_state_closed_form() {
        // pi = (b, a) / (a + b) for [[1-a, a], [b, 1-b]]
        let (a, b) = (0.3, 0.1);
        let s = stationary_distribution(&sparse(&[vec![1.0 - a, a], vec![b, 1.0 - b]])).unwrap();
        assert!((s.distribution[0] - b / (a + b)).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_uses_lazy_fallback() {
        // transient state 0 feeding a 2-cycle {1, 2}; plain iteration oscillates
        let p = sparse(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
        let s = stationary_distribution(&p).unwrap();
        assert!(s.lazy);
        assert!(s.residual < 1e-10);
        assert!((s.distribution[1] - 0.5).abs() < 1e-10);
        assert!(s.distribution[0].abs() < 1e-10);

        let strict = StationaryOptions { max_iterations: 5_000, lazy_fallback: false, ..Default::default() };
        assert!(matches!(stationary_distribution_with(&p, strict), Err(Error::NoConvergence { .. })));
    }
}
