//! Full-order D-Markov machines: estimation, simulation and likelihood.
//!
//! States are all `|A|^D` words of length `D`, enumerated lexicographically
//! whether or not they occur in the data. A state emits the next symbol
//! according to its emission row and then moves to the word shifted by that
//! symbol, so the transition matrix is fully determined by the emissions.

mod stationary;
mod words;

pub use stationary::{stationary_distribution, stationary_distribution_with, Stationary, StationaryOptions};
pub use words::{WordSpace, MAX_STATES};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SparseStochastic};
use crate::symbolize::{Symbol, SymbolSequence};

/// Default additive smoothing strength (Laplace).
pub const DEFAULT_PRIOR_WEIGHT: f64 = 1.0;

/// Raw `(word, next symbol)` counts, `|Q| x |A|` row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    space: WordSpace,
    data: Vec<u64>,
}

impl Counts {
    pub fn zeros(space: WordSpace) -> Self {
        Self { space, data: vec![0; space.states() * space.alphabet_size()] }
    }

    pub fn from_rows(space: WordSpace, rows: &[Vec<u64>]) -> Result<Self> {
        if rows.len() != space.states() || rows.iter().any(|r| r.len() != space.alphabet_size()) {
            return Err(Error::InvalidMatrix(format!(
                "counts must be {}x{}",
                space.states(),
                space.alphabet_size()
            )));
        }
        Ok(Self { space, data: rows.concat() })
    }

    pub fn space(&self) -> WordSpace {
        self.space
    }

    #[inline]
    pub fn get(&self, state: usize, symbol: usize) -> u64 {
        self.data[state * self.space.alphabet_size() + symbol]
    }

    pub fn row(&self, state: usize) -> &[u64] {
        let k = self.space.alphabet_size();
        &self.data[state * k..(state + 1) * k]
    }

    /// Number of times each state was visited (and scored).
    pub fn visits(&self) -> Vec<u64> {
        (0..self.space.states()).map(|q| self.row(q).iter().sum()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.space.states()).map(|q| self.row(q).to_vec()).collect()
    }

    pub fn total(&self) -> u64 {
        self.data.iter().sum()
    }
}

/// Counts every length-`D` word followed by a symbol, within segments only.
pub fn count_dgrams(seq: &SymbolSequence, depth: usize) -> Result<Counts> {
    let space = WordSpace::new(seq.alphabet_size(), depth)?;
    space.check_sequence(seq)?;
    let mut counts = Counts::zeros(space);
    let k = space.alphabet_size();
    space.for_each_transition(seq, |q, s| counts.data[q * k + s as usize] += 1);
    Ok(counts)
}

/// Sliding-block transition matrix: all of `emission[q][s]` goes to `shift(q, s)`.
pub fn transition_from_emission(space: WordSpace, emission: &Matrix) -> SparseStochastic {
    let rows = (0..space.states())
        .map(|q| {
            emission
                .row(q)
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(s, &p)| (space.successor(q, s as Symbol), p))
                .collect()
        })
        .collect();
    SparseStochastic::new(space.states(), rows).expect("successors are valid states")
}

/// Additively smoothed emission estimate from counts.
///
/// Rows with no observations and zero prior fall back to uniform.
pub fn emission_from_counts(counts: &Counts, prior_weight: f64) -> Matrix {
    let space = counts.space();
    let k = space.alphabet_size();
    let mut emission = Matrix::zeros(space.states(), k);
    for q in 0..space.states() {
        let row = counts.row(q);
        let denom = row.iter().sum::<u64>() as f64 + k as f64 * prior_weight;
        let out = emission.row_mut(q);
        if denom > 0.0 {
            for (o, &c) in out.iter_mut().zip(row) {
                *o = (c as f64 + prior_weight) / denom;
            }
        } else {
            out.fill(1.0 / k as f64);
        }
    }
    emission
}

/// A full-order D-Markov machine.
#[derive(Debug, Clone, PartialEq)]
pub struct DMarkovModel {
    space: WordSpace,
    prior_weight: f64,
    counts: Counts,
    emission: Matrix,
    transition: SparseStochastic,
    stationary: Stationary,
}

/// Frequency-count estimate of a depth-`D` model with a uniform prior.
pub fn estimate_model(seq: &SymbolSequence, depth: usize, prior_weight: f64) -> Result<DMarkovModel> {
    if !(prior_weight >= 0.0 && prior_weight.is_finite()) {
        return Err(Error::NegativePrior(prior_weight));
    }
    let counts = count_dgrams(seq, depth)?;
    let emission = emission_from_counts(&counts, prior_weight);
    DMarkovModel::assemble(counts, prior_weight, emission)
}

impl DMarkovModel {
    fn assemble(counts: Counts, prior_weight: f64, emission: Matrix) -> Result<Self> {
        let space = counts.space();
        let transition = transition_from_emission(space, &emission);
        let stationary = stationary_distribution(&transition)?;
        Ok(Self { space, prior_weight, counts, emission, transition, stationary })
    }

    /// A model with prescribed emissions and no data behind it.
    pub fn from_emission(alphabet_size: usize, depth: usize, emission: Matrix) -> Result<Self> {
        let space = WordSpace::new(alphabet_size, depth)?;
        Self::from_parts(space, 0.0, Counts::zeros(space), emission)
    }

    /// Rebuilds a model from stored counts and emissions (e.g. a model file).
    pub fn from_parts(space: WordSpace, prior_weight: f64, counts: Counts, emission: Matrix) -> Result<Self> {
        if emission.rows() != space.states() || emission.cols() != space.alphabet_size() {
            return Err(Error::InvalidMatrix(format!(
                "emission must be {}x{}",
                space.states(),
                space.alphabet_size()
            )));
        }
        if counts.space() != space {
            return Err(Error::InvalidMatrix("counts shape does not match the model".into()));
        }
        if !(prior_weight >= 0.0) {
            return Err(Error::NegativePrior(prior_weight));
        }
        emission.check_row_stochastic(1e-9)?;
        Self::assemble(counts, prior_weight, emission)
    }

    pub fn space(&self) -> WordSpace {
        self.space
    }

    pub fn alphabet_size(&self) -> usize {
        self.space.alphabet_size()
    }

    pub fn depth(&self) -> usize {
        self.space.depth()
    }

    pub fn n_states(&self) -> usize {
        self.space.states()
    }

    pub fn prior_weight(&self) -> f64 {
        self.prior_weight
    }

    pub fn counts(&self) -> &Counts {
        &self.counts
    }

    pub fn emission(&self) -> &Matrix {
        &self.emission
    }

    pub fn transition(&self) -> &SparseStochastic {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary.distribution
    }

    pub fn stationary_solve(&self) -> &Stationary {
        &self.stationary
    }

    /// Samples an `n`-symbol realization starting from `initial_state`.
    pub fn generate(&self, initial_state: usize, n: usize, seed: u64) -> Result<SymbolSequence> {
        generate(self, initial_state, n, seed)
    }

    pub fn log_likelihood(&self, seq: &SymbolSequence) -> Result<LogLikelihood> {
        log_likelihood(self, seq)
    }
}

/// Inverse-CDF draw from a probability row; never returns a zero-mass index.
#[inline]
pub fn sample_index(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Simulates the machine with a seeded ChaCha8 stream, one uniform per symbol.
pub fn generate(model: &DMarkovModel, initial_state: usize, n: usize, seed: u64) -> Result<SymbolSequence> {
    let states = model.n_states();
    if initial_state >= states {
        return Err(Error::InvalidState { state: initial_state, states });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sequence length must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = initial_state;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = sample_index(model.emission.row(q), rng.random::<f64>()) as Symbol;
        out.push(s);
        q = model.space.successor(q, s);
    }
    SymbolSequence::new(out, model.alphabet_size())
}

/// Log-likelihood of a sequence, ignoring the first `D` symbols of each segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    /// Natural-log likelihood; negative infinity if a zero-probability emission occurred.
    pub value: f64,
    /// Number of scored emissions.
    pub observations: usize,
}

impl LogLikelihood {
    pub fn is_minus_infinity(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// Scores `seq` with per-state emission rows chosen by `row_of(state)`.
pub(crate) fn score_with<'a>(
    space: WordSpace,
    seq: &SymbolSequence,
    row_of: impl Fn(usize) -> &'a [f64],
) -> Result<LogLikelihood> {
    space.check_sequence(seq)?;
    let mut value = 0.0;
    let mut observations = 0;
    space.for_each_transition(seq, |q, s| {
        value += row_of(q)[s as usize].ln();
        observations += 1;
    });
    Ok(LogLikelihood { value, observations })
}

pub fn log_likelihood(model: &DMarkovModel, seq: &SymbolSequence) -> Result<LogLikelihood> {
    score_with(model.space, seq, |q| model.emission.row(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(symbols: &[Symbol], k: usize) -> SymbolSequence {
        SymbolSequence::new(symbols.to_vec(), k).unwrap()
    }

    fn cycle(k: usize, n: usize) -> SymbolSequence {
        seq(&(0..n).map(|i| (i % k) as Symbol).collect::<Vec<_>>(), k)
    }

    #[test]
    fn count_simple() {
        let c = count_dgrams(&seq(&[0, 1, 0, 1, 0], 2), 1).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0, 2], vec![2, 0]]);
    }

    #[test]
    fn count_respects_segments() {
        let s = SymbolSequence::from_segments(&[vec![0, 1], vec![1, 0]], 2).unwrap();
        let c = count_dgrams(&s, 1).unwrap();
        assert_eq!(c.to_rows(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn count_period_three_brute_force() {
        let pattern = [0, 0, 1];
        let symbols: Vec<Symbol> = (0..300).map(|i| pattern[i % 3]).collect();
        let s = seq(&symbols, 2);
        let c = count_dgrams(&s, 2).unwrap();
        let ws = c.space();
        // brute-force window count
        let mut oracle = vec![vec![0u64; 2]; 4];
        for w in symbols.windows(3) {
            oracle[ws.index_of(&w[..2])][w[2] as usize] += 1;
        }
        assert_eq!(c.to_rows(), oracle);
        let visited = c.visits().iter().filter(|&&v| v > 0).count();
        assert_eq!(visited, 3);
        assert_eq!(c.total(), 298);
    }

    #[test]
    fn too_short() {
        assert_eq!(count_dgrams(&seq(&[0, 1], 2), 2), Err(Error::SequenceTooShort { depth: 2 }));
    }

    #[test]
    fn prior_only_row_is_uniform() {
        let m = estimate_model(&seq(&[0, 0, 0, 0], 3), 1, 1.0).unwrap();
        assert_eq!(m.emission().row(2), &[1.0 / 3.0; 3]);
        assert_eq!(m.emission().row(0), &[4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
    }

    #[test]
    fn deterministic_cycle_rows_are_unit_vectors() {
        let m = estimate_model(&cycle(3, 30), 1, 0.0).unwrap();
        assert_eq!(m.emission().to_rows(), vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        // unvisited words of a depth-2 fit become uniform rows
        let m2 = estimate_model(&cycle(3, 30), 2, 0.0).unwrap();
        assert_eq!(m2.emission().row(0), &[1.0 / 3.0; 3]);
        assert!(m2.stationary_solve().residual < 1e-10);
    }

    #[test]
    fn transition_shift_rule() {
        let ws = WordSpace::new(2, 2).unwrap();
        let em = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8], vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let pi = transition_from_emission(ws, &em);
        assert_eq!(pi.get(ws.index_of(&[0, 1]), ws.index_of(&[1, 1])), 0.8);
        assert!(pi.max_row_sum_error() < 1e-15);
        let ws1 = WordSpace::new(2, 1).unwrap();
        let em1 = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        assert_eq!(transition_from_emission(ws1, &em1).to_dense(), em1);
    }

    #[test]
    fn generate_is_reproducible_and_deterministic_for_unit_rows() {
        let m = estimate_model(&cycle(3, 30), 1, 0.0).unwrap();
        let g = m.generate(1, 9, 3).unwrap();
        assert_eq!(g.symbols(), &[2, 0, 1, 2, 0, 1, 2, 0, 1]);
        let r = DMarkovModel::from_emission(2, 1, Matrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap())
            .unwrap();
        assert_eq!(r.generate(0, 500, 42).unwrap(), r.generate(0, 500, 42).unwrap());
        assert_ne!(r.generate(0, 500, 42).unwrap(), r.generate(0, 500, 43).unwrap());
        assert!(matches!(r.generate(2, 5, 0), Err(Error::InvalidState { .. })));
    }

    #[test]
    fn likelihood_edge_cases() {
        let m = estimate_model(&seq(&[0; 10], 1), 2, 0.0).unwrap();
        assert_eq!(m.log_likelihood(&seq(&[0; 10], 1)).unwrap().value, 0.0);
        let c = cycle(3, 60);
        let m = estimate_model(&c, 2, 0.0).unwrap();
        let ll = m.log_likelihood(&c).unwrap();
        assert_eq!(ll.value, 0.0);
        assert_eq!(ll.observations, 58);
        let off = seq(&[0, 1, 1, 0], 3);
        assert!(m.log_likelihood(&off).unwrap().is_minus_infinity());
        assert!(matches!(m.log_likelihood(&seq(&[0, 1, 0], 2)), Err(Error::AlphabetMismatch { .. })));
    }
}
