//! Maximum-entropy (equal-frequency) partitioning and symbol encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SegmentedSeries;
use crate::json;

/// Symbols are stored as bytes; alphabets are capped accordingly.
pub type Symbol = u8;

pub const MAX_ALPHABET: usize = Symbol::MAX as usize + 1;

/// Cell edges of a partition of the real line into `alphabet_size` cells.
///
/// Cell `j` is `(edges[j-1], edges[j]]`, with the first cell open below and
/// the last open above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(with = "json::reals")]
    edges: Vec<f64>,
    alphabet_size: usize,
}

impl PartitionSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let alphabet_size = edges.len() + 1;
        if !(2..=MAX_ALPHABET).contains(&alphabet_size) {
            return Err(Error::InvalidAlphabet(alphabet_size));
        }
        if let Some(i) = edges.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::DegeneratePartition { index: i, value: edges[i] });
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("partition edges must be finite".into()));
        }
        Ok(Self { edges, alphabet_size })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Right-closed binning: the number of edges strictly below `x`.
    #[inline]
    pub fn symbol_of(&self, x: f64) -> Symbol {
        self.edges.partition_point(|&e| e < x) as Symbol
    }

    /// Samples falling in each cell.
    pub fn occupancy(&self, samples: impl IntoIterator<Item = f64>) -> Vec<usize> {
        let mut counts = vec![0; self.alphabet_size];
        for x in samples {
            counts[self.symbol_of(x) as usize] += 1;
        }
        counts
    }
}

/// Equal-frequency partition: edge `i` is the `ceil(i N / k)`-th order statistic.
pub fn mep_partition(series: &SegmentedSeries, alphabet_size: usize) -> Result<PartitionSpec> {
    if !(2..=MAX_ALPHABET).contains(&alphabet_size) {
        return Err(Error::InvalidAlphabet(alphabet_size));
    }
    let mut sorted: Vec<f64> = series.iter_samples().collect();
    let n = sorted.len();
    if n < alphabet_size {
        return Err(Error::InsufficientData { got: n, alphabet_size });
    }
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..alphabet_size)
        .map(|i| {
            let rank = (i * n).div_ceil(alphabet_size);
            sorted[rank - 1]
        })
        .collect();
    PartitionSpec::new(edges)
}

/// A symbol string split into independent segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    symbols: Vec<Symbol>,
    alphabet_size: usize,
    /// Exclusive end offset of each segment.
    segment_ends: Vec<usize>,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<Symbol>, alphabet_size: usize) -> Result<Self> {
        let len = symbols.len();
        Self::from_segments_flat(symbols, alphabet_size, vec![len])
    }

    pub fn from_segments(segments: &[Vec<Symbol>], alphabet_size: usize) -> Result<Self> {
        let mut ends = Vec::with_capacity(segments.len());
        let mut total = 0;
        for s in segments {
            total += s.len();
            ends.push(total);
        }
        Self::from_segments_flat(segments.concat(), alphabet_size, ends)
    }

    fn from_segments_flat(symbols: Vec<Symbol>, alphabet_size: usize, segment_ends: Vec<usize>) -> Result<Self> {
        if !(1..=MAX_ALPHABET).contains(&alphabet_size) {
            return Err(Error::InvalidAlphabet(alphabet_size));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s as usize >= alphabet_size) {
            return Err(Error::SymbolOutOfRange { symbol: s as usize, alphabet_size });
        }
        if segment_ends.windows(2).any(|w| w[0] > w[1]) || segment_ends.last().is_some_and(|&e| e != symbols.len()) {
            return Err(Error::InvalidArgument("segment boundaries out of range".into()));
        }
        Ok(Self { symbols, alphabet_size, segment_ends })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn segment_ends(&self) -> &[usize] {
        &self.segment_ends
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = &[Symbol]> {
        let starts = std::iter::once(0).chain(self.segment_ends.iter().copied());
        starts.zip(&self.segment_ends).map(|(a, &b)| &self.symbols[a..b])
    }

    /// Empirical symbol frequencies over all segments.
    pub fn symbol_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.alphabet_size];
        for &s in &self.symbols {
            counts[s as usize] += 1;
        }
        let n = self.symbols.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// Encodes every segment with the partition, keeping segment boundaries.
pub fn encode(series: &SegmentedSeries, spec: &PartitionSpec) -> SymbolSequence {
    let segments: Vec<Vec<Symbol>> = series
        .segments()
        .iter()
        .map(|seg| seg.iter().map(|&x| spec.symbol_of(x)).collect())
        .collect();
    SymbolSequence::from_segments(&segments, spec.alphabet_size()).expect("partition symbols are in range")
}
