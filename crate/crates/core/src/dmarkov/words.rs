use crate::error::{Error, Result};
use crate::symbolize::{Symbol, SymbolSequence};

/// Upper limit on `|A|^D` so matrices stay addressable.
pub const MAX_STATES: usize = 1 << 22;

/// The set of length-`depth` words over an alphabet, indexed lexicographically.
///
/// Word `a_1 ... a_D` has index `sum_i a_i |A|^(D-i)`, so the sliding-block
/// successor on symbol `s` is `(q |A| + s) mod |A|^D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordSpace {
    alphabet_size: usize,
    depth: usize,
    states: usize,
}

impl WordSpace {
    pub fn new(alphabet_size: usize, depth: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidAlphabet(alphabet_size));
        }
        if depth == 0 {
            return Err(Error::InvalidDepth(depth));
        }
        let states = u32::try_from(depth)
            .ok()
            .and_then(|d| alphabet_size.checked_pow(d))
            .filter(|&n| n <= MAX_STATES)
            .ok_or(Error::StateSpaceTooLarge { alphabet_size, depth })?;
        Ok(Self { alphabet_size, depth, states })
    }

    #[inline]
    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn states(&self) -> usize {
        self.states
    }

    #[inline]
    pub fn successor(&self, state: usize, symbol: Symbol) -> usize {
        (state * self.alphabet_size + symbol as usize) % self.states
    }

    pub fn index_of(&self, word: &[Symbol]) -> usize {
        debug_assert_eq!(word.len(), self.depth);
        word.iter().fold(0, |q, &s| q * self.alphabet_size + s as usize)
    }

    pub fn word(&self, mut state: usize) -> Vec<Symbol> {
        let mut w = vec![0; self.depth];
        for slot in w.iter_mut().rev() {
            *slot = (state % self.alphabet_size) as Symbol;
            state /= self.alphabet_size;
        }
        w
    }

    /// Word rendered as a digit string, e.g. `"012"`.
    pub fn label(&self, state: usize) -> String {
        self.word(state)
            .iter()
            .map(|&s| if self.alphabet_size <= 10 { s.to_string() } else { format!("{s}.") })
            .collect::<String>()
            .trim_end_matches('.')
            .to_string()
    }

    /// Visits every scored `(state, symbol)` pair, segment by segment.
    ///
    /// The first `depth` symbols of each segment only seed the state.
    pub fn for_each_transition(&self, seq: &SymbolSequence, mut f: impl FnMut(usize, Symbol)) {
        for seg in seq.segments() {
            if seg.len() <= self.depth {
                continue;
            }
            let mut q = self.index_of(&seg[..self.depth]);
            for &s in &seg[self.depth..] {
                f(q, s);
                q = self.successor(q, s);
            }
        }
    }

    /// Number of scored emissions: `len - depth` per segment, summed.
    pub fn scored_emissions(&self, seq: &SymbolSequence) -> usize {
        seq.segments().map(|s| s.len().saturating_sub(self.depth)).sum()
    }

    pub fn check_sequence(&self, seq: &SymbolSequence) -> Result<()> {
        if seq.alphabet_size() != self.alphabet_size {
            return Err(Error::AlphabetMismatch { model: self.alphabet_size, sequence: seq.alphabet_size() });
        }
        if !seq.segments().any(|s| s.len() > self.depth) {
            return Err(Error::SequenceTooShort { depth: self.depth });
        }
        Ok(())
    }
}
