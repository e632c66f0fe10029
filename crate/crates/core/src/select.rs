//! AIC/BIC scoring over every dendrogram cut.

use serde::{Deserialize, Serialize};

use crate::distort::{hamming_bound, kappa};
use crate::dmarkov::DMarkovModel;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::reduce::{cut, reduce_emission, reduced_log_likelihood, Dendrogram, Weighting};
use crate::symbolize::SymbolSequence;

/// `-2 L + 2 K`
pub fn aic(log_likelihood: f64, k: usize) -> f64 {
    -2.0 * log_likelihood + 2.0 * k as f64
}

/// `-2 L + K ln(N_obs)`
pub fn bic(log_likelihood: f64, k: usize, n_obs: f64) -> f64 {
    -2.0 * log_likelihood + k as f64 * n_obs.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Aic,
    #[default]
    Bic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "bic" => Ok(Self::Bic),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub n_states: usize,
    pub log_likelihood: f64,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub kappa: f64,
    pub hamming_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    /// Ascending in `n_states`.
    pub rows: Vec<ScoreRow>,
    pub n_obs: usize,
    pub alphabet_size: usize,
    pub selected_aic: usize,
    pub selected_bic: usize,
}

impl ScoreTable {
    pub fn selected(&self, criterion: Criterion) -> usize {
        match criterion {
            Criterion::Aic => self.selected_aic,
            Criterion::Bic => self.selected_bic,
        }
    }

    pub fn row(&self, n_states: usize) -> Option<&ScoreRow> {
        self.rows.iter().find(|r| r.n_states == n_states)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub weighting: Weighting,
    /// Sequence length used for the Hamming bound column.
    pub bound_length: usize,
    /// Inclusive range of cluster counts to score; `None` means `1..=|Q|`.
    pub range: Option<(usize, usize)>,
    pub exec: Exec,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self { weighting: Weighting::Stationary, bound_length: 1000, range: None, exec: Exec::default() }
    }
}

/// First minimum, so ties resolve toward fewer states.
fn argmin(rows: &[ScoreRow], key: impl Fn(&ScoreRow) -> f64) -> usize {
    rows.iter()
        .fold(None::<&ScoreRow>, |best, r| match best {
            Some(b) if key(b) <= key(r) => Some(b),
            _ => Some(r),
        })
        .map_or(0, |r| r.n_states)
}

pub fn score_all_cuts(model: &DMarkovModel, dendrogram: &Dendrogram, seq: &SymbolSequence) -> Result<ScoreTable> {
    score_all_cuts_with(model, dendrogram, seq, ScoreOptions::default())
}

pub fn score_all_cuts_with(
    model: &DMarkovModel,
    dendrogram: &Dendrogram,
    seq: &SymbolSequence,
    opts: ScoreOptions,
) -> Result<ScoreTable> {
    let leaves = model.n_states();
    if dendrogram.leaves != leaves {
        return Err(Error::ClusterMapMismatch { map: dendrogram.leaves, model: leaves });
    }
    let (lo, hi) = opts.range.unwrap_or((1, leaves));
    if lo == 0 || lo > hi || hi > leaves {
        return Err(Error::BadCut { requested: if lo == 0 { 0 } else { hi }, leaves });
    }
    let k_symbols = model.alphabet_size();
    let cuts: Vec<usize> = (lo..=hi).collect();
    let rows = par::map_slice(opts.exec, &cuts, |&n| -> Result<ScoreRow> {
        let map = cut(dendrogram, n)?;
        let emission = reduce_emission(model, &map, opts.weighting)?.matrix;
        let ll = reduced_log_likelihood(model, &emission, &map, seq)?;
        let k = k_symbols * n;
        let kap = kappa(model, &emission, &map).unwrap_or(f64::NAN);
        let bound = hamming_bound(kap, opts.bound_length, model.depth()).unwrap_or(f64::NAN);
        Ok(ScoreRow {
            n_states: n,
            log_likelihood: ll.value,
            k,
            aic: aic(ll.value, k),
            bic: bic(ll.value, k, ll.observations as f64),
            kappa: kap,
            hamming_bound: bound,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n_obs = model.space().scored_emissions(seq);
    Ok(ScoreTable {
        selected_aic: argmin(&rows, |r| r.aic),
        selected_bic: argmin(&rows, |r| r.bic),
        rows,
        n_obs,
        alphabet_size: k_symbols,
    })
}
