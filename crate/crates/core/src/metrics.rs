//! Per-word corpus entropy under a grammar, in bits.

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{encode, fill_encoded, ChartOptions};
use crate::grammar::CnfGrammar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// `-Σ log2 P(S) / Σ |S|`
    pub h3a: f64,
    /// `-(1/K) Σ log2 P(S) / |S|`
    pub h3b: f64,
    /// Sentences scored.
    pub k: usize,
    pub total_words: usize,
    /// Sentences excluded because they have no parse.
    pub skipped: usize,
}

impl EntropyReport {
    /// `(h3a, h3b)` in nats per word.
    pub fn in_nats(&self) -> (f64, f64) {
        (self.h3a * std::f64::consts::LN_2, self.h3b * std::f64::consts::LN_2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no sentence in the corpus can be parsed")]
    NothingParsed,
}

/// Both measures from `(log2 P(S), |S|)` pairs; `None` for an empty slice.
pub fn entropy_from_log_probs(items: &[(f64, usize)]) -> Option<(f64, f64)> {
    if items.is_empty() {
        return None;
    }
    let words: usize = items.iter().map(|x| x.1).sum();
    let logs: f64 = items.iter().map(|x| x.0).sum();
    let per: f64 = items.iter().map(|&(l, n)| l / n as f64).sum();
    Some((-logs / words as f64, -per / items.len() as f64))
}

pub fn entropy<S: AsRef<str> + Sync>(grammar: &CnfGrammar, corpus: &[Vec<S>]) -> Result<EntropyReport, MetricsError> {
    if corpus.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let scored: Vec<Option<(f64, usize)>> = corpus
        .par_iter()
        .map(|s| {
            let words = encode(grammar, s).ok()?;
            let p = fill_encoded(grammar, &words, ChartOptions::INSIDE).total();
            (!p.is_zero()).then(|| (p.log2(), s.len()))
        })
        .collect();
    let items: Vec<(f64, usize)> = scored.iter().flatten().copied().collect();
    let (h3a, h3b) = entropy_from_log_probs(&items).ok_or(MetricsError::NothingParsed)?;
    Ok(EntropyReport {
        h3a,
        h3b,
        k: items.len(),
        total_words: items.iter().map(|x| x.1).sum(),
        skipped: corpus.len() - items.len(),
    })
}
