//! Inside-outside re-estimation of rule probabilities on unbracketed text.

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{encode, fill_encoded, Chart, ChartError, ChartOptions};
use crate::grammar::{CnfGrammar, RuleRef, SymbolId, TerminalId};
use crate::prob::ExtReal;

/// Outside values, indexed like the chart they were computed from.
#[derive(Debug, Clone)]
pub struct OutsideChart {
    n: usize,
    nt: usize,
    values: Vec<ExtReal>,
}

impl OutsideChart {
    pub fn get(&self, i: usize, j: usize, a: SymbolId) -> ExtReal {
        self.values[(i * (self.n + 1) + j) * self.nt + a]
    }
}

pub fn outside_fill(grammar: &CnfGrammar, chart: &Chart) -> Result<OutsideChart, ChartError> {
    if chart.total().is_zero() {
        return Err(ChartError::NoParse);
    }
    let (n, nt) = (chart.len(), chart.num_nonterminals());
    let idx = |i: usize, j: usize, a: usize| (i * (n + 1) + j) * nt + a;
    let mut out = vec![ExtReal::ZERO; (n + 1) * (n + 1) * nt];
    out[idx(0, n, chart.root())] = ExtReal::ONE;
    let rules: Vec<(SymbolId, SymbolId, SymbolId, ExtReal)> = grammar
        .binary_rules()
        .iter()
        .filter(|r| r.prob > 0.0)
        .map(|r| (r.mother, r.left, r.right, ExtReal::from_f64(r.prob)))
        .collect();
    for len in (2..=n).rev() {
        for i in 0..=n - len {
            let j = i + len;
            for &(m, l, r, p) in &rules {
                let om = out[idx(i, j, m)];
                if om.is_zero() {
                    continue;
                }
                let op = om * p;
                for k in i + 1..j {
                    let (il, ir) = (chart.inside(i, k, l), chart.inside(k, j, r));
                    if il.is_zero() || ir.is_zero() {
                        continue;
                    }
                    out[idx(i, k, l)] += op * ir;
                    out[idx(k, j, r)] += op * il;
                }
            }
        }
    }
    Ok(OutsideChart { n, nt, values: out })
}

/// Expected rule usage, accumulated over one or more sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    pub binary: Vec<f64>,
    pub lexical: Vec<f64>,
    /// Sum of natural-log sentence probabilities.
    pub log_likelihood: f64,
    pub parsed: usize,
    pub skipped: usize,
}

impl ExpectedCounts {
    pub fn zeros(grammar: &CnfGrammar) -> ExpectedCounts {
        ExpectedCounts {
            binary: vec![0.0; grammar.binary_rules().len()],
            lexical: vec![0.0; grammar.lexical_rules().len()],
            log_likelihood: 0.0,
            parsed: 0,
            skipped: 0,
        }
    }

    pub fn get(&self, r: RuleRef) -> f64 {
        match r {
            RuleRef::Binary(i) => self.binary[i],
            RuleRef::Lexical(i) => self.lexical[i],
        }
    }

    pub fn merge(&mut self, other: &ExpectedCounts) {
        for (a, b) in self.binary.iter_mut().zip(&other.binary) {
            *a += b;
        }
        for (a, b) in self.lexical.iter_mut().zip(&other.lexical) {
            *a += b;
        }
        self.log_likelihood += other.log_likelihood;
        self.parsed += other.parsed;
        self.skipped += other.skipped;
    }
}

/// Expected counts for one sentence from its inside and outside charts.
pub fn expected_counts(grammar: &CnfGrammar, chart: &Chart, outside: &OutsideChart) -> ExpectedCounts {
    let z = chart.total();
    let n = chart.len();
    let mut counts = ExpectedCounts::zeros(grammar);
    counts.log_likelihood = z.ln();
    counts.parsed = 1;
    for (id, r) in grammar.binary_rules().iter().enumerate() {
        if r.prob == 0.0 {
            continue;
        }
        let mut acc = ExtReal::ZERO;
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len;
                let om = outside.get(i, j, r.mother);
                if om.is_zero() {
                    continue;
                }
                for k in i + 1..j {
                    let (il, ir) = (chart.inside(i, k, r.left), chart.inside(k, j, r.right));
                    if !il.is_zero() && !ir.is_zero() {
                        acc += om * il * ir;
                    }
                }
            }
        }
        counts.binary[id] = (acc * r.prob).ratio(&z);
    }
    let words: &[TerminalId] = chart.words();
    for (id, r) in grammar.lexical_rules().iter().enumerate() {
        if r.prob == 0.0 {
            continue;
        }
        let acc: ExtReal = words
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == r.word)
            .map(|(i, _)| outside.get(i, i + 1, r.mother))
            .sum();
        counts.lexical[id] = (acc * r.prob).ratio(&z);
    }
    counts
}

/// Expected counts for an encoded sentence, or `None` if it has no parse.
fn sentence_counts(grammar: &CnfGrammar, words: &[TerminalId]) -> Option<ExpectedCounts> {
    let chart = fill_encoded(grammar, words, ChartOptions::INSIDE);
    let outside = outside_fill(grammar, &chart).ok()?;
    Some(expected_counts(grammar, &chart, &outside))
}

/// Runs the E-step over a corpus. Sentences are processed in parallel and
/// their counts summed in corpus order, so the result does not depend on the
/// number of threads.
pub fn corpus_counts<S: AsRef<str> + Sync>(grammar: &CnfGrammar, corpus: &[Vec<S>]) -> ExpectedCounts {
    let encoded: Vec<Option<Vec<TerminalId>>> = corpus.iter().map(|s| encode(grammar, s).ok()).collect();
    counts_encoded(grammar, &encoded)
}

fn counts_encoded(grammar: &CnfGrammar, encoded: &[Option<Vec<TerminalId>>]) -> ExpectedCounts {
    let per: Vec<Option<ExpectedCounts>> =
        encoded.par_iter().map(|s| s.as_ref().and_then(|w| sentence_counts(grammar, w))).collect();
    let mut total = ExpectedCounts::zeros(grammar);
    for c in per {
        match c {
            Some(c) => total.merge(&c),
            None => total.skipped += 1,
        }
    }
    total
}

/// Relative-frequency re-estimation per mother. Mothers whose rules have
/// zero total count keep their previous distribution.
pub fn reestimate(grammar: &CnfGrammar, counts: &ExpectedCounts) -> CnfGrammar {
    let mut totals = vec![0.0; grammar.num_nonterminals()];
    for r in grammar.rule_refs() {
        totals[grammar.mother(r)] += counts.get(r);
    }
    let mut g = grammar.clone();
    for (id, r) in g.binary_rules_mut().iter_mut().enumerate() {
        if totals[r.mother] > 0.0 {
            r.prob = counts.binary[id] / totals[r.mother];
        }
    }
    for (id, r) in g.lexical_rules_mut().iter_mut().enumerate() {
        if totals[r.mother] > 0.0 {
            r.prob = counts.lexical[id] / totals[r.mother];
        }
    }
    g
}

/// Zeroes rules below `threshold` and renormalizes their mothers. Returns the
/// number of rules newly set to zero.
pub fn prune(grammar: &mut CnfGrammar, threshold: f64) -> usize {
    let mut hit = vec![false; grammar.num_nonterminals()];
    let mut pruned = 0;
    for r in grammar.binary_rules_mut() {
        if r.prob > 0.0 && r.prob < threshold {
            r.prob = 0.0;
            hit[r.mother] = true;
            pruned += 1;
        }
    }
    for r in grammar.lexical_rules_mut() {
        if r.prob > 0.0 && r.prob < threshold {
            r.prob = 0.0;
            hit[r.mother] = true;
            pruned += 1;
        }
    }
    let mothers: Vec<SymbolId> = (0..hit.len()).filter(|&m| hit[m]).collect();
    grammar.normalize_mothers(&mothers);
    pruned
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_iterations: usize,
    /// Stop once the relative change in corpus log-likelihood falls below this.
    pub convergence_tol: f64,
    /// Rules whose re-estimated probability falls below this are set to zero.
    pub prune_threshold: f64,
    pub skip_unparseable: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_iterations: 50, convergence_tol: 1e-4, prune_threshold: 1e-5, skip_unparseable: true }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("no sentence in the corpus can be parsed")]
    NoParseableSentence,
    #[error("sentence {0} cannot be parsed")]
    Unparseable(usize),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Corpus log-likelihood (natural log) of the grammar entering each iteration.
    pub log_likelihoods: Vec<f64>,
    /// Nonzero rules after each iteration.
    pub nonzero_rules: Vec<usize>,
    /// Rules pruned in each iteration.
    pub pruned: Vec<usize>,
    /// Log-likelihood of the final grammar.
    pub final_log_likelihood: f64,
    pub grammar: CnfGrammar,
    pub iterations: usize,
    pub converged: bool,
    /// Sentences the initial grammar could not parse.
    pub skipped: usize,
    pub coverage_before: f64,
    pub coverage_after: f64,
}

pub fn train<S: AsRef<str> + Sync>(grammar: &CnfGrammar, corpus: &[Vec<S>], config: &TrainConfig) -> Result<TrainReport, TrainError> {
    if config.max_iterations == 0 {
        return Err(TrainError::InvalidConfig("max_iterations must be at least 1".into()));
    }
    if !(config.convergence_tol > 0.0) {
        return Err(TrainError::InvalidConfig("convergence tolerance must be positive".into()));
    }
    if !(0.0..1.0).contains(&config.prune_threshold) {
        return Err(TrainError::InvalidConfig("prune threshold must lie in [0, 1)".into()));
    }
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let encoded: Vec<Option<Vec<TerminalId>>> = corpus.iter().map(|s| encode(grammar, s).ok()).collect();
    let size = corpus.len() as f64;

    let mut g = grammar.clone();
    let mut report = TrainReport {
        log_likelihoods: Vec::new(),
        nonzero_rules: Vec::new(),
        pruned: Vec::new(),
        final_log_likelihood: 0.0,
        grammar: grammar.clone(),
        iterations: 0,
        converged: false,
        skipped: 0,
        coverage_before: 0.0,
        coverage_after: 0.0,
    };
    let mut counts = counts_encoded(&g, &encoded);
    if counts.parsed == 0 {
        return Err(TrainError::NoParseableSentence);
    }
    if !config.skip_unparseable && counts.skipped > 0 {
        let first = encoded
            .iter()
            .position(|s| s.as_ref().map_or(true, |w| fill_encoded(&g, w, ChartOptions::INSIDE).total().is_zero()))
            .unwrap_or(0);
        return Err(TrainError::Unparseable(first));
    }
    report.skipped = counts.skipped;
    report.coverage_before = counts.parsed as f64 / size;

    for _ in 0..config.max_iterations {
        report.log_likelihoods.push(counts.log_likelihood);
        g = reestimate(&g, &counts);
        let pruned = prune(&mut g, config.prune_threshold);
        let (e, i) = g.nonzero_counts();
        report.pruned.push(pruned);
        report.nonzero_rules.push(e + i);
        report.iterations += 1;

        let prev = counts.log_likelihood;
        counts = counts_encoded(&g, &encoded);
        if counts.parsed == 0 {
            return Err(TrainError::NoParseableSentence);
        }
        if (counts.log_likelihood - prev).abs() <= config.convergence_tol * prev.abs() {
            report.converged = true;
            break;
        }
    }
    report.final_log_likelihood = counts.log_likelihood;
    report.coverage_after = counts.parsed as f64 / size;
    report.grammar = g;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodReport {
    /// Sum of natural-log probabilities of the parseable sentences.
    pub log_likelihood: f64,
    pub parsed: usize,
    pub unparseable: usize,
}

pub fn log_likelihood<S: AsRef<str> + Sync>(grammar: &CnfGrammar, corpus: &[Vec<S>]) -> LikelihoodReport {
    let per: Vec<Option<f64>> = corpus
        .par_iter()
        .map(|s| {
            let words = encode(grammar, s).ok()?;
            let z = fill_encoded(grammar, &words, ChartOptions::INSIDE).total();
            (!z.is_zero()).then(|| z.ln())
        })
        .collect();
    let mut r = LikelihoodReport { log_likelihood: 0.0, parsed: 0, unparseable: 0 };
    for p in per {
        match p {
            Some(l) => {
                r.log_likelihood += l;
                r.parsed += 1;
            }
            None => r.unparseable += 1,
        }
    }
    r
}
