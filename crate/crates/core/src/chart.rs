//! CYK charts over CNF PCFGs: inside probabilities, Viterbi derivations and
//! exact derivation counts.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::grammar::{CnfGrammar, Origin, RuleRef, SymbolId, TerminalId};
use crate::prob::ExtReal;
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChartError {
    #[error("unknown token `{token}` at position {position}")]
    UnknownToken { token: String, position: usize },
    #[error("empty sentence")]
    EmptySentence,
    #[error("sentence has no parse")]
    NoParse,
}

/// Which optional chart layers to compute; inside values are always filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartOptions {
    pub viterbi: bool,
    pub counts: bool,
}

impl ChartOptions {
    pub const FULL: ChartOptions = ChartOptions { viterbi: true, counts: true };
    pub const INSIDE: ChartOptions = ChartOptions { viterbi: false, counts: false };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Back {
    pub rule: RuleRef,
    /// Split point for binary rules; equal to the span start for lexical rules.
    pub split: usize,
}

/// Cells are indexed by half-open span `(i, j)` and nonterminal.
#[derive(Debug, Clone)]
pub struct Chart {
    n: usize,
    nt: usize,
    root: SymbolId,
    words: Vec<TerminalId>,
    inside: Vec<ExtReal>,
    viterbi: Vec<ExtReal>,
    back: Vec<Option<Back>>,
    counts: Vec<BigUint>,
}

impl Chart {
    fn idx(&self, i: usize, j: usize, a: SymbolId) -> usize {
        (i * (self.n + 1) + j) * self.nt + a
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nt
    }

    pub fn root(&self) -> SymbolId {
        self.root
    }

    pub fn words(&self) -> &[TerminalId] {
        &self.words
    }

    pub fn inside(&self, i: usize, j: usize, a: SymbolId) -> ExtReal {
        self.inside[self.idx(i, j, a)]
    }

    /// Panics if the chart was filled without the Viterbi layer.
    pub fn viterbi(&self, i: usize, j: usize, a: SymbolId) -> ExtReal {
        assert!(!self.viterbi.is_empty(), "chart filled without Viterbi values");
        self.viterbi[self.idx(i, j, a)]
    }

    pub fn back(&self, i: usize, j: usize, a: SymbolId) -> Option<Back> {
        assert!(!self.back.is_empty(), "chart filled without Viterbi values");
        self.back[self.idx(i, j, a)]
    }

    /// Panics if the chart was filled without derivation counts.
    pub fn count(&self, i: usize, j: usize, a: SymbolId) -> &BigUint {
        assert!(!self.counts.is_empty(), "chart filled without derivation counts");
        &self.counts[self.idx(i, j, a)]
    }

    /// Sentence probability: inside value of the root over the whole input.
    pub fn total(&self) -> ExtReal {
        self.inside(0, self.n, self.root)
    }
}

/// Maps tokens to terminal ids.
pub fn encode<S: AsRef<str>>(grammar: &CnfGrammar, tokens: &[S]) -> Result<Vec<TerminalId>, ChartError> {
    if tokens.is_empty() {
        return Err(ChartError::EmptySentence);
    }
    tokens
        .iter()
        .enumerate()
        .map(|(position, t)| {
            grammar
                .terminal_id(t.as_ref())
                .ok_or_else(|| ChartError::UnknownToken { token: t.as_ref().to_string(), position })
        })
        .collect()
}

/// Fills inside values, Viterbi back-pointers and derivation counts.
pub fn cyk_fill<S: AsRef<str>>(grammar: &CnfGrammar, tokens: &[S]) -> Result<Chart, ChartError> {
    cyk_fill_with(grammar, tokens, ChartOptions::FULL)
}

pub fn cyk_fill_with<S: AsRef<str>>(grammar: &CnfGrammar, tokens: &[S], opts: ChartOptions) -> Result<Chart, ChartError> {
    let words = encode(grammar, tokens)?;
    Ok(fill_encoded(grammar, &words, opts))
}

/// Fills a chart for an already encoded sentence; `words` must be non-empty.
pub fn fill_encoded(grammar: &CnfGrammar, words: &[TerminalId], opts: ChartOptions) -> Chart {
    let n = words.len();
    let nt = grammar.num_nonterminals();
    let cells = (n + 1) * (n + 1) * nt;
    let mut chart = Chart {
        n,
        nt,
        root: grammar.root(),
        words: words.to_vec(),
        inside: vec![ExtReal::ZERO; cells],
        viterbi: if opts.viterbi { vec![ExtReal::ZERO; cells] } else { Vec::new() },
        back: if opts.viterbi { vec![None; cells] } else { Vec::new() },
        counts: if opts.counts { vec![BigUint::zero(); cells] } else { Vec::new() },
    };

    let mut lex_by_word: Vec<Vec<(usize, SymbolId, ExtReal)>> = vec![Vec::new(); grammar.num_terminals()];
    for (id, r) in grammar.lexical_rules().iter().enumerate() {
        if r.prob > 0.0 {
            lex_by_word[r.word].push((id, r.mother, ExtReal::from_f64(r.prob)));
        }
    }
    let binary: Vec<(usize, SymbolId, SymbolId, SymbolId, ExtReal)> = grammar
        .binary_rules()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.prob > 0.0)
        .map(|(id, r)| (id, r.mother, r.left, r.right, ExtReal::from_f64(r.prob)))
        .collect();

    for (i, &w) in words.iter().enumerate() {
        for &(id, m, p) in &lex_by_word[w] {
            let c = chart.idx(i, i + 1, m);
            chart.inside[c] += p;
            if opts.viterbi && p > chart.viterbi[c] {
                chart.viterbi[c] = p;
                chart.back[c] = Some(Back { rule: RuleRef::Lexical(id), split: i });
            }
            if opts.counts {
                chart.counts[c] += 1u32;
            }
        }
    }

    for len in 2..=n {
        for i in 0..=n - len {
            let j = i + len;
            for &(id, m, l, r, p) in &binary {
                let c = chart.idx(i, j, m);
                for k in i + 1..j {
                    let (lc, rc) = (chart.idx(i, k, l), chart.idx(k, j, r));
                    let (li, ri) = (chart.inside[lc], chart.inside[rc]);
                    if li.is_zero() || ri.is_zero() {
                        continue;
                    }
                    chart.inside[c] += li * ri * p;
                    if opts.viterbi {
                        let v = chart.viterbi[lc] * chart.viterbi[rc] * p;
                        if v > chart.viterbi[c] {
                            chart.viterbi[c] = v;
                            chart.back[c] = Some(Back { rule: RuleRef::Binary(id), split: k });
                        }
                    }
                    if opts.counts {
                        let prod = &chart.counts[lc] * &chart.counts[rc];
                        chart.counts[c] += prod;
                    }
                }
            }
        }
    }
    chart
}

/// The most probable derivation of the root over the whole sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiParse {
    pub tree: Tree,
    pub prob: ExtReal,
    /// Rules applied, in pre-order.
    pub rules: Vec<RuleRef>,
}

impl ViterbiParse {
    pub fn explicit_rules(&self, grammar: &CnfGrammar) -> usize {
        self.rules.iter().filter(|r| grammar.origin(**r) == Origin::Explicit).count()
    }
}

pub fn viterbi_parse(chart: &Chart, grammar: &CnfGrammar) -> Result<ViterbiParse, ChartError> {
    let prob = chart.viterbi(0, chart.n, chart.root);
    if prob.is_zero() {
        return Err(ChartError::NoParse);
    }
    let mut rules = Vec::new();
    let tree = build_tree(chart, grammar, 0, chart.n, chart.root, &mut rules);
    Ok(ViterbiParse { tree, prob, rules })
}

fn build_tree(chart: &Chart, g: &CnfGrammar, i: usize, j: usize, a: SymbolId, rules: &mut Vec<RuleRef>) -> Tree {
    let back = chart.back(i, j, a).expect("back-pointer on a Viterbi path");
    rules.push(back.rule);
    let label = g.nonterminal_name(a);
    match back.rule {
        RuleRef::Lexical(id) => Tree::node(label, vec![Tree::leaf(g.terminal_name(g.lexical_rules()[id].word))]),
        RuleRef::Binary(id) => {
            let r = &g.binary_rules()[id];
            let left = build_tree(chart, g, i, back.split, r.left, rules);
            let right = build_tree(chart, g, back.split, j, r.right, rules);
            Tree::node(label, vec![left, right])
        }
    }
}

/// Number of distinct derivations of the root over the whole sentence.
pub fn count_parses(chart: &Chart) -> BigUint {
    chart.count(0, chart.n, chart.root).clone()
}

/// Probability of the best parse relative to the sentence probability.
pub fn likelihood_ratio(chart: &Chart, viterbi_prob: ExtReal) -> Result<f64, ChartError> {
    let total = chart.total();
    if total.is_zero() {
        return Err(ChartError::NoParse);
    }
    Ok(viterbi_prob.ratio(&total))
}

/// `Catalan(n-1) * symbols^(n-1)`: labelled binary trees over `n` leaves.
pub fn unconstrained_count(n: usize, symbols: usize) -> BigUint {
    assert!(n >= 1 && symbols >= 1, "need n >= 1 and at least one symbol");
    let k = n - 1;
    catalan(k) * num_traits::pow(BigUint::from(symbols), k)
}

pub fn catalan(k: usize) -> BigUint {
    // C(k) = binom(2k, k) / (k + 1), built incrementally to stay exact
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(2 * (2 * i + 1)) / BigUint::from(i + 2);
    }
    c
}

/// The per-sentence statistics line: `best <p> all <p> likelihood <r> count <int>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub best: ExtReal,
    pub all: ExtReal,
    pub likelihood: f64,
    pub count: BigUint,
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "best {} all {} likelihood {:.6} count {}", self.best.to_sci(6), self.all.to_sci(6), self.likelihood, self.count)
    }
}

/// Fills a full chart and extracts the best parse with its report.
pub fn parse_sentence<S: AsRef<str>>(grammar: &CnfGrammar, tokens: &[S]) -> Result<(ViterbiParse, ParseReport), ChartError> {
    let chart = cyk_fill(grammar, tokens)?;
    let best = viterbi_parse(&chart, grammar)?;
    let report = ParseReport {
        best: best.prob,
        all: chart.total(),
        likelihood: likelihood_ratio(&chart, best.prob)?,
        count: count_parses(&chart),
    };
    Ok((best, report))
}
