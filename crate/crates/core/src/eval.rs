//! Unlabelled bracket scoring: recall, precision and crossing brackets.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::chart::{cyk_fill_with, viterbi_parse, ChartOptions};
use crate::grammar::CnfGrammar;
use crate::tree::Tree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("bracket sets cover {0} and {1} words")]
    LengthMismatch(usize, usize),
    #[error("span ({0}, {1}) is not a multi-word span within the sentence")]
    BadSpan(usize, usize),
}

/// Half-open spans of two or more words over a sentence of `len` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketSet {
    len: usize,
    spans: BTreeSet<(usize, usize)>,
}

impl BracketSet {
    pub fn new(len: usize, spans: impl IntoIterator<Item = (usize, usize)>) -> Result<BracketSet, EvalError> {
        let spans: BTreeSet<(usize, usize)> = spans.into_iter().collect();
        if let Some(&(s, e)) = spans.iter().find(|&&(s, e)| e > len || e < s + 2) {
            return Err(EvalError::BadSpan(s, e));
        }
        Ok(BracketSet { len, spans })
    }

    pub fn sentence_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn spans(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.spans.iter().copied()
    }

    pub fn contains(&self, span: (usize, usize)) -> bool {
        self.spans.contains(&span)
    }
}

/// Spans share a word and neither contains the other.
pub fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    let overlap = a.0 < b.1 && b.0 < a.1;
    let nested = (a.0 <= b.0 && b.1 <= a.1) || (b.0 <= a.0 && a.1 <= b.1);
    overlap && !nested
}

/// One span per internal node covering at least two words, root included.
pub fn brackets_of(tree: &Tree) -> BracketSet {
    fn walk(t: &Tree, start: usize, out: &mut BTreeSet<(usize, usize)>) -> usize {
        match t {
            Tree::Leaf(_) => 1,
            Tree::Node { children, .. } => {
                let mut end = start;
                for c in children {
                    end += walk(c, end, out);
                }
                if end - start >= 2 {
                    out.insert((start, end));
                }
                end - start
            }
        }
    }
    let mut spans = BTreeSet::new();
    let len = walk(tree, 0, &mut spans);
    BracketSet { len, spans }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeigScore {
    pub matched: usize,
    pub candidate: usize,
    pub gold: usize,
    /// Candidate spans crossing at least one gold span.
    pub crossings: usize,
}

impl GeigScore {
    pub fn recall(&self) -> f64 {
        percent(self.matched, self.gold)
    }

    pub fn precision(&self) -> f64 {
        percent(self.matched, self.candidate)
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        100.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn geig_score(candidate: &BracketSet, gold: &BracketSet) -> Result<GeigScore, EvalError> {
    if candidate.len != gold.len {
        return Err(EvalError::LengthMismatch(candidate.len, gold.len));
    }
    let matched = candidate.spans.intersection(&gold.spans).count();
    let crossings = candidate.spans().filter(|&c| gold.spans().any(|g| crosses(c, g))).count();
    Ok(GeigScore { matched, candidate: candidate.len(), gold: gold.len(), crossings })
}

/// Micro-averaged totals over a test set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusScore {
    pub sentences: usize,
    pub parsed: usize,
    /// Words over all test sentences, parsed or not.
    pub total_words: usize,
    pub matched: usize,
    pub candidate: usize,
    pub gold: usize,
    pub crossings: usize,
}

impl CorpusScore {
    pub fn parsed_percent(&self) -> f64 {
        percent(self.parsed, self.sentences)
    }

    pub fn average_length(&self) -> f64 {
        if self.sentences == 0 {
            0.0
        } else {
            self.total_words as f64 / self.sentences as f64
        }
    }

    pub fn recall(&self) -> f64 {
        percent(self.matched, self.gold)
    }

    pub fn precision(&self) -> f64 {
        percent(self.matched, self.candidate)
    }

    pub fn average_crossings(&self) -> f64 {
        if self.parsed == 0 {
            0.0
        } else {
            self.crossings as f64 / self.parsed as f64
        }
    }

    pub fn add(&mut self, s: &GeigScore) {
        self.parsed += 1;
        self.matched += s.matched;
        self.candidate += s.candidate;
        self.gold += s.gold;
        self.crossings += s.crossings;
    }
}

impl fmt::Display for CorpusScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Sentences Parsed (No. / %)\t{} / {:.2}", self.parsed, self.parsed_percent())?;
        writeln!(f, "Average Sentence Length\t{:.2}", self.average_length())?;
        writeln!(f, "Total Recall (%)\t{:.2}", self.recall())?;
        writeln!(f, "Total Precision (%)\t{:.2}", self.precision())?;
        writeln!(f, "Total Crossings\t{}", self.crossings)?;
        write!(f, "Average Crossings\t{:.2}", self.average_crossings())
    }
}

/// Parses the yield of each gold tree with the grammar's Viterbi parser and
/// scores the result against the gold bracketing. Sentences without a parse
/// count towards coverage only.
pub fn evaluate_corpus(grammar: &CnfGrammar, gold: &[Tree]) -> CorpusScore {
    let per: Vec<Option<GeigScore>> = gold
        .par_iter()
        .map(|g| {
            let words = g.words();
            let chart = cyk_fill_with(grammar, &words, ChartOptions { viterbi: true, counts: false }).ok()?;
            let best = viterbi_parse(&chart, grammar).ok()?;
            geig_score(&brackets_of(&best.tree), &brackets_of(g)).ok()
        })
        .collect();
    let mut score = CorpusScore {
        sentences: gold.len(),
        parsed: 0,
        total_words: gold.iter().map(Tree::num_words).sum(),
        matched: 0,
        candidate: 0,
        gold: 0,
        crossings: 0,
    };
    for s in per.iter().flatten() {
        score.add(s);
    }
    score
}
