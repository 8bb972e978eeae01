use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::Category;

pub type SymbolId = usize;
pub type TerminalId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Explicit,
    Implicit,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Explicit => "explicit",
            Origin::Implicit => "implicit",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRule {
    pub mother: SymbolId,
    pub left: SymbolId,
    pub right: SymbolId,
    pub prob: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalRule {
    pub mother: SymbolId,
    pub word: TerminalId,
    pub prob: f64,
    pub origin: Origin,
}

/// Identifies a rule by kind and index. Orders binary rules before lexical
/// ones, then by index; this is the Viterbi tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleRef {
    Binary(usize),
    Lexical(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CnfTextError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: probability {value} outside [0, 1]")]
    BadProbability { line: usize, value: f64 },
    #[error("grammar text contains no rules")]
    Empty,
}

/// A PCFG in Chomsky normal form over alias-named nonterminals.
#[derive(Debug, Clone, PartialEq)]
pub struct CnfGrammar {
    nonterminals: Vec<String>,
    categories: Vec<Category>,
    terminals: Vec<String>,
    binary: Vec<BinaryRule>,
    lexical: Vec<LexicalRule>,
    root: SymbolId,
    nt_index: HashMap<String, SymbolId>,
    t_index: HashMap<String, TerminalId>,
}

impl Default for CnfGrammar {
    fn default() -> Self {
        CnfGrammar::new()
    }
}

impl CnfGrammar {
    /// An empty grammar; the root is nonterminal 0 until [`CnfGrammar::set_root`] is called.
    pub fn new() -> CnfGrammar {
        CnfGrammar {
            nonterminals: Vec::new(),
            categories: Vec::new(),
            terminals: Vec::new(),
            binary: Vec::new(),
            lexical: Vec::new(),
            root: 0,
            nt_index: HashMap::new(),
            t_index: HashMap::new(),
        }
    }

    /// Adds a nonterminal, or returns the existing id for `name`.
    pub fn add_nonterminal(&mut self, name: &str, category: Category) -> SymbolId {
        if let Some(&id) = self.nt_index.get(name) {
            return id;
        }
        let id = self.nonterminals.len();
        self.nonterminals.push(name.to_string());
        self.categories.push(category);
        self.nt_index.insert(name.to_string(), id);
        id
    }

    pub fn add_terminal(&mut self, word: &str) -> TerminalId {
        if let Some(&id) = self.t_index.get(word) {
            return id;
        }
        let id = self.terminals.len();
        self.terminals.push(word.to_string());
        self.t_index.insert(word.to_string(), id);
        id
    }

    pub fn push_binary(&mut self, mother: SymbolId, left: SymbolId, right: SymbolId, prob: f64, origin: Origin) -> usize {
        self.binary.push(BinaryRule { mother, left, right, prob, origin });
        self.binary.len() - 1
    }

    pub fn push_lexical(&mut self, mother: SymbolId, word: TerminalId, prob: f64, origin: Origin) -> usize {
        self.lexical.push(LexicalRule { mother, word, prob, origin });
        self.lexical.len() - 1
    }

    pub fn set_root(&mut self, root: SymbolId) {
        assert!(root < self.nonterminals.len());
        self.root = root;
    }

    pub fn root(&self) -> SymbolId {
        self.root
    }

    pub fn root_name(&self) -> &str {
        &self.nonterminals[self.root]
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nonterminals.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn num_rules(&self) -> usize {
        self.binary.len() + self.lexical.len()
    }

    pub fn nonterminal_id(&self, name: &str) -> Option<SymbolId> {
        self.nt_index.get(name).copied()
    }

    pub fn terminal_id(&self, word: &str) -> Option<TerminalId> {
        self.t_index.get(word).copied()
    }

    pub fn nonterminal_name(&self, id: SymbolId) -> &str {
        &self.nonterminals[id]
    }

    pub fn terminal_name(&self, id: TerminalId) -> &str {
        &self.terminals[id]
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn category(&self, id: SymbolId) -> &Category {
        &self.categories[id]
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary
    }

    pub fn lexical_rules(&self) -> &[LexicalRule] {
        &self.lexical
    }

    pub fn binary_rules_mut(&mut self) -> &mut [BinaryRule] {
        &mut self.binary
    }

    pub fn lexical_rules_mut(&mut self) -> &mut [LexicalRule] {
        &mut self.lexical
    }

    pub fn prob(&self, r: RuleRef) -> f64 {
        match r {
            RuleRef::Binary(i) => self.binary[i].prob,
            RuleRef::Lexical(i) => self.lexical[i].prob,
        }
    }

    pub fn origin(&self, r: RuleRef) -> Origin {
        match r {
            RuleRef::Binary(i) => self.binary[i].origin,
            RuleRef::Lexical(i) => self.lexical[i].origin,
        }
    }

    pub fn mother(&self, r: RuleRef) -> SymbolId {
        match r {
            RuleRef::Binary(i) => self.binary[i].mother,
            RuleRef::Lexical(i) => self.lexical[i].mother,
        }
    }

    /// All rule references, binary rules first.
    pub fn rule_refs(&self) -> impl Iterator<Item = RuleRef> + '_ {
        (0..self.binary.len()).map(RuleRef::Binary).chain((0..self.lexical.len()).map(RuleRef::Lexical))
    }

    pub fn has_binary_named(&self, mother: &str, left: &str, right: &str) -> bool {
        match (self.nonterminal_id(mother), self.nonterminal_id(left), self.nonterminal_id(right)) {
            (Some(m), Some(l), Some(r)) => self.binary.iter().any(|b| b.mother == m && b.left == l && b.right == r),
            _ => false,
        }
    }

    /// Distinct mothers that have at least one rule, in id order.
    pub fn rule_mothers(&self) -> impl Iterator<Item = SymbolId> + '_ {
        let mut has = vec![false; self.nonterminals.len()];
        for r in &self.binary {
            has[r.mother] = true;
        }
        for r in &self.lexical {
            has[r.mother] = true;
        }
        (0..self.nonterminals.len()).filter(move |&m| has[m])
    }

    /// Per-mother probability totals over binary and lexical rules.
    pub fn mother_totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.nonterminals.len()];
        for r in &self.binary {
            totals[r.mother] += r.prob;
        }
        for r in &self.lexical {
            totals[r.mother] += r.prob;
        }
        totals
    }

    /// Largest `|Σ p - 1|` over mothers that have rules.
    pub fn max_normalization_error(&self) -> f64 {
        let totals = self.mother_totals();
        self.rule_mothers().map(|m| (totals[m] - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Multiplies every rule of mother `m` by `factor(m)`.
    pub fn scale_mothers(&mut self, factor: impl Fn(SymbolId) -> f64) {
        for r in &mut self.binary {
            r.prob *= factor(r.mother);
        }
        for r in &mut self.lexical {
            r.prob *= factor(r.mother);
        }
    }

    /// Rescales the listed mothers' rules to sum to one; zero-mass mothers are left alone.
    pub fn normalize_mothers(&mut self, mothers: &[SymbolId]) {
        let totals = self.mother_totals();
        let mut factor = vec![1.0; self.nonterminals.len()];
        for &m in mothers {
            if totals[m] > 0.0 {
                factor[m] = 1.0 / totals[m];
            }
        }
        self.scale_mothers(|m| factor[m]);
    }

    pub fn normalize(&mut self) {
        let all: Vec<SymbolId> = (0..self.nonterminals.len()).collect();
        self.normalize_mothers(&all);
    }

    /// Numbers of rules with nonzero probability, as (explicit, implicit).
    pub fn nonzero_counts(&self) -> (usize, usize) {
        let mut counts = (0, 0);
        for r in self.rule_refs() {
            if self.prob(r) > 0.0 {
                match self.origin(r) {
                    Origin::Explicit => counts.0 += 1,
                    Origin::Implicit => counts.1 += 1,
                }
            }
        }
        counts
    }

    /// A copy without zero-probability rules; symbol tables are unchanged.
    pub fn without_zero_rules(&self) -> CnfGrammar {
        let mut g = self.clone();
        g.binary.retain(|r| r.prob > 0.0);
        g.lexical.retain(|r| r.prob > 0.0);
        g
    }

    /// Serializes one rule per line, grouped by mother:
    /// `M --> L R <prob> <origin>` and `M --> word # <prob> <origin>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in 0..self.nonterminals.len() {
            for r in self.binary.iter().filter(|r| r.mother == m) {
                out.push_str(&format!(
                    "{} --> {} {} {} {}\n",
                    self.nonterminals[m], self.nonterminals[r.left], self.nonterminals[r.right], r.prob, r.origin
                ));
            }
            for r in self.lexical.iter().filter(|r| r.mother == m) {
                out.push_str(&format!("{} --> {} # {} {}\n", self.nonterminals[m], self.terminals[r.word], r.prob, r.origin));
            }
        }
        out
    }

    /// Reads the format written by [`CnfGrammar::to_text`]. Probabilities are
    /// taken as given, without renormalization; the root is the first mother.
    /// Blank lines and lines starting with `;` are ignored.
    pub fn from_text(text: &str) -> Result<CnfGrammar, CnfTextError> {
        let mut g: Option<CnfGrammar> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with(';') {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let bad = |msg: &str| CnfTextError::Malformed { line, msg: msg.to_string() };
            if fields.len() != 6 || fields[1] != "-->" {
                return Err(bad("expected `M --> A B <prob> <origin>` or `M --> word # <prob> <origin>`"));
            }
            let prob: f64 = fields[4].parse().map_err(|_| bad("bad probability"))?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(CnfTextError::BadProbability { line, value: prob });
            }
            let origin = match fields[5] {
                "explicit" => Origin::Explicit,
                "implicit" => Origin::Implicit,
                _ => return Err(bad("origin must be `explicit` or `implicit`")),
            };
            let g = g.get_or_insert_with(CnfGrammar::new);
            let m = g.add_nonterminal(fields[0], Category::new());
            if fields[3] == "#" {
                let w = g.add_terminal(fields[2]);
                g.push_lexical(m, w, prob, origin);
            } else {
                let l = g.add_nonterminal(fields[2], Category::new());
                let r = g.add_nonterminal(fields[3], Category::new());
                g.push_binary(m, l, r, prob, origin);
            }
        }
        g.ok_or(CnfTextError::Empty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn appendix_fixture_loads_verbatim() {
        let g = CnfGrammar::from_text(fixtures::APPENDIX2_PCFG).unwrap();
        assert_eq!(g.num_rules(), 52);
        assert_eq!(g.binary_rules().len(), 32);
        assert_eq!(g.nonzero_counts(), (27, 25));
        assert_eq!(g.root_name(), "V2");
        assert!(g.max_normalization_error() < 1e-6);
        let p = g.binary_rules()[2].prob;
        assert_eq!(p, 0.94625349);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g = CnfGrammar::from_text(fixtures::APPENDIX2_PCFG).unwrap();
        let again = CnfGrammar::from_text(&g.to_text()).unwrap();
        assert_eq!(again.num_rules(), g.num_rules());
        for r in g.rule_refs() {
            let m = g.nonterminal_name(g.mother(r));
            let found = again.rule_refs().find(|&s| {
                again.nonterminal_name(again.mother(s)) == m
                    && again.prob(s) == g.prob(r)
                    && again.origin(s) == g.origin(r)
                    && std::mem::discriminant(&s) == std::mem::discriminant(&r)
            });
            assert!(found.is_some());
        }
    }

    #[test]
    fn malformed_lines_are_reported() {
        assert_eq!(CnfGrammar::from_text("").unwrap_err(), CnfTextError::Empty);
        assert!(matches!(CnfGrammar::from_text("A --> B C 0.5\n"), Err(CnfTextError::Malformed { line: 1, .. })));
        assert!(matches!(CnfGrammar::from_text("A --> B C 1.5 explicit\n"), Err(CnfTextError::BadProbability { .. })));
        assert!(matches!(CnfGrammar::from_text("A --> B C 0.5 other\n"), Err(CnfTextError::Malformed { .. })));
    }

    #[test]
    fn normalization_helpers() {
        let mut g = CnfGrammar::new();
        g.add_nonterminal("S", Category::new());
        let a = g.add_nonterminal("A", Category::new());
        let w = g.add_terminal("w");
        g.push_binary(0, a, a, 3.0, Origin::Explicit);
        g.push_lexical(0, w, 1.0, Origin::Implicit);
        g.push_lexical(a, w, 0.0, Origin::Explicit);
        g.normalize();
        assert_eq!(g.binary_rules()[0].prob, 0.75);
        assert_eq!(g.lexical_rules()[0].prob, 0.25);
        assert_eq!(g.nonzero_counts(), (1, 1));
        assert_eq!(g.without_zero_rules().num_rules(), 2);
        assert!(RuleRef::Binary(5) < RuleRef::Lexical(0));
    }
}
