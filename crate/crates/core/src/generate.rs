//! Seeded top-down sampling of sentences from a PCFG.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grammar::{Category, CnfGrammar, Origin, RuleRef, SymbolId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub count: usize,
    pub seed: u64,
    /// Derivations deeper than this are rejected and redrawn.
    pub max_depth: usize,
    /// Derivations longer than this many tokens are rejected and redrawn.
    pub max_length: usize,
}

impl GenConfig {
    pub fn new(count: usize, seed: u64) -> GenConfig {
        GenConfig { count, seed, max_depth: 100, max_length: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("generation needs count and caps of at least 1")]
    InvalidConfig,
    #[error("nonterminal `{0}` has no rule with nonzero probability")]
    NoRules(String),
    #[error("no derivation within the caps after {0} consecutive attempts")]
    NoTermination(usize),
}

/// Consecutive rejected draws tolerated before giving up.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub words: Vec<String>,
    /// Rules applied, in left-to-right pre-order.
    pub rules: Vec<RuleRef>,
}

struct Sampler<'g> {
    grammar: &'g CnfGrammar,
    /// Per mother: rules with nonzero probability and their cumulative probabilities.
    choices: Vec<Vec<(RuleRef, f64)>>,
}

impl<'g> Sampler<'g> {
    fn new(grammar: &'g CnfGrammar) -> Sampler<'g> {
        let mut choices = vec![Vec::new(); grammar.num_nonterminals()];
        for r in grammar.rule_refs() {
            let p = grammar.prob(r);
            if p > 0.0 {
                let list: &mut Vec<(RuleRef, f64)> = &mut choices[grammar.mother(r)];
                let cum = list.last().map_or(0.0, |x| x.1) + p;
                list.push((r, cum));
            }
        }
        Sampler { grammar, choices }
    }

    fn pick(&self, m: SymbolId, rng: &mut ChaCha8Rng) -> Result<RuleRef, GenError> {
        let list = &self.choices[m];
        let Some(&(last, total)) = list.last() else {
            return Err(GenError::NoRules(self.grammar.nonterminal_name(m).to_string()));
        };
        let u = rng.gen::<f64>() * total;
        Ok(list.iter().find(|(_, c)| u < *c).map_or(last, |x| x.0))
    }

    /// One draw; `Ok(None)` when a cap is exceeded.
    fn draw(&self, rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Result<Option<Derivation>, GenError> {
        let mut words = Vec::new();
        let mut rules = Vec::new();
        let mut stack = vec![(self.grammar.root(), 1usize)];
        while let Some((m, depth)) = stack.pop() {
            if depth > cfg.max_depth || words.len() + stack.len() + 1 > cfg.max_length {
                return Ok(None);
            }
            let r = self.pick(m, rng)?;
            rules.push(r);
            match r {
                RuleRef::Lexical(i) => {
                    words.push(self.grammar.terminal_name(self.grammar.lexical_rules()[i].word).to_string());
                }
                RuleRef::Binary(i) => {
                    let b = &self.grammar.binary_rules()[i];
                    stack.push((b.right, depth + 1));
                    stack.push((b.left, depth + 1));
                }
            }
        }
        Ok(Some(Derivation { words, rules }))
    }
}

/// Draws `count` derivations from the root with one seeded RNG stream.
pub fn sample_derivations(grammar: &CnfGrammar, config: &GenConfig) -> Result<Vec<Derivation>, GenError> {
    if config.count == 0 || config.max_depth == 0 || config.max_length == 0 {
        return Err(GenError::InvalidConfig);
    }
    let sampler = Sampler::new(grammar);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.count);
    let mut rejected = 0;
    while out.len() < config.count {
        match sampler.draw(&mut rng, config)? {
            Some(d) => {
                out.push(d);
                rejected = 0;
            }
            None => {
                rejected += 1;
                if rejected >= MAX_REJECTIONS {
                    return Err(GenError::NoTermination(rejected));
                }
            }
        }
    }
    Ok(out)
}

pub fn sample_corpus(grammar: &CnfGrammar, config: &GenConfig) -> Result<Vec<Vec<String>>, GenError> {
    Ok(sample_derivations(grammar, config)?.into_iter().map(|d| d.words).collect())
}

/// A CNF grammar for even-length palindromes over `{a, b}`:
///
/// ```text
/// S --> A C 1/3      S --> B D 1/3      S --> A A 1/6     S --> B B 1/6
/// C --> S A 1        D --> S B 1        A --> a 1         B --> b 1
/// ```
///
/// Both letters are equally likely and `S` recurses with probability 2/3, so
/// the expected length is 6.
pub fn palindrome_grammar() -> CnfGrammar {
    let mut g = CnfGrammar::new();
    let [s, a, b, c, d] = ["S", "A", "B", "C", "D"].map(|n| g.add_nonterminal(n, Category::new()));
    let (ta, tb) = (g.add_terminal("a"), g.add_terminal("b"));
    for (m, l, r, p) in [(s, a, c, 1.0 / 3.0), (s, b, d, 1.0 / 3.0), (s, a, a, 1.0 / 6.0), (s, b, b, 1.0 / 6.0), (c, s, a, 1.0), (d, s, b, 1.0)] {
        g.push_binary(m, l, r, p, Origin::Explicit);
    }
    g.push_lexical(a, ta, 1.0, Origin::Explicit);
    g.push_lexical(b, tb, 1.0, Origin::Explicit);
    g.set_root(s);
    g
}

pub fn sample_palindromes(count: usize, seed: u64) -> Vec<Vec<String>> {
    let cfg = GenConfig { count, seed, max_depth: 400, max_length: 400 };
    sample_corpus(&palindrome_grammar(), &cfg).expect("palindrome grammar terminates")
}

/// Every binary rule over `nonterminals` symbols and every lexical rule onto
/// `terminals`, with seeded random probabilities normalized per mother. The
/// first symbol, `S`, is the root; the others are `X1`, `X2`, ...
pub fn ergodic_grammar(nonterminals: usize, terminals: &[&str], seed: u64) -> CnfGrammar {
    assert!(nonterminals >= 1, "need at least one nonterminal");
    let mut g = CnfGrammar::new();
    let ids: Vec<SymbolId> = (0..nonterminals)
        .map(|i| if i == 0 { "S".to_string() } else { format!("X{i}") })
        .map(|n| g.add_nonterminal(&n, Category::new()))
        .collect();
    let words: Vec<usize> = terminals.iter().map(|t| g.add_terminal(t)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &m in &ids {
        for &l in &ids {
            for &r in &ids {
                g.push_binary(m, l, r, rng.gen_range(0.5..1.5), Origin::Implicit);
            }
        }
        for &w in &words {
            g.push_lexical(m, w, rng.gen_range(0.5..1.5), Origin::Implicit);
        }
    }
    g.normalize();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::cyk_fill;
    use crate::fixtures;
    use crate::grammar::{compile_cnf, parse_grammar};

    fn g1() -> CnfGrammar {
        compile_cnf(&parse_grammar(fixtures::G1_GRAMMAR).unwrap(), None).unwrap()
    }

    #[test]
    fn generated_sentences_parse() {
        let g = g1();
        let corpus = sample_corpus(&g, &GenConfig::new(500, 1)).unwrap();
        assert_eq!(corpus.len(), 500);
        for s in &corpus {
            assert!(!cyk_fill(&g, s).unwrap().total().is_zero(), "{s:?}");
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let g = g1();
        let a = sample_corpus(&g, &GenConfig::new(50, 9)).unwrap();
        assert_eq!(a, sample_corpus(&g, &GenConfig::new(50, 9)).unwrap());
        assert_ne!(a, sample_corpus(&g, &GenConfig::new(50, 10)).unwrap());
    }

    #[test]
    fn verb_frequency_matches_rule_probability() {
        let g = g1();
        let corpus = sample_corpus(&g, &GenConfig::new(5000, 3)).unwrap();
        let (mut chases, mut kisses) = (0usize, 0usize);
        for w in corpus.iter().flatten() {
            match w.as_str() {
                "chases" => chases += 1,
                "kisses" => kisses += 1,
                _ => {}
            }
        }
        let f = chases as f64 / (chases + kisses) as f64;
        assert!((f - 0.65).abs() < 0.03, "{f}");
    }

    #[test]
    fn rule_choices_follow_probabilities() {
        // chi-square per mother over rule choices, 5000 derivations
        let g = g1();
        let ds = sample_derivations(&g, &GenConfig { count: 5000, seed: 5, max_depth: 1000, max_length: 1000 }).unwrap();
        let mut used = vec![0usize; g.num_rules()];
        let refs: Vec<RuleRef> = g.rule_refs().collect();
        for d in &ds {
            for r in &d.rules {
                used[refs.iter().position(|x| x == r).unwrap()] += 1;
            }
        }
        for m in g.rule_mothers() {
            let members: Vec<usize> = (0..refs.len()).filter(|&i| g.mother(refs[i]) == m).collect();
            let n: usize = members.iter().map(|&i| used[i]).sum();
            let chi2: f64 = members
                .iter()
                .map(|&i| {
                    let e = n as f64 * g.prob(refs[i]);
                    (used[i] as f64 - e).powi(2) / e
                })
                .sum();
            let dof = members.len() as f64 - 1.0;
            // generous bound: mean dof, sd sqrt(2 dof)
            assert!(chi2 <= dof + 6.0 * (2.0 * dof).sqrt() + 1e-9, "{} chi2 {chi2} dof {dof}", g.nonterminal_name(m));
        }
    }

    #[test]
    fn nonterminating_grammar_errors() {
        let mut g = CnfGrammar::new();
        let s = g.add_nonterminal("S", Category::new());
        g.push_binary(s, s, s, 1.0, Origin::Explicit);
        assert_eq!(sample_corpus(&g, &GenConfig::new(1, 0)).unwrap_err(), GenError::NoTermination(MAX_REJECTIONS));
        let mut dead = CnfGrammar::new();
        let s = dead.add_nonterminal("S", Category::new());
        let x = dead.add_nonterminal("X", Category::new());
        dead.push_binary(s, x, x, 1.0, Origin::Explicit);
        assert_eq!(sample_corpus(&dead, &GenConfig::new(1, 0)).unwrap_err(), GenError::NoRules("X".into()));
        assert_eq!(sample_corpus(&g1(), &GenConfig::new(0, 0)).unwrap_err(), GenError::InvalidConfig);
    }

    #[test]
    fn palindromes_are_palindromes() {
        let g = palindrome_grammar();
        assert_eq!(g.num_rules(), 8);
        assert_eq!(g.num_nonterminals(), 5);
        assert!(g.max_normalization_error() < 1e-12);
        let corpus = sample_palindromes(200, 11);
        assert_eq!(corpus.len(), 200);
        for s in &corpus {
            let rev: Vec<String> = s.iter().rev().cloned().collect();
            assert_eq!(&rev, s);
            assert!(s.len() >= 2 && s.len() % 2 == 0);
        }
        assert!(sample_palindromes(1, 99)[0].len() >= 2);
    }

    #[test]
    fn palindrome_mean_length_is_stable() {
        let means: Vec<f64> = (0..10)
            .map(|seed| {
                let c = sample_palindromes(1000, seed);
                c.iter().map(|s| s.len() as f64).sum::<f64>() / c.len() as f64
            })
            .collect();
        let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = means.iter().cloned().fold(0.0, f64::max);
        assert!((hi - lo) / lo < 0.2, "{means:?}");
        assert!(means.iter().all(|m| (m - 6.0).abs() < 1.0), "{means:?}");
    }

    #[test]
    fn ergodic_grammar_shape() {
        let g = ergodic_grammar(5, &["a", "b"], 1);
        assert_eq!(g.binary_rules().len(), 125);
        assert_eq!(g.lexical_rules().len(), 10);
        assert!(g.max_normalization_error() < 1e-12);
        assert_eq!(g.root_name(), "S");
        assert_ne!(g, ergodic_grammar(5, &["a", "b"], 2));
    }
}
