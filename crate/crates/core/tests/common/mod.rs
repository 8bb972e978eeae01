//! Brute-force reference computations shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xbar_core::grammar::{Category, CnfGrammar, Origin, RuleRef};

/// One complete derivation: its probability and the rules it uses.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub prob: f64,
    pub rules: Vec<RuleRef>,
}

/// Every derivation of `words[i..j]` from `mother`, by exhaustive recursion
/// over split points and rules. No sharing between spans.
pub fn derivations(g: &CnfGrammar, words: &[usize], mother: usize) -> Vec<Derivation> {
    let mut out = Vec::new();
    if words.len() == 1 {
        for (id, r) in g.lexical_rules().iter().enumerate() {
            if r.mother == mother && r.word == words[0] && r.prob > 0.0 {
                out.push(Derivation { prob: r.prob, rules: vec![RuleRef::Lexical(id)] });
            }
        }
        return out;
    }
    for (id, r) in g.binary_rules().iter().enumerate() {
        if r.mother != mother || r.prob == 0.0 {
            continue;
        }
        for k in 1..words.len() {
            let left = derivations(g, &words[..k], r.left);
            if left.is_empty() {
                continue;
            }
            let right = derivations(g, &words[k..], r.right);
            for l in &left {
                for rr in &right {
                    let mut rules = Vec::with_capacity(1 + l.rules.len() + rr.rules.len());
                    rules.push(RuleRef::Binary(id));
                    rules.extend_from_slice(&l.rules);
                    rules.extend_from_slice(&rr.rules);
                    out.push(Derivation { prob: r.prob * l.prob * rr.prob, rules });
                }
            }
        }
    }
    out
}

/// Neumaier-compensated sum.
pub fn accurate_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Expected uses of each rule, weighted by derivation probability.
pub fn brute_expected(g: &CnfGrammar, ds: &[Derivation]) -> (Vec<f64>, Vec<f64>) {
    let z = accurate_sum(ds.iter().map(|d| d.prob));
    let mut bin = vec![Vec::new(); g.binary_rules().len()];
    let mut lex = vec![Vec::new(); g.lexical_rules().len()];
    for d in ds {
        for r in &d.rules {
            match *r {
                RuleRef::Binary(i) => bin[i].push(d.prob),
                RuleRef::Lexical(i) => lex[i].push(d.prob),
            }
        }
    }
    let f = |v: Vec<Vec<f64>>| v.into_iter().map(|xs| accurate_sum(xs) / z).collect();
    (f(bin), f(lex))
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// A random CNF grammar with at most `max_nt` nonterminals and at most 30
/// rules. Every nonterminal gets at least one lexical rule.
pub fn random_grammar(rng: &mut ChaCha8Rng, max_nt: usize, terminals: usize) -> CnfGrammar {
    let mut g = CnfGrammar::new();
    let nt = rng.gen_range(1..=max_nt);
    let syms: Vec<usize> = (0..nt).map(|i| g.add_nonterminal(&format!("N{i}"), Category::new())).collect();
    let words: Vec<usize> = (0..terminals).map(|i| g.add_terminal(&format!("w{i}"))).collect();
    let mut budget = 30usize;
    for &m in &syms {
        let w = words[rng.gen_range(0..words.len())];
        g.push_lexical(m, w, rng.gen_range(0.1..1.0), Origin::Explicit);
        budget -= 1;
    }
    for &m in &syms {
        for &w in &words {
            if budget > 0 && rng.gen_bool(0.4) && !g.lexical_rules().iter().any(|r| r.mother == m && r.word == w) {
                g.push_lexical(m, w, rng.gen_range(0.1..1.0), Origin::Explicit);
                budget -= 1;
            }
        }
    }
    for &m in &syms {
        for &l in &syms {
            for &r in &syms {
                if budget > 0 && rng.gen_bool(0.6) {
                    g.push_binary(m, l, r, rng.gen_range(0.05..1.0), Origin::Implicit);
                    budget -= 1;
                }
            }
        }
    }
    g.set_root(syms[0]);
    g.normalize();
    g
}

pub fn random_sentence(rng: &mut ChaCha8Rng, g: &CnfGrammar, len: usize) -> Vec<String> {
    (0..len).map(|_| g.terminal_name(rng.gen_range(0..g.num_terminals())).to_string()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
