mod common;

use common::*;
use proptest::prelude::*;
use xbar_core::constraints::{build_implicit_grammar, enumerate_implicit, InitMode};
use xbar_core::fixtures;
use xbar_core::generate::{ergodic_grammar, sample_corpus, sample_palindromes, GenConfig};
use xbar_core::grammar::{compile_cnf, parse_grammar, CnfGrammar};
use xbar_core::training::{corpus_counts, prune, reestimate, train, ExpectedCounts, TrainConfig};

fn g1() -> (CnfGrammar, CnfGrammar) {
    let g = parse_grammar(fixtures::G1_GRAMMAR).unwrap();
    let cnf = compile_cnf(&g, None).unwrap();
    let imp = enumerate_implicit(&cnf, &g.constraints, &g.aliases);
    let full = build_implicit_grammar(&cnf, &imp, 0.01, InitMode::Deterministic).unwrap();
    (cnf, full)
}

/// Runs EM by hand, checking the invariants after every iteration.
fn check_em_run(g: &CnfGrammar, corpus: &[Vec<String>], iterations: usize, threshold: f64) {
    let mut cur = g.clone();
    let mut counts = corpus_counts(&cur, corpus);
    let mut support = cur.nonzero_counts();
    for t in 0..iterations {
        let next = reestimate(&cur, &counts);
        let mut pruned_g = next.clone();
        let pruned = prune(&mut pruned_g, threshold);
        assert!(pruned_g.max_normalization_error() < 1e-9, "iteration {t}: {}", pruned_g.max_normalization_error());

        let s = pruned_g.nonzero_counts();
        assert!(s.0 <= support.0 && s.1 <= support.1, "iteration {t}: support grew {support:?} -> {s:?}");
        support = s;

        let after = corpus_counts(&pruned_g, corpus);
        if pruned == 0 {
            let (a, b) = (counts.log_likelihood, after.log_likelihood);
            assert!(b >= a - 1e-9 * a.abs(), "iteration {t}: log-likelihood fell {a} -> {b}");
            assert_eq!(after.parsed, counts.parsed);
        }
        cur = pruned_g;
        counts = after;
    }
}

#[test]
fn implicit_g1_em_invariants() {
    let (cnf, full) = g1();
    let corpus = sample_corpus(&cnf, &GenConfig::new(200, 7)).unwrap();
    check_em_run(&full, &corpus, 8, 1e-5);
    check_em_run(&full, &corpus, 5, 0.0);
}

#[test]
fn ergodic_palindrome_em_invariants() {
    let corpus = sample_palindromes(60, 3);
    check_em_run(&ergodic_grammar(5, &["a", "b"], 3), &corpus, 15, 0.0);
    check_em_run(&ergodic_grammar(5, &["a", "b"], 4), &corpus, 15, 1e-5);
}

#[test]
fn train_report_likelihoods_rise_between_prunings() {
    let corpus = sample_palindromes(80, 5);
    let rep = train(&ergodic_grammar(5, &["a", "b"], 5), &corpus, &TrainConfig { max_iterations: 30, ..TrainConfig::default() }).unwrap();
    let mut lls = rep.log_likelihoods.clone();
    lls.push(rep.final_log_likelihood);
    for t in 0..rep.iterations {
        if rep.pruned[t] == 0 {
            assert!(lls[t + 1] >= lls[t] - 1e-9 * lls[t].abs(), "{t}: {} -> {}", lls[t], lls[t + 1]);
        }
    }
    assert!(rep.nonzero_rules.windows(2).all(|w| w[1] <= w[0]));
    assert!(rep.grammar.max_normalization_error() < 1e-9);
}

fn assert_counts_close(a: &ExpectedCounts, b: &ExpectedCounts) {
    assert_eq!((a.parsed, a.skipped), (b.parsed, b.skipped));
    assert!(rel_close(a.log_likelihood, b.log_likelihood, 1e-9));
    for (x, y) in a.binary.iter().zip(&b.binary).chain(a.lexical.iter().zip(&b.lexical)) {
        assert!(rel_close(*x, *y, 1e-9) || (x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn sharded_counts_equal_whole_corpus_counts() {
    let (cnf, full) = g1();
    let mut corpus = sample_corpus(&cnf, &GenConfig::new(120, 11)).unwrap();
    corpus.push(vec!["unknown".to_string(), "words".to_string()]);
    let whole = corpus_counts(&full, &corpus);
    for shards in [2, 3, 7] {
        let size = corpus.len().div_ceil(shards);
        let mut merged = ExpectedCounts::zeros(&full);
        for chunk in corpus.chunks(size) {
            merged.merge(&corpus_counts(&full, chunk));
        }
        assert_counts_close(&whole, &merged);
    }
}

#[test]
fn training_is_identical_at_any_thread_count() {
    let (cnf, full) = g1();
    let corpus = sample_corpus(&cnf, &GenConfig::new(150, 13)).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train(&full, &corpus, &TrainConfig::default()).unwrap())
    };
    let one = run(1);
    for threads in [2, 4] {
        let many = run(threads);
        assert_eq!(one.grammar, many.grammar);
        assert_eq!(one.log_likelihoods, many.log_likelihoods);
    }
}

#[test]
fn explicit_g1_recovers_its_generating_probabilities() {
    let (cnf, _) = g1();
    let corpus = sample_corpus(&cnf, &GenConfig::new(5000, 17)).unwrap();
    let mut flat = cnf.clone();
    for r in flat.binary_rules_mut() {
        r.prob = 1.0;
    }
    for r in flat.lexical_rules_mut() {
        r.prob = 1.0;
    }
    flat.normalize();
    let cfg = TrainConfig { max_iterations: 200, convergence_tol: 1e-7, ..TrainConfig::default() };
    let rep = train(&flat, &corpus, &cfg).unwrap();
    for r in cnf.rule_refs() {
        let (want, got) = (cnf.prob(r), rep.grammar.prob(r));
        assert!((want - got).abs() <= 0.03, "{r:?} under {}: {want} vs {got}", cnf.nonterminal_name(cnf.mother(r)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_em_step_on_random_grammars(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_grammar(&mut r, 3, 2);
        let corpus: Vec<Vec<String>> = (0..6).map(|i| random_sentence(&mut r, &g, 1 + i % 5)).collect();
        let before = corpus_counts(&g, &corpus);
        prop_assume!(before.parsed > 0);
        let next = reestimate(&g, &before);
        prop_assert!(next.max_normalization_error() < 1e-9);
        let after = corpus_counts(&next, &corpus);
        prop_assert_eq!(after.parsed, before.parsed);
        let (a, b) = (before.log_likelihood, after.log_likelihood);
        prop_assert!(b >= a - 1e-9 * a.abs(), "{} -> {}", a, b);
    }
}
