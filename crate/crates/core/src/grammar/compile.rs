use std::collections::HashMap;

use super::{CnfGrammar, Grammar, GrammarError, Origin};

/// Compiles a parsed grammar into a CNF PCFG with every rule marked explicit.
///
/// Unspecified probabilities start at `1/k`, where `k` counts all rules
/// (binary and lexical) sharing the mother; every mother is then
/// renormalized. The root defaults to the mother of the first rule, or the
/// first alias when there are no rules.
pub fn compile_cnf(grammar: &Grammar, root: Option<&str>) -> Result<CnfGrammar, GrammarError> {
    for rule in &grammar.rules {
        if rule.daughters.len() != 2 {
            return Err(GrammarError::NotBinary { name: rule.name.clone(), count: rule.daughters.len() });
        }
    }
    let root_name = match root {
        Some(r) => {
            if grammar.alias(r).is_none() {
                return Err(GrammarError::UnknownRoot(r.to_string()));
            }
            r.to_string()
        }
        None => match (grammar.rules.first(), grammar.aliases.first()) {
            (Some(rule), _) => rule.mother.clone(),
            (None, Some(alias)) => alias.name.clone(),
            (None, None) => return Err(GrammarError::NoRoot),
        },
    };

    let mut cnf = CnfGrammar::new();
    let mut ids = HashMap::new();
    for alias in &grammar.aliases {
        ids.insert(alias.name.as_str(), cnf.add_nonterminal(&alias.name, alias.category.clone()));
    }
    let resolve = |name: &str| ids.get(name).copied().ok_or_else(|| GrammarError::UnknownAlias { line: 0, name: name.to_string() });

    let mut per_mother: HashMap<usize, usize> = HashMap::new();
    for rule in &grammar.rules {
        *per_mother.entry(resolve(&rule.mother)?).or_default() += 1;
    }
    for word in &grammar.words {
        *per_mother.entry(resolve(&word.preterminal)?).or_default() += 1;
    }
    let uniform = |m: usize| 1.0 / per_mother[&m] as f64;

    for rule in &grammar.rules {
        let m = resolve(&rule.mother)?;
        let (l, r) = (resolve(&rule.daughters[0])?, resolve(&rule.daughters[1])?);
        cnf.push_binary(m, l, r, rule.prob.unwrap_or_else(|| uniform(m)), Origin::Explicit);
    }
    for word in &grammar.words {
        let m = resolve(&word.preterminal)?;
        let w = cnf.add_terminal(&word.word);
        cnf.push_lexical(m, w, word.prob.unwrap_or_else(|| uniform(m)), Origin::Explicit);
    }
    cnf.normalize();
    cnf.set_root(resolve(&root_name)?);
    Ok(cnf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grammar::parse_grammar;
    use proptest::prelude::*;

    #[test]
    fn g1_dimensions() {
        let g = parse_grammar(fixtures::G1_GRAMMAR).unwrap();
        let cnf = compile_cnf(&g, Some("V2")).unwrap();
        assert_eq!(cnf.num_nonterminals(), 11);
        assert_eq!(cnf.num_terminals(), 20);
        assert_eq!(cnf.binary_rules().len(), 7);
        assert_eq!(cnf.lexical_rules().len(), 20);
        assert_eq!(cnf.root_name(), "V2");
        assert!(cnf.max_normalization_error() < 1e-9);
        let v1 = cnf.nonterminal_id("V1").unwrap();
        assert!((cnf.mother_totals()[v1] - 1.0).abs() < 1e-12);
        assert_eq!(cnf.binary_rules()[1].prob, 0.9);
        assert_eq!(cnf.category(v1).get("BAR"), Some("1"));
    }

    #[test]
    fn default_root_is_first_rule_mother() {
        let g = parse_grammar(fixtures::G1_GRAMMAR).unwrap();
        assert_eq!(compile_cnf(&g, None).unwrap().root_name(), "V2");
        assert_eq!(compile_cnf(&g, Some("V1")).unwrap().root_name(), "V1");
        assert_eq!(compile_cnf(&g, Some("S")).unwrap_err(), GrammarError::UnknownRoot("S".into()));
    }

    #[test]
    fn words_only_grammar_has_no_binary_rules() {
        let g = parse_grammar("FEATURE X{a}\nALIAS A = [X a].\nWORD w : A.\nWORD v : A.").unwrap();
        let cnf = compile_cnf(&g, None).unwrap();
        assert!(cnf.binary_rules().is_empty());
        assert_eq!(cnf.lexical_rules()[0].prob, 0.5);
        assert_eq!(compile_cnf(&Grammar::default(), None).unwrap_err(), GrammarError::NoRoot);
    }

    #[test]
    fn non_binary_rules_are_rejected() {
        let g = parse_grammar("FEATURE X{a}\nALIAS A = [X a].\nPSRULE r : A --> A A A.").unwrap();
        assert_eq!(compile_cnf(&g, None).unwrap_err(), GrammarError::NotBinary { name: "r".into(), count: 3 });
    }

    proptest! {
        #[test]
        fn compiled_grammars_are_normalized(
            probs in prop::collection::vec(prop::option::of(0.001f64..=1.0), 1..12),
            mothers in prop::collection::vec(0usize..3, 12),
        ) {
            let mut text = String::from("FEATURE X{a, b, c}\nALIAS A = [X a].\nALIAS B = [X b].\nALIAS C = [X c].\n");
            let names = ["A", "B", "C"];
            for (i, p) in probs.iter().enumerate() {
                let m = names[mothers[i]];
                let prob = p.map(|p| format!(" ({p})")).unwrap_or_default();
                if i % 2 == 0 {
                    text.push_str(&format!("PSRULE r{i} : {m} --> B C.{prob}\n"));
                } else {
                    text.push_str(&format!("WORD w{i} : {m}.{prob}\n"));
                }
            }
            let cnf = compile_cnf(&parse_grammar(&text).unwrap(), None).unwrap();
            prop_assert!(cnf.max_normalization_error() < 1e-9);
        }
    }
}
