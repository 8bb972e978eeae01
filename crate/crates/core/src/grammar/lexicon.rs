//! Tag lexicons: part-of-speech tags described as feature bundles, projected
//! onto a grammar's aliases so tag sequences can be parsed directly.

use std::collections::HashSet;

use thiserror::Error;

use super::lexer::Tok;
use super::parser::Parser;
use super::{Alias, Category, FeatureDecl, GrammarError, WordDecl};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("no alias matches {0}")]
    NoMatch(Category),
    #[error("{category} matches several aliases: {}", aliases.join(", "))]
    Ambiguous { category: Category, aliases: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagLexicon {
    entries: Vec<(String, Category)>,
}

impl TagLexicon {
    pub fn get(&self, tag: &str) -> Option<&Category> {
        self.entries.iter().find(|(t, _)| t == tag).map(|(_, c)| c)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Category)> {
        self.entries.iter().map(|(t, c)| (t.as_str(), c))
    }

    /// One word declaration per tag, with the tag as the terminal and its
    /// projected alias as the preterminal.
    pub fn word_decls<S: AsRef<str>>(&self, keep: &[S], aliases: &[Alias]) -> Result<Vec<WordDecl>, ProjectionError> {
        self.entries
            .iter()
            .map(|(tag, cat)| {
                Ok(WordDecl { word: tag.clone(), preterminal: project_category(cat, keep, aliases)?, prob: None })
            })
            .collect()
    }
}

/// Reads `TAG : [f v, ...].` lines.
pub fn load_tag_lexicon(text: &str, features: &[FeatureDecl]) -> Result<TagLexicon, GrammarError> {
    let mut p = Parser::new(text)?;
    let mut seen = HashSet::new();
    let mut lex = TagLexicon::default();
    while !p.at_end() {
        let line = p.line();
        let tag = p.name()?;
        p.expect(Tok::Colon)?;
        let cat = p.category(features)?;
        p.expect(Tok::Period)?;
        if !seen.insert(tag.clone()) {
            return Err(GrammarError::DuplicateTag { line, tag });
        }
        lex.entries.push((tag, cat));
    }
    Ok(lex)
}

/// Finds the unique alias whose category agrees with `full` on the `keep` features.
pub fn project_category<S: AsRef<str>>(full: &Category, keep: &[S], aliases: &[Alias]) -> Result<String, ProjectionError> {
    let target = full.restrict(keep);
    let hits: Vec<&Alias> = aliases.iter().filter(|a| a.category.restrict(keep) == target).collect();
    match hits.as_slice() {
        [] => Err(ProjectionError::NoMatch(target)),
        [one] => Ok(one.name.clone()),
        many => Err(ProjectionError::Ambiguous { category: target, aliases: many.iter().map(|a| a.name.clone()).collect() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::grammar::parse_grammar;

    const KEEP: [&str; 3] = ["N", "V", "BAR"];

    fn features() -> Vec<FeatureDecl> {
        let mut f = parse_grammar(fixtures::G1_GRAMMAR).unwrap().features;
        f.push(FeatureDecl { name: "PER".into(), values: vec!["1".into(), "2".into(), "3".into()] });
        f.push(FeatureDecl { name: "NUM".into(), values: vec!["Sg".into(), "Pl".into()] });
        f
    }

    #[test]
    fn projects_full_bundles_onto_aliases() {
        let aliases = parse_grammar(fixtures::G1_GRAMMAR).unwrap().aliases;
        let nns = Category::new().with("N", "+").with("V", "-").with("BAR", "0").with("PER", "3").with("NUM", "Sg");
        assert_eq!(project_category(&nns, &KEEP, &aliases).unwrap(), "N0");
        let v2 = Category::new().with("V", "+").with("N", "-").with("BAR", "2");
        assert_eq!(project_category(&v2, &KEEP, &aliases).unwrap(), "V2");
        let a2 = Category::new().with("N", "+").with("V", "+").with("BAR", "2");
        assert!(matches!(project_category(&a2, &KEEP, &aliases), Err(ProjectionError::NoMatch(_))));
        let minor = Category::new().with("MINOR", "DT");
        assert!(matches!(project_category(&minor, &KEEP, &aliases), Err(ProjectionError::Ambiguous { .. })));
    }

    #[test]
    fn projection_is_identity_on_alias_definitions() {
        let aliases = parse_grammar(fixtures::G1_GRAMMAR).unwrap().aliases;
        let all = ["N", "V", "BAR", "MINOR"];
        for a in &aliases {
            assert_eq!(project_category(&a.category, &all, &aliases).unwrap(), a.name);
        }
    }

    #[test]
    fn loads_tag_lexicon() {
        let lex = load_tag_lexicon(fixtures::TAG_LEXICON, &features()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("NNS").unwrap().get("NUM"), Some("Sg"));
        let aliases = parse_grammar(fixtures::G1_GRAMMAR).unwrap().aliases;
        let words = lex.word_decls(&KEEP, &aliases).unwrap();
        assert!(words.iter().all(|w| w.preterminal == "N0"));

        let one = load_tag_lexicon("NNS : [N +, V -, BAR 0, PER 3, NUM Sg].", &features()).unwrap();
        assert_eq!(one.len(), 1);
        assert!(load_tag_lexicon("", &features()).unwrap().is_empty());
    }

    #[test]
    fn lexicon_errors() {
        let dup = "NNS : [N +].\nNNS : [N -].";
        assert_eq!(load_tag_lexicon(dup, &features()).unwrap_err(), GrammarError::DuplicateTag { line: 2, tag: "NNS".into() });
        assert!(matches!(load_tag_lexicon("X : [Q 1].", &features()), Err(GrammarError::UndeclaredFeature { .. })));
        assert!(matches!(load_tag_lexicon("X : [NUM Du].", &features()), Err(GrammarError::UndeclaredValue { .. })));
    }
}
