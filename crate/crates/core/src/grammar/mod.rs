//! Feature-based grammar source files and their compilation to CNF PCFGs.
//!
//! The source formalism declares features, aliases (named feature bundles),
//! binary phrase-structure rules over aliases, word declarations and
//! metagrammatical constraints. Alias names are the canonical nonterminal
//! identity once compiled; each compiled nonterminal keeps its feature bundle.

mod cnf;
mod compile;
mod lexer;
mod lexicon;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::constraints::Constraint;

pub use cnf::{BinaryRule, CnfGrammar, CnfTextError, LexicalRule, Origin, RuleRef, SymbolId, TerminalId};
pub use compile::compile_cnf;
pub use lexicon::{load_tag_lexicon, project_category, ProjectionError, TagLexicon};
pub use parser::parse_grammar;

pub(crate) use parser::parse_constraint_text;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: feature `{name}` declared twice")]
    DuplicateFeature { line: usize, name: String },
    #[error("line {line}: feature `{name}` has no values")]
    EmptyFeature { line: usize, name: String },
    #[error("line {line}: undeclared feature `{feature}`")]
    UndeclaredFeature { line: usize, feature: String },
    #[error("line {line}: value `{value}` is not declared for feature `{feature}`")]
    UndeclaredValue { line: usize, feature: String, value: String },
    #[error("line {line}: alias `{name}` declared twice")]
    DuplicateAlias { line: usize, name: String },
    #[error("line {line}: alias `{name}` denotes the same category as `{other}`")]
    DuplicateCategory { line: usize, name: String, other: String },
    #[error("line {line}: unknown alias `{name}`")]
    UnknownAlias { line: usize, name: String },
    #[error("line {line}: word `{word}` already declared for `{preterminal}`")]
    DuplicateWord { line: usize, word: String, preterminal: String },
    #[error("line {line}: probability {value} outside (0, 1]")]
    BadProbability { line: usize, value: f64 },
    #[error("line {line}: category index {index} out of range (expected 0, 1 or 2)")]
    BadIndex { line: usize, index: usize },
    #[error("line {line}: constraint `{name}` declared twice")]
    DuplicateConstraint { line: usize, name: String },
    #[error("line {line}: tag `{tag}` declared twice")]
    DuplicateTag { line: usize, tag: String },
    #[error("rule `{name}` has {count} daughters; only binary rules can be compiled")]
    NotBinary { name: String, count: usize },
    #[error("unknown root alias `{0}`")]
    UnknownRoot(String),
    #[error("grammar declares no aliases, so there is no root category")]
    NoRoot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub values: Vec<String>,
}

impl FeatureDecl {
    /// Position of `value` in the declared value order.
    pub fn rank(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// A partial assignment of feature values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Category(BTreeMap<String, String>);

impl Category {
    pub fn new() -> Category {
        Category(BTreeMap::new())
    }

    pub fn with(mut self, feature: &str, value: &str) -> Category {
        self.0.insert(feature.to_string(), value.to_string());
        self
    }

    pub fn insert(&mut self, feature: impl Into<String>, value: impl Into<String>) {
        self.0.insert(feature.into(), value.into());
    }

    pub fn get(&self, feature: &str) -> Option<&str> {
        self.0.get(feature).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(f, v)| (f.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps only the listed features.
    pub fn restrict<S: AsRef<str>>(&self, keep: &[S]) -> Category {
        Category(
            self.0
                .iter()
                .filter(|(f, _)| keep.iter().any(|k| k.as_ref() == f.as_str()))
                .map(|(f, v)| (f.clone(), v.clone()))
                .collect(),
        )
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (feat, val)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{feat} {val}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alias {
    pub name: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsRule {
    pub name: String,
    pub mother: String,
    pub daughters: Vec<String>,
    /// `None` when the source gives no probability.
    pub prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordDecl {
    pub word: String,
    pub preterminal: String,
    pub prob: Option<f64>,
}

/// A parsed grammar source file, declarations kept in source order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Grammar {
    pub features: Vec<FeatureDecl>,
    pub aliases: Vec<Alias>,
    pub rules: Vec<PsRule>,
    pub words: Vec<WordDecl>,
    pub constraints: Vec<Constraint>,
}

impl Grammar {
    pub fn feature(&self, name: &str) -> Option<&FeatureDecl> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn alias(&self, name: &str) -> Option<&Alias> {
        self.aliases.iter().find(|a| a.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
            && self.aliases.is_empty()
            && self.rules.is_empty()
            && self.words.is_empty()
            && self.constraints.is_empty()
    }
}

fn write_prob(f: &mut fmt::Formatter<'_>, prob: Option<f64>) -> fmt::Result {
    match prob {
        Some(p) => write!(f, " ({p})"),
        None => Ok(()),
    }
}

impl fmt::Display for Grammar {
    /// Pretty-prints in the source syntax; the output parses back to an equal grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for feat in &self.features {
            writeln!(f, "FEATURE {}{{{}}}", feat.name, feat.values.join(", "))?;
        }
        for alias in &self.aliases {
            writeln!(f, "ALIAS {} = {}.", alias.name, alias.category)?;
        }
        for rule in &self.rules {
            write!(f, "PSRULE {} : {} --> {}.", rule.name, rule.mother, rule.daughters.join(" "))?;
            write_prob(f, rule.prob)?;
            writeln!(f)?;
        }
        for word in &self.words {
            write!(f, "WORD {} : {}.", word.word, word.preterminal)?;
            write_prob(f, word.prob)?;
            writeln!(f)?;
        }
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
