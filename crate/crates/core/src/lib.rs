//! Feature-based grammar compilation, constraint-licensed implicit rules,
//! CYK parsing and inside-outside training for CNF PCFGs.

pub mod chart;
pub mod constraints;
pub mod corpus;
pub mod eval;
pub mod generate;
pub mod grammar;
pub mod metrics;
pub mod prob;
pub mod training;
pub mod tree;

/// Grammar and corpus fixtures bundled with the crate.
pub mod fixtures {
    /// The X-bar grammar G1 with its HEAD1 and PT1 constraints.
    pub const G1_GRAMMAR: &str = include_str!("../fixtures/g1.gram");
    /// A trained explicit/implicit G1 in rule-per-line form.
    pub const APPENDIX2_PCFG: &str = include_str!("../fixtures/appendix2.pcfg");
    /// Sentences with preposed modifiers that explicit G1 cannot parse.
    pub const SUPPLEMENTARY: &str = include_str!("../fixtures/supplementary.txt");
    /// Two tags described as feature bundles.
    pub const TAG_LEXICON: &str = include_str!("../fixtures/tags.lex");
    /// The fourteen-word example sentence.
    pub const LONG_SENTENCE: &str = "passionately with the sheep the cat chases the ball with the boy so slowly";
}
