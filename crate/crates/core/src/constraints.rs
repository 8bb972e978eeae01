//! Metagrammatical constraints and the implicit rules they license.
//!
//! A constraint pairs a three-slot rule pattern (mother, first daughter,
//! second daughter) with feature equations. Daughter patterns written with a
//! comma between them (`[], []`) are unordered: the constraint may bind its
//! daughter slots to the candidate's daughters in either order, which is how
//! a head may sit on either side. Juxtaposed daughter patterns (`[BAR 0] [BAR 0]`)
//! bind positionally.
//!
//! In an equation `F(i) = (... | G(j) -- k)`, the lowered term holds when the
//! value of `G` on slot `j` sits exactly `k` steps below the value of `F` on
//! slot `i` in the feature's declared value order. For the headedness
//! constraint this reads as "the head's BAR equals the mother's, or is one less".

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::grammar::{self, Alias, Category, CnfGrammar, FeatureDecl, GrammarError, Origin};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureTest {
    /// The feature must carry some value.
    Specified,
    Is(String),
    /// The feature must carry a value other than this one.
    IsNot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureReq {
    pub feature: String,
    pub test: FeatureTest,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryPattern {
    pub reqs: Vec<FeatureReq>,
}

impl CategoryPattern {
    pub fn is_empty(&self) -> bool {
        self.reqs.is_empty()
    }

    pub fn matches(&self, cat: &Category) -> bool {
        self.reqs.iter().all(|r| match (&r.test, cat.get(&r.feature)) {
            (_, None) => false,
            (FeatureTest::Specified, Some(_)) => true,
            (FeatureTest::Is(v), Some(have)) => v == have,
            (FeatureTest::IsNot(v), Some(have)) => v != have,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Slot { feature: String, index: usize },
    /// `feature(index) -- steps`; `order` is the feature's declared value order.
    Lowered { feature: String, index: usize, steps: usize, order: Vec<String> },
    Value(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub feature: String,
    pub index: usize,
    /// Disjunction; a single entry is a plain equation.
    pub alternatives: Vec<Term>,
}

impl Equation {
    fn holds(&self, slots: [&Category; 3]) -> bool {
        let Some(lhs) = slots[self.index].get(&self.feature) else {
            return false;
        };
        self.alternatives.iter().any(|t| match t {
            Term::Value(v) => v == lhs,
            Term::Slot { feature, index } => slots[*index].get(feature) == Some(lhs),
            Term::Lowered { feature, index, steps, order } => {
                let rank = |v: &str| order.iter().position(|o| o == v);
                match (slots[*index].get(feature).and_then(rank), rank(lhs)) {
                    (Some(lower), Some(upper)) => lower + steps == upper,
                    _ => false,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub mother: CategoryPattern,
    pub daughters: [CategoryPattern; 2],
    pub unordered: bool,
    pub equations: Vec<Equation>,
}

impl Constraint {
    /// Constraints with a non-empty mother pattern license rules; the rest only filter.
    pub fn is_licensing(&self) -> bool {
        !self.mother.is_empty()
    }
}

/// A binary rule over aliases considered for implicit inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCandidate {
    pub mother: String,
    pub left: String,
    pub right: String,
    pub bundles: [Category; 3],
}

impl RuleCandidate {
    /// Resolves three alias names; `None` if any is not declared.
    pub fn from_aliases(mother: &str, left: &str, right: &str, aliases: &[Alias]) -> Option<RuleCandidate> {
        let find = |n: &str| aliases.iter().find(|a| a.name == n).map(|a| a.category.clone());
        Some(RuleCandidate {
            mother: mother.to_string(),
            left: left.to_string(),
            right: right.to_string(),
            bundles: [find(mother)?, find(left)?, find(right)?],
        })
    }
}

impl fmt::Display for RuleCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --> {} {}", self.mother, self.left, self.right)
    }
}

/// Parses a single `CONSTRAINT name : pattern ; equations .` declaration.
pub fn parse_constraint(text: &str, features: &[FeatureDecl]) -> Result<Constraint, GrammarError> {
    grammar::parse_constraint_text(text, features)
}

/// True unless the constraint applies to the candidate and no binding of
/// daughter slots satisfies all of its equations.
pub fn satisfies(candidate: &RuleCandidate, constraint: &Constraint) -> bool {
    let [m, d1, d2] = &candidate.bundles;
    let bindings: &[[&Category; 3]] = if constraint.unordered { &[[m, d1, d2], [m, d2, d1]] } else { &[[m, d1, d2]] };
    let mut applicable = false;
    for slots in bindings {
        let matched = constraint.mother.matches(slots[0])
            && constraint.daughters[0].matches(slots[1])
            && constraint.daughters[1].matches(slots[2]);
        if !matched {
            continue;
        }
        applicable = true;
        if constraint.equations.iter().all(|e| e.holds(*slots)) {
            return true;
        }
    }
    !applicable
}

/// All binary rules over the alias set that pass every constraint, are not
/// already rules of `cnf`, and whose mother is licensed. When no constraint
/// has a mother pattern, every alias may be a mother. Sorted by
/// (mother, left, right) name.
pub fn enumerate_implicit(cnf: &CnfGrammar, constraints: &[Constraint], aliases: &[Alias]) -> Vec<RuleCandidate> {
    let licensing: Vec<&Constraint> = constraints.iter().filter(|c| c.is_licensing()).collect();
    let mut names: Vec<&Alias> = aliases.iter().collect();
    names.sort_by(|a, b| a.name.cmp(&b.name));
    let mothers: Vec<&Alias> = names
        .iter()
        .copied()
        .filter(|m| licensing.is_empty() || licensing.iter().any(|c| c.mother.matches(&m.category)))
        .collect();

    let per_mother: Vec<Vec<RuleCandidate>> = mothers
        .par_iter()
        .map(|m| {
            let mut out = Vec::new();
            for l in &names {
                for r in &names {
                    if cnf.has_binary_named(&m.name, &l.name, &r.name) {
                        continue;
                    }
                    let cand = RuleCandidate {
                        mother: m.name.clone(),
                        left: l.name.clone(),
                        right: r.name.clone(),
                        bundles: [m.category.clone(), l.category.clone(), r.category.clone()],
                    };
                    if constraints.iter().all(|c| satisfies(&cand, c)) {
                        out.push(cand);
                    }
                }
            }
            out
        })
        .collect();
    per_mother.into_iter().flatten().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Every implicit rule starts at exactly the floor.
    Deterministic,
    /// The floor is scaled per rule by a factor drawn uniformly from [0.5, 1.5].
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("floor probability must lie in (0, 1), got {0}")]
    BadFloor(f64),
    #[error("implicit rules for `{mother}` would take {mass:.4} of its probability mass (must be < 1)")]
    InfeasibleMass { mother: String, mass: f64 },
    #[error("rule candidate `{0}` uses a symbol the grammar does not declare")]
    UnknownSymbol(String),
}

/// Adds `implicit` to a copy of `cnf` at the floor probability and rescales
/// each mother's explicit rules so the mother's distribution sums to one.
pub fn build_implicit_grammar(
    cnf: &CnfGrammar,
    implicit: &[RuleCandidate],
    floor: f64,
    init: InitMode,
) -> Result<CnfGrammar, ConstraintError> {
    if !(floor > 0.0 && floor < 1.0) {
        return Err(ConstraintError::BadFloor(floor));
    }
    let mut out = cnf.clone();
    let mut rng = match init {
        InitMode::Deterministic => None,
        InitMode::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };

    let mut per_mother = vec![0usize; cnf.num_nonterminals()];
    let mut mass = vec![0.0f64; cnf.num_nonterminals()];
    let mut new_rules = Vec::with_capacity(implicit.len());
    for cand in implicit {
        let ids = (cnf.nonterminal_id(&cand.mother), cnf.nonterminal_id(&cand.left), cnf.nonterminal_id(&cand.right));
        let (Some(m), Some(l), Some(r)) = ids else {
            return Err(ConstraintError::UnknownSymbol(cand.to_string()));
        };
        let p = match rng.as_mut() {
            Some(rng) => floor * rng.gen_range(0.5..1.5),
            None => floor,
        };
        per_mother[m] += 1;
        mass[m] += p;
        new_rules.push((m, l, r, p));
    }
    for m in 0..cnf.num_nonterminals() {
        let nominal = floor * per_mother[m] as f64;
        if nominal >= 1.0 || mass[m] >= 1.0 {
            return Err(ConstraintError::InfeasibleMass {
                mother: cnf.nonterminal_name(m).to_string(),
                mass: nominal.max(mass[m]),
            });
        }
    }

    out.scale_mothers(|m| if per_mother[m] > 0 { 1.0 - mass[m] } else { 1.0 });
    for (m, l, r, p) in new_rules {
        out.push_binary(m, l, r, p, Origin::Implicit);
    }
    // a mother with implicit rules but no explicit ones gets its implicit rules renormalized
    let explicit_mothers: HashSet<usize> = cnf.rule_mothers().collect();
    let orphan: Vec<usize> = (0..cnf.num_nonterminals())
        .filter(|m| per_mother[*m] > 0 && !explicit_mothers.contains(m))
        .collect();
    if !orphan.is_empty() {
        out.normalize_mothers(&orphan);
    }
    Ok(out)
}

impl fmt::Display for CategoryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, r) in self.reqs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match &r.test {
                FeatureTest::Specified => write!(f, "{}", r.feature)?,
                FeatureTest::Is(v) => write!(f, "{} {}", r.feature, v)?,
                FeatureTest::IsNot(v) => write!(f, "{}(NOT {})", r.feature, v)?,
            }
        }
        f.write_str("]")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Slot { feature, index } => write!(f, "{feature}({index})"),
            Term::Lowered { feature, index, steps, .. } => write!(f, "{feature}({index}) -- {steps}"),
            Term::Value(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})=", self.feature, self.index)?;
        if self.alternatives.len() == 1 {
            write!(f, "{}", self.alternatives[0])
        } else {
            let alts: Vec<String> = self.alternatives.iter().map(|t| t.to_string()).collect();
            write!(f, "({})", alts.join(" | "))
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.unordered { ", " } else { " " };
        write!(f, "CONSTRAINT {} : {} --> {}{}{};", self.name, self.mother, self.daughters[0], sep, self.daughters[1])?;
        let eqs: Vec<String> = self.equations.iter().map(|e| e.to_string()).collect();
        if !eqs.is_empty() {
            write!(f, " {}", eqs.join(", "))?;
        }
        f.write_str(".")
    }
}
