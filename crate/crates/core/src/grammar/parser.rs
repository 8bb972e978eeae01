use std::collections::{HashMap, HashSet};

use super::lexer::{tokenize, Tok, Token};
use super::{Alias, Category, FeatureDecl, Grammar, GrammarError, PsRule, WordDecl};
use crate::constraints::{CategoryPattern, Constraint, Equation, FeatureReq, FeatureTest, Term};

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end_line: usize,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Parser, GrammarError> {
        Ok(Parser { toks: tokenize(text)?, pos: 0, end_line: text.lines().count().max(1) })
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    pub(crate) fn line(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.line).unwrap_or(self.end_line)
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> GrammarError {
        let (line, col) = match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => (self.end_line, 0),
        };
        let msg = msg.into();
        let found = match self.peek() {
            Some(t) => describe(t),
            None => "end of input".to_string(),
        };
        GrammarError::Syntax { line, col, msg: format!("{msg}, found {found}") }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<(), GrammarError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {}", describe(&tok))))
        }
    }

    pub(crate) fn name(&mut self) -> Result<String, GrammarError> {
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    /// A feature value or word: names, `+`/`-`, or bare numbers.
    fn value(&mut self) -> Result<String, GrammarError> {
        match self.peek() {
            Some(Tok::Word(w)) | Some(Tok::Number(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error("expected a value")),
        }
    }

    fn number(&mut self) -> Result<String, GrammarError> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error("expected a number")),
        }
    }

    fn index(&mut self) -> Result<usize, GrammarError> {
        let line = self.line();
        let text = self.number()?;
        let index: usize = text.parse().map_err(|_| GrammarError::Syntax { line, col: 0, msg: format!("bad index `{text}`") })?;
        if index > 2 {
            return Err(GrammarError::BadIndex { line, index });
        }
        Ok(index)
    }

    fn optional_prob(&mut self) -> Result<Option<f64>, GrammarError> {
        if !self.eat(&Tok::LParen) {
            return Ok(None);
        }
        let line = self.line();
        let text = self.number()?;
        self.expect(Tok::RParen)?;
        let value: f64 = text.parse().map_err(|_| GrammarError::Syntax { line, col: 0, msg: format!("bad number `{text}`") })?;
        if !(value > 0.0 && value <= 1.0) {
            return Err(GrammarError::BadProbability { line, value });
        }
        Ok(Some(value))
    }

    /// `[f v, f v, ...]`, validated against `features`.
    pub(crate) fn category(&mut self, features: &[FeatureDecl]) -> Result<Category, GrammarError> {
        self.expect(Tok::LBracket)?;
        let mut cat = Category::new();
        if self.eat(&Tok::RBracket) {
            return Ok(cat);
        }
        loop {
            let line = self.line();
            let feature = self.name()?;
            let value = self.value()?;
            check_value(features, line, &feature, &value)?;
            if cat.get(&feature).is_some() {
                return Err(GrammarError::Syntax { line, col: 0, msg: format!("feature `{feature}` assigned twice") });
            }
            cat.insert(feature, value);
            if self.eat(&Tok::RBracket) {
                return Ok(cat);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn pattern(&mut self, features: &[FeatureDecl]) -> Result<CategoryPattern, GrammarError> {
        self.expect(Tok::LBracket)?;
        let mut reqs = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(CategoryPattern { reqs });
        }
        loop {
            let line = self.line();
            let feature = self.name()?;
            check_feature(features, line, &feature)?;
            let test = if self.eat(&Tok::LParen) {
                match self.peek() {
                    Some(Tok::Word(w)) if w == "NOT" => self.pos += 1,
                    _ => return Err(self.error("expected NOT")),
                }
                let v = self.value()?;
                self.expect(Tok::RParen)?;
                check_value(features, line, &feature, &v)?;
                FeatureTest::IsNot(v)
            } else if matches!(self.peek(), Some(Tok::Word(_)) | Some(Tok::Number(_))) {
                let v = self.value()?;
                check_value(features, line, &feature, &v)?;
                FeatureTest::Is(v)
            } else {
                FeatureTest::Specified
            };
            reqs.push(FeatureReq { feature, test });
            if self.eat(&Tok::RBracket) {
                return Ok(CategoryPattern { reqs });
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn term(&mut self, features: &[FeatureDecl]) -> Result<Term, GrammarError> {
        let line = self.line();
        if matches!(self.peek(), Some(Tok::Word(_))) && self.peek_at(1) == Some(&Tok::LParen) {
            let feature = self.name()?;
            check_feature(features, line, &feature)?;
            self.expect(Tok::LParen)?;
            let index = self.index()?;
            self.expect(Tok::RParen)?;
            if self.eat(&Tok::Lower) {
                let text = self.number()?;
                let steps: usize =
                    text.parse().map_err(|_| GrammarError::Syntax { line, col: 0, msg: format!("bad step count `{text}`") })?;
                let order = features.iter().find(|f| f.name == feature).map(|f| f.values.clone()).unwrap_or_default();
                return Ok(Term::Lowered { feature, index, steps, order });
            }
            return Ok(Term::Slot { feature, index });
        }
        Ok(Term::Value(self.value()?))
    }

    fn equation(&mut self, features: &[FeatureDecl]) -> Result<Equation, GrammarError> {
        let line = self.line();
        let feature = self.name()?;
        check_feature(features, line, &feature)?;
        self.expect(Tok::LParen)?;
        let index = self.index()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Equals)?;
        let mut alternatives = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                alternatives.push(self.term(features)?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Pipe)?;
            }
        } else {
            alternatives.push(self.term(features)?);
        }
        for t in &alternatives {
            if let Term::Value(v) = t {
                check_value(features, line, &feature, v)?;
            }
        }
        Ok(Equation { feature, index, alternatives })
    }

    /// Body of a constraint after the `CONSTRAINT` keyword.
    fn constraint(&mut self, features: &[FeatureDecl]) -> Result<Constraint, GrammarError> {
        let name = self.name()?;
        self.expect(Tok::Colon)?;
        let mother = self.pattern(features)?;
        self.expect(Tok::Arrow)?;
        let first = self.pattern(features)?;
        let unordered = self.eat(&Tok::Comma);
        let second = self.pattern(features)?;
        self.expect(Tok::Semicolon)?;
        let mut equations = Vec::new();
        if !self.eat(&Tok::Period) {
            loop {
                equations.push(self.equation(features)?);
                if self.eat(&Tok::Period) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        Ok(Constraint { name, mother, daughters: [first, second], unordered, equations })
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Number(n) => format!("`{n}`"),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Period => "`.`".into(),
        Tok::Colon => "`:`".into(),
        Tok::Semicolon => "`;`".into(),
        Tok::Equals => "`=`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Arrow => "`-->`".into(),
        Tok::Lower => "`--`".into(),
    }
}

fn check_feature(features: &[FeatureDecl], line: usize, feature: &str) -> Result<(), GrammarError> {
    if features.iter().any(|f| f.name == feature) {
        Ok(())
    } else {
        Err(GrammarError::UndeclaredFeature { line, feature: feature.to_string() })
    }
}

pub(crate) fn check_value(features: &[FeatureDecl], line: usize, feature: &str, value: &str) -> Result<(), GrammarError> {
    match features.iter().find(|f| f.name == feature) {
        None => Err(GrammarError::UndeclaredFeature { line, feature: feature.to_string() }),
        Some(f) if f.rank(value).is_none() => {
            Err(GrammarError::UndeclaredValue { line, feature: feature.to_string(), value: value.to_string() })
        }
        Some(_) => Ok(()),
    }
}

/// Parses a grammar source file. Declarations may appear in any order;
/// alias references are resolved once the whole file has been read.
pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut p = Parser::new(text)?;
    let mut g = Grammar::default();
    let mut alias_lines = HashMap::new();
    let mut rule_lines = Vec::new();
    let mut word_lines = Vec::new();
    let mut constraint_names = HashSet::new();

    while !p.at_end() {
        let line = p.line();
        let keyword = p.name()?;
        match keyword.as_str() {
            "FEATURE" => {
                let name = p.name()?;
                p.expect(Tok::LBrace)?;
                let mut values: Vec<String> = Vec::new();
                if !p.eat(&Tok::RBrace) {
                    loop {
                        let v = p.value()?;
                        if values.contains(&v) {
                            return Err(GrammarError::Syntax { line, col: 0, msg: format!("value `{v}` listed twice") });
                        }
                        values.push(v);
                        if p.eat(&Tok::RBrace) {
                            break;
                        }
                        p.expect(Tok::Comma)?;
                    }
                }
                p.eat(&Tok::Period);
                if g.feature(&name).is_some() {
                    return Err(GrammarError::DuplicateFeature { line, name });
                }
                if values.is_empty() {
                    return Err(GrammarError::EmptyFeature { line, name });
                }
                g.features.push(FeatureDecl { name, values });
            }
            "ALIAS" => {
                let name = p.name()?;
                p.expect(Tok::Equals)?;
                let category = p.category(&g.features)?;
                p.expect(Tok::Period)?;
                if alias_lines.contains_key(&name) {
                    return Err(GrammarError::DuplicateAlias { line, name });
                }
                if let Some(other) = g.aliases.iter().find(|a| a.category == category) {
                    return Err(GrammarError::DuplicateCategory { line, name, other: other.name.clone() });
                }
                alias_lines.insert(name.clone(), line);
                g.aliases.push(Alias { name, category });
            }
            "PSRULE" => {
                let name = p.name()?;
                p.expect(Tok::Colon)?;
                let mother = p.name()?;
                p.expect(Tok::Arrow)?;
                let mut daughters = vec![p.name()?];
                loop {
                    p.eat(&Tok::Comma);
                    if p.eat(&Tok::Period) {
                        break;
                    }
                    daughters.push(p.name()?);
                }
                let prob = p.optional_prob()?;
                rule_lines.push(line);
                g.rules.push(PsRule { name, mother, daughters, prob });
            }
            "WORD" => {
                let word = p.value()?;
                p.expect(Tok::Colon)?;
                let preterminal = p.name()?;
                p.expect(Tok::Period)?;
                let prob = p.optional_prob()?;
                if g.words.iter().any(|w| w.word == word && w.preterminal == preterminal) {
                    return Err(GrammarError::DuplicateWord { line, word, preterminal });
                }
                word_lines.push(line);
                g.words.push(WordDecl { word, preterminal, prob });
            }
            "CONSTRAINT" => {
                let c = p.constraint(&g.features)?;
                if !constraint_names.insert(c.name.clone()) {
                    return Err(GrammarError::DuplicateConstraint { line, name: c.name });
                }
                g.constraints.push(c);
            }
            _ => {
                p.pos -= 1;
                return Err(p.error("expected FEATURE, ALIAS, PSRULE, WORD or CONSTRAINT"));
            }
        }
    }

    let known = |name: &str| alias_lines.contains_key(name);
    for (rule, line) in g.rules.iter().zip(&rule_lines) {
        for sym in std::iter::once(&rule.mother).chain(&rule.daughters) {
            if !known(sym) {
                return Err(GrammarError::UnknownAlias { line: *line, name: sym.clone() });
            }
        }
    }
    for (w, line) in g.words.iter().zip(&word_lines) {
        if !known(&w.preterminal) {
            return Err(GrammarError::UnknownAlias { line: *line, name: w.preterminal.clone() });
        }
    }
    Ok(g)
}

/// Parses one `CONSTRAINT` declaration against an existing feature set.
pub(crate) fn parse_constraint_text(text: &str, features: &[FeatureDecl]) -> Result<Constraint, GrammarError> {
    let mut p = Parser::new(text)?;
    match p.name() {
        Ok(k) if k == "CONSTRAINT" => {}
        _ => {
            p.pos = 0;
            return Err(p.error("expected CONSTRAINT"));
        }
    }
    let c = p.constraint(features)?;
    if !p.at_end() {
        return Err(p.error("expected end of constraint"));
    }
    Ok(c)
}
