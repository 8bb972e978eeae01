//! Labelled ordered trees, used for parser output and gold treebank analyses.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tree {
    Leaf(String),
    Node { label: String, children: Vec<Tree> },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

impl Tree {
    pub fn leaf(word: impl Into<String>) -> Tree {
        Tree::Leaf(word.into())
    }

    pub fn node(label: impl Into<String>, children: Vec<Tree>) -> Tree {
        Tree::Node { label: label.into(), children }
    }

    pub fn label(&self) -> &str {
        match self {
            Tree::Leaf(w) => w,
            Tree::Node { label, .. } => label,
        }
    }

    pub fn children(&self) -> &[Tree] {
        match self {
            Tree::Leaf(_) => &[],
            Tree::Node { children, .. } => children,
        }
    }

    /// The words at the leaves, left to right.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Tree::Leaf(w) => out.push(w),
            Tree::Node { children, .. } => children.iter().for_each(|c| c.collect_words(out)),
        }
    }

    pub fn num_words(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node { children, .. } => children.iter().map(Tree::num_words).sum(),
        }
    }

    /// `(label child ...)` with leaves written bare.
    pub fn to_paren(&self) -> String {
        self.to_string()
    }

    /// Square-bracket layout with the label repeated at each closing bracket:
    /// `[V2 [N1 [DT the DT][N0 cat N0]N1] ... V2]`.
    pub fn to_appendix3(&self) -> String {
        let mut out = String::new();
        self.write_appendix3(&mut out);
        out
    }

    fn write_appendix3(&self, out: &mut String) {
        match self {
            Tree::Leaf(w) => out.push_str(w),
            Tree::Node { label, children } => {
                out.push('[');
                out.push_str(label);
                for (i, c) in children.iter().enumerate() {
                    let prev_was_node = i > 0 && matches!(children[i - 1], Tree::Node { .. });
                    if !(prev_was_node && matches!(c, Tree::Node { .. })) {
                        out.push(' ');
                    }
                    c.write_appendix3(out);
                }
                if matches!(children.last(), Some(Tree::Leaf(_))) {
                    out.push(' ');
                }
                out.push_str(label);
                out.push(']');
            }
        }
    }

    /// Reads the `(label child ...)` form. The first symbol after `(` is the
    /// node label; an opening bracket directly after `(` gives an unlabelled node.
    pub fn parse_paren(text: &str) -> Result<Tree, TreeError> {
        let toks = tokenize(text);
        let mut pos = 0;
        let tree = parse_node(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(TreeError::Syntax { pos: toks[pos].0, msg: "trailing input after tree".into() });
        }
        Ok(tree)
    }
}

fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
            if !c.is_whitespace() {
                out.push((i, &text[i..i + 1]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

fn parse_node(toks: &[(usize, &str)], pos: &mut usize) -> Result<Tree, TreeError> {
    let end = toks.last().map(|t| t.0 + t.1.len()).unwrap_or(0);
    let err = |p: usize, msg: &str| TreeError::Syntax { pos: p, msg: msg.to_string() };
    let Some(&(p, tok)) = toks.get(*pos) else {
        return Err(err(end, "expected a tree"));
    };
    if tok == ")" {
        return Err(err(p, "unexpected `)`"));
    }
    if tok != "(" {
        *pos += 1;
        return Ok(Tree::Leaf(tok.to_string()));
    }
    *pos += 1;
    let label = match toks.get(*pos) {
        Some((_, "(")) => String::new(),
        Some((p, ")")) => return Err(err(*p, "empty node")),
        Some((_, l)) => {
            *pos += 1;
            l.to_string()
        }
        None => return Err(err(end, "unclosed `(`")),
    };
    let mut children = Vec::new();
    loop {
        match toks.get(*pos) {
            Some((_, ")")) => {
                *pos += 1;
                break;
            }
            Some(_) => children.push(parse_node(toks, pos)?),
            None => return Err(err(end, "unclosed `(`")),
        }
    }
    if children.is_empty() {
        return Err(err(p, "node without children"));
    }
    Ok(Tree::Node { label, children })
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tree::Leaf(w) => f.write_str(w),
            Tree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Tree {
        Tree::node(
            "V2",
            vec![
                Tree::node("N1", vec![Tree::node("DT", vec![Tree::leaf("the")]), Tree::node("N0", vec![Tree::leaf("cat")])]),
                Tree::node("V0", vec![Tree::leaf("sleeps")]),
            ],
        )
    }

    #[test]
    fn paren_round_trip() {
        let t = sample();
        assert_eq!(t.to_paren(), "(V2 (N1 (DT the) (N0 cat)) (V0 sleeps))");
        assert_eq!(Tree::parse_paren(&t.to_paren()).unwrap(), t);
        assert_eq!(t.words(), vec!["the", "cat", "sleeps"]);
        assert_eq!(t.num_words(), 3);
    }

    #[test]
    fn appendix3_layout() {
        assert_eq!(sample().to_appendix3(), "[V2 [N1 [DT the DT][N0 cat N0]N1][V0 sleeps V0]V2]");
    }

    #[test]
    fn unlabelled_nodes_and_errors() {
        let t = Tree::parse_paren("((A a) (B b))").unwrap();
        assert_eq!(t.label(), "");
        assert_eq!(t.children().len(), 2);
        assert!(Tree::parse_paren("(A a").is_err());
        assert!(Tree::parse_paren("(A a))").is_err());
        assert!(Tree::parse_paren("()").is_err());
        assert!(Tree::parse_paren("").is_err());
    }
}
