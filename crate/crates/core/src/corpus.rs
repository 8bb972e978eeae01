//! Line-oriented corpus and treebank files.

use crate::tree::{Tree, TreeError};

/// One sentence per line, tokens separated by whitespace; blank lines are skipped.
pub fn read_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn write_corpus<S: AsRef<str>>(corpus: &[Vec<S>]) -> String {
    let mut out = String::new();
    for s in corpus {
        let line: Vec<&str> = s.iter().map(|t| t.as_ref()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// One bracketed tree per line; blank lines are skipped. Errors carry the 1-based line.
pub fn read_treebank(text: &str) -> Result<Vec<Tree>, (usize, TreeError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Tree::parse_paren(l).map_err(|e| (i + 1, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_round_trip() {
        let text = "the cat  chases the ball\n\n  a bird\n";
        let c = read_corpus(text);
        assert_eq!(c, vec![vec!["the", "cat", "chases", "the", "ball"], vec!["a", "bird"]]);
        assert_eq!(read_corpus(&write_corpus(&c)), c);
    }

    #[test]
    fn treebank_lines() {
        let tb = read_treebank("(S (A a) (B b))\n\n(S (A a))\n").unwrap();
        assert_eq!(tb.len(), 2);
        assert_eq!(read_treebank("(S (A a)\n").unwrap_err().0, 1);
    }
}
