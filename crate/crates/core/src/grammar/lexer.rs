use super::GrammarError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Names, feature values (`+`, `-`, `Sg`), words and tags.
    Word(String),
    /// Numeric literal, kept as text; usable as a value token as well.
    Number(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Period,
    Colon,
    Semicolon,
    Equals,
    Pipe,
    Arrow,
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '$' | '&' | '\'')
}

/// Splits grammar text into tokens. A `;` that is the first non-blank
/// character on a line starts a comment; elsewhere it is a separator.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, GrammarError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        if line.trim_start().starts_with(';') {
            continue;
        }
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Token>, tok: Tok| out.push(Token { tok, line: line_no, col });
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let single = match c {
                '{' => Some(Tok::LBrace),
                '}' => Some(Tok::RBrace),
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ',' => Some(Tok::Comma),
                '.' => Some(Tok::Period),
                ':' => Some(Tok::Colon),
                ';' => Some(Tok::Semicolon),
                '=' => Some(Tok::Equals),
                '|' => Some(Tok::Pipe),
                '+' => Some(Tok::Word("+".into())),
                _ => None,
            };
            if let Some(tok) = single {
                push(&mut out, tok);
                i += 1;
                continue;
            }
            if c == '-' {
                if chars.get(i + 1) == Some(&'-') {
                    if chars.get(i + 2) == Some(&'>') {
                        push(&mut out, Tok::Arrow);
                        i += 3;
                    } else {
                        push(&mut out, Tok::Lower);
                        i += 2;
                    }
                } else {
                    push(&mut out, Tok::Word("-".into()));
                    i += 1;
                }
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                if i < chars.len() && is_word_char(chars[i]) {
                    while i < chars.len() && is_word_char(chars[i]) {
                        i += 1;
                    }
                    push(&mut out, Tok::Word(chars[start..i].iter().collect()));
                } else {
                    push(&mut out, Tok::Number(chars[start..i].iter().collect()));
                }
                continue;
            }
            if is_word_char(c) {
                let start = i;
                while i < chars.len() && is_word_char(chars[i]) {
                    i += 1;
                }
                push(&mut out, Tok::Word(chars[start..i].iter().collect()));
                continue;
            }
            return Err(GrammarError::Syntax {
                line: line_no,
                col,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}
