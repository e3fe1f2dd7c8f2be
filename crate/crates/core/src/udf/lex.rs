//! Tokenizer shared by the scalar-expression parser and the plan DSL.

use crate::error::{LaraError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// `⊥`
    Bottom,
    Sym(&'static str),
    Newline,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const SYMBOLS: &[(&str, &str)] = &[
    ("->", "->"),
    ("→", "->"),
    ("<=", "<="),
    ("≤", "<="),
    (">=", ">="),
    ("≥", ">="),
    ("!=", "!="),
    ("≠", "!="),
    ("<>", "!="),
    ("==", "="),
    ("&&", "&&"),
    ("||", "||"),
    ("×", "*"),
    ("−", "-"),
    ("+", "+"),
    ("-", "-"),
    ("*", "*"),
    ("/", "/"),
    ("=", "="),
    ("<", "<"),
    (">", ">"),
    ("!", "!"),
    ("(", "("),
    (")", ")"),
    ("[", "["),
    ("]", "]"),
    ("{", "{"),
    ("}", "}"),
    (",", ","),
    (":", ":"),
    ("|", "|"),
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Split `src` into tokens. Newlines are kept (the plan DSL is line based);
/// `//` starts a comment that runs to the end of the line.
pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (byte, c) = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let rest = &line[byte..];
            if rest.starts_with("//") {
                break;
            }
            let err = |message: String| LaraError::Parse {
                line: line_no,
                column,
                message,
            };
            if is_ident_start(c) {
                let mut j = i;
                while j < chars.len() && is_ident_char(chars[j].1) {
                    j += 1;
                }
                // primes belong to the identifier: c', t'', v′
                while j < chars.len() && (chars[j].1 == '\'' || chars[j].1 == '′') {
                    j += 1;
                }
                let end = chars.get(j).map(|(b, _)| *b).unwrap_or(line.len());
                let ident = line[byte..end].replace('′', "'");
                out.push(Token {
                    tok: Tok::Ident(ident),
                    line: line_no,
                    column,
                });
                i = j;
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|(_, d)| d.is_ascii_digit())) {
                let mut j = i;
                let mut is_float = false;
                while j < chars.len() {
                    let d = chars[j].1;
                    if d.is_ascii_digit() {
                        j += 1;
                    } else if d == '.' && !is_float {
                        is_float = true;
                        j += 1;
                    } else if (d == 'e' || d == 'E')
                        && chars
                            .get(j + 1)
                            .is_some_and(|(_, n)| n.is_ascii_digit() || *n == '-' || *n == '+')
                    {
                        is_float = true;
                        j += 2;
                    } else {
                        break;
                    }
                }
                let end = chars.get(j).map(|(b, _)| *b).unwrap_or(line.len());
                let text = &line[byte..end];
                let tok = if is_float {
                    Tok::Float(
                        text.parse()
                            .map_err(|_| err(format!("bad number `{text}`")))?,
                    )
                } else {
                    Tok::Int(
                        text.parse()
                            .map_err(|_| err(format!("bad integer `{text}`")))?,
                    )
                };
                out.push(Token {
                    tok,
                    line: line_no,
                    column,
                });
                i = j;
                continue;
            }
            if c == '\'' || c == '"' {
                let mut j = i + 1;
                let mut s = String::new();
                let mut closed = false;
                while j < chars.len() {
                    let d = chars[j].1;
                    if d == c {
                        closed = true;
                        j += 1;
                        break;
                    }
                    if d == '\\' && j + 1 < chars.len() {
                        s.push(chars[j + 1].1);
                        j += 2;
                        continue;
                    }
                    s.push(d);
                    j += 1;
                }
                if !closed {
                    return Err(err("unterminated string literal".into()));
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: line_no,
                    column,
                });
                i = j;
                continue;
            }
            if c == '⊥' {
                out.push(Token {
                    tok: Tok::Bottom,
                    line: line_no,
                    column,
                });
                i += 1;
                continue;
            }
            let sym = SYMBOLS.iter().find(|(s, _)| rest.starts_with(s));
            match sym {
                Some((text, canon)) => {
                    out.push(Token {
                        tok: Tok::Sym(canon),
                        line: line_no,
                        column,
                    });
                    i += text.chars().count();
                }
                None => return Err(err(format!("unexpected character `{c}`"))),
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            column: chars.len() + 1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn primes_and_unicode_operators() {
        assert_eq!(
            toks("v' ≤ t′ // note"),
            vec![
                Tok::Ident("v'".into()),
                Tok::Sym("<="),
                Tok::Ident("t'".into()),
                Tok::Newline
            ]
        );
    }

    #[test]
    fn numbers_and_strings() {
        assert_eq!(
            toks("460 55.2 'temp' ⊥"),
            vec![
                Tok::Int(460),
                Tok::Float(55.2),
                Tok::Str("temp".into()),
                Tok::Bottom,
                Tok::Newline
            ]
        );
    }

    #[test]
    fn reports_position_of_bad_char() {
        match tokenize("a = $") {
            Err(LaraError::Parse { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
    }
}
