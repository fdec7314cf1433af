use std::fmt;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    Arrow,
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '.' | '-')
}

/// True iff `s` is a valid identifier.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    let rest: Vec<char> = chars.collect();
    rest.iter().enumerate().all(|(i, &c)| {
        is_ident_char(c) && !(c == '-' && rest.get(i + 1) == Some(&'>'))
    }) && !s.ends_with('-')
}

/// Splits `src` into tokens. `#` starts a comment running to the end of the line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, (Pos, String)> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
        } else if is_ident_start(c) {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i]) {
                if chars[i] == '-' && chars.get(i + 1) == Some(&'>') {
                    break;
                }
                s.push(chars[i]);
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(s),
                pos,
            });
        } else if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                let d = chars[i] as u64 - '0' as u64;
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(d))
                    .ok_or((pos, "integer literal too large".to_string()))?;
                bump!();
            }
            out.push(Token {
                tok: Tok::Int(n),
                pos,
            });
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err((pos, "unterminated string".to_string()));
                }
                if chars[i] == '"' {
                    bump!();
                    break;
                }
                if chars[i] == '\\' && i + 1 < chars.len() {
                    bump!();
                }
                s.push(chars[i]);
                bump!();
            }
            out.push(Token {
                tok: Tok::Str(s),
                pos,
            });
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            bump!();
            bump!();
            out.push(Token {
                tok: Tok::Arrow,
                pos,
            });
        } else if "{}()[]<>,;:?=-^\\.|@*!".contains(c) {
            bump!();
            out.push(Token {
                tok: Tok::Punct(c),
                pos,
            });
        } else {
            return Err((pos, format!("unexpected character {c:?}")));
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn transition_arrow_splits_identifiers() {
        assert_eq!(
            toks("q0 -a-> {q1}"),
            vec![
                Tok::Ident("q0".into()),
                Tok::Punct('-'),
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Punct('{'),
                Tok::Ident("q1".into()),
                Tok::Punct('}'),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn identifiers_keep_dots_dashes_and_primes() {
        assert_eq!(
            toks("a.1 p' x-y # comment\n"),
            vec![
                Tok::Ident("a.1".into()),
                Tok::Ident("p'".into()),
                Tok::Ident("x-y".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions_are_tracked() {
        let t = tokenize("a\n  b").unwrap();
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn ident_check() {
        assert!(is_ident("a.b'c-d"));
        assert!(!is_ident("1a"));
        assert!(!is_ident("a->"));
        assert!(!is_ident(""));
    }
}
