//! Text formats: a shared lexer, the tree and configuration syntax, and
//! readers/writers for alphabets, automata, systems and the four models.
//!
//! Trees are written `a(t1, ..., tk)`, leaves without parentheses and
//! variables as `?name:k`. `#` starts a comment; semicolons are optional.

mod automaton;
mod lexer;
mod system;

use std::fmt::Write as _;

use thiserror::Error;

use crate::tree::{Alphabet, Symbol, Tree, Var};

pub use automaton::{parse_automaton, parse_automaton_with, write_automaton};
pub use lexer::{is_ident, tokenize, Pos, Tok, Token};
pub use system::{parse_aotps, write_aotps};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Malformed input.
    Syntax,
    /// Well-formed input that refers to undeclared or ill-ranked entities.
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Syntax,
            message: message.into(),
        }
    }

    pub fn semantic(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            kind: ParseErrorKind::Semantic,
            message: message.into(),
        }
    }
}

pub type PResult<T> = Result<T, ParseError>;

/// Token cursor shared by every format.
pub struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        let toks = tokenize(src).map_err(|(pos, m)| ParseError::syntax(pos, m))?;
        Ok(Parser { toks, i: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    pub fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::syntax(self.pos(), msg))
    }

    pub fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err(format!("expected {wanted}, found {}", self.peek()))
    }

    pub fn is_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.is_punct(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    pub fn eat_arrow(&mut self) -> bool {
        if *self.peek() == Tok::Arrow {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_arrow(&mut self) -> PResult<()> {
        if self.eat_arrow() {
            Ok(())
        } else {
            self.unexpected("`->`")
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    pub fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    pub fn int(&mut self) -> PResult<u64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.unexpected("an integer"),
        }
    }

    pub fn small_int(&mut self) -> PResult<u32> {
        let pos = self.pos();
        let n = self.int()?;
        u32::try_from(n).map_err(|_| ParseError::syntax(pos, "integer out of range"))
    }

    pub fn eat_semi(&mut self) {
        while self.eat_punct(';') {}
    }

    pub fn expect_eof(&mut self) -> PResult<()> {
        self.eat_semi();
        if self.at_eof() {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    /// `key = int`
    pub fn key_int(&mut self, key: &str) -> PResult<u32> {
        self.expect_keyword(key)?;
        self.expect_punct('=')?;
        self.small_int()
    }

    /// `{ a, b, c }`, commas optional.
    pub fn ident_set(&mut self) -> PResult<Vec<(Pos, String)>> {
        self.expect_punct('{')?;
        let mut out = Vec::new();
        while !self.eat_punct('}') {
            let pos = self.pos();
            out.push((pos, self.ident()?));
            self.eat_punct(',');
        }
        Ok(out)
    }

    /// Identifiers up to the next `;` (or a closing brace).
    pub fn ident_list(&mut self) -> PResult<Vec<(Pos, String)>> {
        let mut out = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            let pos = self.pos();
            out.push((pos, self.ident()?));
            self.eat_punct(',');
        }
        Ok(out)
    }

    /// Parses a tree over `alphabet`.
    pub fn tree(&mut self, alphabet: &Alphabet) -> PResult<Tree> {
        let pos = self.pos();
        if self.eat_punct('?') {
            let name = self.ident()?;
            self.expect_punct(':')?;
            let opos = self.pos();
            let order = self.small_int()?;
            if order == 0 {
                return Err(ParseError::semantic(opos, "variable order must be positive"));
            }
            return Ok(Tree::var(Var::new(name, order)));
        }
        let name = self.ident()?;
        let mut children = Vec::new();
        if self.eat_punct('(') && !self.eat_punct(')') {
            loop {
                children.push(self.tree(alphabet)?);
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        let sym = alphabet
            .get(&name)
            .ok_or_else(|| ParseError::semantic(pos, format!("unknown symbol `{name}`")))?;
        Tree::try_node(sym.clone(), children).map_err(|e| ParseError::semantic(pos, e.to_string()))
    }

    /// `name : rank R order O`
    pub fn symbol_decl(&mut self) -> PResult<(Pos, Symbol)> {
        let pos = self.pos();
        let name = self.ident()?;
        self.expect_punct(':')?;
        let mut rank = None;
        let mut order = None;
        loop {
            if self.eat_keyword("rank") {
                rank = Some(self.small_int()? as usize);
            } else if self.eat_keyword("order") {
                order = Some(self.small_int()?);
            } else {
                break;
            }
        }
        let (Some(rank), Some(order)) = (rank, order) else {
            return self.err(format!("symbol `{name}` needs both `rank` and `order`"));
        };
        Ok((pos, Symbol::new(name, rank, order)))
    }

    /// `{ decl; decl; ... }`
    pub fn alphabet_block(&mut self) -> PResult<Alphabet> {
        self.expect_punct('{')?;
        let mut al = Alphabet::new();
        loop {
            self.eat_semi();
            if self.eat_punct('}') {
                break;
            }
            let (pos, s) = self.symbol_decl()?;
            al.insert(s)
                .map_err(|e| ParseError::semantic(pos, e.to_string()))?;
        }
        Ok(al)
    }
}

/// Parses a standalone tree.
pub fn parse_tree(src: &str, alphabet: &Alphabet) -> PResult<Tree> {
    let mut p = Parser::new(src)?;
    let t = p.tree(alphabet)?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses `p : tree`.
pub fn parse_config(src: &str, alphabet: &Alphabet) -> PResult<(String, Tree)> {
    let mut p = Parser::new(src)?;
    let loc = p.ident()?;
    p.expect_punct(':')?;
    let t = p.tree(alphabet)?;
    p.expect_eof()?;
    Ok((loc, t))
}

/// Parses an alphabet file: `alphabet { ... }`.
pub fn parse_alphabet(src: &str) -> PResult<Alphabet> {
    let mut p = Parser::new(src)?;
    p.expect_keyword("alphabet")?;
    let al = p.alphabet_block()?;
    p.expect_eof()?;
    Ok(al)
}

pub fn write_alphabet_block(al: &Alphabet, indent: &str) -> String {
    let mut s = String::from("alphabet {\n");
    for sym in al.iter() {
        let _ = writeln!(
            s,
            "{indent}  {} : rank {} order {};",
            sym.name(),
            sym.rank(),
            sym.order()
        );
    }
    let _ = write!(s, "{indent}}}");
    s
}

pub fn write_alphabet(al: &Alphabet) -> String {
    let mut s = write_alphabet_block(al, "");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al() -> Alphabet {
        parse_alphabet("alphabet { a : rank 2 order 1; b : rank 0 order 1; c : rank 1 order 2 }")
            .unwrap()
    }

    #[test]
    fn tree_roundtrip() {
        let al = al();
        let src = "a(b, a(?x:1, b))";
        let t = parse_tree(src, &al).unwrap();
        assert_eq!(t.to_string(), src);
        assert_eq!(parse_tree(&t.to_string(), &al).unwrap(), t);
    }

    #[test]
    fn unknown_symbol_is_semantic() {
        let e = parse_tree("zz", &al()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Semantic);
    }

    #[test]
    fn rank_error_is_semantic() {
        let e = parse_tree("a(b)", &al()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Semantic);
    }

    #[test]
    fn malformed_is_syntax_with_position() {
        let e = parse_tree("a(b,\n  )", &al()).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!(e.pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn config_parses() {
        let (p, t) = parse_config("p : c(b)", &al()).unwrap();
        assert_eq!(p, "p");
        assert_eq!(t.order(), 2);
    }

    #[test]
    fn alphabet_roundtrip() {
        let a = al();
        assert_eq!(parse_alphabet(&write_alphabet(&a)).unwrap(), a);
    }
}
