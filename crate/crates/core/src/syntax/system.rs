use std::fmt::Write as _;

use super::{write_alphabet_block, PResult, ParseError, Parser};
use crate::aotps::{Aotps, Rule};

/// Parses `aotps order N { alphabet {..} locations ..; rule p : l -> {S} : r; }`.
///
/// Declarations are checked (unknown symbols, ranks); well-formedness of
/// rules is left to [`Aotps::validate`].
pub fn parse_aotps(src: &str) -> PResult<Aotps> {
    let mut p = Parser::new(src)?;
    p.expect_keyword("aotps")?;
    p.expect_keyword("order")?;
    let order = p.small_int()?;
    p.expect_punct('{')?;
    let mut alphabet = None;
    let mut locations: Vec<String> = Vec::new();
    let mut rules = Vec::new();
    loop {
        p.eat_semi();
        if p.eat_punct('}') {
            break;
        }
        let pos = p.pos();
        if p.eat_keyword("alphabet") {
            if alphabet.is_some() {
                return Err(ParseError::semantic(pos, "alphabet given twice"));
            }
            alphabet = Some(p.alphabet_block()?);
        } else if p.eat_keyword("locations") {
            for (lpos, l) in p.ident_list()? {
                if locations.contains(&l) {
                    return Err(ParseError::semantic(lpos, format!("duplicate location `{l}`")));
                }
                locations.push(l);
            }
        } else if p.eat_keyword("rule") {
            let Some(al) = alphabet.as_ref() else {
                return Err(ParseError::semantic(pos, "rule before the alphabet"));
            };
            let source = p.ident()?;
            p.expect_punct(':')?;
            let lhs = p.tree(al)?;
            p.expect_arrow()?;
            let targets = p.ident_set()?.into_iter().map(|(_, s)| s);
            p.expect_punct(':')?;
            let rhs = p.tree(al)?;
            let mut r = Rule::new(source, lhs, targets, rhs);
            r.line = Some(pos.line);
            rules.push(r);
        } else {
            return p.unexpected("`alphabet`, `locations`, `rule` or `}`");
        }
    }
    p.expect_eof()?;
    let alphabet = alphabet.unwrap_or_default();
    Ok(Aotps::new(order, alphabet, locations, rules))
}

/// Prints a system in the canonical text format.
pub fn write_aotps(s: &Aotps) -> String {
    let mut out = format!("aotps order {} {{\n  ", s.order());
    out.push_str(&write_alphabet_block(s.alphabet(), "  "));
    out.push('\n');
    let locs: Vec<&str> = s.locations().collect();
    let _ = writeln!(out, "  locations {};", locs.join(" "));
    for r in s.rules() {
        let _ = writeln!(
            out,
            "  rule {} : {} -> {{{}}} : {};",
            r.source,
            r.lhs,
            r.targets.join(", "),
            r.rhs
        );
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ParseErrorKind;

    const SRC: &str = "aotps order 2 {
  alphabet {
    a : rank 2 order 1;
    c : rank 2 order 1;
    bot : rank 0 order 1;
  }
  locations p q;
  rule p : a(?x:1, ?y:2) -> {q} : c(a(?x:1, ?y:2), ?x:1);
}
";

    #[test]
    fn roundtrip_is_identity() {
        let s = parse_aotps(SRC).unwrap();
        assert_eq!(write_aotps(&s), SRC);
        assert_eq!(s.rules()[0].line, Some(8));
    }

    #[test]
    fn unknown_symbol_in_rule_is_semantic() {
        let e = parse_aotps("aotps order 1 { alphabet { a : rank 0 order 1 } locations p; rule p : z -> {p} : a }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Semantic);
    }

    #[test]
    fn missing_arrow_is_syntax() {
        let e = parse_aotps("aotps order 1 { alphabet { a : rank 0 order 1 } locations p; rule p : a {p} : a }")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
    }
}
