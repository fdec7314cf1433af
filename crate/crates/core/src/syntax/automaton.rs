use std::fmt::Write as _;

use super::{write_alphabet_block, PResult, ParseError, Parser, Pos, Tok};
use crate::automaton::{state_set, Automaton, Provenance, StateSet};
use crate::tree::Alphabet;

struct RawState {
    pos: Pos,
    name: String,
    order: Option<u32>,
    initial: bool,
}

struct RawTrans {
    pos: Pos,
    source: String,
    symbol: String,
    children: Vec<Vec<(Pos, String)>>,
}

/// Parses an automaton whose alphabet is given inline.
pub fn parse_automaton(src: &str) -> PResult<Automaton> {
    parse_automaton_with(src, None, &|path| {
        Err(format!("cannot resolve alphabet file `{path}` here"))
    })
}

/// Parses an automaton. `default` is used when the file has no `alphabet`
/// clause; `resolve` loads an alphabet referenced by path.
pub fn parse_automaton_with(
    src: &str,
    default: Option<&Alphabet>,
    resolve: &dyn Fn(&str) -> Result<Alphabet, String>,
) -> PResult<Automaton> {
    let mut p = Parser::new(src)?;
    p.expect_keyword("automaton")?;
    p.expect_punct('{')?;
    let mut alphabet: Option<Alphabet> = None;
    let mut states = Vec::new();
    let mut trans = Vec::new();
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
            alphabet = Some(match p.peek().clone() {
                Tok::Str(path) => {
                    p.advance();
                    resolve(&path).map_err(|m| ParseError::semantic(pos, m))?
                }
                _ => p.alphabet_block()?,
            });
        } else if p.eat_keyword("state") {
            let name = p.ident()?;
            let mut order = None;
            let initial;
            if p.eat_punct(':') {
                if p.eat_keyword("order") {
                    let opos = p.pos();
                    let o = p.small_int()?;
                    if o == 0 {
                        return Err(ParseError::semantic(opos, "state order must be positive"));
                    }
                    order = Some(o);
                }
                initial = p.eat_keyword("initial");
            } else {
                initial = p.eat_keyword("initial");
            }
            states.push(RawState {
                pos,
                name,
                order,
                initial,
            });
        } else if p.eat_keyword("trans") {
            let source = p.ident()?;
            p.expect_punct('-')?;
            let symbol = p.ident()?;
            p.expect_arrow()?;
            let mut children = Vec::new();
            while p.is_punct('{') {
                children.push(p.ident_set()?);
            }
            trans.push(RawTrans {
                pos,
                source,
                symbol,
                children,
            });
        } else {
            return p.unexpected("`alphabet`, `state`, `trans` or `}`");
        }
    }
    p.expect_eof()?;
    let alphabet = match (alphabet, default) {
        (Some(a), _) => a,
        (None, Some(d)) => d.clone(),
        (None, None) => {
            return Err(ParseError::semantic(
                Pos { line: 1, col: 1 },
                "automaton has no alphabet",
            ))
        }
    };
    let mut aut = Automaton::new(alphabet);
    for s in states {
        aut.add_state(s.name, s.order, s.initial, Provenance::Original)
            .map_err(|e| ParseError::semantic(s.pos, e.to_string()))?;
    }
    for t in trans {
        let q = aut.state_id(&t.source).ok_or_else(|| {
            ParseError::semantic(t.pos, format!("unknown state `{}`", t.source))
        })?;
        let sym = aut.alphabet().get(&t.symbol).cloned().ok_or_else(|| {
            ParseError::semantic(t.pos, format!("unknown symbol `{}`", t.symbol))
        })?;
        let mut children: Vec<StateSet> = Vec::new();
        for set in &t.children {
            let mut ids = Vec::new();
            for (pos, n) in set {
                ids.push(aut.state_id(n).ok_or_else(|| {
                    ParseError::semantic(*pos, format!("unknown state `{n}`"))
                })?);
            }
            children.push(state_set(ids));
        }
        aut.add_transition(q, &sym, children)
            .map_err(|e| ParseError::semantic(t.pos, e.to_string()))?;
    }
    Ok(aut)
}

fn provenance_comment(aut: &Automaton, prov: &Provenance) -> Option<String> {
    let set = |s: &StateSet| {
        let names: Vec<&str> = s.iter().map(|q| aut.state(*q).name.as_str()).collect();
        format!("{{{}}}", names.join(","))
    };
    match prov {
        Provenance::Original => None,
        Provenance::Copy(q) => Some(format!("copy of {}", aut.state(*q).name)),
        Provenance::Location => Some("location".to_string()),
        Provenance::Pattern(v) => Some(format!("pattern {v}")),
        Provenance::Deep {
            rule, components, ..
        } => {
            let mut s = format!("deep rule-{}", rule + 1);
            for (j, c) in components {
                let _ = write!(s, " {}@child{}", set(c), j + 1);
            }
            Some(s)
        }
    }
}

/// Prints an automaton in the text format, with provenance comments.
pub fn write_automaton(aut: &Automaton) -> String {
    let mut s = String::from("automaton {\n  ");
    s.push_str(&write_alphabet_block(aut.alphabet(), "  "));
    s.push('\n');
    for q in aut.state_ids() {
        let st = aut.state(q);
        let mut line = format!("  state {}", st.name);
        match (st.order, st.initial) {
            (Some(o), true) => {
                let _ = write!(line, " : order {o} initial");
            }
            (Some(o), false) => {
                let _ = write!(line, " : order {o}");
            }
            (None, true) => line.push_str(" : initial"),
            (None, false) => {}
        }
        if let Some(c) = provenance_comment(aut, &st.provenance) {
            let _ = write!(line, "   # {c}");
        }
        s.push_str(&line);
        s.push('\n');
    }
    for t in aut.transitions() {
        let _ = write!(
            s,
            "  trans {} -{}->",
            aut.state(t.source).name,
            t.symbol.name()
        );
        for c in t.children {
            let names: Vec<&str> = c.iter().map(|q| aut.state(*q).name.as_str()).collect();
            let _ = write!(s, " {{{}}}", names.join(","));
        }
        s.push('\n');
    }
    s.push_str("}\n");
    s
}
