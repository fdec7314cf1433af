//! Annotated higher-order pushdown systems.
//!
//! An order-`k` stack `<a^u, u1, ..., uk>` becomes `a.k(enc(u), enc(u1), ...,
//! enc(uk))` and the empty order-`k` stack becomes `_bot.k`. Rules are
//! instantiated once per order of the annotations they match.

use std::fmt;

use super::stack::parse_stack;
use super::{alphabet_of, declare_all, declared, location_set, EncodeError, Encoding, Model, Stack};
use crate::aotps::{Aotps, Configuration, Rule};
use crate::syntax::{ParseError, Parser, PResult};
use crate::tree::{Alphabet, Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StackOp {
    /// `push_k^b`
    PushSymbol(u32, String),
    /// `push_k`
    Duplicate(u32),
    Pop(u32),
    Collapse(u32),
}

impl StackOp {
    pub fn order(&self) -> u32 {
        match self {
            StackOp::PushSymbol(k, _) | StackOp::Duplicate(k) | StackOp::Pop(k) | StackOp::Collapse(k) => *k,
        }
    }

    pub fn is_consuming(&self) -> bool {
        matches!(self, StackOp::Pop(_) | StackOp::Collapse(_))
    }
}

impl fmt::Display for StackOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackOp::PushSymbol(k, b) => write!(f, "push{k} {b}"),
            StackOp::Duplicate(k) => write!(f, "push{k}"),
            StackOp::Pop(k) => write!(f, "pop{k}"),
            StackOp::Collapse(k) => write!(f, "collapse{k}"),
        }
    }
}

/// Parses `push2 b`, `push2`, `pop1` or `collapse1`.
pub(crate) fn parse_op(p: &mut Parser, alphabet: &[String], n: u32) -> PResult<StackOp> {
    let pos = p.pos();
    let word = p.ident()?;
    let (name, digits) = word.split_at(word.find(|c: char| c.is_ascii_digit()).unwrap_or(word.len()));
    let Ok(k) = digits.parse::<u32>() else {
        return Err(ParseError::syntax(pos, format!("expected a stack operation such as `pop1`, found `{word}`")));
    };
    if k == 0 || k > n {
        return Err(ParseError::semantic(pos, format!("operation order {k} outside 1..{n}")));
    }
    Ok(match name {
        "push" if matches!(p.peek(), crate::syntax::Tok::Ident(_)) => {
            StackOp::PushSymbol(k, declared(p, alphabet, "stack symbol")?)
        }
        "push" => StackOp::Duplicate(k),
        "pop" => StackOp::Pop(k),
        "collapse" => StackOp::Collapse(k),
        _ => return Err(ParseError::syntax(pos, format!("unknown stack operation `{word}`"))),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApdsRule {
    pub source: String,
    pub top: String,
    pub op: StackOp,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedHopds {
    pub n: u32,
    pub alphabet: Vec<String>,
    pub locations: Vec<String>,
    pub rules: Vec<ApdsRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ApdsConfig {
    pub location: String,
    pub stack: Stack,
}

impl fmt::Display for ApdsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.location, self.stack)
    }
}

/// Parses the shared `key=N { stack-alphabet ..; locations ..; rule .. }`
/// body; `rule` declarations are handed to `rule`.
pub(crate) fn parse_body(
    p: &mut Parser,
    alphabet: &mut Vec<String>,
    locations: &mut Vec<String>,
    mut extra: impl FnMut(&mut Parser, &[String], &[String]) -> PResult<bool>,
) -> PResult<()> {
    p.expect_punct('{')?;
    loop {
        p.eat_semi();
        if p.eat_punct('}') {
            break;
        }
        if p.eat_keyword("stack-alphabet") {
            declare_all(p, alphabet, "stack symbol")?;
        } else if p.eat_keyword("locations") {
            declare_all(p, locations, "location")?;
        } else if !extra(p, alphabet, locations)? {
            return p.unexpected("`stack-alphabet`, `locations`, `rule` or `}`");
        }
    }
    p.expect_eof()
}

impl AnnotatedHopds {
    /// `apds order=2 { stack-alphabet a b; locations p q; rule p a push2 b -> {q}; }`
    pub fn parse(src: &str) -> PResult<Self> {
        let mut p = Parser::new(src)?;
        p.expect_keyword("apds")?;
        let npos = p.pos();
        let n = p.key_int("order")?;
        if n == 0 {
            return Err(ParseError::semantic(npos, "order must be positive"));
        }
        let mut alphabet = Vec::new();
        let mut locations = Vec::new();
        let mut rules = Vec::new();
        parse_body(&mut p, &mut alphabet, &mut locations, |p, al, locs| {
            if !p.eat_keyword("rule") {
                return Ok(false);
            }
            let source = declared(p, locs, "location")?;
            let top = declared(p, al, "stack symbol")?;
            let op = parse_op(p, al, n)?;
            p.expect_arrow()?;
            let targets = location_set(p, locs)?;
            rules.push(ApdsRule { source, top, op, targets });
            Ok(true)
        })?;
        Ok(AnnotatedHopds {
            n,
            alphabet,
            locations,
            rules,
        })
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.rules.iter().all(|r| r.targets.len() == 1)
    }

    /// Applies `op` with the semantics of annotated stacks; `None` when
    /// undefined.
    pub fn apply(op: &StackOp, w: &Stack) -> Option<Stack> {
        match op {
            StackOp::PushSymbol(k, b) => w.push_symbol(*k, b),
            StackOp::Duplicate(k) => w.duplicate(*k),
            StackOp::Pop(k) => w.pop(*k),
            StackOp::Collapse(k) => {
                // The link must be an order-k stack.
                if w.as_node()?.ann.order() != *k {
                    return None;
                }
                w.collapse(*k)
            }
        }
    }

    fn check_config(&self, c: &ApdsConfig) -> Result<(), EncodeError> {
        if !self.locations.contains(&c.location) {
            return Err(EncodeError::UnknownLocation(c.location.clone()));
        }
        if c.stack.order() != self.n {
            return Err(EncodeError::BadConfig(format!("stack of order {}, expected {}", c.stack.order(), self.n)));
        }
        let mut syms = Vec::new();
        c.stack.symbols(&mut syms);
        match syms.iter().find(|a| !self.alphabet.contains(a)) {
            Some(a) => Err(EncodeError::BadConfig(format!("undeclared stack symbol `{a}`"))),
            None => Ok(()),
        }
    }
}

fn sym_name(a: &str, k: u32) -> String {
    format!("{a}.{k}")
}

fn bot_name(k: u32) -> String {
    format!("_bot.{k}")
}

pub(crate) fn enc_stack(al: &Alphabet, w: &Stack) -> Result<Tree, EncodeError> {
    let get = |name: String| {
        al.get(&name)
            .cloned()
            .ok_or_else(|| EncodeError::BadConfig(format!("no symbol `{name}` in the encoding")))
    };
    match w {
        Stack::Empty(k) => Ok(Tree::leaf(&get(bot_name(*k))?)),
        Stack::Node(node) => {
            let s = get(sym_name(&node.top, node.comps.len() as u32))?;
            let mut kids = vec![enc_stack(al, &node.ann)?];
            for c in &node.comps {
                kids.push(enc_stack(al, c)?);
            }
            Ok(Tree::node(&s, kids))
        }
    }
}

fn var(name: impl AsRef<str>, order: u32) -> Tree {
    Tree::var(Var::new(name, order))
}

impl Model for AnnotatedHopds {
    type Config = ApdsConfig;

    fn locations(&self) -> Vec<String> {
        self.locations.clone()
    }

    fn location<'a>(&self, c: &'a ApdsConfig) -> &'a str {
        &c.location
    }

    fn successors(&self, c: &ApdsConfig) -> Vec<Vec<ApdsConfig>> {
        let mut out = Vec::new();
        for r in &self.rules {
            if r.source != c.location || c.stack.top() != Some(r.top.as_str()) {
                continue;
            }
            if let Some(w) = Self::apply(&r.op, &c.stack) {
                out.push(
                    r.targets
                        .iter()
                        .map(|q| ApdsConfig {
                            location: q.clone(),
                            stack: w.clone(),
                        })
                        .collect(),
                );
            }
        }
        out
    }

    fn encode(&self) -> Result<Encoding, EncodeError> {
        let n = self.n;
        let mut syms = Vec::new();
        for k in 1..=n {
            syms.push(Symbol::new(bot_name(k), 0, k));
            for a in &self.alphabet {
                syms.push(Symbol::new(sym_name(a, k), k as usize + 1, k));
            }
        }
        let al = alphabet_of(syms);
        let s = |a: &str, k: u32| al.get(&sym_name(a, k)).expect("declared symbol").clone();
        let xs: Vec<Tree> = (1..=n).map(|i| var(format!("x{i}"), i)).collect();
        let zs: Vec<Tree> = (1..=n).map(|i| var(format!("z{i}"), i)).collect();
        let mut rules = Vec::new();
        for r in &self.rules {
            let a = r.top.as_str();
            let mut emit = |lhs: Tree, rhs: Tree| {
                rules.push(Rule::new(r.source.clone(), lhs, r.targets.iter().cloned(), rhs));
            };
            for m in 1..=n {
                let y = var("y", m);
                let with = |head: Tree, rest: &[Tree]| {
                    let mut v = vec![head];
                    v.extend(rest.iter().cloned());
                    v
                };
                let lhs_plain = Tree::node(&s(a, n), with(y.clone(), &xs));
                match &r.op {
                    StackOp::PushSymbol(k, b) => {
                        let k = *k as usize;
                        let link = Tree::node(&s(a, k as u32), with(y.clone(), &xs[..k]));
                        let first = Tree::node(&s(a, 1), vec![y.clone(), xs[0].clone()]);
                        let mut kids = vec![link, first];
                        kids.extend(xs[1..].iter().cloned());
                        emit(lhs_plain, Tree::node(&s(b, n), kids));
                    }
                    StackOp::Duplicate(k) => {
                        let k = *k as usize;
                        let copy = Tree::node(&s(a, k as u32), with(y.clone(), &xs[..k]));
                        let mut comps = xs.clone();
                        comps[k - 1] = copy;
                        emit(lhs_plain, Tree::node(&s(a, n), with(y.clone(), &comps)));
                    }
                    StackOp::Pop(k) => {
                        let k = *k as usize;
                        for b in &self.alphabet {
                            let below = Tree::node(&s(b, k as u32), with(y.clone(), &xs[..k]));
                            let rhs = Tree::node(&s(b, n), with(y.clone(), &xs));
                            for m1 in 1..=n {
                                let mut kids = vec![var("w", m1)];
                                kids.extend(zs[..k - 1].iter().cloned());
                                kids.push(below.clone());
                                kids.extend(xs[k..].iter().cloned());
                                emit(Tree::node(&s(a, n), kids), rhs.clone());
                            }
                        }
                    }
                    StackOp::Collapse(k) => {
                        let k = *k as usize;
                        for b in &self.alphabet {
                            let link = Tree::node(&s(b, k as u32), with(y.clone(), &xs[..k]));
                            let mut kids = vec![link];
                            kids.extend(zs[..k].iter().cloned());
                            kids.extend(xs[k..].iter().cloned());
                            emit(Tree::node(&s(a, n), kids), Tree::node(&s(b, n), with(y.clone(), &xs)));
                        }
                    }
                }
            }
        }
        let system = Aotps::new(n, al, self.locations.clone(), rules);
        system.ensure_valid()?;
        let legend = (1..=n).map(|k| (bot_name(k), format!("empty stack of order {k}"))).collect();
        Ok(Encoding {
            system,
            model_locations: self.locations.clone(),
            legend,
        })
    }

    fn enc_config(&self, enc: &Encoding, c: &ApdsConfig) -> Result<Configuration, EncodeError> {
        self.check_config(c)?;
        Ok(Configuration::new(&c.location, enc_stack(enc.system.alphabet(), &c.stack)?))
    }

    /// `p : <a ^<b, <>>:1, <>, <>>`
    fn parse_config(&self, src: &str) -> PResult<ApdsConfig> {
        let mut p = Parser::new(src)?;
        let location = declared(&mut p, &self.locations, "location")?;
        p.expect_punct(':')?;
        let stack = parse_stack(&mut p, &self.alphabet, Some(self.n))?;
        p.expect_eof()?;
        Ok(ApdsConfig { location, stack })
    }

    fn config_size(&self, c: &ApdsConfig) -> usize {
        c.stack.size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::lockstep;

    const SRC: &str = "apds order=2 { stack-alphabet a b; locations p q r;
        rule p a push2 -> {q}; rule q a push1 b -> {r}; rule r b collapse1 -> {p};
        rule p a pop2 -> {r}; rule q b pop1 -> {p, q}; }";

    #[test]
    fn push2_duplicates_the_order1_stack() {
        let m = AnnotatedHopds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        let c = m.parse_config("p : <a, <b, <>>, <>>").unwrap();
        assert_eq!(
            m.enc_config(&e, &c).unwrap().tree.to_string(),
            "a.2(_bot.1, b.1(_bot.1, _bot.1), _bot.2)"
        );
        let succ = m.successors(&c);
        assert_eq!(succ[0][0].stack.to_string(), "<a, <b, <>>, <a, <b, <>>, <>>>");
        lockstep(&m, &e, &c).unwrap();
    }

    #[test]
    fn push_collapse_round_trip() {
        let m = AnnotatedHopds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        let c0 = m.parse_config("q : <a, <b, <>>, <>>").unwrap();
        let c1 = m.successors(&c0)[0][0].clone();
        assert_eq!(c1.stack.to_string(), "<b ^<a, <b, <>>>, <a, <b, <>>>, <>>");
        let c2 = m.successors(&c1)[0][0].clone();
        assert_eq!(c2.stack, c0.stack);
        assert_eq!(c2.location, "p");
        for c in [&c0, &c1, &c2] {
            lockstep(&m, &e, c).unwrap();
        }
    }

    #[test]
    fn order1_push_then_pop_restores() {
        let m = AnnotatedHopds::parse(
            "apds order=1 { stack-alphabet a b c; locations p q; rule p a push1 b -> {q}; rule q b pop1 -> {p}; }",
        )
        .unwrap();
        let e = m.encode().unwrap();
        let c0 = m.parse_config("p : <a, <b, <c, <>>>>").unwrap();
        let c1 = m.successors(&c0)[0][0].clone();
        let c2 = m.successors(&c1)[0][0].clone();
        assert_eq!(c2, c0);
        let e0 = m.enc_config(&e, &c0).unwrap();
        let e1 = e.system.step(&e0)[0].1[0].clone();
        assert_eq!(e1, m.enc_config(&e, &c1).unwrap());
        let e2 = e.system.step(&e1)[0].1[0].clone();
        assert_eq!(e2, e0);
    }

    #[test]
    fn output_is_flat_and_annotation_free_encodings_are_safe() {
        let m = AnnotatedHopds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        assert!(e.system.classify().unwrap().is_flat);
        let c = m.parse_config("p : <a, <b, <a, <>>>, <a, <>, <>>>").unwrap();
        assert!(crate::aotps::is_safe_tree(&m.enc_config(&e, &c).unwrap().tree));
    }

    #[test]
    fn collapse_needs_a_link_of_its_order() {
        let m = AnnotatedHopds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        let c = m.parse_config("r : <b ^<a, <>, <>>, <>, <>>").unwrap();
        assert!(m.successors(&c).is_empty());
        lockstep(&m, &e, &c).unwrap();
    }
}
