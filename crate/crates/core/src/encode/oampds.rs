//! Ordered annotated multi-pushdown systems: `m` annotated stacks of order
//! `n`; popping or collapsing stack `l` resets stacks `1..l-1`.
//!
//! Stack `l` occupies orders `(l-1)n+1 ..= ln`. Its topmost symbol is a leaf
//! child `a.l` of the root `_dot`, order-`k` stacks are `_st.l.k`, links are
//! `_link.l` and empty stacks `_bot.l.k`. Links always have order `n`, so an
//! empty link is `_bot.l.1`, which has the order of `_link.l`.

use std::fmt;

use super::apds::{parse_body, parse_op, StackOp};
use super::stack::parse_stack;
use super::{alphabet_of, declared, location_set, EncodeError, Encoding, Model, Stack};
use crate::aotps::{Aotps, Configuration, Rule};
use crate::syntax::{ParseError, Parser, PResult};
use crate::tree::{Alphabet, Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OampdsRule {
    pub source: String,
    /// 1-based stack index.
    pub stack: u32,
    pub top: String,
    pub op: StackOp,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedAnnotatedMpds {
    pub m: u32,
    pub n: u32,
    pub alphabet: Vec<String>,
    pub initial: String,
    pub locations: Vec<String>,
    pub rules: Vec<OampdsRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OampdsConfig {
    pub location: String,
    pub stacks: Vec<Stack>,
}

impl fmt::Display for OampdsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : ", self.location)?;
        for (i, s) in self.stacks.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl OrderedAnnotatedMpds {
    /// `oampds m=2 n=1 { stack-alphabet e a; initial e; locations p q; rule p stack 2 a pop1 -> {q}; }`
    ///
    /// `push_k b` must use `k = n`.
    pub fn parse(src: &str) -> PResult<Self> {
        let mut p = Parser::new(src)?;
        p.expect_keyword("oampds")?;
        let mpos = p.pos();
        let m = p.key_int("m")?;
        let npos = p.pos();
        let n = p.key_int("n")?;
        if m == 0 {
            return Err(ParseError::semantic(mpos, "at least one stack is needed"));
        }
        if n == 0 {
            return Err(ParseError::semantic(npos, "order must be positive"));
        }
        let mut alphabet = Vec::new();
        let mut locations = Vec::new();
        let mut initial = None;
        let mut rules = Vec::new();
        parse_body(&mut p, &mut alphabet, &mut locations, |p, al, locs| {
            if p.eat_keyword("initial") {
                initial = Some(declared(p, al, "stack symbol")?);
                return Ok(true);
            }
            if !p.eat_keyword("rule") {
                return Ok(false);
            }
            let source = declared(p, locs, "location")?;
            p.expect_keyword("stack")?;
            let lpos = p.pos();
            let stack = p.small_int()?;
            if stack == 0 || stack > m {
                return Err(ParseError::semantic(lpos, format!("stack index {stack} outside 1..{m}")));
            }
            let top = declared(p, al, "stack symbol")?;
            let opos = p.pos();
            let op = parse_op(p, al, n)?;
            if let StackOp::PushSymbol(k, _) = op {
                if k != n {
                    return Err(ParseError::semantic(
                        opos,
                        format!("links have order {n}, so symbols are pushed with push{n}, not push{k}"),
                    ));
                }
            }
            p.expect_arrow()?;
            let targets = location_set(p, locs)?;
            rules.push(OampdsRule {
                source,
                stack,
                top,
                op,
                targets,
            });
            Ok(true)
        })?;
        let Some(initial) = initial else {
            return Err(ParseError::semantic(p.pos(), "missing `initial` stack symbol"));
        };
        Ok(OrderedAnnotatedMpds {
            m,
            n,
            alphabet,
            initial,
            locations,
            rules,
        })
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.rules.iter().all(|r| r.targets.len() == 1)
    }

    /// `<e^<>, <>, ..., <>>`
    pub fn reset_stack(&self) -> Stack {
        Stack::singleton(self.initial.clone(), self.n)
    }

    /// Every stack holds just the initial symbol.
    pub fn initial_config(&self, location: &str) -> OampdsConfig {
        OampdsConfig {
            location: location.to_string(),
            stacks: vec![self.reset_stack(); self.m as usize],
        }
    }

    fn apply(&self, op: &StackOp, w: &Stack) -> Option<Stack> {
        match op {
            StackOp::PushSymbol(k, b) => w.push_symbol(*k, b),
            StackOp::Duplicate(k) => w.duplicate(*k),
            StackOp::Pop(k) => w.pop(*k),
            StackOp::Collapse(k) => w.collapse(*k),
        }
    }

    fn stack_ok(&self, w: &Stack, link: bool) -> bool {
        match w {
            Stack::Empty(k) => !link || *k == 1,
            Stack::Node(node) => {
                self.alphabet.contains(&node.top)
                    && (!link || node.comps.len() == self.n as usize)
                    && self.stack_ok(&node.ann, true)
                    && node.comps.iter().all(|c| self.stack_ok(c, false))
            }
        }
    }

    fn check_config(&self, c: &OampdsConfig) -> Result<(), EncodeError> {
        if !self.locations.contains(&c.location) {
            return Err(EncodeError::UnknownLocation(c.location.clone()));
        }
        if c.stacks.len() != self.m as usize {
            return Err(EncodeError::BadConfig(format!("{} stacks given, {} expected", c.stacks.len(), self.m)));
        }
        for w in &c.stacks {
            if w.order() != self.n || w.as_node().is_none() || !self.stack_ok(w, false) {
                return Err(EncodeError::BadConfig(format!(
                    "`{w}` is not a non-empty order-{} stack with order-{} links",
                    self.n, self.n
                )));
            }
        }
        Ok(())
    }

    fn base(&self, l: u32) -> u32 {
        (l - 1) * self.n
    }
}

fn st_name(l: u32, k: u32) -> String {
    format!("_st.{l}.{k}")
}

fn bot_name(l: u32, k: u32) -> String {
    format!("_bot.{l}.{k}")
}

fn link_name(l: u32) -> String {
    format!("_link.{l}")
}

fn sym_name(a: &str, l: u32) -> String {
    format!("{a}.{l}")
}

const DOT: &str = "_dot";

fn get(al: &Alphabet, name: &str) -> Result<Symbol, EncodeError> {
    al.get(name)
        .cloned()
        .ok_or_else(|| EncodeError::BadConfig(format!("no symbol `{name}` in the encoding")))
}

fn enc_stack(al: &Alphabet, l: u32, k: u32, w: &Stack) -> Result<Tree, EncodeError> {
    match w {
        Stack::Empty(_) => Ok(Tree::leaf(&get(al, &bot_name(l, k))?)),
        Stack::Node(node) => {
            let mut kids = vec![Tree::leaf(&get(al, &sym_name(&node.top, l))?), enc_link(al, l, &node.ann)?];
            for (i, c) in node.comps.iter().enumerate() {
                kids.push(enc_stack(al, l, i as u32 + 1, c)?);
            }
            Ok(Tree::node(&get(al, &st_name(l, k))?, kids))
        }
    }
}

fn enc_link(al: &Alphabet, l: u32, w: &Stack) -> Result<Tree, EncodeError> {
    match w {
        Stack::Empty(_) => Ok(Tree::leaf(&get(al, &bot_name(l, 1))?)),
        Stack::Node(node) => {
            let mut kids = vec![Tree::leaf(&get(al, &sym_name(&node.top, l))?), enc_link(al, l, &node.ann)?];
            for (i, c) in node.comps.iter().enumerate() {
                kids.push(enc_stack(al, l, i as u32 + 1, c)?);
            }
            Ok(Tree::node(&get(al, &link_name(l))?, kids))
        }
    }
}

impl Model for OrderedAnnotatedMpds {
    type Config = OampdsConfig;

    fn locations(&self) -> Vec<String> {
        self.locations.clone()
    }

    fn location<'a>(&self, c: &'a OampdsConfig) -> &'a str {
        &c.location
    }

    fn successors(&self, c: &OampdsConfig) -> Vec<Vec<OampdsConfig>> {
        let mut out = Vec::new();
        for r in &self.rules {
            let l = r.stack as usize;
            if r.source != c.location || c.stacks[l - 1].top() != Some(r.top.as_str()) {
                continue;
            }
            let Some(w) = self.apply(&r.op, &c.stacks[l - 1]) else {
                continue;
            };
            let mut stacks = c.stacks.clone();
            stacks[l - 1] = w;
            if r.op.is_consuming() {
                for s in &mut stacks[..l - 1] {
                    *s = self.reset_stack();
                }
            }
            out.push(
                r.targets
                    .iter()
                    .map(|q| OampdsConfig {
                        location: q.clone(),
                        stacks: stacks.clone(),
                    })
                    .collect(),
            );
        }
        out
    }

    fn encode(&self) -> Result<Encoding, EncodeError> {
        let (m, n) = (self.m, self.n);
        let mut syms = Vec::new();
        for l in 1..=m {
            let base = self.base(l);
            for k in 1..=n {
                syms.push(Symbol::new(bot_name(l, k), 0, base + k));
                syms.push(Symbol::new(st_name(l, k), k as usize + 2, base + k));
            }
            syms.push(Symbol::new(link_name(l), n as usize + 2, base + 1));
            for a in &self.alphabet {
                syms.push(Symbol::new(sym_name(a, l), 0, base + 1));
            }
        }
        let dot = Symbol::new(DOT, (m * (n + 2)) as usize, 1);
        syms.push(dot.clone());
        let al = alphabet_of(syms);
        let sym = |name: String| al.get(&name).expect("generated symbol").clone();
        let v = |name: String, order: u32| Tree::var(Var::new(name, order));
        let t = |j: u32| v(format!("t{j}"), self.base(j) + 1);
        let y = |j: u32| v(format!("y{j}"), self.base(j) + 1);
        let x = |j: u32, k: u32| v(format!("x{j}_{k}"), self.base(j) + k);
        let z = |j: u32, k: u32| v(format!("z{j}_{k}"), self.base(j) + k);
        let block = |j: u32| -> Vec<Tree> {
            let mut b = vec![t(j), y(j)];
            b.extend((1..=n).map(|k| x(j, k)));
            b
        };
        let reset = |j: u32| -> Vec<Tree> {
            let mut b = vec![Tree::leaf(&sym(sym_name(&self.initial, j))), Tree::leaf(&sym(bot_name(j, 1)))];
            b.extend((1..=n).map(|k| Tree::leaf(&sym(bot_name(j, k)))));
            b
        };
        let xs = |j: u32, range: std::ops::RangeInclusive<u32>| range.map(move |k| x(j, k));
        let mut rules = Vec::new();
        for r in &self.rules {
            let l = r.stack;
            let a = Tree::leaf(&sym(sym_name(&r.top, l)));
            let (mine_l, mine_r): (Vec<Tree>, Vec<Tree>) = match &r.op {
                StackOp::PushSymbol(_, b) => {
                    let mut link = vec![a.clone(), y(l)];
                    link.extend(xs(l, 1..=n));
                    let first = Tree::node(&sym(st_name(l, 1)), vec![a.clone(), y(l), x(l, 1)]);
                    let mut rhs = vec![Tree::leaf(&sym(sym_name(b, l))), Tree::node(&sym(link_name(l)), link), first];
                    rhs.extend(xs(l, 2..=n));
                    let mut lhs = vec![a.clone(), y(l)];
                    lhs.extend(xs(l, 1..=n));
                    (lhs, rhs)
                }
                StackOp::Duplicate(k) => {
                    let k = *k;
                    let mut copy = vec![a.clone(), y(l)];
                    copy.extend(xs(l, 1..=k));
                    let mut rhs = vec![a.clone(), y(l)];
                    rhs.extend(xs(l, 1..=k - 1));
                    rhs.push(Tree::node(&sym(st_name(l, k)), copy));
                    rhs.extend(xs(l, k + 1..=n));
                    let mut lhs = vec![a.clone(), y(l)];
                    lhs.extend(xs(l, 1..=n));
                    (lhs, rhs)
                }
                StackOp::Pop(k) => {
                    let k = *k;
                    let top = v("s".into(), self.base(l) + 1);
                    let mut below = vec![top.clone(), y(l)];
                    below.extend(xs(l, 1..=k));
                    let mut lhs = vec![a.clone(), v(format!("w{l}"), self.base(l) + 1)];
                    lhs.extend((1..k).map(|i| z(l, i)));
                    lhs.push(Tree::node(&sym(st_name(l, k)), below));
                    lhs.extend(xs(l, k + 1..=n));
                    let mut rhs = vec![top, y(l)];
                    rhs.extend(xs(l, 1..=n));
                    (lhs, rhs)
                }
                StackOp::Collapse(k) => {
                    let k = *k;
                    let top = v("s".into(), self.base(l) + 1);
                    let mut link = vec![top.clone(), y(l)];
                    link.extend(xs(l, 1..=k));
                    link.extend((k + 1..=n).map(|i| v(format!("u{l}_{i}"), self.base(l) + i)));
                    let mut lhs = vec![a.clone(), Tree::node(&sym(link_name(l)), link)];
                    lhs.extend((1..=k).map(|i| z(l, i)));
                    lhs.extend(xs(l, k + 1..=n));
                    let mut rhs = vec![top, y(l)];
                    rhs.extend(xs(l, 1..=n));
                    (lhs, rhs)
                }
            };
            let mut lhs = Vec::new();
            let mut rhs = Vec::new();
            for j in 1..=m {
                if j == l {
                    lhs.extend(mine_l.iter().cloned());
                    rhs.extend(mine_r.iter().cloned());
                } else {
                    lhs.extend(block(j));
                    if j < l && r.op.is_consuming() {
                        rhs.extend(reset(j));
                    } else {
                        rhs.extend(block(j));
                    }
                }
            }
            rules.push(Rule::new(
                r.source.clone(),
                Tree::node(&dot, lhs),
                r.targets.iter().cloned(),
                Tree::node(&dot, rhs),
            ));
        }
        let system = Aotps::new(m * n, al, self.locations.clone(), rules);
        system.ensure_valid()?;
        let mut legend = vec![(DOT.to_string(), "root joining the stacks".to_string())];
        for l in 1..=m {
            legend.push((link_name(l), format!("link on stack {l}")));
        }
        Ok(Encoding {
            system,
            model_locations: self.locations.clone(),
            legend,
        })
    }

    fn enc_config(&self, enc: &Encoding, c: &OampdsConfig) -> Result<Configuration, EncodeError> {
        self.check_config(c)?;
        let al = enc.system.alphabet();
        let mut kids = Vec::new();
        for (i, w) in c.stacks.iter().enumerate() {
            let l = i as u32 + 1;
            let node = w.as_node().expect("checked non-empty");
            kids.push(Tree::leaf(&get(al, &sym_name(&node.top, l))?));
            kids.push(enc_link(al, l, &node.ann)?);
            for (k, u) in node.comps.iter().enumerate() {
                kids.push(enc_stack(al, l, k as u32 + 1, u)?);
            }
        }
        Ok(Configuration::new(&c.location, Tree::node(&get(al, DOT)?, kids)))
    }

    /// `p : <e, <>> | <a ^<e, <>>, <>>`; a bare location puts the initial
    /// symbol on every stack.
    fn parse_config(&self, src: &str) -> PResult<OampdsConfig> {
        let mut p = Parser::new(src)?;
        let location = declared(&mut p, &self.locations, "location")?;
        if p.at_eof() {
            return Ok(self.initial_config(&location));
        }
        p.expect_punct(':')?;
        let mut stacks = Vec::new();
        loop {
            let pos = p.pos();
            let w = parse_stack(&mut p, &self.alphabet, Some(self.n))?;
            if w.as_node().is_none() || !self.stack_ok(&w, false) {
                return Err(ParseError::semantic(pos, format!("stacks must be non-empty with order-{} links", self.n)));
            }
            stacks.push(w);
            if !p.eat_punct('|') {
                break;
            }
        }
        let pos = p.pos();
        p.expect_eof()?;
        if stacks.len() != self.m as usize {
            return Err(ParseError::semantic(pos, format!("{} stacks given, {} expected", stacks.len(), self.m)));
        }
        Ok(OampdsConfig { location, stacks })
    }

    fn config_size(&self, c: &OampdsConfig) -> usize {
        c.stacks.iter().map(Stack::size).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::lockstep;

    const SRC: &str = "oampds m=2 n=1 { stack-alphabet e a b; initial e; locations p q r;
        rule p stack 1 e push1 a -> {p}; rule p stack 2 e push1 b -> {q};
        rule q stack 2 b pop1 -> {r}; rule r stack 1 e collapse1 -> {p}; }";

    #[test]
    fn pop_on_stack_two_resets_stack_one() {
        let m = OrderedAnnotatedMpds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        assert_eq!(e.system.order(), 2);
        let c0 = m.parse_config("p : <a ^<e, <>>, <e, <>>> | <e, <>>").unwrap();
        let c1 = m
            .successors(&c0)
            .into_iter()
            .map(|mv| mv[0].clone())
            .find(|c| c.location == "q")
            .unwrap();
        assert_eq!(c1.to_string(), "q : <a ^<e, <>>, <e, <>>> | <b ^<e, <>>, <e, <>>>");
        let c2 = m.successors(&c1)[0][0].clone();
        assert_eq!(c2.to_string(), "r : <e, <>> | <e, <>>");
        for c in [&c0, &c1, &c2] {
            lockstep(&m, &e, c).unwrap();
        }
    }

    #[test]
    fn encoding_shape() {
        let m = OrderedAnnotatedMpds::parse(SRC).unwrap();
        let e = m.encode().unwrap();
        let c = m.enc_config(&e, &m.initial_config("p")).unwrap();
        assert_eq!(c.tree.to_string(), "_dot(e.1, _bot.1.1, _bot.1.1, e.2, _bot.2.1, _bot.2.1)");
        let dot = e.system.alphabet().get("_dot").unwrap();
        assert_eq!(dot.rank(), 6);
    }

    #[test]
    fn collapse_follows_the_link() {
        let m = OrderedAnnotatedMpds::parse(
            "oampds m=1 n=2 { stack-alphabet e a; initial e; locations p;
             rule p stack 1 e push2 a -> {p}; rule p stack 1 a collapse1 -> {p}; rule p stack 1 a collapse2 -> {p};
             rule p stack 1 a push2 -> {p}; rule p stack 1 a pop2 -> {p}; }",
        )
        .unwrap();
        let e = m.encode().unwrap();
        let mut frontier = vec![m.initial_config("p")];
        let mut seen = std::collections::HashSet::new();
        while let Some(c) = frontier.pop() {
            if seen.len() >= 500 || !seen.insert(c.clone()) {
                continue;
            }
            lockstep(&m, &e, &c).unwrap();
            if m.config_size(&c) < 40 {
                frontier.extend(m.successors(&c).into_iter().flatten());
            }
        }
        assert!(seen.len() > 10);
    }

    #[test]
    fn push_to_a_low_order_link_is_rejected() {
        let err = OrderedAnnotatedMpds::parse(
            "oampds m=1 n=2 { stack-alphabet e a; initial e; locations p; rule p stack 1 e push1 a -> {p}; }",
        )
        .unwrap_err();
        assert_eq!(err.kind, crate::syntax::ParseErrorKind::Semantic);
    }
}
