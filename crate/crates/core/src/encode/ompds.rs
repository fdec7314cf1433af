//! Ordered multi-pushdown systems: `n` stacks, any of which may be pushed,
//! while popping stack `k` empties stacks `1..k-1`.
//!
//! Stack `k` becomes a unary spine of order-`k` symbols `a.k` ending in
//! `_bot.k`, and the stacks hang below a root `_dot` of rank `n`.

use std::fmt;

use super::{alphabet_of, declare_all, declared, location_set, EncodeError, Encoding, Model};
use crate::aotps::{Aotps, Configuration, Rule};
use crate::syntax::{ParseError, Parser, PResult};
use crate::tree::{Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MpdsOp {
    Push(u32, String),
    Pop(u32, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpdsRule {
    pub source: String,
    pub op: MpdsOp,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedMpds {
    pub n: u32,
    pub alphabet: Vec<String>,
    pub locations: Vec<String>,
    pub rules: Vec<MpdsRule>,
}

/// Stacks are listed top first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MpdsConfig {
    pub location: String,
    pub stacks: Vec<Vec<String>>,
}

impl fmt::Display for MpdsConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :", self.location)?;
        for s in &self.stacks {
            write!(f, " [{}]", s.join(", "))?;
        }
        Ok(())
    }
}

impl OrderedMpds {
    /// `ompds n=2 { stack-alphabet a b; locations p q; rule p push 1 a -> {q}; }`
    pub fn parse(src: &str) -> PResult<Self> {
        let mut p = Parser::new(src)?;
        p.expect_keyword("ompds")?;
        let npos = p.pos();
        let n = p.key_int("n")?;
        if n == 0 {
            return Err(ParseError::semantic(npos, "at least one stack is needed"));
        }
        p.expect_punct('{')?;
        let mut m = OrderedMpds {
            n,
            alphabet: Vec::new(),
            locations: Vec::new(),
            rules: Vec::new(),
        };
        loop {
            p.eat_semi();
            if p.eat_punct('}') {
                break;
            }
            if p.eat_keyword("stack-alphabet") {
                declare_all(&mut p, &mut m.alphabet, "stack symbol")?;
            } else if p.eat_keyword("locations") {
                declare_all(&mut p, &mut m.locations, "location")?;
            } else if p.eat_keyword("rule") {
                let source = declared(&mut p, &m.locations, "location")?;
                let push = if p.eat_keyword("push") {
                    true
                } else if p.eat_keyword("pop") {
                    false
                } else {
                    return p.unexpected("`push` or `pop`");
                };
                let kpos = p.pos();
                let k = p.small_int()?;
                if k == 0 || k > n {
                    return Err(ParseError::semantic(kpos, format!("stack index {k} outside 1..{n}")));
                }
                let a = declared(&mut p, &m.alphabet, "stack symbol")?;
                p.expect_arrow()?;
                let targets = location_set(&mut p, &m.locations)?;
                let op = if push { MpdsOp::Push(k, a) } else { MpdsOp::Pop(k, a) };
                m.rules.push(MpdsRule { source, op, targets });
            } else {
                return p.unexpected("`stack-alphabet`, `locations`, `rule` or `}`");
            }
        }
        p.expect_eof()?;
        Ok(m)
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.rules.iter().all(|r| r.targets.len() == 1)
    }

    fn check_config(&self, c: &MpdsConfig) -> Result<(), EncodeError> {
        if !self.locations.contains(&c.location) {
            return Err(EncodeError::UnknownLocation(c.location.clone()));
        }
        if c.stacks.len() != self.n as usize {
            return Err(EncodeError::BadConfig(format!("{} stacks given, {} expected", c.stacks.len(), self.n)));
        }
        match c.stacks.iter().flatten().find(|a| !self.alphabet.contains(a)) {
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

const DOT: &str = "_dot";

impl Model for OrderedMpds {
    type Config = MpdsConfig;

    fn locations(&self) -> Vec<String> {
        self.locations.clone()
    }

    fn location<'a>(&self, c: &'a MpdsConfig) -> &'a str {
        &c.location
    }

    fn successors(&self, c: &MpdsConfig) -> Vec<Vec<MpdsConfig>> {
        let mut out = Vec::new();
        for r in self.rules.iter().filter(|r| r.source == c.location) {
            let stacks = match &r.op {
                MpdsOp::Push(k, a) => {
                    let mut s = c.stacks.clone();
                    s[*k as usize - 1].insert(0, a.clone());
                    s
                }
                MpdsOp::Pop(k, a) => {
                    let k = *k as usize;
                    if c.stacks[k - 1].first() != Some(a) {
                        continue;
                    }
                    let mut s = c.stacks.clone();
                    for w in &mut s[..k - 1] {
                        w.clear();
                    }
                    s[k - 1].remove(0);
                    s
                }
            };
            out.push(
                r.targets
                    .iter()
                    .map(|q| MpdsConfig {
                        location: q.clone(),
                        stacks: stacks.clone(),
                    })
                    .collect(),
            );
        }
        out
    }

    fn encode(&self) -> Result<Encoding, EncodeError> {
        let n = self.n;
        let mut syms = Vec::new();
        for k in 1..=n {
            for a in &self.alphabet {
                syms.push(Symbol::new(sym_name(a, k), 1, k));
            }
            syms.push(Symbol::new(bot_name(k), 0, k));
        }
        let dot = Symbol::new(DOT, n as usize, 1);
        syms.push(dot.clone());
        let al = alphabet_of(syms);
        let xs: Vec<Tree> = (1..=n).map(|k| Tree::var(Var::new(format!("x{k}"), k))).collect();
        let mut rules = Vec::new();
        for r in &self.rules {
            let (lhs, rhs) = match &r.op {
                MpdsOp::Push(k, a) => {
                    let k = *k as usize;
                    let mut kids = xs.clone();
                    kids[k - 1] = Tree::node(al.get(&sym_name(a, k as u32)).unwrap(), vec![xs[k - 1].clone()]);
                    (Tree::node(&dot, xs.clone()), Tree::node(&dot, kids))
                }
                MpdsOp::Pop(k, a) => {
                    let k = *k as usize;
                    let mut lkids = xs.clone();
                    lkids[k - 1] = Tree::node(al.get(&sym_name(a, k as u32)).unwrap(), vec![xs[k - 1].clone()]);
                    let mut rkids = xs.clone();
                    for (j, t) in rkids.iter_mut().enumerate().take(k - 1) {
                        *t = Tree::leaf(al.get(&bot_name(j as u32 + 1)).unwrap());
                    }
                    (Tree::node(&dot, lkids), Tree::node(&dot, rkids))
                }
            };
            rules.push(Rule::new(r.source.clone(), lhs, r.targets.iter().cloned(), rhs));
        }
        let system = Aotps::new(n, al, self.locations.clone(), rules);
        system.ensure_valid()?;
        let mut legend = vec![(DOT.to_string(), "root joining the stacks".to_string())];
        for k in 1..=n {
            legend.push((bot_name(k), format!("bottom of stack {k}")));
        }
        Ok(Encoding {
            system,
            model_locations: self.locations.clone(),
            legend,
        })
    }

    fn enc_config(&self, enc: &Encoding, c: &MpdsConfig) -> Result<Configuration, EncodeError> {
        self.check_config(c)?;
        let mut kids = Vec::new();
        for (i, w) in c.stacks.iter().enumerate() {
            let k = i as u32 + 1;
            let mut t = Tree::leaf(enc.symbol(&bot_name(k))?);
            for a in w.iter().rev() {
                t = Tree::node(enc.symbol(&sym_name(a, k))?, vec![t]);
            }
            kids.push(t);
        }
        Ok(Configuration::new(&c.location, Tree::node(enc.symbol(DOT)?, kids)))
    }

    /// `p : [a, b] []`, one bracket list per stack, top first.
    fn parse_config(&self, src: &str) -> PResult<MpdsConfig> {
        let mut p = Parser::new(src)?;
        let location = declared(&mut p, &self.locations, "location")?;
        p.expect_punct(':')?;
        let mut stacks = Vec::new();
        while p.eat_punct('[') {
            let mut w = Vec::new();
            while !p.eat_punct(']') {
                w.push(declared(&mut p, &self.alphabet, "stack symbol")?);
                p.eat_punct(',');
            }
            stacks.push(w);
        }
        let pos = p.pos();
        p.expect_eof()?;
        if stacks.len() != self.n as usize {
            return Err(ParseError::semantic(pos, format!("{} stacks given, {} expected", stacks.len(), self.n)));
        }
        Ok(MpdsConfig { location, stacks })
    }

    fn config_size(&self, c: &MpdsConfig) -> usize {
        1 + c.stacks.iter().map(|w| w.len() + 1).sum::<usize>()
    }
}
