//! Alternating Krivine machines with states over simply-typed λY-terms.
//!
//! Every subterm `N` of the program gets a symbol `tI` (its index in the
//! subterm table) of rank `n`, one child per variable, and a head symbol `hI`
//! of rank `n + k` for configurations whose head closure has skeleton `N`
//! and `k` arguments. Unbound environment slots hold `_bot.o` leaves. The
//! constant step goes through auxiliary locations `_argI.q.r`, one per
//! argument index and target set.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::{check_name, EncodeError, Encoding, Model};
use crate::aotps::{Aotps, Configuration, Rule};
use crate::syntax::{ParseError, Parser, Pos, PResult, Tok};
use crate::tree::{Alphabet, Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Base,
    Arrow(Arc<Type>, Arc<Type>),
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Arc::new(a), Arc::new(b))
    }

    /// `0^k -> 0`
    pub fn first_order(k: usize) -> Type {
        (0..k).fold(Type::Base, |t, _| Type::arrow(Type::Base, t))
    }

    pub fn level(&self) -> u32 {
        match self {
            Type::Base => 0,
            Type::Arrow(a, b) => (a.level() + 1).max(b.level()),
        }
    }

    /// `α1, ..., αk` for `α1 -> ... -> αk -> 0`.
    pub fn args(&self) -> Vec<Type> {
        let mut out = Vec::new();
        let mut t = self;
        while let Type::Arrow(a, b) = t {
            out.push((**a).clone());
            t = b;
        }
        out
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base => f.write_str("0"),
            Type::Arrow(a, b) => match **a {
                Type::Base => write!(f, "0 -> {b}"),
                _ => write!(f, "({a}) -> {b}"),
            },
        }
    }
}

/// A subterm; children are indices into the subterm table and variables
/// are indices into the variable list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermNode {
    Const(String),
    Var(usize),
    Abs(usize, usize),
    App(usize, usize),
    Fix(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subterm {
    pub node: TermNode,
    pub ty: Type,
    /// Free variables, as indices into [`KrivineMachine::vars`].
    pub free: BTreeSet<usize>,
}

/// `p -a-> P1 ... Pk`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KTransition {
    pub source: String,
    pub constant: String,
    pub targets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KrivineMachine {
    pub level: u32,
    /// Constants with their arities.
    pub constants: Vec<(String, usize)>,
    pub locations: Vec<String>,
    /// The variables of the program in first-occurrence order.
    pub vars: Vec<(String, Type)>,
    pub terms: Vec<Subterm>,
    pub root: usize,
    pub transitions: Vec<KTransition>,
}

/// A closure `(N, ρ)` whose environment binds exactly the free variables of
/// `N`, sorted by variable index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Closure(Arc<(usize, Vec<(usize, Closure)>)>);

impl Closure {
    pub fn new(term: usize, env: Vec<(usize, Closure)>) -> Self {
        Closure(Arc::new((term, env)))
    }

    pub fn term(&self) -> usize {
        self.0 .0
    }

    pub fn env(&self) -> &[(usize, Closure)] {
        &self.0 .1
    }

    pub fn lookup(&self, x: usize) -> Option<&Closure> {
        self.env().iter().find(|(y, _)| *y == x).map(|(_, c)| c)
    }

    pub fn size(&self) -> usize {
        1 + self.env().iter().map(|(_, c)| c.size()).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KConfig {
    pub location: String,
    pub head: Closure,
    pub args: Vec<Closure>,
}

/// Displays configurations with the machine's variable names.
pub struct ShowConfig<'a>(pub &'a KrivineMachine, pub &'a KConfig);

impl fmt::Display for KConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |c: &Closure| -> String {
            fn go(c: &Closure, out: &mut String) {
                out.push_str(&format!("(t{}", c.term()));
                for (x, d) in c.env() {
                    out.push_str(&format!(", x{x} = "));
                    go(d, out);
                }
                out.push(')');
            }
            let mut s = String::new();
            go(c, &mut s);
            s
        };
        write!(f, "{} : {}", self.location, show(&self.head))?;
        for a in &self.args {
            write!(f, " {}", show(a))?;
        }
        Ok(())
    }
}

impl fmt::Display for ShowConfig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        let show = |c: &Closure| -> String {
            fn go(m: &KrivineMachine, c: &Closure, out: &mut String) {
                out.push('(');
                out.push_str(&m.show_term(c.term()));
                out.push_str(", {");
                for (i, (x, d)) in c.env().iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&m.vars[*x].0);
                    out.push_str(" = ");
                    go(m, d, out);
                }
                out.push_str("})");
            }
            let mut s = String::new();
            go(m, c, &mut s);
            s
        };
        write!(f, "{} : {}", self.1.location, show(&self.1.head))?;
        for a in &self.1.args {
            write!(f, " {}", show(a))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Raw {
    Name(Pos, String),
    Lam(String, Type, Box<Raw>),
    App(Box<Raw>, Box<Raw>),
    Fix(Pos, Box<Raw>),
}

fn parse_type(p: &mut Parser) -> PResult<Type> {
    let left = if p.eat_punct('(') {
        let t = parse_type(p)?;
        p.expect_punct(')')?;
        t
    } else {
        let pos = p.pos();
        match p.int()? {
            0 => Type::Base,
            k => return Err(ParseError::syntax(pos, format!("the only base type is `0`, found `{k}`"))),
        }
    };
    if p.eat_arrow() {
        Ok(Type::arrow(left, parse_type(p)?))
    } else {
        Ok(left)
    }
}

fn parse_term(p: &mut Parser) -> PResult<Raw> {
    if p.eat_punct('\\') {
        let x = p.ident()?;
        p.expect_punct(':')?;
        let t = parse_type(p)?;
        p.expect_punct('.')?;
        let body = parse_term(p)?;
        return Ok(Raw::Lam(x, t, Box::new(body)));
    }
    let mut head = parse_atom(p)?;
    loop {
        if p.is_punct('\\') {
            let arg = parse_term(p)?;
            return Ok(Raw::App(Box::new(head), Box::new(arg)));
        }
        if !(p.is_punct('(') || matches!(p.peek(), Tok::Ident(_))) {
            return Ok(head);
        }
        let arg = parse_atom(p)?;
        head = Raw::App(Box::new(head), Box::new(arg));
    }
}

fn parse_atom(p: &mut Parser) -> PResult<Raw> {
    let pos = p.pos();
    if p.eat_punct('(') {
        let t = parse_term(p)?;
        p.expect_punct(')')?;
        return Ok(t);
    }
    if p.eat_keyword("Y") {
        return Ok(Raw::Fix(pos, Box::new(parse_atom(p)?)));
    }
    match p.peek() {
        Tok::Ident(_) => Ok(Raw::Name(pos, p.ident()?)),
        _ => p.unexpected("a term"),
    }
}

/// Builds the subterm table, renaming binders apart and typing every node.
struct Builder<'a> {
    constants: &'a [(String, usize)],
    vars: Vec<(String, Type)>,
    terms: Vec<Subterm>,
    index: HashMap<TermNode, usize>,
}

impl Builder<'_> {
    fn fresh(&self, x: &str) -> String {
        let taken = |s: &str| self.vars.iter().any(|(v, _)| v == s) || self.constants.iter().any(|(c, _)| c == s);
        if !taken(x) {
            return x.to_string();
        }
        (1..)
            .map(|k| format!("{x}'{k}"))
            .find(|s| !taken(s))
            .expect("unbounded supply")
    }

    fn intern(&mut self, node: TermNode, ty: Type, free: BTreeSet<usize>) -> usize {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        let i = self.terms.len();
        self.index.insert(node.clone(), i);
        self.terms.push(Subterm { node, ty, free });
        i
    }

    fn build(&mut self, t: &Raw, scope: &mut Vec<(String, usize)>) -> Result<usize, EncodeError> {
        match t {
            Raw::Name(pos, x) => {
                if let Some(&(_, v)) = scope.iter().rev().find(|(y, _)| y == x) {
                    let ty = self.vars[v].1.clone();
                    return Ok(self.intern(TermNode::Var(v), ty, BTreeSet::from([v])));
                }
                match self.constants.iter().find(|(c, _)| c == x) {
                    Some((c, k)) => Ok(self.intern(TermNode::Const(c.clone()), Type::first_order(*k), BTreeSet::new())),
                    None => Err(EncodeError::Type(format!("{pos}: unbound name `{x}`"))),
                }
            }
            Raw::Lam(x, ty, body) => {
                let name = self.fresh(x);
                let v = self.vars.len();
                self.vars.push((name, ty.clone()));
                scope.push((x.clone(), v));
                let b = self.build(body, scope)?;
                scope.pop();
                let mut free = self.terms[b].free.clone();
                free.remove(&v);
                let t = Type::arrow(ty.clone(), self.terms[b].ty.clone());
                Ok(self.intern(TermNode::Abs(v, b), t, free))
            }
            Raw::App(f, a) => {
                let fi = self.build(f, scope)?;
                let ai = self.build(a, scope)?;
                let (ft, at) = (&self.terms[fi].ty, &self.terms[ai].ty);
                let Type::Arrow(dom, cod) = ft else {
                    return Err(EncodeError::Type(format!(
                        "`{}` of type {ft} is applied to an argument",
                        self.show(fi)
                    )));
                };
                if **dom != *at {
                    return Err(EncodeError::Type(format!(
                        "`{}` expects an argument of type {dom}, but `{}` has type {at}",
                        self.show(fi),
                        self.show(ai)
                    )));
                }
                let ty = (**cod).clone();
                let free = self.terms[fi].free.union(&self.terms[ai].free).copied().collect();
                Ok(self.intern(TermNode::App(fi, ai), ty, free))
            }
            Raw::Fix(pos, m) => {
                let mi = self.build(m, scope)?;
                let ty = match &self.terms[mi].ty {
                    Type::Arrow(a, b) if a == b => (**a).clone(),
                    other => {
                        return Err(EncodeError::Type(format!(
                            "{pos}: Y needs an argument of type T -> T, found {other}"
                        )))
                    }
                };
                let free = self.terms[mi].free.clone();
                Ok(self.intern(TermNode::Fix(mi), ty, free))
            }
        }
    }

    fn show(&self, t: usize) -> String {
        show_term(&self.terms, &self.vars, t)
    }
}

fn show_term(terms: &[Subterm], vars: &[(String, Type)], t: usize) -> String {
    let atom = |i: usize| {
        let s = show_term(terms, vars, i);
        match terms[i].node {
            TermNode::Const(_) | TermNode::Var(_) => s,
            _ => format!("({s})"),
        }
    };
    match &terms[t].node {
        TermNode::Const(c) => c.clone(),
        TermNode::Var(v) => vars[*v].0.clone(),
        TermNode::Abs(v, b) => format!("\\{}:{}. {}", vars[*v].0, vars[*v].1, show_term(terms, vars, *b)),
        TermNode::App(f, a) => {
            let fs = match terms[*f].node {
                TermNode::App(..) => show_term(terms, vars, *f),
                _ => atom(*f),
            };
            format!("{fs} {}", atom(*a))
        }
        TermNode::Fix(m) => format!("Y {}", atom(*m)),
    }
}

fn aux_location(i: usize, targets: &[String]) -> String {
    let mut s = format!("_arg{i}");
    for q in targets {
        s.push('.');
        s.push_str(q);
    }
    s
}

impl KrivineMachine {
    /// `krivine level=2 { const a : 0 -> 0; term K0 = Y (\f:0. a f); trans p a -> {p}; }`
    ///
    /// Locations may be declared with `locations`; names used in `trans`
    /// are declared implicitly. A transition on a constant of arity `k`
    /// lists `k` target sets.
    pub fn parse(src: &str) -> Result<Self, EncodeError> {
        let mut p = Parser::new(src)?;
        p.expect_keyword("krivine")?;
        let lpos = p.pos();
        let level = p.key_int("level")?;
        if level == 0 {
            return Err(ParseError::semantic(lpos, "level must be positive").into());
        }
        p.expect_punct('{')?;
        let mut constants: Vec<(String, usize)> = Vec::new();
        let mut locations: Vec<String> = Vec::new();
        let mut program: Option<(Pos, Raw)> = None;
        let mut raw_trans: Vec<(Pos, String, String, Vec<Vec<String>>)> = Vec::new();
        let declare = |locations: &mut Vec<String>, pos: Pos, q: String| -> PResult<()> {
            check_name(pos, &q)?;
            if q.contains('.') {
                return Err(ParseError::semantic(pos, format!("location `{q}` may not contain `.`")));
            }
            if !locations.contains(&q) {
                locations.push(q);
            }
            Ok(())
        };
        loop {
            p.eat_semi();
            if p.eat_punct('}') {
                break;
            }
            let pos = p.pos();
            if p.eat_keyword("const") {
                let name = p.ident()?;
                check_name(pos, &name)?;
                if name == "Y" || constants.iter().any(|(c, _)| *c == name) {
                    return Err(ParseError::semantic(pos, format!("constant `{name}` declared twice or reserved")).into());
                }
                p.expect_punct(':')?;
                let tpos = p.pos();
                let ty = parse_type(&mut p)?;
                let k = ty.arity();
                if ty != Type::first_order(k) {
                    return Err(EncodeError::Type(format!("{tpos}: constant `{name}` must have a type 0 -> ... -> 0, found {ty}")));
                }
                constants.push((name, k));
            } else if p.eat_keyword("locations") {
                for (lp, q) in p.ident_list()? {
                    declare(&mut locations, lp, q)?;
                }
            } else if p.eat_keyword("term") {
                p.ident()?;
                p.expect_punct('=')?;
                if program.is_some() {
                    return Err(ParseError::semantic(pos, "only one term may be given").into());
                }
                program = Some((pos, parse_term(&mut p)?));
            } else if p.eat_keyword("trans") {
                let sp = p.pos();
                let source = p.ident()?;
                declare(&mut locations, sp, source.clone())?;
                let cpos = p.pos();
                let a = p.ident()?;
                p.expect_arrow()?;
                let mut sets = Vec::new();
                while p.is_punct('{') {
                    let mut set = BTreeSet::new();
                    for (qp, q) in p.ident_set()? {
                        declare(&mut locations, qp, q.clone())?;
                        set.insert(q);
                    }
                    sets.push(set.into_iter().collect());
                }
                raw_trans.push((cpos, source, a, sets));
            } else {
                return Ok(p.unexpected("`const`, `locations`, `term`, `trans` or `}`")?);
            }
        }
        p.expect_eof()?;
        let mut transitions = Vec::new();
        for (pos, source, a, targets) in raw_trans {
            let Some((_, k)) = constants.iter().find(|(c, _)| *c == a) else {
                return Err(ParseError::semantic(pos, format!("undeclared constant `{a}`")).into());
            };
            if targets.len() != *k {
                return Err(ParseError::semantic(
                    pos,
                    format!("constant `{a}` has arity {k} but {} target sets are given", targets.len()),
                )
                .into());
            }
            transitions.push(KTransition {
                source,
                constant: a,
                targets,
            });
        }
        let Some((ppos, raw)) = program else {
            return Err(ParseError::semantic(p.pos(), "missing `term`").into());
        };
        let mut b = Builder {
            constants: &constants,
            vars: Vec::new(),
            terms: Vec::new(),
            index: HashMap::new(),
        };
        let root = b.build(&raw, &mut Vec::new())?;
        if b.terms[root].ty != Type::Base {
            return Err(EncodeError::Type(format!("{ppos}: the program must have type 0, found {}", b.terms[root].ty)));
        }
        let (vars, terms) = (b.vars, b.terms);
        if let Some(t) = terms.iter().position(|s| s.ty.level() > level) {
            return Err(EncodeError::Level(format!(
                "`{}` has type {} of level {} above {level}",
                show_term(&terms, &vars, t),
                terms[t].ty,
                terms[t].ty.level()
            )));
        }
        Ok(KrivineMachine {
            level,
            constants,
            locations,
            vars,
            terms,
            root,
            transitions,
        })
    }

    pub fn show_term(&self, t: usize) -> String {
        show_term(&self.terms, &self.vars, t)
    }

    /// `(K0, ∅)` at `location`.
    pub fn initial(&self, location: &str) -> KConfig {
        KConfig {
            location: location.to_string(),
            head: Closure::new(self.root, Vec::new()),
            args: Vec::new(),
        }
    }

    fn ord(&self, t: &Type) -> u32 {
        self.level - t.level()
    }

    fn restrict(&self, env: &[(usize, Closure)], t: usize) -> Vec<(usize, Closure)> {
        let free = &self.terms[t].free;
        env.iter().filter(|(x, _)| free.contains(x)).cloned().collect()
    }

    fn closure_ok(&self, c: &Closure) -> bool {
        let free: Vec<usize> = self.terms.get(c.term()).map_or(Vec::new(), |s| s.free.iter().copied().collect());
        let bound: Vec<usize> = c.env().iter().map(|(x, _)| *x).collect();
        free == bound
            && c.env()
                .iter()
                .all(|(x, d)| self.terms[d.term()].ty == self.vars[*x].1 && self.closure_ok(d))
    }

    fn check_config(&self, c: &KConfig) -> Result<(), EncodeError> {
        if !self.locations.contains(&c.location) {
            return Err(EncodeError::UnknownLocation(c.location.clone()));
        }
        if !self.closure_ok(&c.head) || !c.args.iter().all(|a| self.closure_ok(a)) {
            return Err(EncodeError::BadConfig("invalid closure".into()));
        }
        let args = self.terms[c.head.term()].ty.args();
        if args.len() != c.args.len() || args.iter().zip(&c.args).any(|(t, a)| self.terms[a.term()].ty != *t) {
            return Err(EncodeError::BadConfig("arguments do not fit the head type".into()));
        }
        Ok(())
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.constants.iter().all(|(_, k)| *k <= 1)
            && self.transitions.iter().all(|t| t.targets.iter().all(|s| s.len() <= 1))
    }

    /// Environment slots of the encoding: one per variable, or a single
    /// never-bound slot for a program without variables, so that closure
    /// symbols are never leaves and lookaheads stay flat.
    fn slots(&self) -> Vec<Type> {
        if self.vars.is_empty() {
            vec![Type::Base]
        } else {
            self.vars.iter().map(|(_, t)| t.clone()).collect()
        }
    }

    fn head_name(t: usize) -> String {
        format!("h{t}")
    }

    fn term_name(t: usize) -> String {
        format!("t{t}")
    }

    fn bot_name(o: u32) -> String {
        format!("_bot.{o}")
    }

    fn enc_closure(&self, al: &Alphabet, c: &Closure) -> Result<Tree, EncodeError> {
        let s = get(al, &Self::term_name(c.term()))?;
        let kids = self.enc_env(al, c)?;
        Ok(Tree::node(&s, kids))
    }

    fn enc_env(&self, al: &Alphabet, c: &Closure) -> Result<Vec<Tree>, EncodeError> {
        let mut kids = Vec::new();
        for (i, ty) in self.slots().iter().enumerate() {
            kids.push(match c.lookup(i) {
                Some(d) => self.enc_closure(al, d)?,
                None => Tree::leaf(&get(al, &Self::bot_name(self.ord(ty)))?),
            });
        }
        Ok(kids)
    }
}

fn get(al: &Alphabet, name: &str) -> Result<Symbol, EncodeError> {
    al.get(name)
        .cloned()
        .ok_or_else(|| EncodeError::BadConfig(format!("no symbol `{name}` in the encoding")))
}

impl Model for KrivineMachine {
    type Config = KConfig;

    fn locations(&self) -> Vec<String> {
        self.locations.clone()
    }

    fn location<'a>(&self, c: &'a KConfig) -> &'a str {
        &c.location
    }

    fn successors(&self, c: &KConfig) -> Vec<Vec<KConfig>> {
        let at = |head: Closure, args: Vec<Closure>| KConfig {
            location: c.location.clone(),
            head,
            args,
        };
        let env = c.head.env();
        match &self.terms[c.head.term()].node {
            TermNode::Var(x) => match c.head.lookup(*x) {
                Some(d) => vec![vec![at(d.clone(), c.args.clone())]],
                None => Vec::new(),
            },
            TermNode::App(m, n) => {
                let mut args = vec![Closure::new(*n, self.restrict(env, *n))];
                args.extend(c.args.iter().cloned());
                vec![vec![at(Closure::new(*m, self.restrict(env, *m)), args)]]
            }
            TermNode::Fix(m) => {
                let mut args = vec![c.head.clone()];
                args.extend(c.args.iter().cloned());
                vec![vec![at(Closure::new(*m, env.to_vec()), args)]]
            }
            TermNode::Abs(x, body) => {
                let Some((c0, rest)) = c.args.split_first() else {
                    return Vec::new();
                };
                let mut e = env.to_vec();
                e.push((*x, c0.clone()));
                e.sort();
                // Keep the closure valid when the binder is unused.
                let e = self.restrict(&e, *body);
                vec![vec![at(Closure::new(*body, e), rest.to_vec())]]
            }
            TermNode::Const(a) => {
                let mut out = Vec::new();
                for t in self.transitions.iter().filter(|t| t.source == c.location && t.constant == *a) {
                    let mut mv = BTreeSet::new();
                    for (i, set) in t.targets.iter().enumerate() {
                        for q in set {
                            mv.insert(KConfig {
                                location: q.clone(),
                                head: c.args[i].clone(),
                                args: Vec::new(),
                            });
                        }
                    }
                    out.push(mv.into_iter().collect());
                }
                out
            }
        }
    }

    fn move_length(&self, c: &KConfig) -> usize {
        match self.terms[c.head.term()].node {
            TermNode::Const(_) => 2,
            _ => 1,
        }
    }

    fn encode(&self) -> Result<Encoding, EncodeError> {
        let l = self.level;
        let slots = self.slots();
        let n = slots.len();
        let mut syms = Vec::new();
        let mut legend = Vec::new();
        for (i, s) in self.terms.iter().enumerate() {
            if s.ty.level() < l {
                syms.push(Symbol::new(Self::term_name(i), n, self.ord(&s.ty)));
            }
            syms.push(Symbol::new(Self::head_name(i), n + s.ty.arity(), l));
            legend.push((Self::term_name(i), self.show_term(i)));
        }
        let bot_orders: BTreeSet<u32> = slots.iter().map(|t| self.ord(t)).collect();
        for &o in &bot_orders {
            syms.push(Symbol::new(Self::bot_name(o), 0, o));
        }
        let al = super::alphabet_of(syms);
        let sym = |name: String| al.get(&name).expect("generated symbol").clone();
        let var_tree = |prefix: &str, i: usize, ty: &Type| Tree::var(Var::new(format!("{prefix}{i}"), self.ord(ty)));
        let xs: Vec<Tree> = slots.iter().enumerate().map(|(i, t)| var_tree("x", i + 1, t)).collect();
        let zs: Vec<Tree> = slots.iter().enumerate().map(|(i, t)| var_tree("z", i + 1, t)).collect();
        let bots: Vec<Tree> = slots.iter().map(|t| Tree::leaf(&sym(Self::bot_name(self.ord(t))))).collect();
        // x⃗ with slots not free in `t` replaced by ⊥.
        let restricted = |t: usize| -> Vec<Tree> {
            (0..n)
                .map(|i| if self.terms[t].free.contains(&i) { xs[i].clone() } else { bots[i].clone() })
                .collect()
        };
        let cat = |a: &[Tree], b: &[Tree]| -> Vec<Tree> { a.iter().chain(b).cloned().collect() };

        let mut aux: BTreeSet<(usize, Vec<String>, usize)> = BTreeSet::new();
        // Shallow and deep rules as (lhs, rhs); the constant steps carry
        // their own locations.
        let mut uniform: Vec<(Tree, Tree)> = Vec::new();
        let mut rules = Vec::new();
        for (t, s) in self.terms.iter().enumerate() {
            let ys: Vec<Tree> = s.ty.args().iter().enumerate().map(|(j, a)| var_tree("y", j + 1, a)).collect();
            let head = sym(Self::head_name(t));
            match &s.node {
                TermNode::Var(i) => {
                    for (m, ms) in self.terms.iter().enumerate() {
                        if ms.ty != s.ty {
                            continue;
                        }
                        let mut kids = zs.clone();
                        kids[*i] = Tree::node(&sym(Self::term_name(m)), xs.clone());
                        let lhs = Tree::node(&head, cat(&kids, &ys));
                        let rhs = Tree::node(&sym(Self::head_name(m)), cat(&xs, &ys));
                        uniform.push((lhs, rhs));
                    }
                }
                TermNode::App(m, a) => {
                    let mut kids = restricted(*m);
                    kids.push(Tree::node(&sym(Self::term_name(*a)), restricted(*a)));
                    kids.extend(ys.iter().cloned());
                    let lhs = Tree::node(&head, cat(&xs, &ys));
                    uniform.push((lhs, Tree::node(&sym(Self::head_name(*m)), kids)));
                }
                TermNode::Fix(m) => {
                    let mut kids = xs.clone();
                    kids.push(Tree::node(&sym(Self::term_name(t)), xs.clone()));
                    kids.extend(ys.iter().cloned());
                    let lhs = Tree::node(&head, cat(&xs, &ys));
                    uniform.push((lhs, Tree::node(&sym(Self::head_name(*m)), kids)));
                }
                TermNode::Abs(i, body) => {
                    let y0 = var_tree("y", 0, &self.vars[*i].1);
                    let mut kids = xs.clone();
                    kids[*i] = if self.terms[*body].free.contains(i) { y0.clone() } else { bots[*i].clone() };
                    kids.extend(ys[1..].iter().cloned());
                    let lhs = Tree::node(&head, cat(&cat(&xs, &[y0]), &ys[1..]));
                    uniform.push((lhs, Tree::node(&sym(Self::head_name(*body)), kids)));
                }
                TermNode::Const(a) => {
                    for tr in self.transitions.iter().filter(|tr| tr.constant == *a) {
                        let locs: Vec<String> = tr
                            .targets
                            .iter()
                            .enumerate()
                            .map(|(i, set)| aux_location(i + 1, set))
                            .collect();
                        for (i, set) in tr.targets.iter().enumerate() {
                            aux.insert((i + 1, set.clone(), t));
                        }
                        let lhs = Tree::node(&head, cat(&xs, &ys));
                        rules.push(Rule::new(tr.source.clone(), lhs.clone(), locs, lhs));
                    }
                }
            }
        }
        for (lhs, rhs) in uniform {
            for q in &self.locations {
                rules.push(Rule::new(q.clone(), lhs.clone(), [q.clone()], rhs.clone()));
            }
        }
        let mut locations = self.locations.clone();
        for (i, set, t) in &aux {
            let loc = aux_location(*i, set);
            if !locations.contains(&loc) {
                locations.push(loc.clone());
            }
            let ys: Vec<Tree> = (1..=self.terms[*t].ty.arity())
                .map(|j| var_tree("y", j, &Type::Base))
                .collect();
            for (m, ms) in self.terms.iter().enumerate() {
                if ms.ty != Type::Base {
                    continue;
                }
                let mut args = ys.clone();
                args[i - 1] = Tree::node(&sym(Self::term_name(m)), xs.clone());
                let lhs = Tree::node(&sym(Self::head_name(*t)), cat(&zs, &args));
                let rhs = Tree::node(&sym(Self::head_name(m)), xs.clone());
                rules.push(Rule::new(loc.clone(), lhs, set.iter().cloned(), rhs));
            }
        }
        let system = Aotps::new(l, al, locations, rules);
        system.ensure_valid()?;
        Ok(Encoding {
            system,
            model_locations: self.locations.clone(),
            legend,
        })
    }

    fn enc_config(&self, enc: &Encoding, c: &KConfig) -> Result<Configuration, EncodeError> {
        self.check_config(c)?;
        let al = enc.system.alphabet();
        let mut kids = self.enc_env(al, &c.head)?;
        for a in &c.args {
            kids.push(self.enc_closure(al, a)?);
        }
        let root = get(al, &Self::head_name(c.head.term()))?;
        Ok(Configuration::new(&c.location, Tree::node(&root, kids)))
    }

    /// A location `p` stands for `(p, (K0, ∅))`.
    fn parse_config(&self, src: &str) -> PResult<KConfig> {
        let mut p = Parser::new(src)?;
        let pos = p.pos();
        let q = p.ident()?;
        p.expect_eof()?;
        if !self.locations.contains(&q) {
            return Err(ParseError::semantic(pos, format!("undeclared location `{q}`")));
        }
        Ok(self.initial(&q))
    }

    fn config_size(&self, c: &KConfig) -> usize {
        c.head.size() + c.args.iter().map(Closure::size).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::lockstep;

    const LOOP: &str = r"krivine level=1 { const a : 0 -> 0; term K0 = Y (\f:0. a f); trans p a -> {p}; }";

    #[test]
    fn spec_term_with_function_binder_is_ill_typed() {
        let e = KrivineMachine::parse(r"krivine level=2 { const a : 0 -> 0; term K0 = Y (\f:0->0. a f); trans p a -> {p}; }")
            .unwrap_err();
        assert!(matches!(e, EncodeError::Type(_)), "{e}");
    }

    #[test]
    fn level_is_enforced() {
        let e = KrivineMachine::parse(r"krivine level=1 { const a : 0 -> 0; term K0 = (\g:0->0. g (a (a a))) a; }");
        assert!(matches!(e, Err(EncodeError::Type(_))));
        let e = KrivineMachine::parse(r"krivine level=1 { const a : 0; const b : 0 -> 0; term K0 = (\g:0->0. g a) b; }")
            .unwrap_err();
        assert!(matches!(e, EncodeError::Level(_)), "{e}");
    }

    #[test]
    fn fixpoint_loop_reaches_the_constant_in_three_steps() {
        let m = KrivineMachine::parse(LOOP).unwrap();
        let e = m.encode().unwrap();
        assert_eq!(e.system.order(), 1);
        assert!(e.system.classify().unwrap().is_flat);
        let mut c = m.initial("p");
        let mut t = m.enc_config(&e, &c).unwrap();
        for _ in 0..3 {
            lockstep(&m, &e, &c).unwrap();
            let next = m.successors(&c);
            assert_eq!(next.len(), 1);
            c = next[0][0].clone();
            let steps = e.system.step(&t);
            assert_eq!(steps.len(), 1);
            t = steps[0].1[0].clone();
            assert_eq!(t, m.enc_config(&e, &c).unwrap());
        }
        assert!(matches!(m.terms[c.head.term()].node, TermNode::Const(_)));
        assert_eq!(m.move_length(&c), 2);
        lockstep(&m, &e, &c).unwrap();
        // The constant step hands the argument back to `p`.
        let back = &m.successors(&c)[0][0];
        assert_eq!(m.show_term(back.head.term()), "f");
        assert_eq!(ShowConfig(&m, back).to_string(), "p : (f, {f = (Y (\\f:0. a f), {})})");
    }

    #[test]
    fn application_restricts_the_environment() {
        let m = KrivineMachine::parse(
            r"krivine level=2 { const a : 0 -> 0 -> 0; const c : 0;
               term K0 = (\x:0. \y:0. a x (\z:0. z) y) c c; trans p a -> {p} {q}; }",
        )
        .unwrap_err();
        assert!(matches!(m, EncodeError::Type(_)));
        let m = KrivineMachine::parse(
            r"krivine level=2 { const a : 0 -> 0 -> 0; const c : 0;
               term K0 = (\x:0. \y:0. a x y) c c; trans p a -> {p} {q}; }",
        )
        .unwrap();
        let e = m.encode().unwrap();
        let mut c = m.initial("p");
        for _ in 0..12 {
            lockstep(&m, &e, &c).unwrap();
            let Some(next) = m.successors(&c).first().and_then(|mv| mv.first().cloned()) else {
                break;
            };
            c = next;
        }
    }

    #[test]
    fn closed_closures_encode_with_bottom_slots() {
        let m = KrivineMachine::parse(LOOP).unwrap();
        let e = m.encode().unwrap();
        let t = m.enc_config(&e, &m.initial("p")).unwrap().tree;
        assert_eq!(t.children().len(), m.vars.len());
        assert!(t.children().iter().all(|c| c.symbol().is_some_and(|s| s.name().starts_with("_bot"))));
    }

    #[test]
    fn programs_without_variables_still_encode_flat() {
        let m = KrivineMachine::parse(
            "krivine level=1 { const b : 0 -> 0 -> 0; const c : 0; term K0 = b c c; trans p b -> {p} {q}; }",
        )
        .unwrap();
        assert!(m.vars.is_empty());
        let e = m.encode().unwrap();
        assert!(e.system.classify().unwrap().is_flat);
        let c = m.initial("p");
        assert_eq!(m.enc_config(&e, &c).unwrap().tree.to_string(), "h3(_bot.1)");
        let mut c = c;
        while m.move_length(&c) == 1 {
            lockstep(&m, &e, &c).unwrap();
            c = m.successors(&c)[0][0].clone();
        }
        lockstep(&m, &e, &c).unwrap();
    }

    #[test]
    fn binders_are_renamed_apart() {
        let m = KrivineMachine::parse(
            r"krivine level=1 { const a : 0 -> 0; const x : 0; term K0 = (\x:0. (\x:0. a x) x) x; }",
        )
        .unwrap();
        let names: Vec<&str> = m.vars.iter().map(|(v, _)| v.as_str()).collect();
        assert_eq!(names, ["x'1", "x'2"]);
    }
}
