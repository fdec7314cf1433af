//! Ordered ranked alphabets, trees over symbols and variables, substitutions
//! and linear pattern matching.
//!
//! Trees are immutable and reference counted. Every node caches its hash,
//! size and groundness, so equality checks on distinct trees usually stop
//! at the hash comparison and clones are pointer copies.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

/// Errors raised by tree construction, substitution and matching.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("symbol `{symbol}` has rank {rank} but was given {given} children")]
    RankMismatch {
        symbol: String,
        rank: usize,
        given: usize,
    },
    #[error("substitution binds {var} to a tree of order {found}")]
    OrderMismatch { var: String, found: u32 },
    #[error("pattern is not linear: variable {0} occurs more than once")]
    NonLinearPattern(String),
    #[error("symbol `{0}` is declared twice")]
    DuplicateSymbol(String),
    #[error("symbol `{0}` must have order at least 1")]
    ZeroOrder(String),
}

#[derive(Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct SymbolData {
    name: String,
    rank: usize,
    order: u32,
}

/// A ranked symbol that also carries an order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<SymbolData>);

impl Symbol {
    pub fn new(name: impl Into<String>, rank: usize, order: u32) -> Self {
        Symbol(Arc::new(SymbolData {
            name: name.into(),
            rank,
            order,
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn rank(&self) -> usize {
        self.0.rank
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}@{}", self.name(), self.rank(), self.order())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A variable is identified by its name together with its order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    order: u32,
}

impl Var {
    pub fn new(name: impl AsRef<str>, order: u32) -> Self {
        Var {
            name: Arc::from(name.as_ref()),
            order,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> u32 {
        self.order
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}:{}", self.name, self.order)
    }
}

/// Node label: a symbol of the alphabet or a variable leaf.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Label {
    Sym(Symbol),
    Var(Var),
}

impl Label {
    pub fn order(&self) -> u32 {
        match self {
            Label::Sym(s) => s.order(),
            Label::Var(v) => v.order(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Label::Sym(s) => s.rank(),
            Label::Var(_) => 0,
        }
    }
}

struct Node {
    label: Label,
    children: Box<[Tree]>,
    hash: u64,
    size: usize,
    ground: bool,
}

/// A finite ranked tree over an ordered alphabet and variables.
#[derive(Clone)]
pub struct Tree(Arc<Node>);

impl Tree {
    /// Builds `sym(children)`, checking the rank.
    pub fn try_node(sym: Symbol, children: Vec<Tree>) -> Result<Tree, TreeError> {
        if sym.rank() != children.len() {
            return Err(TreeError::RankMismatch {
                symbol: sym.name().to_string(),
                rank: sym.rank(),
                given: children.len(),
            });
        }
        Ok(Self::build(Label::Sym(sym), children.into_boxed_slice()))
    }

    /// Builds `sym(children)`.
    ///
    /// Panics if the number of children differs from the rank of `sym`.
    pub fn node(sym: &Symbol, children: Vec<Tree>) -> Tree {
        match Self::try_node(sym.clone(), children) {
            Ok(t) => t,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn leaf(sym: &Symbol) -> Tree {
        Self::node(sym, Vec::new())
    }

    pub fn var(v: Var) -> Tree {
        Self::build(Label::Var(v), Box::new([]))
    }

    fn build(label: Label, children: Box<[Tree]>) -> Tree {
        let mut h = DefaultHasher::new();
        label.hash(&mut h);
        let mut size = 1;
        let mut ground = matches!(label, Label::Sym(_));
        for c in children.iter() {
            h.write_u64(c.0.hash);
            size += c.0.size;
            ground &= c.0.ground;
        }
        Tree(Arc::new(Node {
            label,
            children,
            hash: h.finish(),
            size,
            ground,
        }))
    }

    pub fn label(&self) -> &Label {
        &self.0.label
    }

    pub fn symbol(&self) -> Option<&Symbol> {
        match &self.0.label {
            Label::Sym(s) => Some(s),
            Label::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match &self.0.label {
            Label::Var(v) => Some(v),
            Label::Sym(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        self.as_var().is_some()
    }

    pub fn children(&self) -> &[Tree] {
        &self.0.children
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    /// Order of the root label.
    pub fn order(&self) -> u32 {
        self.0.label.order()
    }

    pub fn ptr_eq(&self, other: &Tree) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn height(&self) -> usize {
        1 + self.children().iter().map(Tree::height).max().unwrap_or(0)
    }

    /// Variables in first-occurrence order, each reported once.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Some(v) = t.as_var() {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.vars().into_iter().collect()
    }

    /// Pre-order traversal of all subtrees (including `self`).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Tree)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// All subtrees in pre-order, with repetitions.
    pub fn subtrees(&self) -> Vec<&Tree> {
        let mut out = Vec::new();
        self.walk(&mut |t| out.push(t));
        out
    }

    /// Symbols occurring in the tree.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| {
            if let Some(s) = t.symbol() {
                out.insert(s.clone());
            }
        });
        out
    }

    /// True iff no variable occurs twice.
    pub fn is_linear(&self) -> bool {
        let mut seen = BTreeSet::new();
        let mut linear = true;
        self.walk(&mut |t| {
            if let Some(v) = t.as_var() {
                linear &= seen.insert(v.clone());
            }
        });
        linear
    }

    /// True iff `self` shares no variable with `other`.
    pub fn is_ground_wrt(&self, other: &Tree) -> bool {
        let theirs = other.var_set();
        self.vars().iter().all(|v| !theirs.contains(v))
    }

    /// Applies `sigma`; unbound variables are left in place.
    pub fn substitute(&self, sigma: &Substitution) -> Result<Tree, TreeError> {
        sigma.check_orders()?;
        Ok(self.substitute_unchecked(sigma))
    }

    pub(crate) fn substitute_unchecked(&self, sigma: &Substitution) -> Tree {
        self.map_vars(&mut |v| sigma.get(v).cloned())
    }

    /// Rebuilds the tree replacing every variable for which `f` returns a
    /// tree. Subtrees without replaced variables are shared.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Option<Tree>) -> Tree {
        if self.is_ground() {
            return self.clone();
        }
        match self.label() {
            Label::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Label::Sym(_) => {
                let children: Vec<Tree> = self.children().iter().map(|c| c.map_vars(f)).collect();
                if children
                    .iter()
                    .zip(self.children())
                    .all(|(a, b)| a.ptr_eq(b))
                {
                    self.clone()
                } else {
                    Self::build(self.label().clone(), children.into_boxed_slice())
                }
            }
        }
    }

    /// Same tree with every symbol relabelled by `f`; `f` must preserve ranks.
    pub fn map_symbols(&self, f: &mut impl FnMut(&Symbol, &[Tree]) -> Symbol) -> Tree {
        match self.label() {
            Label::Var(_) => self.clone(),
            Label::Sym(s) => {
                let children: Vec<Tree> =
                    self.children().iter().map(|c| c.map_symbols(f)).collect();
                let sym = f(s, &children);
                Tree::node(&sym, children)
            }
        }
    }

    /// Matches a linear pattern against a ground tree.
    pub fn match_linear(pattern: &Tree, t: &Tree) -> Result<Option<Substitution>, TreeError> {
        if let Some(dup) = first_repeated_var(pattern) {
            return Err(TreeError::NonLinearPattern(dup.to_string()));
        }
        let mut out = Vec::new();
        Ok(if match_into(pattern, t, &mut out) {
            Some(Substitution::from_pairs(out))
        } else {
            None
        })
    }
}

fn first_repeated_var(t: &Tree) -> Option<Var> {
    let mut seen = BTreeSet::new();
    let mut dup = None;
    t.walk(&mut |n| {
        if let Some(v) = n.as_var() {
            if !seen.insert(v.clone()) && dup.is_none() {
                dup = Some(v.clone());
            }
        }
    });
    dup
}

/// Structural matching without the linearity check. Bindings are appended
/// to `out`; on failure `out` may hold partial bindings.
pub(crate) fn match_into(pattern: &Tree, t: &Tree, out: &mut Vec<(Var, Tree)>) -> bool {
    match pattern.label() {
        Label::Var(v) => {
            if t.order() == v.order() {
                out.push((v.clone(), t.clone()));
                true
            } else {
                false
            }
        }
        Label::Sym(s) => {
            if pattern.is_ground() {
                return pattern == t;
            }
            match t.symbol() {
                Some(ts) if ts == s => pattern
                    .children()
                    .iter()
                    .zip(t.children())
                    .all(|(p, c)| match_into(p, c, out)),
                _ => false,
            }
        }
    }
}

impl PartialEq for Tree {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other)
            || (self.0.hash == other.0.hash
                && self.0.size == other.0.size
                && self.0.label == other.0.label
                && self.0.children == other.0.children)
    }
}

impl Eq for Tree {}

impl Hash for Tree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Tree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Tree {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        self.label()
            .cmp(other.label())
            .then_with(|| self.children().cmp(other.children()))
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label() {
            Label::Var(v) => write!(f, "{v}"),
            Label::Sym(s) => {
                f.write_str(s.name())?;
                if !self.children().is_empty() {
                    f.write_str("(")?;
                    for (i, c) in self.children().iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{c}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A finite, order-respecting map from variables to trees.
#[derive(Clone, Default, PartialEq, Eq, Hash, Debug)]
pub struct Substitution {
    bindings: BTreeMap<Var, Tree>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Tree)>) -> Self {
        Substitution {
            bindings: pairs.into_iter().collect(),
        }
    }

    pub fn bind(&mut self, v: Var, t: Tree) -> Result<(), TreeError> {
        if t.order() != v.order() {
            return Err(TreeError::OrderMismatch {
                var: v.to_string(),
                found: t.order(),
            });
        }
        self.bindings.insert(v, t);
        Ok(())
    }

    pub fn get(&self, v: &Var) -> Option<&Tree> {
        self.bindings.get(v)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Tree)> {
        self.bindings.iter()
    }

    pub fn check_orders(&self) -> Result<(), TreeError> {
        for (v, t) in &self.bindings {
            if t.order() != v.order() {
                return Err(TreeError::OrderMismatch {
                    var: v.to_string(),
                    found: t.order(),
                });
            }
        }
        Ok(())
    }
}

/// An ordered ranked alphabet, kept in declaration order.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Alphabet {
    symbols: IndexMap<String, Symbol>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_symbols(symbols: impl IntoIterator<Item = Symbol>) -> Result<Self, TreeError> {
        let mut a = Alphabet::new();
        for s in symbols {
            a.insert(s)?;
        }
        Ok(a)
    }

    pub fn insert(&mut self, s: Symbol) -> Result<(), TreeError> {
        if s.order() == 0 {
            return Err(TreeError::ZeroOrder(s.name().to_string()));
        }
        if self.symbols.contains_key(s.name()) {
            return Err(TreeError::DuplicateSymbol(s.name().to_string()));
        }
        self.symbols.insert(s.name().to_string(), s);
        Ok(())
    }

    /// Adds `s` unless an identical symbol is already present.
    pub fn ensure(&mut self, s: &Symbol) -> Result<(), TreeError> {
        match self.symbols.get(s.name()) {
            Some(existing) if existing == s => Ok(()),
            Some(_) => Err(TreeError::DuplicateSymbol(s.name().to_string())),
            None => self.insert(s.clone()),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.symbols.get(s.name()) == Some(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Symbol> {
        self.symbols.values()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn max_order(&self) -> u32 {
        self.iter().map(Symbol::order).max().unwrap_or(0)
    }

    pub fn max_rank(&self) -> usize {
        self.iter().map(Symbol::rank).max().unwrap_or(0)
    }

    pub fn of_order(&self, order: u32) -> impl Iterator<Item = &Symbol> {
        self.iter().filter(move |s| s.order() == order)
    }

    /// Checks that every symbol of `t` is declared here.
    pub fn admits(&self, t: &Tree) -> Result<(), String> {
        let mut bad = None;
        t.walk(&mut |n| {
            if let Some(s) = n.symbol() {
                if bad.is_none() && !self.contains(s) {
                    bad = Some(s.name().to_string());
                }
            }
        });
        bad.map_or(Ok(()), Err)
    }
}
