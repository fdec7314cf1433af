//! Alternating ordered tree-pushdown systems: rules, validation, the
//! rewrite step, subclass classification and the safety predicate.

mod flatten;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use thiserror::Error;

use crate::tree::{match_into, Alphabet, Substitution, Symbol, Tree};

pub use flatten::{flatten, Flattening};

/// Shape of a rule's left-hand side `a(u1, ..., um)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleKind {
    Shallow,
    /// The child at index `child` (0-based) is the lookahead `b(v1, ..., vm')`.
    Deep { child: usize, symbol: Symbol },
}

/// `p, l -> S, r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub source: String,
    pub lhs: Tree,
    /// Sorted and duplicate-free.
    pub targets: Vec<String>,
    pub rhs: Tree,
    /// Source line, when parsed from text.
    pub line: Option<u32>,
}

impl Rule {
    pub fn new(source: impl Into<String>, lhs: Tree, targets: impl IntoIterator<Item = String>, rhs: Tree) -> Self {
        let targets: BTreeSet<String> = targets.into_iter().collect();
        Rule {
            source: source.into(),
            lhs,
            targets: targets.into_iter().collect(),
            rhs,
            line: None,
        }
    }

    /// True iff `u` shares no variable with the right-hand side.
    pub fn is_r_ground(&self, u: &Tree) -> bool {
        u.is_ground_wrt(&self.rhs)
    }

    /// Determines whether the rule is shallow or deep; `Err` describes why
    /// the left-hand side has neither shape.
    pub fn kind(&self) -> Result<RuleKind, String> {
        let Some(_) = self.lhs.symbol() else {
            return Err("left-hand side must be rooted at a symbol".into());
        };
        let mut deep = None;
        for (i, u) in self.lhs.children().iter().enumerate() {
            if u.is_var() || self.is_r_ground(u) {
                continue;
            }
            if deep.is_some() {
                return Err(format!(
                    "children {} and {} both inspect variables kept by the right-hand side; at most one lookahead child is allowed",
                    deep.map_or(0, |d: usize| d + 1),
                    i + 1
                ));
            }
            deep = Some(i);
        }
        let Some(k) = deep else {
            return Ok(RuleKind::Shallow);
        };
        let b = &self.lhs.children()[k];
        for (j, v) in b.children().iter().enumerate() {
            if !(v.is_var() || self.is_r_ground(v)) {
                return Err(format!(
                    "lookahead child {} has a grandchild {} that is neither a variable nor r-ground",
                    k + 1,
                    j + 1
                ));
            }
        }
        Ok(RuleKind::Deep {
            child: k,
            symbol: b.symbol().expect("non-variable child").clone(),
        })
    }

    /// Every `u_i` and `v_j` is a variable.
    pub fn is_flat(&self) -> bool {
        match self.kind() {
            Ok(RuleKind::Shallow) => self.lhs.children().iter().all(Tree::is_var),
            Ok(RuleKind::Deep { child, .. }) => self.lhs.children().iter().enumerate().all(|(i, u)| {
                if i == child {
                    u.children().iter().all(Tree::is_var)
                } else {
                    u.is_var()
                }
            }),
            Err(_) => false,
        }
    }

    /// `1 + |l| + |S| + |r|`.
    pub fn size(&self) -> usize {
        1 + self.lhs.size() + self.targets.len() + self.rhs.size()
    }
}

/// A finding of [`Aotps::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// 0-based rule index, if the finding concerns a rule.
    pub rule: Option<usize>,
    pub line: Option<u32>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rule, self.line) {
            (Some(r), Some(l)) => write!(f, "rule-{} (line {l}): {}", r + 1, self.message),
            (Some(r), None) => write!(f, "rule-{}: {}", r + 1, self.message),
            (None, _) => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("invalid system: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSystem(Vec<Diagnostic>),
}

/// A configuration `(p, t)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub location: Arc<str>,
    pub tree: Tree,
}

impl Configuration {
    pub fn new(location: &str, tree: Tree) -> Self {
        Configuration {
            location: Arc::from(location),
            tree,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.location, self.tree)
    }
}

/// Structural facts about a system and the complexity bound they give.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub order: u32,
    pub is_flat: bool,
    pub is_shallow: bool,
    pub is_unary: bool,
    pub is_linear: bool,
    pub is_nondeterministic: bool,
    pub complexity_class: String,
}

impl fmt::Display for ClassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order: {}", self.order)?;
        writeln!(f, "flat: {}", self.is_flat)?;
        writeln!(f, "shallow: {}", self.is_shallow)?;
        writeln!(f, "unary: {}", self.is_unary)?;
        writeln!(f, "linear: {}", self.is_linear)?;
        writeln!(f, "nondeterministic: {}", self.is_nondeterministic)?;
        write!(f, "complexity: {}", self.complexity_class)
    }
}

/// `⟨n, Σ, P, R⟩`.
#[derive(Debug, Clone)]
pub struct Aotps {
    order: u32,
    alphabet: Alphabet,
    locations: IndexSet<String>,
    rules: Vec<Rule>,
    index: HashMap<(String, Symbol), Vec<usize>>,
}

impl PartialEq for Aotps {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.alphabet == other.alphabet
            && self.locations == other.locations
            && self.rules == other.rules
    }
}

impl Aotps {
    pub fn new(
        order: u32,
        alphabet: Alphabet,
        locations: impl IntoIterator<Item = String>,
        rules: Vec<Rule>,
    ) -> Self {
        let mut index: HashMap<(String, Symbol), Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            if let Some(a) = r.lhs.symbol() {
                index.entry((r.source.clone(), a.clone())).or_default().push(i);
            }
        }
        Aotps {
            order,
            alphabet,
            locations: locations.into_iter().collect(),
            rules,
            index,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.locations.iter().map(String::as_str)
    }

    pub fn has_location(&self, p: &str) -> bool {
        self.locations.contains(p)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// `|R| = Σ (1 + |l| + |S| + |r|)`.
    pub fn rules_size(&self) -> usize {
        self.rules.iter().map(Rule::size).sum()
    }

    /// `|Σ| + |P| + |R|`.
    pub fn size(&self) -> usize {
        self.alphabet.len() + self.locations.len() + self.rules_size()
    }

    /// Lists every violated well-formedness condition; empty iff valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let global = |m: String| Diagnostic {
            rule: None,
            line: None,
            message: m,
        };
        if self.order == 0 {
            out.push(global("system order must be positive".into()));
        }
        for s in self.alphabet.iter() {
            if s.order() > self.order {
                out.push(global(format!(
                    "symbol `{}` has order {} above the system order {}",
                    s.name(),
                    s.order(),
                    self.order
                )));
            }
        }
        for (i, r) in self.rules.iter().enumerate() {
            let mut diag = |m: String| {
                out.push(Diagnostic {
                    rule: Some(i),
                    line: r.line,
                    message: m,
                })
            };
            if !self.has_location(&r.source) {
                diag(format!("undeclared location `{}`", r.source));
            }
            for t in &r.targets {
                if !self.has_location(t) {
                    diag(format!("undeclared target location `{t}`"));
                }
            }
            for (side, t) in [("left", &r.lhs), ("right", &r.rhs)] {
                if let Err(s) = self.alphabet.admits(t) {
                    diag(format!("{side}-hand side uses undeclared symbol `{s}`"));
                }
                for v in t.vars() {
                    if v.order() == 0 || v.order() > self.order {
                        diag(format!(
                            "variable {v} has order outside 1..{}",
                            self.order
                        ));
                    }
                }
            }
            if !r.lhs.is_linear() {
                diag("left-hand side is not linear".into());
            }
            let lv = r.lhs.var_set();
            for v in r.rhs.vars() {
                if !lv.contains(&v) {
                    diag(format!(
                        "variable scope: {v} occurs on the right-hand side but not on the left"
                    ));
                }
            }
            match r.kind() {
                Err(m) => diag(m),
                Ok(RuleKind::Shallow) => {}
                Ok(RuleKind::Deep { child, symbol }) => {
                    for (j, u) in r.lhs.children().iter().enumerate() {
                        if j != child && u.order() <= symbol.order() && !r.is_r_ground(u) {
                            diag(format!(
                                "ordering condition: child {} has order {} <= order {} of lookahead `{}` (child {}) but is not r-ground",
                                j + 1,
                                u.order(),
                                symbol.order(),
                                symbol.name(),
                                child + 1
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), SystemError> {
        let d = self.validate();
        if d.is_empty() {
            Ok(())
        } else {
            Err(SystemError::InvalidSystem(d))
        }
    }

    pub fn is_flat(&self) -> bool {
        self.rules.iter().all(Rule::is_flat)
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.rules.iter().all(|r| r.targets.len() == 1)
    }

    pub fn classify(&self) -> Result<ClassReport, SystemError> {
        self.ensure_valid()?;
        let n = self.order;
        let is_flat = self.is_flat();
        let is_shallow = self
            .rules
            .iter()
            .all(|r| matches!(r.kind(), Ok(RuleKind::Shallow)));
        let is_unary = self.alphabet.max_rank() <= 1;
        let is_linear = self.rules.iter().all(|r| r.rhs.is_linear());
        let is_nondeterministic = self.is_nondeterministic();

        // Candidate bounds as (exponential height, qualifier).
        let mut bounds: Vec<(u32, String)> = vec![(n, "general".into())];
        if is_shallow || is_unary {
            let which = if is_shallow { "shallow" } else { "unary" };
            bounds.push((1, which.into()));
            if is_nondeterministic && (is_unary || self.alphabet.max_rank() <= 2) {
                bounds.push((
                    0,
                    format!("{which}, non-deterministic, for non-deterministic targets with fixed rank"),
                ));
            }
        }
        if is_linear && is_nondeterministic {
            bounds.push((2, "linear non-deterministic, for non-deterministic targets".into()));
        }
        if is_flat && is_nondeterministic && n >= 2 {
            bounds.push((n - 1, "non-deterministic flat, control-state reachability".into()));
        }
        let (h, why) = bounds
            .iter()
            .min_by_key(|(h, _)| *h)
            .cloned()
            .expect("non-empty");
        let complexity_class = format!("{} ({why})", exptime_name(h));
        Ok(ClassReport {
            order: n,
            is_flat,
            is_shallow,
            is_unary,
            is_linear,
            is_nondeterministic,
            complexity_class,
        })
    }

    /// One entry per applicable rule, in declaration order: the rule index
    /// and the successor set `S × {rσ}` sorted by location.
    pub fn step(&self, c: &Configuration) -> Vec<(usize, Vec<Configuration>)> {
        let Some(a) = c.tree.symbol() else {
            return Vec::new();
        };
        let Some(idx) = self.index.get(&(c.location.to_string(), a.clone())) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for &i in idx {
            let r = &self.rules[i];
            let mut binds = Vec::new();
            if match_into(&r.lhs, &c.tree, &mut binds) {
                let sigma = Substitution::from_pairs(binds);
                let t = r.rhs.substitute_unchecked(&sigma);
                let succ = r
                    .targets
                    .iter()
                    .map(|q| Configuration::new(q, t.clone()))
                    .collect();
                out.push((i, succ));
            }
        }
        out
    }

    /// Both sides of every rule are safe trees.
    pub fn is_safe(&self) -> bool {
        self.rules
            .iter()
            .all(|r| is_safe_tree(&r.lhs) && is_safe_tree(&r.rhs))
    }
}

fn exptime_name(h: u32) -> String {
    match h {
        0 => "PTIME".into(),
        1 => "EXPTIME".into(),
        k => format!("{k}-EXPTIME"),
    }
}

/// Order never increases from a node to its descendants.
pub fn is_safe_tree(t: &Tree) -> bool {
    t.children()
        .iter()
        .all(|c| c.order() <= t.order() && is_safe_tree(c))
}
