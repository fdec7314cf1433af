//! Alternating ordered tree automata.
//!
//! A transition `q -a-> P1 ... Pk` sends every child to a set of states.
//! Membership is decided bottom-up over per-node sets of accepting states;
//! run trees are never materialised.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use smallvec::SmallVec;
use thiserror::Error;

use crate::tree::{Alphabet, Label, Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("symbol `{0}` is not in the automaton alphabet")]
    UnknownSymbol(String),
    #[error("`{0}` is not an initial state")]
    NotAnInitialState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("state `{0}` is declared twice")]
    DuplicateState(String),
    #[error("state `{state}` has order {order} but reads `{symbol}` of order {symbol_order}")]
    OrderViolation {
        state: String,
        order: u32,
        symbol: String,
        symbol_order: u32,
    },
    #[error("symbol `{symbol}` has rank {rank} but the transition lists {given} child sets")]
    RankMismatch {
        symbol: String,
        rank: usize,
        given: usize,
    },
    #[error("non-initial state `{0}` needs an order")]
    MissingOrder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Sorted, duplicate-free set of states.
pub type StateSet = SmallVec<[StateId; 4]>;

pub fn state_set(it: impl IntoIterator<Item = StateId>) -> StateSet {
    let mut s: StateSet = it.into_iter().collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// `a ⊆ b` for sorted sets.
pub fn is_subset(a: &[StateId], b: &[StateId]) -> bool {
    let mut j = 0;
    for x in a {
        while j < b.len() && b[j] < *x {
            j += 1;
        }
        if j == b.len() || b[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

pub fn union(a: &[StateId], b: &[StateId]) -> StateSet {
    let mut out = StateSet::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Where a state came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Original,
    /// Non-initial duplicate of an initial state made by normalisation.
    Copy(StateId),
    /// Control location absent from the target automaton.
    Location,
    /// Accepts the instances of a left-hand-side subtree.
    Pattern(Tree),
    /// Lookahead state of a deep rule: rule index, lookahead child, and the
    /// child sets recorded for the higher-order siblings.
    Deep {
        rule: usize,
        child: usize,
        components: Vec<(usize, StateSet)>,
    },
}

#[derive(Debug, Clone)]
pub struct State {
    pub name: String,
    /// `None` only for states that may accept trees of several orders
    /// (initial states, and normalisation copies of them).
    pub order: Option<u32>,
    pub initial: bool,
    pub provenance: Provenance,
}

/// One transition, borrowed from an automaton.
#[derive(Debug, Clone, Copy)]
pub struct TransitionRef<'a> {
    pub source: StateId,
    pub symbol: &'a Symbol,
    pub children: &'a [StateSet],
}

/// Assignment of state sets to variables, induced by a run tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VariableLabeling {
    pub assignment: BTreeMap<Var, StateSet>,
}

#[derive(Debug, Clone)]
pub struct Automaton {
    pub(crate) alphabet: Alphabet,
    pub(crate) states: Vec<State>,
    pub(crate) names: HashMap<String, StateId>,
    pub(crate) trans: Vec<BTreeMap<Symbol, Vec<Box<[StateSet]>>>>,
    pub(crate) by_symbol: HashMap<Symbol, BTreeSet<StateId>>,
    pub(crate) subsumption: bool,
    pub(crate) n_trans: usize,
}

pub(crate) type Lab = Vec<StateSet>;

impl Automaton {
    pub fn new(alphabet: Alphabet) -> Self {
        Automaton {
            alphabet,
            states: Vec::new(),
            names: HashMap::new(),
            trans: Vec::new(),
            by_symbol: HashMap::new(),
            subsumption: false,
            n_trans: 0,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// When on, a transition whose child sets are pointwise supersets of an
    /// existing one is not stored, and inserting a transition removes the
    /// stored ones it subsumes.
    pub fn set_subsumption(&mut self, on: bool) {
        self.subsumption = on;
    }

    pub fn add_state(
        &mut self,
        name: impl Into<String>,
        order: Option<u32>,
        initial: bool,
        provenance: Provenance,
    ) -> Result<StateId, AutomatonError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(AutomatonError::DuplicateState(name));
        }
        if order.is_none() && !initial && matches!(provenance, Provenance::Original) {
            return Err(AutomatonError::MissingOrder(name));
        }
        let id = StateId(self.states.len() as u32);
        self.names.insert(name.clone(), id);
        self.states.push(State {
            name,
            order,
            initial,
            provenance,
        });
        self.trans.push(BTreeMap::new());
        Ok(id)
    }

    /// A name not yet used, derived from `base` by appending primes.
    pub fn fresh_name(&self, base: &str) -> String {
        let mut name = base.to_string();
        while self.names.contains_key(&name) {
            name.push('\'');
        }
        name
    }

    pub(crate) fn rename_state(&mut self, id: StateId, name: String) {
        let old = std::mem::replace(&mut self.states[id.index()].name, name.clone());
        self.names.remove(&old);
        self.names.insert(name, id);
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.index()]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.names.get(name).copied()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.n_trans
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn initial_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.state_ids().filter(|&q| self.state(q).initial)
    }

    /// The initial state standing for control location `loc`.
    pub fn initial_for(&self, loc: &str) -> Option<StateId> {
        self.state_id(loc).filter(|&q| self.state(q).initial)
    }

    pub fn transitions_from<'a>(&'a self, q: StateId, a: &Symbol) -> &'a [Box<[StateSet]>] {
        self.trans[q.index()].get(a).map_or(&[], |v| v.as_slice())
    }

    /// All transitions, ordered by source state, then symbol, then insertion.
    pub fn transitions(&self) -> impl Iterator<Item = TransitionRef<'_>> + '_ {
        self.trans.iter().enumerate().flat_map(|(i, m)| {
            m.iter().flat_map(move |(sym, list)| {
                list.iter().map(move |c| TransitionRef {
                    source: StateId(i as u32),
                    symbol: sym,
                    children: c,
                })
            })
        })
    }

    pub fn has_incoming(&self, q: StateId) -> bool {
        self.transitions()
            .any(|t| t.children.iter().any(|s| s.binary_search(&q).is_ok()))
    }

    /// Adds `q -a-> children`. Returns whether the transition set changed.
    pub fn add_transition(
        &mut self,
        q: StateId,
        a: &Symbol,
        children: Vec<StateSet>,
    ) -> Result<bool, AutomatonError> {
        if !self.alphabet.contains(a) {
            return Err(AutomatonError::UnknownSymbol(a.name().to_string()));
        }
        if a.rank() != children.len() {
            return Err(AutomatonError::RankMismatch {
                symbol: a.name().to_string(),
                rank: a.rank(),
                given: children.len(),
            });
        }
        let st = self
            .states
            .get(q.index())
            .ok_or_else(|| AutomatonError::UnknownState(format!("#{}", q.0)))?;
        if let Some(o) = st.order {
            if o != a.order() {
                return Err(AutomatonError::OrderViolation {
                    state: st.name.clone(),
                    order: o,
                    symbol: a.name().to_string(),
                    symbol_order: a.order(),
                });
            }
        }
        for c in &children {
            debug_assert!(c.windows(2).all(|w| w[0] < w[1]));
            if let Some(bad) = c.iter().find(|s| s.index() >= self.states.len()) {
                return Err(AutomatonError::UnknownState(format!("#{}", bad.0)));
            }
        }
        let list = self.trans[q.index()].entry(a.clone()).or_default();
        if self.subsumption {
            if list
                .iter()
                .any(|e| e.iter().zip(&children).all(|(x, y)| is_subset(x, y)))
            {
                return Ok(false);
            }
            let before = list.len();
            list.retain(|e| !children.iter().zip(e.iter()).all(|(x, y)| is_subset(x, y)));
            self.n_trans -= before - list.len();
        } else if list.iter().any(|e| e[..] == children[..]) {
            return Ok(false);
        }
        list.push(children.into_boxed_slice());
        self.n_trans += 1;
        self.by_symbol.entry(a.clone()).or_default().insert(q);
        Ok(true)
    }

    /// Whether adding `q -a-> children` would change the language of `q`
    /// under the current storage policy.
    pub fn would_add(&self, q: StateId, a: &Symbol, children: &[StateSet]) -> bool {
        let list = self.transitions_from(q, a);
        if self.subsumption {
            !list
                .iter()
                .any(|e| e.iter().zip(children).all(|(x, y)| is_subset(x, y)))
        } else {
            !list.iter().any(|e| e[..] == *children)
        }
    }

    /// `{q | t ∈ L(q)}`.
    pub fn accepting_states(&self, t: &Tree) -> Result<StateSet, AutomatonError> {
        let mut memo = HashMap::new();
        self.accepting_memo(t, &mut memo)
    }

    fn accepting_memo(
        &self,
        t: &Tree,
        memo: &mut HashMap<Tree, StateSet>,
    ) -> Result<StateSet, AutomatonError> {
        if let Some(s) = memo.get(t) {
            return Ok(s.clone());
        }
        let sym = match t.label() {
            Label::Sym(s) => s,
            Label::Var(v) => return Err(AutomatonError::UnknownSymbol(v.to_string())),
        };
        if !self.alphabet.contains(sym) {
            return Err(AutomatonError::UnknownSymbol(sym.name().to_string()));
        }
        let kids = t
            .children()
            .iter()
            .map(|c| self.accepting_memo(c, memo))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = StateSet::new();
        if let Some(srcs) = self.by_symbol.get(sym) {
            for &q in srcs {
                let ok = self.transitions_from(q, sym).iter().any(|tr| {
                    tr.iter()
                        .zip(&kids)
                        .all(|(need, have)| is_subset(need, have))
                });
                if ok {
                    out.push(q);
                }
            }
        }
        memo.insert(t.clone(), out.clone());
        Ok(out)
    }

    /// `t ∈ L(P)`; the empty set accepts every tree.
    pub fn member(&self, p: &[StateId], t: &Tree) -> Result<bool, AutomatonError> {
        let acc = self.accepting_states(t)?;
        Ok(p.iter().all(|q| acc.binary_search(q).is_ok()))
    }

    /// `(loc, t) ∈ L(A, P)`.
    pub fn config_member(&self, loc: &str, t: &Tree) -> Result<bool, AutomatonError> {
        let q = self
            .initial_for(loc)
            .ok_or_else(|| AutomatonError::NotAnInitialState(loc.to_string()))?;
        self.member(&[q], t)
    }

    /// True iff `q` may label a variable of order `k` in a run tree.
    pub fn compatible(&self, q: StateId, k: u32) -> bool {
        self.state(q).order.is_none_or(|o| o == k)
    }

    /// Labelings `x ↦ ⋃ t(r⁻¹(x))` of run trees from `s` on `r`, sorted.
    /// With `subsumption`, only pointwise-minimal labelings are returned.
    pub fn enumerate_labelings(
        &self,
        s: &[StateId],
        r: &Tree,
        subsumption: bool,
    ) -> Vec<VariableLabeling> {
        let vars = r.vars();
        self.labelings_indexed(s, r, &vars, subsumption)
            .into_iter()
            .map(|lab| VariableLabeling {
                assignment: vars.iter().cloned().zip(lab).collect(),
            })
            .collect()
    }

    /// As `enumerate_labelings`, with labelings indexed like `vars`.
    pub(crate) fn labelings_indexed(
        &self,
        s: &[StateId],
        r: &Tree,
        vars: &[Var],
        subsumption: bool,
    ) -> Vec<Lab> {
        let mut en = LabelingEnum {
            aut: self,
            vars,
            subsumption,
            memo: HashMap::new(),
        };
        let mut acc = vec![vec![StateSet::new(); vars.len()]];
        for &q in s {
            let l = en.labelings_at(r, q);
            acc = en.product(&acc, &l);
            if acc.is_empty() {
                break;
            }
        }
        en.normalize(acc)
    }
}

struct LabelingEnum<'a> {
    aut: &'a Automaton,
    vars: &'a [Var],
    subsumption: bool,
    memo: HashMap<(usize, StateId), Rc<Vec<Lab>>>,
}

impl LabelingEnum<'_> {
    fn normalize(&self, mut v: Vec<Lab>) -> Vec<Lab> {
        v.sort();
        v.dedup();
        if self.subsumption && v.len() > 1 {
            let mut keep: Vec<Lab> = Vec::with_capacity(v.len());
            // Sorted by size first so that dominated labelings come later.
            v.sort_by_key(|l| l.iter().map(|s| s.len()).sum::<usize>());
            for l in v {
                if !keep
                    .iter()
                    .any(|k| k.iter().zip(&l).all(|(a, b)| is_subset(a, b)))
                {
                    keep.push(l);
                }
            }
            keep.sort();
            keep
        } else {
            v
        }
    }

    fn product(&self, a: &[Lab], b: &[Lab]) -> Vec<Lab> {
        let mut out = Vec::with_capacity(a.len() * b.len());
        for x in a {
            for y in b {
                out.push(x.iter().zip(y).map(|(p, q)| union(p, q)).collect());
            }
        }
        self.normalize(out)
    }

    fn labelings_at(&mut self, r: &Tree, q: StateId) -> Rc<Vec<Lab>> {
        let key = (r_ptr(r), q);
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let res = match r.label() {
            Label::Var(x) => {
                if self.aut.compatible(q, x.order()) {
                    let i = self.vars.iter().position(|v| v == x).expect("variable of r");
                    let mut lab = vec![StateSet::new(); self.vars.len()];
                    lab[i].push(q);
                    vec![lab]
                } else {
                    Vec::new()
                }
            }
            Label::Sym(a) => {
                let mut res = Vec::new();
                let trs: Vec<Box<[StateSet]>> = self.aut.transitions_from(q, a).to_vec();
                for tr in trs {
                    let mut acc = vec![vec![StateSet::new(); self.vars.len()]];
                    for (child, set) in r.children().iter().zip(tr.iter()) {
                        for &s in set {
                            let l = self.labelings_at(child, s);
                            acc = self.product(&acc, &l);
                            if acc.is_empty() {
                                break;
                            }
                        }
                        if acc.is_empty() {
                            break;
                        }
                    }
                    res.extend(acc);
                }
                self.normalize(res)
            }
        };
        let rc = Rc::new(res);
        self.memo.insert(key, rc.clone());
        rc
    }
}

/// Address of the tree handle; stable while `r` is borrowed.
fn r_ptr(t: &Tree) -> usize {
    t as *const Tree as usize
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
