//! Backward reachability by saturation.
//!
//! Starting from a target automaton `A` whose initial states are the
//! control locations, [`saturate`] adds pattern states `p^v` for the
//! left-hand-side subtrees, lookahead states for deep rules, and
//! transitions until the automaton accepts exactly the configurations
//! from which `L(A)` is reachable.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::aotps::{Aotps, Configuration, Diagnostic, RuleKind};
use crate::automaton::{state_set, union, Automaton, AutomatonError, Provenance, StateId, StateSet};
use crate::tree::{Symbol, Tree, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaturationError {
    #[error("invalid system: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSystem(Vec<Diagnostic>),
    #[error("target automaton uses symbol `{0}`, which the system does not declare with the same rank and order")]
    AlphabetMismatch(String),
    #[error("transition cap of {cap} exceeded")]
    TransitionCapExceeded { cap: usize },
    #[error("optimized mode not applicable: {0}")]
    OptimizationNotApplicable(String),
    #[error("unknown control location `{0}`")]
    UnknownLocation(String),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaturationOptions {
    /// Keep only pointwise-minimal transitions and labelings.
    pub subsumption: bool,
    /// Upper bound on the number of transitions the procedure may add.
    pub max_transitions: Option<usize>,
    /// Record one [`TraceEntry`] per productive labeling.
    pub trace: bool,
    /// Glue order-n variable states to the target's `p^n` (requires a
    /// non-deterministic flat system and a non-n-alternating target).
    pub optimized: bool,
}

impl Default for SaturationOptions {
    fn default() -> Self {
        SaturationOptions {
            subsumption: true,
            max_transitions: None,
            trace: false,
            optimized: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SaturationStats {
    pub added_transitions: usize,
    pub created_deep_states: usize,
    pub pattern_states: usize,
    /// Rule evaluations, including the closing verification passes.
    pub iterations: usize,
    pub wall_time: Duration,
}

impl fmt::Display for SaturationStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "added transitions: {}, pattern states: {}, deep states: {}, rule evaluations: {}, time: {:.3}s",
            self.added_transitions,
            self.pattern_states,
            self.created_deep_states,
            self.iterations,
            self.wall_time.as_secs_f64()
        )
    }
}

/// A transition owned by a trace entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddedTransition {
    pub source: StateId,
    pub symbol: Symbol,
    pub children: Vec<StateSet>,
}

/// The rule and labeling that produced a batch of transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub rule: usize,
    pub labeling: Vec<(Var, StateSet)>,
    pub added: Vec<AddedTransition>,
}

impl TraceEntry {
    pub fn render(&self, aut: &Automaton) -> String {
        let set = |s: &StateSet| {
            let v: Vec<&str> = s.iter().map(|q| aut.state(*q).name.as_str()).collect();
            format!("{{{}}}", v.join(","))
        };
        let lab: Vec<String> = self
            .labeling
            .iter()
            .map(|(x, s)| format!("{x}={}", set(s)))
            .collect();
        let mut out = format!("rule-{} [{}]", self.rule + 1, lab.join(", "));
        for t in &self.added {
            let _ = write!(out, "\n  + {} -{}->", aut.state(t.source).name, t.symbol.name());
            for c in &t.children {
                let _ = write!(out, " {}", set(c));
            }
        }
        out
    }
}

/// Result of [`saturate`].
#[derive(Debug, Clone)]
pub struct Saturation {
    pub automaton: Automaton,
    pub stats: SaturationStats,
    pub trace: Vec<TraceEntry>,
    /// `|Q|` after normalisation and insertion of missing locations.
    pub base_states: usize,
    /// The target's `p^n`, when optimized mode glued variable states to it.
    pub glued: Option<StateId>,
}

impl Saturation {
    /// `c ∈ L(B, P)`.
    pub fn accepts(&self, c: &Configuration) -> Result<bool, SaturationError> {
        prestar_member(&self.automaton, c)
    }

    pub fn deep_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.automaton
            .state_ids()
            .filter(|&q| matches!(self.automaton.state(q).provenance, Provenance::Deep { .. }))
    }
}

/// `c ∈ L(B, P)` for a saturated automaton.
pub fn prestar_member(b: &Automaton, c: &Configuration) -> Result<bool, SaturationError> {
    let q = b
        .initial_for(&c.location)
        .ok_or_else(|| SaturationError::UnknownLocation(c.location.to_string()))?;
    Ok(b.member(&[q], &c.tree)?)
}

/// Order read by every transition of `q`, if uniform.
fn inferred_order(a: &Automaton, q: StateId) -> Option<u32> {
    let mut orders = a.trans[q.index()].keys().map(Symbol::order);
    let first = orders.next()?;
    orders.all(|o| o == first).then_some(first)
}

/// Makes initial states free of incoming transitions: each initial state
/// with incoming transitions becomes a non-initial copy `p'` that keeps them,
/// and a fresh initial state named `p` gets its outgoing transitions.
/// Initial states lose their order.
pub fn normalize_target(a: &Automaton) -> Automaton {
    let mut b = a.clone();
    let mut incoming = vec![false; b.num_states()];
    for t in b.transitions() {
        for s in t.children {
            for q in s {
                incoming[q.index()] = true;
            }
        }
    }
    let initial: Vec<StateId> = b.initial_states().collect();
    for q in initial {
        if incoming[q.index()] {
            let name = b.state(q).name.clone();
            let copy_name = b.fresh_name(&format!("{name}'"));
            b.rename_state(q, copy_name);
            let order = inferred_order(&b, q);
            let fresh = b
                .add_state(name, None, true, b.state(q).provenance.clone())
                .expect("name was freed");
            let st = &mut b.states[q.index()];
            st.initial = false;
            st.order = order;
            st.provenance = Provenance::Copy(fresh);
            let outgoing: Vec<(Symbol, Vec<StateSet>)> = b.trans[q.index()]
                .iter()
                .flat_map(|(a, l)| l.iter().map(move |c| (a.clone(), c.to_vec())))
                .collect();
            for (a, c) in outgoing {
                b.add_transition(fresh, &a, c).expect("copied transition");
            }
        } else {
            b.states[q.index()].order = None;
        }
    }
    b
}

enum ChildPlan {
    Ground(StateId),
    Var { idx: usize, pat: StateId },
    Lookahead,
}

struct DeepPlan {
    child: usize,
    b: Symbol,
    components: Vec<usize>,
    grand: Vec<ChildPlan>,
}

struct RulePlan {
    source: StateId,
    a: Symbol,
    targets: StateSet,
    vars: Vec<Var>,
    children: Vec<ChildPlan>,
    deep: Option<DeepPlan>,
}

/// Canonical form of a pattern: variables renamed `_`, orders kept.
fn canonical(v: &Tree) -> Tree {
    v.map_vars(&mut |x| Some(Tree::var(Var::new("_", x.order()))))
}

struct Patterns {
    cache: HashMap<Tree, StateId>,
    glue: Option<(u32, StateId)>,
    created: usize,
}

impl Patterns {
    fn state(&mut self, aut: &mut Automaton, v: &Tree) -> StateId {
        let c = canonical(v);
        if let Some(&q) = self.cache.get(&c) {
            return q;
        }
        let q = match c.as_var() {
            Some(x) if self.glue.is_some_and(|(n, _)| n == x.order()) => self.glue.expect("checked").1,
            Some(x) => {
                let q = self.fresh(aut, &c, x.order());
                let syms: Vec<Symbol> = aut.alphabet.of_order(x.order()).cloned().collect();
                for a in syms {
                    aut.add_transition(q, &a, vec![StateSet::new(); a.rank()])
                        .expect("pattern transition");
                }
                q
            }
            None => {
                let kids: Vec<StateSet> = c
                    .children()
                    .iter()
                    .map(|u| state_set([self.state(aut, u)]))
                    .collect();
                let q = self.fresh(aut, &c, c.order());
                let a = c.symbol().expect("symbol node").clone();
                aut.add_transition(q, &a, kids).expect("pattern transition");
                q
            }
        };
        self.cache.insert(c, q);
        q
    }

    fn fresh(&mut self, aut: &mut Automaton, c: &Tree, order: u32) -> StateId {
        let name = aut.fresh_name(&format!("pat{}", self.created));
        self.created += 1;
        aut.add_state(name, Some(order), false, Provenance::Pattern(c.clone()))
            .expect("fresh name")
    }
}

/// Normalises `a`, adopts the system alphabet, and adds missing control
/// locations as initial states. Pattern states are added by [`saturate`].
pub fn build_initial(sys: &Aotps, a: &Automaton) -> Result<Automaton, SaturationError> {
    let diags = sys.validate();
    if !diags.is_empty() {
        return Err(SaturationError::InvalidSystem(diags));
    }
    for s in a.alphabet().iter() {
        if sys.alphabet().get(s.name()) != Some(s) {
            return Err(SaturationError::AlphabetMismatch(s.name().to_string()));
        }
    }
    let mut b = normalize_target(a);
    b.alphabet = sys.alphabet().clone();
    for p in sys.locations() {
        match b.state_id(p) {
            Some(q) if b.state(q).initial => {}
            Some(q) => {
                let n = b.fresh_name(&format!("{p}'"));
                b.rename_state(q, n);
                b.add_state(p, None, true, Provenance::Location)?;
            }
            None => {
                b.add_state(p, None, true, Provenance::Location)?;
            }
        }
    }
    Ok(b)
}

/// `p^n` and the `Q-` membership vector, if `a` is non-n-alternating.
pub fn non_n_alternating_partition(a: &Automaton, n: u32) -> Option<(StateId, Vec<bool>)> {
    let order_n: Vec<StateId> = a
        .state_ids()
        .filter(|&q| a.state(q).order == Some(n) && !a.state(q).initial)
        .collect();
    for &pn in &order_n {
        let tr: Vec<_> = a.trans[pn.index()].iter().collect();
        let expected: BTreeSet<&Symbol> = a.alphabet().of_order(n).collect();
        let universal = tr.len() == expected.len()
            && tr.iter().all(|(s, l)| {
                expected.contains(s) && l.len() == 1 && l[0].iter().all(|c| c.is_empty())
            });
        if !universal {
            continue;
        }
        let mut minus: Vec<bool> = a
            .state_ids()
            .map(|q| !a.state(q).initial && (q == pn || a.state(q).order != Some(n)))
            .collect();
        loop {
            let mut changed = false;
            for q in a.state_ids() {
                if minus[q.index()]
                    && a.trans[q.index()].values().flatten().any(|c| {
                        c.iter().flatten().any(|s| !minus[s.index()])
                    })
                {
                    minus[q.index()] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let plus_ok = a.transitions().all(|t| {
            minus[t.source.index()]
                || t.children
                    .iter()
                    .map(|c| c.iter().filter(|s| !minus[s.index()]).count())
                    .sum::<usize>()
                    <= 1
        });
        if plus_ok {
            return Some((pn, minus));
        }
    }
    None
}

struct Engine<'a> {
    sys: &'a Aotps,
    aut: Automaton,
    opts: SaturationOptions,
    deep: HashMap<(usize, Vec<(usize, StateSet)>), StateId>,
    readers: HashMap<Symbol, Vec<usize>>,
    stats: SaturationStats,
    trace: Vec<TraceEntry>,
}

impl Engine<'_> {
    fn add(
        &mut self,
        q: StateId,
        a: &Symbol,
        children: Vec<StateSet>,
        dirty: &mut BTreeSet<usize>,
        added: &mut Vec<AddedTransition>,
    ) -> Result<(), SaturationError> {
        if !self.aut.would_add(q, a, &children) {
            return Ok(());
        }
        if let Some(cap) = self.opts.max_transitions {
            if self.stats.added_transitions >= cap {
                return Err(SaturationError::TransitionCapExceeded { cap });
            }
        }
        let kept = if self.opts.trace { Some(children.clone()) } else { None };
        if self.aut.add_transition(q, a, children)? {
            self.stats.added_transitions += 1;
            if let Some(rs) = self.readers.get(a) {
                dirty.extend(rs.iter().copied());
            }
            if let Some(children) = kept {
                added.push(AddedTransition {
                    source: q,
                    symbol: a.clone(),
                    children,
                });
            }
        }
        Ok(())
    }

    fn deep_state(&mut self, rule: usize, dp: &DeepPlan, comps: Vec<(usize, StateSet)>) -> StateId {
        let key = (rule, comps);
        if let Some(&d) = self.deep.get(&key) {
            return d;
        }
        let name = self.aut.fresh_name(&format!("deep{}", self.stats.created_deep_states));
        let d = self
            .aut
            .add_state(
                name,
                Some(dp.b.order()),
                false,
                Provenance::Deep {
                    rule,
                    child: dp.child,
                    components: key.1.clone(),
                },
            )
            .expect("fresh name");
        self.stats.created_deep_states += 1;
        self.deep.insert(key, d);
        d
    }

    /// Evaluates one rule against the current automaton; returns whether
    /// anything was added.
    fn process(
        &mut self,
        ri: usize,
        plan: &RulePlan,
        dirty: &mut BTreeSet<usize>,
    ) -> Result<bool, SaturationError> {
        self.stats.iterations += 1;
        let rhs = &self.sys.rules()[ri].rhs;
        let labs = self
            .aut
            .labelings_indexed(&plan.targets, rhs, &plan.vars, self.opts.subsumption);
        let before = self.stats.added_transitions;
        for lab in labs {
            let set_for = |cp: &ChildPlan| match cp {
                ChildPlan::Ground(p) => state_set([*p]),
                ChildPlan::Var { idx, pat } => union(&[*pat], &lab[*idx]),
                ChildPlan::Lookahead => StateSet::new(),
            };
            let mut sets: Vec<StateSet> = plan.children.iter().map(set_for).collect();
            let mut added = Vec::new();
            if let Some(dp) = &plan.deep {
                let comps = dp
                    .components
                    .iter()
                    .map(|&i| (i, sets[i].clone()))
                    .collect();
                let d = self.deep_state(ri, dp, comps);
                sets[dp.child] = state_set([d]);
                let grand: Vec<StateSet> = dp.grand.iter().map(set_for).collect();
                self.add(d, &dp.b, grand, dirty, &mut added)?;
            }
            self.add(plan.source, &plan.a, sets, dirty, &mut added)?;
            if self.opts.trace && !added.is_empty() {
                self.trace.push(TraceEntry {
                    rule: ri,
                    labeling: plan.vars.iter().cloned().zip(lab.iter().cloned()).collect(),
                    added,
                });
            }
        }
        Ok(self.stats.added_transitions > before)
    }
}

fn child_plan(
    aut: &mut Automaton,
    pats: &mut Patterns,
    rhs_vars: &[Var],
    u: &Tree,
) -> ChildPlan {
    if let Some(x) = u.as_var() {
        if let Some(idx) = rhs_vars.iter().position(|v| v == x) {
            let pat = pats.state(aut, u);
            return ChildPlan::Var { idx, pat };
        }
    }
    ChildPlan::Ground(pats.state(aut, u))
}

/// Computes `B` with `L(B, P) = pre*(L(A, P))`.
pub fn saturate(
    sys: &Aotps,
    a: &Automaton,
    opts: SaturationOptions,
) -> Result<Saturation, SaturationError> {
    let start = Instant::now();
    let aut = build_initial(sys, a)?;
    let glue = if opts.optimized {
        if !sys.is_nondeterministic() {
            return Err(SaturationError::OptimizationNotApplicable(
                "some rule has more than one target location".into(),
            ));
        }
        if !sys.is_flat() {
            return Err(SaturationError::OptimizationNotApplicable(
                "the system is not flat".into(),
            ));
        }
        let (pn, _) = non_n_alternating_partition(&aut, sys.order()).ok_or_else(|| {
            SaturationError::OptimizationNotApplicable(
                "the target automaton is not non-n-alternating".into(),
            )
        })?;
        Some(pn)
    } else {
        None
    };
    let base_states = aut.num_states();
    close(sys, aut, base_states, glue, opts, start)
}

/// Continues the closure on an already saturated automaton, without
/// normalising it again. Adds nothing when `sat` is a fixpoint.
pub fn resaturate(
    sys: &Aotps,
    sat: &Saturation,
    opts: SaturationOptions,
) -> Result<Saturation, SaturationError> {
    let diags = sys.validate();
    if !diags.is_empty() {
        return Err(SaturationError::InvalidSystem(diags));
    }
    close(
        sys,
        sat.automaton.clone(),
        sat.base_states,
        sat.glued,
        opts,
        Instant::now(),
    )
}

fn close(
    sys: &Aotps,
    mut aut: Automaton,
    base_states: usize,
    glued: Option<StateId>,
    opts: SaturationOptions,
    start: Instant,
) -> Result<Saturation, SaturationError> {
    aut.set_subsumption(opts.subsumption);
    let glue = glued.map(|pn| (sys.order(), pn));
    // States built by an earlier saturation are reused, so saturating a
    // saturated automaton is a no-op.
    let mut cache = HashMap::new();
    let mut deep = HashMap::new();
    for q in aut.state_ids() {
        match &aut.state(q).provenance {
            Provenance::Pattern(v) => {
                cache.insert(v.clone(), q);
            }
            Provenance::Deep {
                rule, components, ..
            } => {
                deep.insert((*rule, components.clone()), q);
            }
            _ => {}
        }
    }
    let mut pats = Patterns {
        cache,
        glue,
        created: 0,
    };
    let mut plans = Vec::with_capacity(sys.rules().len());
    let mut readers: HashMap<Symbol, Vec<usize>> = HashMap::new();
    for (ri, r) in sys.rules().iter().enumerate() {
        for s in r.rhs.symbols() {
            readers.entry(s).or_default().push(ri);
        }
        for u in r.lhs.subtrees().into_iter().skip(1) {
            pats.state(&mut aut, u);
        }
        let vars = r.rhs.vars();
        let kind = r.kind().expect("validated");
        let deep_child = match &kind {
            RuleKind::Deep { child, .. } => Some(*child),
            RuleKind::Shallow => None,
        };
        let children = r
            .lhs
            .children()
            .iter()
            .enumerate()
            .map(|(i, u)| {
                if Some(i) == deep_child {
                    ChildPlan::Lookahead
                } else {
                    child_plan(&mut aut, &mut pats, &vars, u)
                }
            })
            .collect();
        let deep = match kind {
            RuleKind::Shallow => None,
            RuleKind::Deep { child, symbol } => {
                let kids = r.lhs.children();
                let components = (0..kids.len())
                    .filter(|&i| i != child && kids[i].order() > symbol.order())
                    .collect();
                let grand = kids[child]
                    .children()
                    .iter()
                    .map(|v| child_plan(&mut aut, &mut pats, &vars, v))
                    .collect();
                Some(DeepPlan {
                    child,
                    b: symbol,
                    components,
                    grand,
                })
            }
        };
        let loc = |p: &str| aut.initial_for(p).expect("location added");
        plans.push(RulePlan {
            source: loc(&r.source),
            a: r.lhs.symbol().expect("validated").clone(),
            targets: state_set(r.targets.iter().map(|t| loc(t))),
            vars,
            children,
            deep,
        });
    }
    let pattern_states = pats.created;
    let mut eng = Engine {
        sys,
        aut,
        opts,
        deep,
        readers,
        stats: SaturationStats {
            pattern_states,
            ..Default::default()
        },
        trace: Vec::new(),
    };
    let mut dirty: BTreeSet<usize> = (0..plans.len()).collect();
    loop {
        while let Some(ri) = dirty.pop_first() {
            eng.process(ri, &plans[ri], &mut dirty)?;
        }
        let mut changed = false;
        for (ri, plan) in plans.iter().enumerate() {
            changed |= eng.process(ri, plan, &mut dirty)?;
        }
        if !changed {
            break;
        }
    }
    eng.stats.wall_time = start.elapsed();
    Ok(Saturation {
        automaton: eng.aut,
        stats: eng.stats,
        trace: eng.trace,
        base_states,
        glued: glue.map(|g| g.1),
    })
}

/// Decides whether `L(A)` is reachable from `init`.
pub fn reach(
    sys: &Aotps,
    init: &Configuration,
    a: &Automaton,
    opts: SaturationOptions,
) -> Result<bool, SaturationError> {
    if !sys.has_location(&init.location) {
        return Err(SaturationError::UnknownLocation(init.location.to_string()));
    }
    sys.alphabet()
        .admits(&init.tree)
        .map_err(|s| SaturationError::Automaton(AutomatonError::UnknownSymbol(s)))?;
    saturate(sys, a, opts)?.accepts(init)
}

/// Target accepting every configuration at a location in `targets`.
///
/// Also contains a state `univ` of order n accepting all order-n trees, so
/// the result is non-n-alternating.
pub fn control_state_target(sys: &Aotps, targets: &[&str]) -> Result<Automaton, SaturationError> {
    let mut a = Automaton::new(sys.alphabet().clone());
    for p in sys.locations() {
        a.add_state(p, None, true, Provenance::Location)?;
    }
    for t in targets {
        let q = a
            .initial_for(t)
            .ok_or_else(|| SaturationError::UnknownLocation(t.to_string()))?;
        for s in sys.alphabet().iter() {
            a.add_transition(q, s, vec![StateSet::new(); s.rank()])?;
        }
    }
    let n = sys.order();
    let name = a.fresh_name("univ");
    let u = a.add_state(name, Some(n), false, Provenance::Original)?;
    for s in sys.alphabet().of_order(n) {
        a.add_transition(u, s, vec![StateSet::new(); s.rank()])?;
    }
    Ok(a)
}

/// One stratum `Q'_k` of the state-count chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    pub order: u32,
    pub size: usize,
    pub bound: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    /// From `Q'_{n+1}` down to `Q'_1`.
    pub strata: Vec<Stratum>,
    pub ok: bool,
}

/// Checks `|Q'_{n+1}| <= |Q| + |R|` and
/// `|Q'_k| <= |Q'_{k+1}| + |R| * 2^((m-1) * |Q'_{k+1}|)`.
pub fn state_bound_check(sys: &Aotps, sat: &Saturation) -> BoundReport {
    let n = sys.order();
    let r = sys.rules_size() as u128;
    let m = sys.alphabet().max_rank().saturating_sub(1) as u128;
    let aut = &sat.automaton;
    let mut deep_of = vec![0usize; n as usize + 2];
    for d in sat.deep_states() {
        let o = aut.state(d).order.expect("deep states are ordered") as usize;
        deep_of[o.min(n as usize + 1)] += 1;
    }
    let top = sat.base_states + sat.stats.pattern_states;
    let mut strata = vec![Stratum {
        order: n + 1,
        size: top,
        bound: sat.base_states as u128 + r,
    }];
    let mut prev = top;
    for k in (1..=n).rev() {
        let size = prev + deep_of[k as usize];
        let exp = m.saturating_mul(prev as u128);
        let pow = if exp >= 127 { u128::MAX } else { 1u128 << exp };
        let bound = (prev as u128).saturating_add(r.saturating_mul(pow));
        strata.push(Stratum {
            order: k,
            size,
            bound,
        });
        prev = size;
    }
    let ok = strata.iter().all(|s| s.size as u128 <= s.bound);
    BoundReport { strata, ok }
}

/// Order-(n-1) deep states have components `{p^n} ∪ P_j` with
/// `Σ |P_j \ {p^n}| <= 1` and every component non-empty.
pub fn optimized_deep_states_ok(sat: &Saturation, n: u32) -> bool {
    let Some(pn) = sat.glued else {
        return false;
    };
    sat.deep_states().all(|d| {
        let st = sat.automaton.state(d);
        if st.order != Some(n.saturating_sub(1)) {
            return true;
        }
        let Provenance::Deep { components, .. } = &st.provenance else {
            unreachable!()
        };
        components.iter().all(|(_, s)| !s.is_empty())
            && components
                .iter()
                .map(|(_, s)| s.iter().filter(|&&q| q != pn).count())
                .sum::<usize>()
                <= 1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_aotps, parse_automaton_with, parse_tree, write_automaton};

    fn pds() -> Aotps {
        parse_aotps(
            "aotps order 1 {
               alphabet { a : rank 1 order 1; bot : rank 0 order 1; }
               locations p q;
               rule p : a(?x:1) -> {q} : a(a(?x:1));
               rule q : a(?x:1) -> {q} : ?x:1;
             }",
        )
        .unwrap()
    }

    fn target(sys: &Aotps, src: &str) -> Automaton {
        parse_automaton_with(src, Some(sys.alphabet()), &|_| Err("no files".into())).unwrap()
    }

    fn cfg(sys: &Aotps, p: &str, t: &str) -> Configuration {
        Configuration::new(p, parse_tree(t, sys.alphabet()).unwrap())
    }

    #[test]
    fn empty_rule_set_only_adds_patterns() {
        let sys = parse_aotps(
            "aotps order 1 { alphabet { a : rank 1 order 1; bot : rank 0 order 1 } locations p; }",
        )
        .unwrap();
        let a = target(&sys, "automaton { state p : initial trans p -bot-> }");
        let sat = saturate(&sys, &a, SaturationOptions::default()).unwrap();
        assert_eq!(sat.stats.added_transitions, 0);
        assert_eq!(sat.automaton.num_states(), 1);
        assert!(sat.accepts(&cfg(&sys, "p", "bot")).unwrap());
        assert!(!sat.accepts(&cfg(&sys, "p", "a(bot)")).unwrap());
    }

    #[test]
    fn pds_example_reaches_bot_at_q() {
        let sys = pds();
        let a = target(
            &sys,
            "automaton { state p : initial state q : initial trans q -bot-> }",
        );
        for sub in [true, false] {
            let opts = SaturationOptions {
                subsumption: sub,
                ..Default::default()
            };
            assert!(reach(&sys, &cfg(&sys, "p", "a(bot)"), &a, opts).unwrap());
            assert!(!reach(&sys, &cfg(&sys, "p", "bot"), &a, opts).unwrap());
            assert!(reach(&sys, &cfg(&sys, "q", "a(a(a(bot)))"), &a, opts).unwrap());
        }
    }

    #[test]
    fn transition_cap() {
        let sys = pds();
        let a = target(&sys, "automaton { state q : initial trans q -bot-> }");
        let opts = SaturationOptions {
            max_transitions: Some(0),
            ..Default::default()
        };
        assert_eq!(
            saturate(&sys, &a, opts).unwrap_err(),
            SaturationError::TransitionCapExceeded { cap: 0 }
        );
    }

    #[test]
    fn normalisation_splits_initial_state_with_incoming_edges() {
        let sys = pds();
        let a = target(&sys, "automaton { state q : initial trans q -a-> {q} trans q -bot-> }");
        let b = normalize_target(&a);
        let q = b.initial_for("q").unwrap();
        assert!(!b.has_incoming(q));
        let copy = b.state_id("q'").unwrap();
        assert_eq!(b.state(copy).provenance, Provenance::Copy(q));
        assert_eq!(b.state(copy).order, Some(1));
        let t = parse_tree("a(a(bot))", sys.alphabet()).unwrap();
        assert!(b.member(&[q], &t).unwrap());
    }

    #[test]
    fn deep_rule_with_top_order_lookahead_has_no_components() {
        let sys = parse_aotps(
            "aotps order 2 {
               alphabet { a : rank 2 order 2; b : rank 1 order 2; e : rank 0 order 2; c : rank 0 order 1 }
               locations p q;
               rule p : a(b(?x:2), ?y:1) -> {q} : ?x:2;
             }",
        )
        .unwrap();
        let a = target(&sys, "automaton { state q : initial trans q -e-> }");
        let sat = saturate(&sys, &a, SaturationOptions::default()).unwrap();
        let deep: Vec<_> = sat.deep_states().collect();
        assert_eq!(deep.len(), 1);
        match &sat.automaton.state(deep[0]).provenance {
            Provenance::Deep { components, .. } => assert!(components.is_empty()),
            _ => unreachable!(),
        }
        assert!(sat.accepts(&cfg(&sys, "p", "a(b(e), c)")).unwrap());
        assert!(!sat.accepts(&cfg(&sys, "p", "a(b(b(e)), c)")).unwrap());
        assert!(state_bound_check(&sys, &sat).ok);
    }

    #[test]
    fn trace_records_productive_labelings() {
        let sys = pds();
        let a = target(&sys, "automaton { state q : initial trans q -bot-> }");
        let sat = saturate(
            &sys,
            &a,
            SaturationOptions {
                trace: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            sat.trace.iter().map(|e| e.added.len()).sum::<usize>(),
            sat.stats.added_transitions
        );
        let text = write_automaton(&sat.automaton);
        assert!(text.contains("# pattern ?_:1"), "{text}");
    }

    #[test]
    fn resaturation_adds_nothing() {
        let sys = pds();
        let a = target(&sys, "automaton { state q : initial trans q -bot-> }");
        let sat = saturate(&sys, &a, SaturationOptions::default()).unwrap();
        let again = resaturate(&sys, &sat, SaturationOptions::default()).unwrap();
        assert_eq!(again.stats.added_transitions, 0);
    }

    #[test]
    fn control_state_target_is_non_n_alternating() {
        let sys = pds();
        let a = control_state_target(&sys, &["q"]).unwrap();
        let b = build_initial(&sys, &a).unwrap();
        assert!(non_n_alternating_partition(&b, 1).is_some());
        let opts = SaturationOptions {
            optimized: true,
            ..Default::default()
        };
        let sat = saturate(&sys, &a, opts).unwrap();
        assert!(sat.accepts(&cfg(&sys, "p", "a(bot)")).unwrap());
        assert!(optimized_deep_states_ok(&sat, 1));
    }
}
