//! Random instances shared by the integration tests.
#![allow(dead_code)]

pub mod models;

use otsat::automaton::{state_set, Automaton, Provenance, StateSet};
use otsat::oracle::enumerate_trees;
use otsat::{Alphabet, Aotps, Configuration, Rule, Symbol, Tree, Var};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub max_order: u32,
    pub max_symbols: usize,
    pub max_rank: usize,
    pub max_rules: usize,
    pub max_tree: usize,
    pub locations: usize,
    /// Probability that a rule has two targets.
    pub alternation: f64,
    /// Only variables below the root and in lookaheads.
    pub flat: bool,
    /// Probability of attempting a deep rule.
    pub deep: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_order: 2,
            max_symbols: 4,
            max_rank: 2,
            max_rules: 5,
            max_tree: 6,
            locations: 3,
            alternation: 0.3,
            flat: false,
            deep: 0.4,
        }
    }
}

pub fn random_alphabet(rng: &mut TestRng, p: &GenParams, n: u32) -> Alphabet {
    let k = rng.gen_range(2..=p.max_symbols.max(2));
    let mut al = Alphabet::new();
    for i in 0..k {
        let rank = if i == 0 { 0 } else { rng.gen_range(0..=p.max_rank) };
        let order = if i == 0 { 1 } else { rng.gen_range(1..=n) };
        al.insert(Symbol::new(format!("s{i}"), rank, order)).unwrap();
    }
    al
}

/// Random ground tree with at most `budget` nodes; `None` if no leaf fits.
pub fn random_ground(rng: &mut TestRng, al: &Alphabet, budget: usize) -> Option<Tree> {
    let syms: Vec<&Symbol> = al.iter().filter(|s| s.rank() < budget).collect();
    let leaves: Vec<&Symbol> = al.iter().filter(|s| s.rank() == 0).collect();
    if budget <= 1 || syms.is_empty() {
        return leaves.choose(rng).map(|s| Tree::leaf(s));
    }
    let a = *syms.choose(rng).unwrap();
    let mut left = budget - 1;
    let mut kids = Vec::new();
    for j in 0..a.rank() {
        let share = (left - (a.rank() - j - 1)).max(1);
        let b = rng.gen_range(1..=share);
        let t = random_ground(rng, al, b)?;
        left = left.saturating_sub(t.size());
        kids.push(t);
    }
    Some(Tree::node(a, kids))
}

fn random_var(rng: &mut TestRng, al: &Alphabet, next: &mut usize) -> Tree {
    *next += 1;
    let orders: Vec<u32> = al.iter().map(Symbol::order).collect();
    Tree::var(Var::new(format!("x{next}"), *orders.choose(rng).unwrap()))
}

/// Random ground tree whose root has order `order`.
pub fn random_ground_of_order(rng: &mut TestRng, al: &Alphabet, order: u32, budget: usize) -> Option<Tree> {
    let roots: Vec<&Symbol> = al
        .iter()
        .filter(|s| s.order() == order && s.rank() < budget.max(1))
        .collect();
    let a = *roots.choose(rng)?;
    let mut left = budget.saturating_sub(1);
    let mut kids = Vec::new();
    for j in 0..a.rank() {
        let share = (left.saturating_sub(a.rank() - j - 1)).max(1);
        let b = rng.gen_range(1..=share);
        let t = random_ground(rng, al, b)?;
        left = left.saturating_sub(t.size());
        kids.push(t);
    }
    Some(Tree::node(a, kids))
}

/// Replaces every variable of `t` by a small ground tree of its order.
pub fn instantiate(rng: &mut TestRng, al: &Alphabet, t: &Tree, budget: usize) -> Option<Tree> {
    let mut ok = true;
    let out = t.map_vars(&mut |x| {
        let b = rng.gen_range(1..=budget.max(1));
        let g = random_ground_of_order(rng, al, x.order(), b)
            .or_else(|| random_ground_of_order(rng, al, x.order(), budget + 2));
        ok &= g.is_some();
        g
    });
    ok.then_some(out)
}

/// One attempt at a rule; the caller keeps it only if it validates.
fn random_rule(rng: &mut TestRng, al: &Alphabet, locs: &[String], p: &GenParams) -> Option<Rule> {
    let syms: Vec<&Symbol> = al.iter().collect();
    let a = *syms.choose(rng)?;
    let mut next = 0;
    let mut kids = Vec::new();
    let deep_at = if a.rank() > 0 && rng.gen_bool(p.deep) {
        Some(rng.gen_range(0..a.rank()))
    } else {
        None
    };
    let mut low_order = None;
    for i in 0..a.rank() {
        if Some(i) == deep_at {
            let b = *syms.iter().filter(|s| s.rank() > 0).collect::<Vec<_>>().choose(rng)?;
            let g: Vec<Tree> = (0..b.rank())
                .map(|_| {
                    if p.flat || rng.gen_bool(0.7) {
                        random_var(rng, al, &mut next)
                    } else {
                        random_ground(rng, al, 2).unwrap()
                    }
                })
                .collect();
            low_order = Some(b.order());
            kids.push(Tree::node(b, g));
        } else if p.flat || rng.gen_bool(0.75) {
            kids.push(random_var(rng, al, &mut next));
        } else {
            kids.push(random_ground(rng, al, 2)?);
        }
    }
    let lhs = Tree::node(a, kids);
    // Variables that may appear on the right-hand side.
    let mut usable: Vec<Var> = Vec::new();
    let mut look: Vec<Var> = Vec::new();
    for (i, u) in lhs.children().iter().enumerate() {
        if Some(i) == deep_at {
            usable.extend(u.vars());
            look.extend(u.vars());
        } else if let Some(x) = u.as_var() {
            if low_order.is_none_or(|o| x.order() > o) {
                usable.push(x.clone());
            }
        }
    }
    let mut rhs = random_rhs(rng, al, &usable, p.max_tree.min(6))?;
    // A lookahead only counts as such if the right-hand side keeps one of
    // its variables.
    if !look.is_empty() && !look.iter().any(|x| rhs.var_set().contains(x)) {
        let x = look.choose(rng)?.clone();
        let wrappers: Vec<&Symbol> = al.iter().filter(|s| s.rank() >= 1).collect();
        rhs = match (rng.gen_bool(0.5), wrappers.choose(rng)) {
            (true, Some(w)) => {
                let mut kids = vec![Tree::var(x)];
                for _ in 1..w.rank() {
                    kids.push(rhs.clone());
                }
                Tree::node(w, kids)
            }
            _ => Tree::var(x),
        };
    }
    let src = locs.choose(rng)?.clone();
    let mut targets = vec![locs.choose(rng)?.clone()];
    if rng.gen_bool(p.alternation) {
        targets.push(locs.choose(rng)?.clone());
    }
    Some(Rule::new(src, lhs, targets, rhs))
}

fn random_rhs(rng: &mut TestRng, al: &Alphabet, vars: &[Var], budget: usize) -> Option<Tree> {
    if budget <= 1 || rng.gen_bool(0.3) {
        if !vars.is_empty() && rng.gen_bool(0.6) {
            return Some(Tree::var(vars.choose(rng)?.clone()));
        }
        let leaves: Vec<&Symbol> = al.iter().filter(|s| s.rank() == 0).collect();
        return leaves.choose(rng).map(|s| Tree::leaf(s));
    }
    let syms: Vec<&Symbol> = al.iter().filter(|s| s.rank() < budget).collect();
    let a = *syms.choose(rng)?;
    let mut left = budget - 1;
    let mut kids = Vec::new();
    for j in 0..a.rank() {
        let share = (left - (a.rank() - j - 1)).max(1);
        let b = rng.gen_range(1..=share);
        let t = random_rhs(rng, al, vars, b)?;
        left = left.saturating_sub(t.size());
        kids.push(t);
    }
    Some(Tree::node(a, kids))
}

pub fn random_system(rng: &mut TestRng, p: &GenParams) -> Aotps {
    loop {
        let n = rng.gen_range(1..=p.max_order);
        let al = random_alphabet(rng, p, n);
        let locs: Vec<String> = (0..p.locations).map(|i| format!("p{i}")).collect();
        let k = rng.gen_range(2.min(p.max_rules)..=p.max_rules);
        let mut rules = Vec::new();
        for _ in 0..k * 4 {
            if rules.len() == k {
                break;
            }
            if let Some(r) = random_rule(rng, &al, &locs, p) {
                let probe = Aotps::new(n, al.clone(), locs.clone(), vec![r.clone()]);
                if probe.validate().is_empty() && r.lhs.size() <= p.max_tree {
                    rules.push(r);
                }
            }
        }
        if rules.is_empty() {
            continue;
        }
        let s = Aotps::new(n, al, locs, rules);
        assert!(s.validate().is_empty(), "{:?}", s.validate());
        return s;
    }
}

/// Random target over the system alphabet: the locations are initial and
/// there are up to two extra ordered states.
pub fn random_target(rng: &mut TestRng, sys: &Aotps) -> Automaton {
    let al = sys.alphabet().clone();
    let mut a = Automaton::new(al.clone());
    let locs: Vec<String> = sys.locations().map(str::to_string).collect();
    for l in &locs {
        a.add_state(l.clone(), None, true, Provenance::Original).unwrap();
    }
    let extra = rng.gen_range(0..=2);
    let mut inner = Vec::new();
    for i in 0..extra {
        let o = rng.gen_range(1..=sys.order());
        inner.push(a.add_state(format!("r{i}"), Some(o), false, Provenance::Original).unwrap());
    }
    let pick_set = |rng: &mut TestRng| -> StateSet {
        state_set(inner.iter().copied().filter(|_| rng.gen_bool(0.35)))
    };
    let ids: Vec<_> = a.state_ids().collect();
    for q in ids {
        let order = a.state(q).order;
        let syms: Vec<Symbol> = al
            .iter()
            .filter(|s| order.is_none_or(|o| o == s.order()))
            .cloned()
            .collect();
        for s in syms {
            if rng.gen_bool(if a.state(q).initial { 0.15 } else { 0.6 }) {
                let kids = (0..s.rank()).map(|_| pick_set(rng)).collect();
                a.add_transition(q, &s, kids).unwrap();
            }
        }
    }
    a
}

pub fn random_config(rng: &mut TestRng, sys: &Aotps, max_size: usize) -> Configuration {
    if rng.gen_bool(0.6) {
        let r = sys.rules().choose(rng).unwrap();
        if let Some(t) = instantiate(rng, sys.alphabet(), &r.lhs, 2) {
            if t.size() <= max_size {
                return Configuration::new(&r.source, t);
            }
        }
    }
    let locs: Vec<&str> = sys.locations().collect();
    let p = *locs.choose(rng).unwrap();
    let size = rng.gen_range(1..=max_size);
    let t = random_ground(rng, sys.alphabet(), size).unwrap();
    Configuration::new(p, t)
}

/// Configurations with trees of at most `max_size` nodes.
pub fn all_configs(sys: &Aotps, max_size: usize) -> Vec<Configuration> {
    let trees = enumerate_trees(sys.alphabet(), max_size);
    let mut out = Vec::new();
    for p in sys.locations() {
        for t in &trees {
            out.push(Configuration::new(p, t.clone()));
        }
    }
    out
}
