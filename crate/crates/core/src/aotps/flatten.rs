//! Conversion of an arbitrary system into a flat one.
//!
//! Each node of a tree is decorated with one set per child: the patterns
//! from `sub(R)` (proper left-hand-side subtrees, variables renamed `_`)
//! that match the subtree at that child. A rule can then test its
//! r-ground subtrees by reading decorations, so they become variables.
//! Only match sets realised by some ground tree are used.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexSet;

use super::{Aotps, Configuration, Rule, RuleKind, SystemError};
use crate::tree::{Alphabet, Label, Symbol, Tree, Var};

/// A flat system together with the tree encoding relating it to the input.
#[derive(Debug, Clone)]
pub struct Flattening {
    pub system: Aotps,
    sub: IndexSet<Tree>,
    sets: IndexSet<BTreeSet<usize>>,
    decorated: HashMap<(Symbol, Vec<usize>), Symbol>,
    original: HashMap<Symbol, Symbol>,
}

fn canonical(v: &Tree) -> Tree {
    v.map_vars(&mut |x| Some(Tree::var(Var::new("_", x.order()))))
}

impl Flattening {
    /// Indices into `sub` of the patterns matching a node labelled `a`
    /// whose children have match sets `kids`.
    fn match_set(&self, a: &Symbol, kids: &[usize]) -> BTreeSet<usize> {
        ms(&self.sub, &self.sets, a, kids)
    }

    fn set_index(&self, s: &BTreeSet<usize>) -> usize {
        self.sets.get_index_of(s).expect("realisable match set")
    }

    fn enc_rec(&self, t: &Tree) -> (Tree, usize) {
        let a = t.symbol().expect("ground tree");
        let (kids, idx): (Vec<Tree>, Vec<usize>) = t.children().iter().map(|c| self.enc_rec(c)).unzip();
        let s = self.match_set(a, &idx);
        let sym = &self.decorated[&(a.clone(), idx)];
        (Tree::node(sym, kids), self.set_index(&s))
    }

    /// Decorates every node of a ground tree.
    pub fn enc(&self, t: &Tree) -> Tree {
        self.enc_rec(t).0
    }

    pub fn enc_config(&self, c: &Configuration) -> Configuration {
        Configuration {
            location: c.location.clone(),
            tree: self.enc(&c.tree),
        }
    }

    /// Strips decorations.
    pub fn decode(&self, t: &Tree) -> Tree {
        t.map_symbols(&mut |s, _| self.original.get(s).cloned().unwrap_or_else(|| s.clone()))
    }

    /// Number of realisable match sets.
    pub fn num_match_sets(&self) -> usize {
        self.sets.len()
    }
}

fn ms(sub: &IndexSet<Tree>, sets: &IndexSet<BTreeSet<usize>>, a: &Symbol, kids: &[usize]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (i, w) in sub.iter().enumerate() {
        match w.label() {
            Label::Var(x) => {
                if x.order() == a.order() {
                    out.insert(i);
                }
            }
            Label::Sym(c) => {
                if c == a
                    && w.children().iter().zip(kids).all(|(wc, &k)| {
                        sub.get_index_of(wc)
                            .is_some_and(|j| sets[k].contains(&j))
                    })
                {
                    out.insert(i);
                }
            }
        }
    }
    out
}

/// All tuples over `0..n` of length `k`, lexicographic.
fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut acc = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(acc.len() * n);
        for t in &acc {
            for i in 0..n {
                let mut v = t.clone();
                v.push(i);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

fn product(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut acc = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::new();
        for t in &acc {
            for &i in c {
                let mut v = t.clone();
                v.push(i);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Builds an equivalent flat system. `enc` relates configurations:
/// `(p, t)` reaches `(q, u)` in `sys` iff `(p, enc t)` reaches
/// `(q, enc u)` in the result.
pub fn flatten(sys: &Aotps) -> Result<Flattening, SystemError> {
    sys.ensure_valid()?;
    let mut sub: IndexSet<Tree> = IndexSet::new();
    for r in sys.rules() {
        for u in r.lhs.subtrees().into_iter().skip(1) {
            sub.insert(canonical(u));
        }
    }

    // Realisable match sets, by saturation from the leaves.
    let mut sets: IndexSet<BTreeSet<usize>> = IndexSet::new();
    let mut seen_tuples: usize = 0;
    loop {
        let before = sets.len();
        for a in sys.alphabet().iter() {
            for t in tuples(before, a.rank()) {
                if a.rank() > 0 && t.iter().all(|&i| i < seen_tuples) {
                    continue;
                }
                let s = ms(&sub, &sets, a, &t);
                sets.insert(s);
            }
        }
        seen_tuples = before;
        if sets.len() == before {
            break;
        }
    }

    // Decorated alphabet.
    let mut alphabet = Alphabet::new();
    let mut decorated = HashMap::new();
    let mut original = HashMap::new();
    let mut taken: BTreeSet<String> = sys.alphabet().iter().map(|s| s.name().to_string()).collect();
    for a in sys.alphabet().iter() {
        for t in tuples(sets.len(), a.rank()) {
            let name = if t.is_empty() {
                a.name().to_string()
            } else {
                let mut n = a.name().to_string();
                for i in &t {
                    n.push('\'');
                    n.push_str(&i.to_string());
                }
                while taken.contains(&n) {
                    n.push('\'');
                }
                n
            };
            taken.insert(name.clone());
            let s = Symbol::new(name, a.rank(), a.order());
            alphabet.insert(s.clone()).expect("fresh name");
            original.insert(s.clone(), a.clone());
            decorated.insert((a.clone(), t), s);
        }
    }

    let mut fl = Flattening {
        system: Aotps::new(sys.order(), Alphabet::new(), Vec::new(), Vec::new()),
        sub,
        sets,
        decorated,
        original,
    };

    let mut rules = Vec::new();
    for r in sys.rules() {
        let kind = r.kind().expect("validated");
        let names: BTreeSet<String> = r.lhs.vars().iter().map(|v| v.name().to_string()).collect();
        let mut fresh_n = 0;
        let mut fresh = |order: u32| {
            loop {
                fresh_n += 1;
                let n = format!("_f{fresh_n}");
                if !names.contains(&n) {
                    return Tree::var(Var::new(n, order));
                }
            }
        };
        let containing = |u: &Tree| -> Vec<usize> {
            let c = canonical(u);
            let j = fl.sub.get_index_of(&c).expect("sub-pattern");
            (0..fl.sets.len()).filter(|&k| fl.sets[k].contains(&j)).collect()
        };
        let flat_child = |u: &Tree, fresh: &mut dyn FnMut(u32) -> Tree| {
            if u.is_var() {
                u.clone()
            } else {
                fresh(u.order())
            }
        };
        let a = r.lhs.symbol().expect("validated");
        let kids = r.lhs.children();
        let (deep_k, grand) = match &kind {
            RuleKind::Deep { child, .. } => (Some(*child), kids[*child].children().to_vec()),
            RuleKind::Shallow => (None, Vec::new()),
        };
        let x_choices: Vec<Vec<usize>> = kids
            .iter()
            .enumerate()
            .map(|(i, u)| if Some(i) == deep_k { vec![usize::MAX] } else { containing(u) })
            .collect();
        let y_choices: Vec<Vec<usize>> = grand.iter().map(&containing).collect();
        let new_kids: Vec<Tree> = kids
            .iter()
            .enumerate()
            .map(|(i, u)| if Some(i) == deep_k { u.clone() } else { flat_child(u, &mut fresh) })
            .collect();
        let new_grand: Vec<Tree> = grand.iter().map(|v| flat_child(v, &mut fresh)).collect();
        for xs in product(&x_choices) {
            for ys in product(&y_choices) {
                let mut xs = xs.clone();
                let mut mp: HashMap<Var, usize> = HashMap::new();
                let mut lhs_kids = new_kids.clone();
                if let Some(k) = deep_k {
                    let b = kids[k].symbol().expect("lookahead");
                    let xk = fl.match_set(b, &ys);
                    let Some(ik) = fl.sets.get_index_of(&xk) else { continue };
                    if !xk.contains(&fl.sub.get_index_of(&canonical(&kids[k])).expect("sub-pattern")) {
                        continue;
                    }
                    xs[k] = ik;
                    for (v, &y) in new_grand.iter().zip(&ys) {
                        if let Some(x) = v.as_var() {
                            mp.insert(x.clone(), y);
                        }
                    }
                    let bsym = fl.decorated[&(b.clone(), ys.clone())].clone();
                    lhs_kids[k] = Tree::node(&bsym, new_grand.clone());
                }
                for (i, u) in lhs_kids.iter().enumerate() {
                    if let Some(x) = u.as_var() {
                        mp.insert(x.clone(), xs[i]);
                    }
                }
                let asym = fl.decorated[&(a.clone(), xs.clone())].clone();
                let lhs = Tree::node(&asym, lhs_kids);
                let rhs = fl.decorate_rhs(&r.rhs, &mp).0;
                let mut nr = Rule::new(r.source.clone(), lhs, r.targets.iter().cloned(), rhs);
                nr.line = r.line;
                rules.push(nr);
            }
        }
    }
    fl.system = Aotps::new(sys.order(), alphabet, sys.locations().map(str::to_string), rules);
    Ok(fl)
}

impl Flattening {
    /// `⟦w⟧` and the index of `mp(w)`.
    fn decorate_rhs(&self, w: &Tree, mp: &HashMap<Var, usize>) -> (Tree, usize) {
        match w.label() {
            Label::Var(x) => (w.clone(), mp[x]),
            Label::Sym(c) => {
                let (kids, idx): (Vec<Tree>, Vec<usize>) =
                    w.children().iter().map(|k| self.decorate_rhs(k, mp)).unzip();
                let s = self.match_set(c, &idx);
                let sym = &self.decorated[&(c.clone(), idx)];
                (Tree::node(sym, kids), self.set_index(&s))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_aotps, parse_tree};

    fn sys() -> Aotps {
        parse_aotps(
            "aotps order 1 {
               alphabet { a : rank 2 order 1; c : rank 0 order 1; d : rank 0 order 1; }
               locations p q;
               rule p : a(c, ?x:1) -> {q} : ?x:1;
             }",
        )
        .unwrap()
    }

    #[test]
    fn output_is_flat_and_valid() {
        let s = sys();
        assert!(!s.is_flat());
        let f = flatten(&s).unwrap();
        assert!(f.system.validate().is_empty(), "{:?}", f.system.validate());
        assert!(f.system.is_flat());
        // The first child's decoration must contain the pattern `c`.
        let c_idx = f.sub.get_index_of(&parse_tree("c", s.alphabet()).unwrap()).unwrap();
        for r in f.system.rules() {
            let name = r.lhs.symbol().unwrap().name();
            let first: usize = name.split('\'').nth(1).unwrap().parse().unwrap();
            assert!(f.sets[first].contains(&c_idx));
        }
    }

    #[test]
    fn encoding_commutes_with_steps() {
        let s = sys();
        let f = flatten(&s).unwrap();
        for src in ["a(c, d)", "a(d, c)", "a(c, a(c, c))"] {
            let c = Configuration::new("p", parse_tree(src, s.alphabet()).unwrap());
            let orig: Vec<Vec<Configuration>> = s.step(&c).into_iter().map(|m| m.1).collect();
            let flat: Vec<Vec<Configuration>> = f
                .system
                .step(&f.enc_config(&c))
                .into_iter()
                .map(|m| m.1)
                .collect();
            let encoded: Vec<Vec<Configuration>> = orig
                .iter()
                .map(|m| m.iter().map(|d| f.enc_config(d)).collect())
                .collect();
            assert_eq!(flat, encoded, "{src}");
            assert_eq!(f.decode(&f.enc(&c.tree)), c.tree);
        }
    }
}
