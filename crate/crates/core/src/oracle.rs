//! Bounded explicit-state search for alternating reachability.
//!
//! Used to cross-check the saturation engine. The search never claims
//! `Unreachable` unless it explored the whole reachable space without
//! pruning anything.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use crate::aotps::{Aotps, Configuration};
use crate::tree::{Alphabet, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Reachable,
    Unreachable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Reachable => "REACHABLE",
            Verdict::Unreachable => "UNREACHABLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleReport {
    pub verdict: Verdict,
    pub explored: usize,
    /// Some move was dropped because a successor exceeded the size cap.
    pub pruned: bool,
    /// Every discovered configuration was expanded.
    pub complete: bool,
    /// Non-target configurations left unexpanded at the depth bound.
    pub frontier: usize,
    /// Height of the shortest winning strategy, when reachable.
    pub rank: Option<usize>,
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (explored {}, complete {}, pruned {}",
            self.verdict, self.explored, self.complete, self.pruned
        )?;
        if let Some(r) = self.rank {
            write!(f, ", witness height {r}")?;
        }
        f.write_str(")")
    }
}

struct Node {
    target: bool,
    expanded: bool,
    moves: Vec<Vec<usize>>,
}

/// Alternating reachability over an arbitrary successor relation.
///
/// `successors(c)` lists the moves of `c`; a move is won when all of its
/// successors are. Configurations at distance `depth` and target
/// configurations are not expanded. Moves with a successor rejected by
/// `within_cap` are dropped and mark the report as pruned.
pub fn explore<C, S, T, W>(
    init: &C,
    depth: usize,
    mut is_target: T,
    mut successors: S,
    mut within_cap: W,
) -> OracleReport
where
    C: Clone + Eq + Hash,
    S: FnMut(&C) -> Vec<Vec<C>>,
    T: FnMut(&C) -> bool,
    W: FnMut(&C) -> bool,
{
    let mut ids: HashMap<C, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut queue: VecDeque<(C, usize)> = VecDeque::new();
    let mut pruned = false;
    let mut intern = |c: &C, nodes: &mut Vec<Node>, queue: &mut VecDeque<(C, usize)>, d: usize, is_target: &mut T| {
        if let Some(&i) = ids.get(c) {
            return i;
        }
        let i = nodes.len();
        ids.insert(c.clone(), i);
        nodes.push(Node {
            target: is_target(c),
            expanded: false,
            moves: Vec::new(),
        });
        queue.push_back((c.clone(), d));
        i
    };
    intern(init, &mut nodes, &mut queue, 0, &mut is_target);
    let mut idx = 0;
    while let Some((c, d)) = queue.pop_front() {
        let me = idx;
        idx += 1;
        if nodes[me].target || d >= depth {
            continue;
        }
        nodes[me].expanded = true;
        let mut moves = Vec::new();
        for mv in successors(&c) {
            if !mv.iter().all(&mut within_cap) {
                pruned = true;
                continue;
            }
            let m: Vec<usize> = mv
                .iter()
                .map(|s| intern(s, &mut nodes, &mut queue, d + 1, &mut is_target))
                .collect();
            moves.push(m);
        }
        nodes[me].moves = moves;
    }
    let frontier = nodes.iter().filter(|n| !n.target && !n.expanded).count();
    let complete = frontier == 0;

    // Least fixpoint by rounds; the round number is the strategy height.
    let mut rank: Vec<Option<usize>> = nodes.iter().map(|n| n.target.then_some(0)).collect();
    let mut round = 0;
    loop {
        round += 1;
        let mut changed = false;
        let snapshot = rank.clone();
        for (i, n) in nodes.iter().enumerate() {
            if snapshot[i].is_some() || !n.expanded {
                continue;
            }
            if n.moves.iter().any(|m| m.iter().all(|&s| snapshot[s].is_some())) {
                rank[i] = Some(round);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let verdict = match rank[0] {
        Some(_) => Verdict::Reachable,
        None if complete && !pruned => Verdict::Unreachable,
        None => Verdict::Inconclusive,
    };
    OracleReport {
        verdict,
        explored: nodes.len(),
        pruned,
        complete,
        frontier,
        rank: rank[0],
    }
}

/// Bounded search from `init` in `sys` for a configuration satisfying
/// `is_target`, expanding to `depth` and pruning trees larger than
/// `size_cap`.
pub fn bounded_reach(
    sys: &Aotps,
    init: &Configuration,
    is_target: impl FnMut(&Configuration) -> bool,
    depth: usize,
    size_cap: usize,
) -> OracleReport {
    explore(
        init,
        depth,
        is_target,
        |c| sys.step(c).into_iter().map(|(_, s)| s).collect(),
        |c| c.tree.size() <= size_cap,
    )
}

/// All ground trees over `alphabet` with at most `max_size` nodes, ordered
/// by size, then symbol declaration order, then child sizes, then children.
pub fn enumerate_trees(alphabet: &Alphabet, max_size: usize) -> Vec<Tree> {
    let mut by_size: Vec<Vec<Tree>> = vec![Vec::new(); max_size + 1];
    for k in 1..=max_size {
        let mut out = Vec::new();
        for a in alphabet.iter() {
            let r = a.rank();
            if r == 0 {
                if k == 1 {
                    out.push(Tree::leaf(a));
                }
                continue;
            }
            if k < r + 1 {
                continue;
            }
            for comp in compositions(k - 1, r) {
                let mut acc: Vec<Vec<Tree>> = vec![Vec::new()];
                for &part in &comp {
                    let mut next = Vec::new();
                    for prefix in &acc {
                        for t in &by_size[part] {
                            let mut v = prefix.clone();
                            v.push(t.clone());
                            next.push(v);
                        }
                    }
                    acc = next;
                }
                out.extend(acc.into_iter().map(|kids| Tree::node(a, kids)));
            }
        }
        by_size[k] = out;
    }
    by_size.into_iter().flatten().collect()
}

/// The trees of [`enumerate_trees`] whose root has order `order`.
pub fn enumerate_trees_of_order(alphabet: &Alphabet, order: u32, max_size: usize) -> Vec<Tree> {
    enumerate_trees(alphabet, max_size)
        .into_iter()
        .filter(|t| t.order() == order)
        .collect()
}

/// Ordered ways to write `total` as `parts` positive summands, lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The alternating successor tree of `init` to `depth`, one line per node.
pub fn simulate(sys: &Aotps, init: &Configuration, depth: usize) -> String {
    fn go(sys: &Aotps, c: &Configuration, depth: usize, indent: usize, out: &mut String) {
        out.push_str(&"  ".repeat(indent));
        out.push_str(&c.to_string());
        out.push('\n');
        if depth == 0 {
            return;
        }
        for (ri, succ) in sys.step(c) {
            out.push_str(&"  ".repeat(indent + 1));
            out.push_str(&format!("rule-{}\n", ri + 1));
            for s in &succ {
                go(sys, s, depth - 1, indent + 2, out);
            }
        }
    }
    let mut out = String::new();
    go(sys, init, depth, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_alphabet, parse_aotps, parse_tree};

    #[test]
    fn enumeration_counts() {
        let al = parse_alphabet("alphabet { a : rank 1 order 1; b : rank 2 order 1; e : rank 0 order 1 }")
            .unwrap();
        let ts = enumerate_trees(&al, 4);
        // Motzkin-like counts per size: 1, 1, 2, 4.
        assert_eq!(ts.len(), 1 + 1 + 2 + 4);
        assert_eq!(ts[0].to_string(), "e");
        assert!(ts.windows(2).all(|w| w[0].size() <= w[1].size()));
        assert_eq!(compositions(3, 2), vec![vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn enumeration_examples() {
        let un = parse_alphabet("alphabet { a : rank 1 order 1; bot : rank 0 order 1 }").unwrap();
        let ts: Vec<String> = enumerate_trees_of_order(&un, 1, 3).iter().map(|t| t.to_string()).collect();
        assert_eq!(ts, ["bot", "a(bot)", "a(a(bot))"]);
        let two = parse_alphabet("alphabet { a : rank 1 order 2; b : rank 0 order 1 }").unwrap();
        assert!(enumerate_trees_of_order(&two, 2, 1).is_empty());
        assert_eq!(enumerate_trees_of_order(&two, 2, 2).len(), 1);
        let c = parse_alphabet("alphabet { c : rank 2 order 1; a : rank 0 order 1; b : rank 0 order 1 }").unwrap();
        assert_eq!(enumerate_trees_of_order(&c, 1, 3).len(), 6);
    }

    #[test]
    fn target_init_is_reachable_at_depth_zero() {
        let sys = parse_aotps("aotps order 1 { alphabet { e : rank 0 order 1 } locations p; }").unwrap();
        let init = Configuration::new("p", parse_tree("e", sys.alphabet()).unwrap());
        let rep = bounded_reach(&sys, &init, |_| true, 0, 1);
        assert_eq!((rep.verdict, rep.rank), (Verdict::Reachable, Some(0)));
        let rep = bounded_reach(&sys, &init, |_| false, 0, 1);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        let rep = bounded_reach(&sys, &init, |_| false, 1, 1);
        assert_eq!(rep.verdict, Verdict::Unreachable);
    }

    #[test]
    fn alternation_requires_all_branches() {
        let sys = parse_aotps(
            "aotps order 1 {
               alphabet { a : rank 1 order 1; e : rank 0 order 1; }
               locations p q r t;
               rule p : a(?x:1) -> {q, r} : ?x:1;
               rule q : e -> {t} : e;
             }",
        )
        .unwrap();
        let init = Configuration::new("p", parse_tree("a(e)", sys.alphabet()).unwrap());
        let rep = bounded_reach(&sys, &init, |c| &*c.location == "t", 8, 10);
        assert_eq!(rep.verdict, Verdict::Unreachable);
        let rep = bounded_reach(&sys, &init, |c| &*c.location != "p", 8, 10);
        assert_eq!(rep.verdict, Verdict::Reachable);
        assert_eq!(rep.rank, Some(1));
    }

    #[test]
    fn pruning_prevents_unreachable() {
        let sys = parse_aotps(
            "aotps order 1 {
               alphabet { a : rank 1 order 1; e : rank 0 order 1; }
               locations p t;
               rule p : a(?x:1) -> {p} : a(a(?x:1));
             }",
        )
        .unwrap();
        let init = Configuration::new("p", parse_tree("a(e)", sys.alphabet()).unwrap());
        let rep = bounded_reach(&sys, &init, |c| &*c.location == "t", 20, 5);
        assert!(rep.pruned);
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn depth_zero_simulation_prints_only_init() {
        let sys = parse_aotps(
            "aotps order 1 { alphabet { e : rank 0 order 1 } locations p; rule p : e -> {p} : e; }",
        )
        .unwrap();
        let init = Configuration::new("p", parse_tree("e", sys.alphabet()).unwrap());
        assert_eq!(simulate(&sys, &init, 0), "p : e\n");
    }
}
