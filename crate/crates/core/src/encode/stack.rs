use std::fmt;
use std::sync::Arc;

use crate::syntax::{ParseError, Parser, PResult};

/// An annotated higher-order stack `<a^u, u1, ..., uk>` of order `k`, or the
/// empty stack of a given order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Stack {
    Empty(u32),
    Node(Arc<StackNode>),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StackNode {
    pub top: String,
    /// The annotation `u` of the topmost symbol.
    pub ann: Stack,
    /// `u1, ..., uk`; `comps[i]` has order `i + 1`.
    pub comps: Vec<Stack>,
}

impl Stack {
    pub fn node(top: impl Into<String>, ann: Stack, comps: Vec<Stack>) -> Stack {
        debug_assert!(!comps.is_empty());
        Stack::Node(Arc::new(StackNode {
            top: top.into(),
            ann,
            comps,
        }))
    }

    /// `<a^<>:1, <>, ..., <>>` of order `n`.
    pub fn singleton(top: impl Into<String>, n: u32) -> Stack {
        Stack::node(top, Stack::Empty(1), (1..=n).map(Stack::Empty).collect())
    }

    pub fn order(&self) -> u32 {
        match self {
            Stack::Empty(k) => *k,
            Stack::Node(n) => n.comps.len() as u32,
        }
    }

    pub fn as_node(&self) -> Option<&StackNode> {
        match self {
            Stack::Empty(_) => None,
            Stack::Node(n) => Some(n),
        }
    }

    pub fn top(&self) -> Option<&str> {
        self.as_node().map(|n| n.top.as_str())
    }

    pub fn size(&self) -> usize {
        match self {
            Stack::Empty(_) => 1,
            Stack::Node(n) => 1 + n.ann.size() + n.comps.iter().map(Stack::size).sum::<usize>(),
        }
    }

    /// `push_k^b`: pushes `b` annotated with the topmost order-`k` stack.
    pub fn push_symbol(&self, k: u32, b: &str) -> Option<Stack> {
        let n = self.as_node()?;
        let k = k as usize;
        if k == 0 || k > n.comps.len() {
            return None;
        }
        let ann = Stack::node(n.top.clone(), n.ann.clone(), n.comps[..k].to_vec());
        let first = Stack::node(n.top.clone(), n.ann.clone(), vec![n.comps[0].clone()]);
        let mut comps = vec![first];
        comps.extend(n.comps[1..].iter().cloned());
        Some(Stack::node(b, ann, comps))
    }

    /// `push_k`: duplicates the topmost order-`(k-1)` stack.
    pub fn duplicate(&self, k: u32) -> Option<Stack> {
        let n = self.as_node()?;
        let k = k as usize;
        if k == 0 || k > n.comps.len() {
            return None;
        }
        let copy = Stack::node(n.top.clone(), n.ann.clone(), n.comps[..k].to_vec());
        let mut comps = n.comps.clone();
        comps[k - 1] = copy;
        Some(Stack::node(n.top.clone(), n.ann.clone(), comps))
    }

    /// `pop_k`: removes the topmost order-`(k-1)` stack; undefined when the
    /// order-`k` component is empty.
    pub fn pop(&self, k: u32) -> Option<Stack> {
        let n = self.as_node()?;
        let k = k as usize;
        if k == 0 || k > n.comps.len() {
            return None;
        }
        let below = n.comps[k - 1].as_node()?;
        let mut comps = below.comps.clone();
        comps.extend(n.comps[k..].iter().cloned());
        Some(Stack::node(below.top.clone(), below.ann.clone(), comps))
    }

    /// Replaces the topmost order-`k` stack with the first `k` components of
    /// the annotation, which must be non-empty and of order at least `k`.
    pub fn collapse(&self, k: u32) -> Option<Stack> {
        let n = self.as_node()?;
        let k = k as usize;
        if k == 0 || k > n.comps.len() {
            return None;
        }
        let link = n.ann.as_node()?;
        if link.comps.len() < k {
            return None;
        }
        let mut comps = link.comps[..k].to_vec();
        comps.extend(n.comps[k..].iter().cloned());
        Some(Stack::node(link.top.clone(), link.ann.clone(), comps))
    }

    /// Every symbol occurring in the stack, annotations included.
    pub fn symbols(&self, out: &mut Vec<String>) {
        if let Stack::Node(n) = self {
            out.push(n.top.clone());
            n.ann.symbols(out);
            for c in &n.comps {
                c.symbols(out);
            }
        }
    }

    fn fmt_in(&self, f: &mut fmt::Formatter<'_>, explicit_order: bool) -> fmt::Result {
        match self {
            Stack::Empty(k) if explicit_order => write!(f, "<>:{k}"),
            Stack::Empty(_) => f.write_str("<>"),
            Stack::Node(n) => {
                write!(f, "<{}", n.top)?;
                if n.ann != Stack::Empty(1) {
                    f.write_str(" ^")?;
                    n.ann.fmt_in(f, true)?;
                }
                for c in &n.comps {
                    f.write_str(", ")?;
                    c.fmt_in(f, false)?;
                }
                f.write_str(">")
            }
        }
    }
}

/// Components print `<>`, annotations `<>:k`; the default annotation
/// `<>:1` is omitted.
impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_in(f, false)
    }
}

/// Parses a stack whose order, if known from context, is `expected`.
pub(crate) fn parse_stack(p: &mut Parser, alphabet: &[String], expected: Option<u32>) -> PResult<Stack> {
    let pos = p.pos();
    p.expect_punct('<')?;
    if p.eat_punct('>') {
        let given = if p.eat_punct(':') { Some(p.small_int()?) } else { None };
        return match (given, expected) {
            (Some(0), _) => Err(ParseError::semantic(pos, "stack order must be positive")),
            (Some(g), Some(e)) if g != e => Err(ParseError::semantic(
                pos,
                format!("empty stack of order {g} where order {e} is expected"),
            )),
            (Some(k), _) | (None, Some(k)) => Ok(Stack::Empty(k)),
            (None, None) => Err(ParseError::semantic(pos, "empty annotation needs an order, as in `<>:1`")),
        };
    }
    let tpos = p.pos();
    let top = p.ident()?;
    if !alphabet.contains(&top) {
        return Err(ParseError::semantic(tpos, format!("undeclared stack symbol `{top}`")));
    }
    let ann = if p.eat_punct('^') {
        parse_stack(p, alphabet, None)?
    } else {
        Stack::Empty(1)
    };
    let mut comps = Vec::new();
    while p.eat_punct(',') {
        let k = comps.len() as u32 + 1;
        comps.push(parse_stack(p, alphabet, Some(k))?);
    }
    p.expect_punct('>')?;
    if comps.is_empty() {
        return Err(ParseError::semantic(pos, "a non-empty stack has at least one component"));
    }
    let s = Stack::node(top, ann, comps);
    match expected {
        Some(e) if e != s.order() => Err(ParseError::semantic(
            pos,
            format!("stack of order {} where order {e} is expected", s.order()),
        )),
        _ => Ok(s),
    }
}
