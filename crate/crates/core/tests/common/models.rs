//! Random front-end models, produced as source text so that the parsers
//! are exercised too.

use otsat::encode::krivine::{Closure, KConfig, Type};
use otsat::encode::{AnnotatedHopds, KrivineMachine, OrderedAnnotatedMpds, OrderedMpds, Stack};
use rand::seq::SliceRandom;
use rand::Rng;

use super::TestRng;

fn targets(rng: &mut TestRng, locs: &[String], alternation: f64) -> String {
    let mut t = vec![locs.choose(rng).unwrap().clone()];
    if rng.gen_bool(alternation) {
        t.push(locs.choose(rng).unwrap().clone());
    }
    t.sort();
    t.dedup();
    format!("{{{}}}", t.join(", "))
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

pub fn random_ompds(rng: &mut TestRng) -> OrderedMpds {
    let n = rng.gen_range(1..=3);
    let al = names("s", rng.gen_range(1..=3));
    let locs = names("p", rng.gen_range(2..=3));
    let mut src = format!("ompds n={n} {{ stack-alphabet {}; locations {};", al.join(" "), locs.join(" "));
    for _ in 0..rng.gen_range(2..=6) {
        let op = if rng.gen_bool(0.5) { "push" } else { "pop" };
        src += &format!(
            " rule {} {op} {} {} -> {};",
            locs.choose(rng).unwrap(),
            rng.gen_range(1..=n),
            al.choose(rng).unwrap(),
            targets(rng, &locs, 0.3)
        );
    }
    src += " }";
    OrderedMpds::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn random_ompds_config(rng: &mut TestRng, m: &OrderedMpds, max_height: usize) -> String {
    let stacks: Vec<String> = (0..m.n)
        .map(|_| {
            let h = rng.gen_range(0..=max_height);
            let w: Vec<&str> = (0..h).map(|_| m.alphabet.choose(rng).unwrap().as_str()).collect();
            format!("[{}]", w.join(", "))
        })
        .collect();
    format!("{} : {}", m.locations.choose(rng).unwrap(), stacks.join(" "))
}

fn stack_op(rng: &mut TestRng, al: &[String], n: u32, push_order: Option<u32>) -> String {
    let k = rng.gen_range(1..=n);
    match rng.gen_range(0..4) {
        0 => format!("push{} {}", push_order.unwrap_or(k), al.choose(rng).unwrap()),
        1 if k >= 2 => format!("push{k}"),
        1 | 2 => format!("pop{k}"),
        _ => format!("collapse{k}"),
    }
}

pub fn random_apds(rng: &mut TestRng) -> AnnotatedHopds {
    let n = rng.gen_range(1..=2);
    let al = names("s", rng.gen_range(1..=3));
    let locs = names("p", rng.gen_range(2..=3));
    let mut src = format!("apds order={n} {{ stack-alphabet {}; locations {};", al.join(" "), locs.join(" "));
    for _ in 0..rng.gen_range(2..=6) {
        src += &format!(
            " rule {} {} {} -> {};",
            locs.choose(rng).unwrap(),
            al.choose(rng).unwrap(),
            stack_op(rng, &al, n, None),
            targets(rng, &locs, 0.3)
        );
    }
    src += " }";
    AnnotatedHopds::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

pub fn random_apds_config(rng: &mut TestRng, m: &AnnotatedHopds) -> String {
    let top = m.alphabet.choose(rng).unwrap();
    format!("{} : {}", m.locations.choose(rng).unwrap(), Stack::singleton(top.clone(), m.n))
}

pub fn random_oampds(rng: &mut TestRng) -> OrderedAnnotatedMpds {
    let m = rng.gen_range(1..=2);
    let n = rng.gen_range(1..=2);
    let al = names("s", rng.gen_range(1..=3));
    let locs = names("p", rng.gen_range(2..=3));
    let mut src = format!(
        "oampds m={m} n={n} {{ stack-alphabet {}; initial {}; locations {};",
        al.join(" "),
        al[0],
        locs.join(" ")
    );
    for _ in 0..rng.gen_range(2..=6) {
        src += &format!(
            " rule {} stack {} {} {} -> {};",
            locs.choose(rng).unwrap(),
            rng.gen_range(1..=m),
            al.choose(rng).unwrap(),
            stack_op(rng, &al, n, Some(n)),
            targets(rng, &locs, 0.3)
        );
    }
    src += " }";
    OrderedAnnotatedMpds::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

#[derive(Clone, Copy, PartialEq)]
enum Ty {
    Base,
    /// `0 -> 0`
    Unary,
}

impl Ty {
    fn show(self) -> &'static str {
        match self {
            Ty::Base => "0",
            Ty::Unary => "0 -> 0",
        }
    }
}

struct TermGen<'a> {
    rng: &'a mut TestRng,
    level: u32,
    next: usize,
}

impl TermGen<'_> {
    fn fresh(&mut self, base: &str) -> String {
        self.next += 1;
        format!("{base}{}", self.next)
    }

    fn var_of(&mut self, ctx: &[(String, Ty)], ty: Ty) -> Option<String> {
        let vs: Vec<&String> = ctx.iter().filter(|(_, t)| *t == ty).map(|(v, _)| v).collect();
        vs.choose(self.rng).map(|v| v.to_string())
    }

    fn term(&mut self, ty: Ty, ctx: &[(String, Ty)], depth: u32) -> String {
        match ty {
            Ty::Base => self.base(ctx, depth),
            Ty::Unary => self.unary(ctx, depth),
        }
    }

    fn base(&mut self, ctx: &[(String, Ty)], depth: u32) -> String {
        if depth == 0 {
            if self.rng.gen_bool(0.5) {
                if let Some(x) = self.var_of(ctx, Ty::Base) {
                    return x;
                }
            }
            return "c".into();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..7) {
            0 => format!("a ({})", self.base(ctx, d)),
            1 => format!("b ({}) ({})", self.base(ctx, d), self.base(ctx, d)),
            2 => {
                let f = self.fresh("f");
                let mut inner = ctx.to_vec();
                inner.push((f.clone(), Ty::Base));
                format!("Y (\\{f}:0. {})", self.base(&inner, d))
            }
            3 => {
                // A redex whose binder has type 0, or 0 -> 0 at level 2.
                let ty = if self.level >= 2 && self.rng.gen_bool(0.5) { Ty::Unary } else { Ty::Base };
                let x = self.fresh("x");
                let mut inner = ctx.to_vec();
                inner.push((x.clone(), ty));
                let body = self.base(&inner, d);
                let arg = self.term(ty, ctx, d);
                format!("(\\{x}:{}. {body}) ({arg})", ty.show())
            }
            4 if self.level >= 2 => format!("({}) ({})", self.unary(ctx, d), self.base(ctx, d)),
            5 => match self.var_of(ctx, Ty::Unary) {
                Some(g) => format!("{g} ({})", self.base(ctx, d)),
                None => self.base(ctx, d),
            },
            _ => match self.var_of(ctx, Ty::Base) {
                Some(x) => x,
                None => "c".into(),
            },
        }
    }

    fn unary(&mut self, ctx: &[(String, Ty)], depth: u32) -> String {
        let d = depth.saturating_sub(1);
        match self.rng.gen_range(0..4) {
            0 => "a".into(),
            1 => format!("b ({})", self.base(ctx, d)),
            2 => match self.var_of(ctx, Ty::Unary) {
                Some(g) => g,
                None => "a".into(),
            },
            _ => {
                let x = self.fresh("x");
                let mut inner = ctx.to_vec();
                inner.push((x.clone(), Ty::Base));
                format!("\\{x}:0. {}", self.base(&inner, d))
            }
        }
    }
}

/// A well-typed machine over `a : 0 -> 0`, `b : 0 -> 0 -> 0` and `c : 0`.
pub fn random_krivine(rng: &mut TestRng) -> KrivineMachine {
    let level = rng.gen_range(1..=2);
    let locs = names("p", rng.gen_range(2..=3));
    let depth = rng.gen_range(1..=4);
    let term = TermGen { rng: &mut *rng, level, next: 0 }.base(&[], depth);
    let mut src = format!(
        "krivine level={level} {{ const a : 0 -> 0; const b : 0 -> 0 -> 0; const c : 0; locations {}; term K0 = {term};",
        locs.join(" ")
    );
    for _ in 0..rng.gen_range(1..=5) {
        let q = locs.choose(rng).unwrap().clone();
        src += &match rng.gen_range(0..3) {
            0 => format!(" trans {q} a -> {};", targets(rng, &locs, 0.3)),
            1 => format!(" trans {q} b -> {} {};", targets(rng, &locs, 0.3), targets(rng, &locs, 0.3)),
            _ => format!(" trans {q} c -> ;"),
        };
    }
    src += " }";
    KrivineMachine::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// A stack built by random operations from a singleton. `link_order` fixes
/// the order of every pushed link.
pub fn random_stack(rng: &mut TestRng, al: &[String], n: u32, steps: usize, link_order: Option<u32>) -> Stack {
    let mut w = Stack::singleton(al.choose(rng).unwrap().clone(), n);
    for _ in 0..steps {
        let k = rng.gen_range(1..=n);
        let next = match rng.gen_range(0..4) {
            0 => w.push_symbol(link_order.unwrap_or(k), al.choose(rng).unwrap()),
            1 if k >= 2 => w.duplicate(k),
            1 | 2 => w.pop(k),
            _ => w.collapse(k),
        };
        if let Some(x) = next.filter(|x| x.size() <= 40) {
            w = x;
        }
    }
    w
}

pub fn random_apds_stack_config(rng: &mut TestRng, m: &AnnotatedHopds) -> String {
    let w = random_stack(rng, &m.alphabet, m.n, 8, None);
    format!("{} : {w}", m.locations.choose(rng).unwrap())
}

pub fn random_oampds_config(rng: &mut TestRng, m: &OrderedAnnotatedMpds) -> String {
    let stacks: Vec<String> = (0..m.m)
        .map(|_| random_stack(rng, &m.alphabet, m.n, 6, Some(m.n)).to_string())
        .collect();
    format!("{} : {}", m.locations.choose(rng).unwrap(), stacks.join(" | "))
}

/// A random closure of type `ty`: a subterm of that type whose free
/// variables are bound to random closures of their types. `None` when the
/// depth runs out before every variable is bound.
pub fn random_closure(rng: &mut TestRng, m: &KrivineMachine, ty: &Type, depth: u32) -> Option<Closure> {
    let candidates: Vec<usize> = (0..m.terms.len())
        .filter(|&t| m.terms[t].ty == *ty && (depth > 0 || m.terms[t].free.is_empty()))
        .collect();
    let &t = candidates.choose(rng)?;
    let mut env = Vec::new();
    for &x in &m.terms[t].free {
        env.push((x, random_closure(rng, m, &m.vars[x].1, depth.saturating_sub(1))?));
    }
    Some(Closure::new(t, env))
}

/// A random well-typed configuration: a closure and arguments fitting its
/// type.
pub fn random_kconfig(rng: &mut TestRng, m: &KrivineMachine) -> Option<KConfig> {
    let t = rng.gen_range(0..m.terms.len());
    let ty = m.terms[t].ty.clone();
    let head = random_closure(rng, m, &ty, 3)?;
    let args = ty
        .args()
        .iter()
        .map(|a| random_closure(rng, m, a, 3))
        .collect::<Option<Vec<_>>>()?;
    Some(KConfig {
        location: m.locations.choose(rng)?.clone(),
        head,
        args,
    })
}
