//! Parametrised instances for the benchmarks.
//!
//! Every family is built as source text and parsed, so the instances are
//! the same ones a user would feed to the command-line tool.

use std::fmt::Write as _;

use otsat::encode::{Model, OrderedMpds};
use otsat::saturation::control_state_target;
use otsat::syntax::{parse_aotps, parse_automaton_with, parse_config};
use otsat::{Aotps, Automaton, Configuration};

/// A system, a target automaton and an initial configuration.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub system: Aotps,
    pub target: Automaton,
    pub init: Configuration,
}

fn config(sys: &Aotps, src: &str) -> Configuration {
    let (p, t) = parse_config(src, sys.alphabet()).expect("fixture config parses");
    Configuration::new(&p, t)
}

/// An order-1 pushdown system cycling through `k` stack symbols, pushing
/// one per step, with a pop to `q` from every location. Target: `q` with
/// an empty stack.
pub fn pds_cycle(k: usize) -> Instance {
    let mut src = String::from("aotps order 1 {\n  alphabet {\n");
    for i in 0..k {
        let _ = writeln!(src, "    s{i} : rank 1 order 1;");
    }
    src += "    bot : rank 0 order 1;\n  }\n  locations q";
    for i in 0..k {
        let _ = write!(src, " p{i}");
    }
    src += ";\n";
    for i in 0..k {
        let j = (i + 1) % k;
        let _ = writeln!(src, "  rule p{i} : s{i}(?x:1) -> {{p{j}}} : s{j}(s{i}(?x:1));");
        let _ = writeln!(src, "  rule p{i} : s{i}(?x:1) -> {{q}} : ?x:1;");
        let _ = writeln!(src, "  rule q : s{i}(?x:1) -> {{q}} : ?x:1;");
    }
    src += "}\n";
    let system = parse_aotps(&src).expect("fixture parses");
    let target = parse_automaton_with(
        "automaton { state q : initial trans q -bot-> }",
        Some(system.alphabet()),
        &|p| Err(p.to_string()),
    )
    .expect("fixture target parses");
    let init = config(&system, "p0 : s0(bot)");
    Instance {
        name: format!("pds-cycle/{k}"),
        system,
        target,
        init,
    }
}

/// An order-1 system where each of `k` layers splits into two universal
/// branches that must both reach `done`.
pub fn alternating_ladder(k: usize) -> Instance {
    let mut src = String::from(
        "aotps order 1 {\n  alphabet { a : rank 1 order 1; b : rank 1 order 1; e : rank 0 order 1; }\n  locations done",
    );
    for i in 0..=k {
        let _ = write!(src, " l{i} r{i}");
    }
    src += ";\n";
    for i in 0..k {
        let n = i + 1;
        let _ = writeln!(src, "  rule l{i} : a(?x:1) -> {{l{n}, r{n}}} : b(a(?x:1));");
        let _ = writeln!(src, "  rule r{i} : a(?x:1) -> {{l{n}, r{n}}} : a(b(?x:1));");
        let _ = writeln!(src, "  rule l{i} : b(?x:1) -> {{l{n}}} : ?x:1;");
        let _ = writeln!(src, "  rule r{i} : b(?x:1) -> {{r{n}}} : ?x:1;");
    }
    for side in ["l", "r"] {
        for s in ["a", "b"] {
            let _ = writeln!(src, "  rule {side}{k} : {s}(?x:1) -> {{done}} : ?x:1;");
        }
    }
    src += "}\n";
    let system = parse_aotps(&src).expect("fixture parses");
    let target = control_state_target(&system, &["done"]).expect("fixture target");
    let init = config(&system, "l0 : a(e)");
    Instance {
        name: format!("alternating-ladder/{k}"),
        system,
        target,
        init,
    }
}

/// The encoding of an ordered multi-pushdown system with `n` stacks that
/// moves a token from each stack to the next, ending at location `end`.
pub fn ompds_relay(n: u32) -> Instance {
    let mut src = format!("ompds n={n} {{ stack-alphabet t; locations");
    for i in 0..=n {
        let _ = write!(src, " s{i}");
    }
    for k in 1..n {
        let _ = write!(src, " p{k}");
    }
    src += " end; rule s0 push 1 t -> {s1};";
    for k in 1..n {
        let _ = write!(src, " rule s{k} pop {k} t -> {{p{k}}};");
        let _ = write!(src, " rule p{k} push {} t -> {{s{}}};", k + 1, k + 1);
    }
    let _ = write!(src, " rule s{n} pop {n} t -> {{end}}; }}");
    let model = OrderedMpds::parse(&src).expect("fixture model parses");
    let enc = model.encode().expect("fixture encodes");
    let c = model
        .parse_config(&format!("s0 :{}", " []".repeat(n as usize)))
        .expect("fixture config parses");
    let init = model.enc_config(&enc, &c).expect("fixture config encodes");
    let target = enc.control_state_target(&["end"]).expect("fixture target");
    Instance {
        name: format!("ompds-relay/{n}"),
        system: enc.system,
        target,
        init,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use otsat::saturation::{saturate, SaturationOptions};

    fn reachable(i: &Instance) -> bool {
        saturate(&i.system, &i.target, SaturationOptions::default())
            .unwrap()
            .accepts(&i.init)
            .unwrap()
    }

    #[test]
    fn fixtures_are_valid_and_reachable() {
        for i in [pds_cycle(3), alternating_ladder(3), ompds_relay(3)] {
            assert!(i.system.validate().is_empty(), "{}", i.name);
            assert!(reachable(&i), "{}", i.name);
        }
    }

    #[test]
    fn relay_order_follows_the_stack_count() {
        assert_eq!(ompds_relay(1).system.order(), 1);
        assert_eq!(ompds_relay(4).system.order(), 4);
    }
}
