use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use otsat::encode::{
    AnnotatedHopds, KrivineMachine, Model, OrderedAnnotatedMpds, OrderedMpds,
};
use otsat::oracle::{bounded_reach, simulate, Verdict};
use otsat::saturation::{
    control_state_target, prestar_member, saturate, SaturationOptions,
};
use otsat::syntax::{parse_alphabet, parse_aotps, parse_automaton_with, parse_config, write_aotps, write_automaton};
use otsat::{Aotps, Alphabet, Automaton, Configuration};

use crate::error::{encode_error, CliError};
use crate::report::{ClassSummary, RunReport, StatsSummary};
use crate::{Claim, Command, ModelKind};

/// Prefix selecting a control-state target instead of an automaton file.
const LOCATIONS_PREFIX: &str = "locations:";

pub fn name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Classify { .. } => "classify",
        Command::Prestar { .. } => "prestar",
        Command::Member { .. } => "member",
        Command::Reach { .. } => "reach",
        Command::Encode { .. } => "encode",
        Command::Simulate { .. } => "simulate",
        Command::OracleCheck { .. } => "oracle-check",
    }
}

/// Runs `cmd`, printing results on stdout. Returns the exit code.
pub fn run(cmd: &Command, rep: &mut RunReport) -> Result<u8, CliError> {
    match cmd {
        Command::Validate { system } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            rep.verdict = Some("OK".into());
            println!("OK");
        }
        Command::Classify { system } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            let class = sys.classify().map_err(|e| CliError::Invalid(e.to_string()))?;
            println!("{class}");
            rep.class = Some(ClassSummary::from(&class));
        }
        Command::Prestar {
            system,
            target,
            no_subsumption,
            opt_nonalt,
            max_transitions,
            trace,
        } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            let a = load_target(target, &sys, rep)?;
            let opts = SaturationOptions {
                subsumption: !no_subsumption,
                max_transitions: *max_transitions,
                trace: *trace,
                optimized: *opt_nonalt,
            };
            let t = Instant::now();
            let sat = saturate(&sys, &a, opts)?;
            rep.ran(t.elapsed());
            print!("{}", write_automaton(&sat.automaton));
            for entry in &sat.trace {
                eprintln!("{}", entry.render(&sat.automaton));
            }
            eprintln!("{}", sat.stats);
            rep.saturation = Some(StatsSummary::from(&sat.stats));
        }
        Command::Member { automaton, config } => {
            let t = Instant::now();
            let src = read_input(automaton)?;
            rep.add_input(automaton, &src);
            let b = parse_automaton_with(&src, None, &|p| resolve_alphabet(automaton, p))
                .map_err(|e| CliError::parse(automaton, e))?;
            let c = load_config(config, b.alphabet())?;
            rep.parsed(t.elapsed());
            let verdict = if prestar_member(&b, &c)? { "MEMBER" } else { "NONMEMBER" };
            println!("{verdict}");
            rep.verdict = Some(verdict.into());
        }
        Command::Reach {
            system,
            config,
            target,
            max_transitions,
        } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            let c = load_config(config, sys.alphabet())?;
            let a = load_target(target, &sys, rep)?;
            let opts = SaturationOptions {
                max_transitions: *max_transitions,
                ..Default::default()
            };
            let t = Instant::now();
            let reachable = saturation_verdict(&sys, &c, &a, opts, rep)?;
            rep.ran(t.elapsed());
            let verdict = if reachable { "REACHABLE" } else { "UNREACHABLE" };
            println!("{verdict}");
            rep.verdict = Some(verdict.into());
        }
        Command::Encode { kind, file, init } => {
            let t = Instant::now();
            let src = read_input(file)?;
            rep.add_input(file, &src);
            let ctx = file.as_str();
            let out = match kind {
                ModelKind::Ompds => {
                    let m = OrderedMpds::parse(&src).map_err(|e| CliError::parse(ctx, e))?;
                    encode_model(&m, init.as_deref())?
                }
                ModelKind::Apds => {
                    let m = AnnotatedHopds::parse(&src).map_err(|e| CliError::parse(ctx, e))?;
                    encode_model(&m, init.as_deref())?
                }
                ModelKind::Krivine => {
                    let m = KrivineMachine::parse(&src).map_err(|e| encode_error(ctx, e))?;
                    encode_model(&m, init.as_deref())?
                }
                ModelKind::Oampds => {
                    let m = OrderedAnnotatedMpds::parse(&src).map_err(|e| CliError::parse(ctx, e))?;
                    encode_model(&m, init.as_deref())?
                }
            };
            rep.ran(t.elapsed());
            print!("{out}");
        }
        Command::Simulate { system, config, depth } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            let c = load_config(config, sys.alphabet())?;
            if !sys.has_location(&c.location) {
                return Err(CliError::Invalid(format!("unknown control location `{}`", c.location)));
            }
            print!("{}", simulate(&sys, &c, *depth));
        }
        Command::OracleCheck {
            system,
            config,
            target,
            depth,
            size_cap,
            saturate: with_saturation,
            claim,
        } => {
            let sys = load_system(system, rep)?;
            check_valid(system, &sys)?;
            let c = load_config(config, sys.alphabet())?;
            let a = load_target(target, &sys, rep)?;
            return oracle_check(&sys, &c, &a, *depth, *size_cap, *with_saturation, *claim, rep);
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn oracle_check(
    sys: &Aotps,
    c: &Configuration,
    a: &Automaton,
    depth: usize,
    size_cap: usize,
    with_saturation: bool,
    claim: Option<Claim>,
    rep: &mut RunReport,
) -> Result<u8, CliError> {
    let t = Instant::now();
    let mut member_err = None;
    let oracle = bounded_reach(
        sys,
        c,
        |d| match a.config_member(&d.location, &d.tree) {
            Ok(b) => b,
            Err(e) => {
                member_err.get_or_insert(e.to_string());
                false
            }
        },
        depth,
        size_cap,
    );
    if let Some(e) = member_err {
        return Err(CliError::Invalid(e));
    }
    println!("oracle: {oracle}");
    let mut other: Option<(&str, bool)> = None;
    if with_saturation {
        let r = saturation_verdict(sys, c, a, SaturationOptions::default(), rep)?;
        println!("saturation: {}", if r { "REACHABLE" } else { "UNREACHABLE" });
        other = Some(("saturation", r));
    }
    if let Some(cl) = claim {
        let r = cl == Claim::Reachable;
        println!("claim: {}", if r { "REACHABLE" } else { "UNREACHABLE" });
        if let Some((_, s)) = other {
            if s != r {
                rep.ran(t.elapsed());
                rep.verdict = Some("DISAGREE".into());
                return Err(CliError::Disagreement(format!(
                    "claim says {} but saturation says {}",
                    verdict_word(r),
                    verdict_word(s)
                )));
            }
        }
        other = Some(("claim", r));
    }
    rep.ran(t.elapsed());
    let conclusive = match oracle.verdict {
        Verdict::Reachable => Some(true),
        Verdict::Unreachable => Some(false),
        Verdict::Inconclusive => None,
    };
    let verdict = match (conclusive, other) {
        (Some(o), Some((who, r))) if o != r => {
            rep.verdict = Some("DISAGREE".into());
            return Err(CliError::Disagreement(format!(
                "oracle says {} but {who} says {}",
                verdict_word(o),
                verdict_word(r)
            )));
        }
        (Some(_), Some(_)) => "AGREE",
        (None, Some(_)) => "INCONCLUSIVE",
        (_, None) => match oracle.verdict {
            Verdict::Reachable => "REACHABLE",
            Verdict::Unreachable => "UNREACHABLE",
            Verdict::Inconclusive => "INCONCLUSIVE",
        },
    };
    println!("{verdict}");
    rep.verdict = Some(verdict.into());
    Ok(0)
}

fn verdict_word(r: bool) -> &'static str {
    if r {
        "reachable"
    } else {
        "unreachable"
    }
}

fn saturation_verdict(
    sys: &Aotps,
    c: &Configuration,
    a: &Automaton,
    opts: SaturationOptions,
    rep: &mut RunReport,
) -> Result<bool, CliError> {
    if !sys.has_location(&c.location) {
        return Err(CliError::Invalid(format!("unknown control location `{}`", c.location)));
    }
    let sat = saturate(sys, a, opts)?;
    rep.saturation = Some(StatsSummary::from(&sat.stats));
    Ok(sat.accepts(c)?)
}

fn encode_model<M: Model>(m: &M, init: Option<&str>) -> Result<String, CliError> {
    let enc = m.encode().map_err(|e| encode_error("<model>", e))?;
    let mut out = String::new();
    for (name, meaning) in &enc.legend {
        let _ = writeln!(out, "# {name}: {meaning}");
    }
    let _ = writeln!(out, "# model locations: {}", enc.model_locations.join(" "));
    out += &write_aotps(&enc.system);
    if !out.ends_with('\n') {
        out.push('\n');
    }
    if let Some(init) = init {
        let c = m.parse_config(init).map_err(|e| CliError::parse("<init>", e))?;
        let e = m.enc_config(&enc, &c).map_err(|e| encode_error("<init>", e))?;
        let _ = writeln!(out, "# init {e}");
    }
    Ok(out)
}

fn read_input(path: &str) -> Result<String, CliError> {
    let io = |source| CliError::Io {
        path: path.to_string(),
        source,
    };
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

fn load_system(path: &str, rep: &mut RunReport) -> Result<Aotps, CliError> {
    let t = Instant::now();
    let src = read_input(path)?;
    rep.add_input(path, &src);
    let sys = parse_aotps(&src).map_err(|e| CliError::parse(path, e))?;
    rep.parsed(t.elapsed());
    Ok(sys)
}

fn check_valid(path: &str, sys: &Aotps) -> Result<(), CliError> {
    let diags = sys.validate();
    if diags.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation {
            path: path.to_string(),
            diags,
        })
    }
}

fn load_config(src: &str, al: &Alphabet) -> Result<Configuration, CliError> {
    let (p, t) = parse_config(src, al).map_err(|e| CliError::parse("<config>", e))?;
    Ok(Configuration::new(&p, t))
}

/// An `alphabet "file"` clause is resolved relative to the automaton file.
fn resolve_alphabet(automaton: &str, rel: &str) -> Result<Alphabet, String> {
    let base = if automaton == "-" {
        Path::new(".")
    } else {
        Path::new(automaton).parent().unwrap_or(Path::new("."))
    };
    let path = base.join(rel);
    let src = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_alphabet(&src).map_err(|e| format!("{}:{e}", path.display()))
}

fn load_target(target: &str, sys: &Aotps, rep: &mut RunReport) -> Result<Automaton, CliError> {
    if let Some(locs) = target.strip_prefix(LOCATIONS_PREFIX) {
        let locs: Vec<&str> = locs.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        return Ok(control_state_target(sys, &locs)?);
    }
    let t = Instant::now();
    let src = read_input(target)?;
    rep.add_input(target, &src);
    let a = parse_automaton_with(&src, Some(sys.alphabet()), &|p| resolve_alphabet(target, p))
        .map_err(|e| CliError::parse(target, e))?;
    rep.parsed(t.elapsed());
    Ok(a)
}
