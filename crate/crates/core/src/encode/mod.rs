//! Front-end models and their encodings into ordered tree-pushdown systems.
//!
//! Each model comes with a parser, a direct simulator ([`Model::successors`])
//! and an encoder. The simulators are written against the models' own
//! semantics so that [`lockstep`] compares two independent implementations.

pub mod apds;
pub mod krivine;
pub mod oampds;
pub mod ompds;
mod stack;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;

use thiserror::Error;

pub use stack::Stack;

use crate::aotps::{Aotps, Configuration, SystemError};
use crate::automaton::Automaton;
use crate::oracle::{explore, OracleReport};
use crate::saturation::{control_state_target, SaturationError};
use crate::syntax::{ParseError, Parser, Pos, PResult};
use crate::tree::{Alphabet, Symbol};

pub use apds::AnnotatedHopds;
pub use krivine::KrivineMachine;
pub use oampds::OrderedAnnotatedMpds;
pub use ompds::OrderedMpds;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("level error: {0}")]
    Level(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("configuration does not fit the model: {0}")]
    BadConfig(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
}

/// The system produced by an encoder.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub system: Aotps,
    /// Locations of the model; the system may have auxiliary ones.
    pub model_locations: Vec<String>,
    /// Human-readable meaning of generated symbol names.
    pub legend: Vec<(String, String)>,
}

impl Encoding {
    /// Target automaton for control-state reachability of `targets`.
    pub fn control_state_target(&self, targets: &[&str]) -> Result<Automaton, EncodeError> {
        for t in targets {
            if !self.model_locations.iter().any(|l| l == t) {
                return Err(EncodeError::UnknownLocation(t.to_string()));
            }
        }
        Ok(control_state_target(&self.system, targets)?)
    }

    pub fn is_model_location(&self, p: &str) -> bool {
        self.model_locations.iter().any(|l| l == p)
    }

    pub(crate) fn symbol(&self, name: &str) -> Result<&Symbol, EncodeError> {
        self.system
            .alphabet()
            .get(name)
            .ok_or_else(|| EncodeError::BadConfig(format!("no symbol `{name}` in the encoding")))
    }
}

/// A front-end model with a direct alternating semantics.
pub trait Model {
    type Config: Clone + Eq + Ord + Hash + fmt::Display + fmt::Debug;

    fn locations(&self) -> Vec<String>;

    fn location<'a>(&self, c: &'a Self::Config) -> &'a str;

    /// Every move of `c`: a set of successors, all of which must be won.
    fn successors(&self, c: &Self::Config) -> Vec<Vec<Self::Config>>;

    fn encode(&self) -> Result<Encoding, EncodeError>;

    fn enc_config(&self, enc: &Encoding, c: &Self::Config) -> Result<Configuration, EncodeError>;

    /// Number of system steps simulating one model step from `c`.
    fn move_length(&self, _c: &Self::Config) -> usize {
        1
    }

    fn parse_config(&self, src: &str) -> PResult<Self::Config>;

    /// Size measure used to cap bounded searches.
    fn config_size(&self, c: &Self::Config) -> usize;
}

type MoveSet = BTreeSet<BTreeSet<Configuration>>;

fn system_moves(sys: &Aotps, c: &Configuration) -> MoveSet {
    sys.step(c)
        .into_iter()
        .map(|(_, succ)| succ.into_iter().collect())
        .collect()
}

/// Checks that the encoded moves of `c` are exactly the moves of `enc(c)`
/// composed `move_length(c)` times, and that intermediate configurations
/// sit at auxiliary locations only.
pub fn lockstep<M: Model>(model: &M, enc: &Encoding, c: &M::Config) -> Result<(), String> {
    let e = model.enc_config(enc, c).map_err(|e| e.to_string())?;
    let mut expected = MoveSet::new();
    for mv in model.successors(c) {
        let mut set = BTreeSet::new();
        for d in &mv {
            set.insert(model.enc_config(enc, d).map_err(|e| e.to_string())?);
        }
        expected.insert(set);
    }
    let actual = match model.move_length(c) {
        1 => system_moves(&enc.system, &e),
        2 => {
            let mut out = MoveSet::new();
            for mid in system_moves(&enc.system, &e) {
                if let Some(bad) = mid.iter().find(|m| enc.is_model_location(&m.location)) {
                    return Err(format!("intermediate configuration {bad} is at a model location"));
                }
                // Each intermediate configuration picks one of its moves.
                let mut acc: Vec<BTreeSet<Configuration>> = vec![BTreeSet::new()];
                for m in &mid {
                    let options = system_moves(&enc.system, m);
                    let mut next = Vec::new();
                    for a in &acc {
                        for o in &options {
                            next.push(a.union(o).cloned().collect());
                        }
                    }
                    acc = next;
                }
                out.extend(acc);
            }
            out
        }
        k => return Err(format!("unsupported move length {k}")),
    };
    if expected != actual {
        let show = |m: &MoveSet| {
            m.iter()
                .map(|s| {
                    let v: Vec<String> = s.iter().map(ToString::to_string).collect();
                    format!("{{{}}}", v.join(", "))
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        return Err(format!(
            "from {c} (encoded {e}):\n  model moves:  {}\n  system moves: {}",
            show(&expected),
            show(&actual)
        ));
    }
    Ok(())
}

/// Bounded control-state reachability on the model itself.
pub fn model_reach<M: Model>(
    model: &M,
    init: &M::Config,
    targets: &[&str],
    depth: usize,
    size_cap: usize,
) -> OracleReport {
    explore(
        init,
        depth,
        |c| targets.contains(&model.location(c)),
        |c| model.successors(c),
        |c| model.config_size(c) <= size_cap,
    )
}

/// Model identifiers may not start with `_`, which generated names use.
pub(crate) fn check_name(pos: Pos, name: &str) -> PResult<()> {
    if name.starts_with('_') {
        Err(ParseError::semantic(pos, format!("identifier `{name}` is reserved (leading `_`)")))
    } else {
        Ok(())
    }
}

/// `{ a, b }` checked against declared locations; sorted, duplicate-free.
pub(crate) fn location_set(p: &mut Parser, locations: &[String]) -> PResult<Vec<String>> {
    let mut out = BTreeSet::new();
    for (pos, q) in p.ident_set()? {
        if !locations.contains(&q) {
            return Err(ParseError::semantic(pos, format!("undeclared location `{q}`")));
        }
        out.insert(q);
    }
    Ok(out.into_iter().collect())
}

pub(crate) fn declared(p: &mut Parser, known: &[String], what: &str) -> PResult<String> {
    let pos = p.pos();
    let s = p.ident()?;
    if known.contains(&s) {
        Ok(s)
    } else {
        Err(ParseError::semantic(pos, format!("undeclared {what} `{s}`")))
    }
}

/// Declares names in a list, rejecting duplicates and reserved names.
pub(crate) fn declare_all(p: &mut Parser, into: &mut Vec<String>, what: &str) -> PResult<()> {
    for (pos, s) in p.ident_list()? {
        check_name(pos, &s)?;
        if into.contains(&s) {
            return Err(ParseError::semantic(pos, format!("duplicate {what} `{s}`")));
        }
        into.push(s);
    }
    Ok(())
}

pub(crate) fn alphabet_of(symbols: impl IntoIterator<Item = Symbol>) -> Alphabet {
    Alphabet::from_symbols(symbols).expect("generated names are distinct")
}
