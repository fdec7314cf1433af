//! Reachability for alternating ordered tree-pushdown systems.
//!
//! The [`saturation`] engine computes an automaton for the set of
//! configurations from which a regular target set is reachable. The
//! [`encode`] module translates ordered multi-pushdown systems, annotated
//! higher-order pushdown systems, Krivine machines with states and ordered
//! annotated multi-pushdown systems into such systems, and [`oracle`]
//! provides a bounded explicit-state search for cross-checking.

pub mod aotps;
pub mod automaton;
pub mod encode;
pub mod error;
pub mod oracle;
pub mod saturation;
pub mod syntax;
pub mod tree;

pub use aotps::{Aotps, ClassReport, Configuration, Diagnostic, Rule, RuleKind};
pub use automaton::{Automaton, Provenance, StateId, StateSet};
pub use error::Error;
pub use tree::{Alphabet, Substitution, Symbol, Tree, Var};
