use thiserror::Error;

use crate::aotps::SystemError;
use crate::automaton::AutomatonError;
use crate::saturation::SaturationError;
use crate::syntax::ParseError;
use crate::tree::TreeError;

/// Any failure surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Saturation(#[from] SaturationError),
}
