//! Table algebra and the sparse weighted-configuration representation used
//! for sampled universes and inter-universe messages.

mod scope;
mod table;
mod weighted;

use std::fmt;

use thiserror::Error;

use crate::compile::UniverseId;
use crate::model::VarId;

pub use scope::{Scope, MAX_DENSE_ENTRIES};
pub use table::TablePotential;
pub use weighted::WeightedConfigList;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("variable {0} appears twice in a scope")]
    DuplicateVariable(VarId),
    #[error("variable {0} has zero states")]
    ZeroCardinality(VarId),
    #[error("variable {0} is not in scope")]
    NotInScope(VarId),
    #[error("scopes differ")]
    ScopeMismatch,
    #[error("table has {found} entries, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("invalid potential value {0}")]
    InvalidValue(f64),
    #[error("configuration does not fit the scope")]
    BadConfiguration,
    #[error("dense table with {0} entries is too large")]
    TooLarge(u64),
}

/// Read access to a potential by linear configuration index.
pub trait Potential {
    fn scope(&self) -> &Scope;
    fn value_at(&self, index: usize) -> f64;
}

/// The content of a message on a separator.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Dense(TablePotential),
    Sparse(WeightedConfigList),
}

impl Payload {
    /// Dense when every entry is positive, sparse otherwise.
    pub fn from_marginal(table: TablePotential) -> Payload {
        if table.has_zero() {
            Payload::Sparse(WeightedConfigList::from_dense(&table))
        } else {
            Payload::Dense(table)
        }
    }

    pub fn scope(&self) -> &Scope {
        match self {
            Payload::Dense(t) => t.scope(),
            Payload::Sparse(w) => w.scope(),
        }
    }

    pub fn is_complete(&self) -> bool {
        is_complete(self)
    }

    pub fn to_dense(&self) -> Result<TablePotential, PotentialError> {
        match self {
            Payload::Dense(t) => Ok(t.clone()),
            Payload::Sparse(w) => w.densify(),
        }
    }

    /// Number of explicitly stored entries.
    pub fn stored_entries(&self) -> usize {
        match self {
            Payload::Dense(t) => t.values().len(),
            Payload::Sparse(w) => w.len(),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            Payload::Dense(t) => t.sum(),
            Payload::Sparse(w) => w.total(),
        }
    }
}

impl Potential for Payload {
    fn scope(&self) -> &Scope {
        Payload::scope(self)
    }

    fn value_at(&self, index: usize) -> f64 {
        match self {
            Payload::Dense(t) => t.value_at(index),
            Payload::Sparse(w) => w.value_at(index),
        }
    }
}

/// A message is complete when it carries a positive weight for every
/// separator configuration. An explicit zero in a dense payload counts the
/// same as an omitted configuration in a sparse one.
pub fn is_complete(payload: &Payload) -> bool {
    match payload {
        Payload::Dense(t) => !t.has_zero(),
        Payload::Sparse(w) => w.is_complete(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MessageKind {
    ActiveNonCascade,
    NonActiveCascade,
    ActiveCascade,
}

impl MessageKind {
    pub fn from_flags(active: bool, cascade: bool) -> Option<MessageKind> {
        match (active, cascade) {
            (true, false) => Some(MessageKind::ActiveNonCascade),
            (false, true) => Some(MessageKind::NonActiveCascade),
            (true, true) => Some(MessageKind::ActiveCascade),
            (false, false) => None,
        }
    }

    pub fn is_active(self) -> bool {
        !matches!(self, MessageKind::NonActiveCascade)
    }

    pub fn is_cascade(self) -> bool {
        !matches!(self, MessageKind::ActiveNonCascade)
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::ActiveNonCascade => "active",
            MessageKind::NonActiveCascade => "non-active-cascade",
            MessageKind::ActiveCascade => "active-cascade",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub payload: Payload,
    pub kind: MessageKind,
    pub sender: UniverseId,
    pub recipient: UniverseId,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sep() -> Scope {
        Scope::new([(VarId(0), 2), (VarId(1), 2)]).unwrap()
    }

    #[test]
    fn sparse_completeness() {
        let mut full = WeightedConfigList::new(sep());
        for i in 0..4 {
            full.add_index(i, 1.0).unwrap();
        }
        assert!(is_complete(&Payload::Sparse(full)));
        let mut partial = WeightedConfigList::new(sep());
        partial.add(&[0, 0], 10.0).unwrap();
        partial.add(&[1, 1], 3.0).unwrap();
        assert!(!is_complete(&Payload::Sparse(partial)));
    }

    #[test]
    fn dense_zero_is_incomplete() {
        let t = TablePotential::new(sep(), vec![0.1, 0.0, 0.4, 0.5]).unwrap();
        assert!(!is_complete(&Payload::Dense(t.clone())));
        assert!(matches!(Payload::from_marginal(t), Payload::Sparse(w) if w.len() == 3));
        let t = TablePotential::new(sep(), vec![0.1, 0.2, 0.4, 0.5]).unwrap();
        assert!(is_complete(&Payload::Dense(t)));
    }
}
