//! Hybrid message passing: absorption, the three message kinds, cascading
//! and the inward/outward schedule.

mod engine;
mod scheduler;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::compile::{Factor, JunctionTree, Universe, UniverseId};
use crate::gibbs::{GibbsError, SamplerConfig};
use crate::model::{Evidence, VarId};
use crate::potential::{MessageKind, Payload, Potential, PotentialError, WeightedConfigList};

pub use scheduler::SchedulerState;

#[derive(Debug, Error, PartialEq)]
pub enum PropagateError {
    #[error("zero normalization in {universe}{}", from.map(|f| format!(" after absorbing from {f}")).unwrap_or_default())]
    Inconsistent { universe: UniverseId, from: Option<UniverseId>, at_root: bool },
    #[error("sampling in {universe} failed: {source}")]
    Sampling { universe: UniverseId, source: GibbsError },
    #[error("evidence on {0} does not fit the tree")]
    BadEvidence(VarId),
    #[error("{0} has no joint table")]
    NotDe(UniverseId),
    #[error("tree has no potentials assigned")]
    NotAssigned,
    #[error("tree has no universes")]
    EmptyTree,
    #[error("variable {0} is not in the tree")]
    UnknownVariable(VarId),
    #[error("internal fault: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

impl PropagateError {
    /// True for errors caused by evidence with zero probability, as opposed
    /// to malformed input or engine faults.
    pub fn is_inconsistent_evidence(&self) -> bool {
        matches!(
            self,
            PropagateError::Inconsistent { .. }
                | PropagateError::Sampling { source: GibbsError::NoLegalConfiguration, .. }
        )
    }
}

/// Order in which eligible active messages are sent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SchedulePolicy {
    /// DE senders before GIBBS senders, then lowest sender id.
    #[default]
    DeFirst,
    /// Senders in the listed order first, then as `DeFirst`.
    Prefer(Vec<UniverseId>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationConfig {
    pub sampler: SamplerConfig,
    pub cascading: bool,
    pub policy: SchedulePolicy,
    pub trace_sweeps: bool,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        PropagationConfig {
            sampler: SamplerConfig::default(),
            cascading: true,
            policy: SchedulePolicy::DeFirst,
            trace_sweeps: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Inward,
    Outward,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Inward => "inward",
            Phase::Outward => "outward",
        })
    }
}

/// One sent message, as recorded in the trace.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageRecord {
    pub seq: usize,
    pub sender: UniverseId,
    pub recipient: UniverseId,
    pub kind: MessageKind,
    pub separator: Vec<VarId>,
    pub complete: bool,
    pub entries: usize,
    pub during_cascade: bool,
    pub phase: Phase,
}

/// Inputs and output of one sampling run, kept for auditing.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledUniverse {
    pub universe: UniverseId,
    pub samples: WeightedConfigList,
    pub factors: Vec<Factor>,
    pub payloads: Vec<Payload>,
    pub clamps: BTreeMap<VarId, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub universe: UniverseId,
    pub sweep: usize,
    pub recorded: bool,
    pub config: Vec<usize>,
}

/// A tree after a full propagation: every universe is DE.
#[derive(Clone, Debug)]
pub struct Calibrated {
    pub universes: Vec<Universe>,
    pub names: Vec<String>,
    pub trace: Vec<MessageRecord>,
    pub root: UniverseId,
    /// Mass of the root joint before normalization.
    pub root_mass: f64,
    pub samples: Vec<SampledUniverse>,
    pub sweeps: Vec<SweepRecord>,
    pub scheduler: SchedulerState,
}

impl Calibrated {
    /// Normalized marginal of `var` from the smallest universe holding it.
    pub fn marginal(&self, var: VarId) -> Result<Vec<f64>, PropagateError> {
        let u = self
            .universes
            .iter()
            .filter(|u| u.scope.contains(var))
            .min_by_key(|u| (u.entry_count(), u.id))
            .ok_or(PropagateError::UnknownVariable(var))?;
        self.marginal_in(u.id, var)
    }

    /// Normalized marginal of `var` computed in universe `u`.
    pub fn marginal_in(&self, u: UniverseId, var: VarId) -> Result<Vec<f64>, PropagateError> {
        let universe = self.universes.get(u.0).ok_or(PropagateError::Internal("unknown universe"))?;
        if !universe.scope.contains(var) {
            return Err(PropagateError::UnknownVariable(var));
        }
        let joint = universe.joint.as_ref().ok_or(PropagateError::NotDe(u))?;
        let mut m = joint.marginalize(&[var])?;
        if m.normalize() <= 0.0 {
            return Err(PropagateError::Inconsistent { universe: u, from: None, at_root: false });
        }
        Ok(m.into_values())
    }

    pub fn kinds(&self) -> Vec<MessageKind> {
        self.trace.iter().map(|m| m.kind).collect()
    }

    /// One line per message: sequence, sender, recipient, kind, separator,
    /// completeness and stored entry count.
    pub fn trace_lines(&self) -> Vec<String> {
        self.trace
            .iter()
            .map(|m| {
                let sep: Vec<&str> = m.separator.iter().map(|v| self.names[v.index()].as_str()).collect();
                format!(
                    "{} {} {} -> {} {} sep={} {} entries={}",
                    m.seq,
                    m.phase,
                    m.sender,
                    m.recipient,
                    m.kind,
                    sep.join(","),
                    if m.complete { "complete" } else { "incomplete" },
                    m.entries
                )
            })
            .collect()
    }
}

/// Whether a separator payload must be sent as a cascade message.
///
/// Only incomplete payloads cascade, and not when the recipient's side of
/// the tree holds no GIBBS universe, when the sender has already heard from
/// the recipient, or when every zero of the payload is already a zero of
/// `recipient_support`.
pub fn needs_cascade(
    payload: &Payload,
    subtree_has_gibbs: bool,
    received_from_recipient: bool,
    recipient_support: &[bool],
) -> bool {
    if payload.is_complete() || !subtree_has_gibbs || received_from_recipient {
        return false;
    }
    recipient_support.iter().enumerate().any(|(i, &allowed)| allowed && payload.value_at(i) <= 0.0)
}

/// Runs a full propagation on a copy of the compiled tree.
pub fn propagate(
    tree: &JunctionTree,
    evidence: &Evidence,
    cfg: &PropagationConfig,
) -> Result<Calibrated, PropagateError> {
    if !tree.is_assigned() {
        return Err(PropagateError::NotAssigned);
    }
    cfg.sampler.validate().map_err(|source| PropagateError::Sampling { universe: UniverseId(0), source })?;
    let mut engine = engine::Engine::new(tree, cfg);
    engine.enter_evidence(evidence)?;
    engine.run()
}
