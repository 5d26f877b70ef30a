use std::collections::{BTreeMap, BTreeSet};

use crate::compile::{Factor, JunctionTree, LinkId, Mode, Universe, UniverseId};
use crate::gibbs::{convert_to_de, run_sampler};
use crate::model::{one_hot, Evidence, VarId};
use crate::potential::{MessageKind, Payload, Potential, Scope, TablePotential};

use super::scheduler::SchedulerState;
use super::{
    needs_cascade, Calibrated, MessageRecord, Phase, PropagateError, PropagationConfig, SampledUniverse,
    SchedulePolicy, SweepRecord,
};

/// Priority of a pending active message: rank, non-DE sender, sender, recipient.
type SendKey = (usize, bool, UniverseId, UniverseId);

pub(super) struct Engine<'t> {
    tree: &'t JunctionTree,
    cfg: &'t PropagationConfig,
    universes: Vec<Universe>,
    absorbed: Vec<BTreeMap<LinkId, Payload>>,
    clamps: Vec<BTreeMap<VarId, usize>>,
    separators: Vec<Option<TablePotential>>,
    sched: SchedulerState,
    trace: Vec<MessageRecord>,
    samples: Vec<SampledUniverse>,
    sweeps: Vec<SweepRecord>,
    phase: Phase,
}

impl<'t> Engine<'t> {
    pub(super) fn new(tree: &'t JunctionTree, cfg: &'t PropagationConfig) -> Self {
        let n = tree.universes().len();
        Engine {
            tree,
            cfg,
            universes: tree.universes().to_vec(),
            absorbed: vec![BTreeMap::new(); n],
            clamps: vec![BTreeMap::new(); n],
            separators: vec![None; tree.links().len()],
            sched: SchedulerState::new(tree),
            trace: Vec::new(),
            samples: Vec::new(),
            sweeps: Vec::new(),
            phase: Phase::Inward,
        }
    }

    /// Places each finding in one covering universe, GIBBS universes first.
    pub(super) fn enter_evidence(&mut self, evidence: &Evidence) -> Result<(), PropagateError> {
        let cards = self.tree.cards();
        for (var, likelihood) in evidence.iter() {
            if var.index() >= cards.len() || likelihood.len() != cards[var.index()] {
                return Err(PropagateError::BadEvidence(var));
            }
            let target = self
                .universes
                .iter()
                .filter(|u| u.scope.contains(var))
                .min_by_key(|u| (u.mode != Mode::Gibbs, u.entry_count(), u.id))
                .map(|u| u.id)
                .ok_or(PropagateError::BadEvidence(var))?;
            let vector =
                TablePotential::vector(var, likelihood.to_vec()).map_err(|_| PropagateError::BadEvidence(var))?;
            let u = &mut self.universes[target.0];
            match u.mode {
                Mode::Gibbs => match one_hot(likelihood) {
                    Some(state) => {
                        self.clamps[target.0].insert(var, state);
                    }
                    None => u.factors.push(Factor { potential: vector, child: None }),
                },
                Mode::De => {
                    let joint = u.joint.as_mut().ok_or(PropagateError::NotAssigned)?;
                    joint.multiply_in_place(&vector)?;
                    if joint.sum() <= 0.0 {
                        return Err(PropagateError::Inconsistent { universe: target, from: None, at_root: false });
                    }
                }
            }
        }
        Ok(())
    }

    fn mode(&self, u: UniverseId) -> Mode {
        self.universes[u.0].mode
    }

    fn link_between(&self, u: UniverseId, v: UniverseId) -> LinkId {
        self.tree.neighbours(u).iter().find(|(w, _)| *w == v).map(|&(_, l)| l).expect("adjacent")
    }

    fn sample(&mut self, u: UniverseId) -> Result<(), PropagateError> {
        let payloads: Vec<Payload> = self.absorbed[u.0].values().cloned().collect();
        let separator_vars: BTreeSet<VarId> = self
            .tree
            .neighbours(u)
            .iter()
            .flat_map(|&(_, l)| self.tree.link(l).separator.vars().iter().copied())
            .collect();
        let universe = &self.universes[u.0];
        let clamps = &self.clamps[u.0];
        let result = if self.cfg.trace_sweeps {
            let sweeps = &mut self.sweeps;
            let mut record = |sweep: usize, recorded: bool, config: &[usize]| {
                sweeps.push(SweepRecord { universe: u, sweep, recorded, config: config.to_vec() });
            };
            run_sampler(universe, &payloads, clamps, &separator_vars, &self.cfg.sampler, Some(&mut record))
        } else {
            run_sampler(universe, &payloads, clamps, &separator_vars, &self.cfg.sampler, None)
        };
        let histogram = result.map_err(|source| PropagateError::Sampling { universe: u, source })?;
        self.samples.push(SampledUniverse {
            universe: u,
            samples: histogram.clone(),
            factors: universe.factors.clone(),
            payloads,
            clamps: clamps.clone(),
        });
        convert_to_de(&mut self.universes[u.0], &histogram)
            .map_err(|source| PropagateError::Sampling { universe: u, source })?;
        self.absorbed[u.0].clear();
        Ok(())
    }

    /// Separator marginal of a DE universe.
    fn generate(&self, u: UniverseId, link: LinkId) -> Result<Payload, PropagateError> {
        let joint = self.universes[u.0].joint.as_ref().ok_or(PropagateError::NotDe(u))?;
        let marginal = joint.marginalize(self.tree.link(link).separator.vars())?;
        Ok(Payload::from_marginal(marginal))
    }

    /// Configurations of `sep` that the recipient does not already rule out.
    ///
    /// DE universes use their current marginal. For GIBBS universes this is
    /// an over-approximation: a configuration is excluded only if a clamp or
    /// a single factor or payload forbids it.
    fn recipient_support(&self, v: UniverseId, sep: &Scope) -> Result<Vec<bool>, PropagateError> {
        let u = &self.universes[v.0];
        if let Some(joint) = &u.joint {
            return Ok(joint.marginalize(sep.vars())?.support());
        }
        let mut support = vec![true; sep.table_len()?];
        let clamps = &self.clamps[v.0];
        let mut restrict = |term: &dyn Potential| -> Result<(), PropagateError> {
            let scope = term.scope();
            let shared = scope.intersection(sep);
            let mut allowed = vec![false; shared.table_len()?];
            for i in 0..scope.table_len()? {
                if term.value_at(i) <= 0.0 {
                    continue;
                }
                let config = scope.config_of(i);
                if scope.vars().iter().zip(&config).any(|(var, s)| clamps.get(var).is_some_and(|c| c != s)) {
                    continue;
                }
                allowed[shared.index_of(&scope.project_config(&config, &shared))] = true;
            }
            for (i, keep) in support.iter_mut().enumerate() {
                if *keep {
                    let config = sep.config_of(i);
                    *keep = allowed[shared.index_of(&sep.project_config(&config, &shared))];
                }
            }
            Ok(())
        };
        for f in &u.factors {
            restrict(&f.potential)?;
        }
        for p in self.absorbed[v.0].values() {
            restrict(p)?;
        }
        for (i, keep) in support.iter_mut().enumerate() {
            let config = sep.config_of(i);
            if sep.vars().iter().zip(&config).any(|(var, s)| clamps.get(var).is_some_and(|c| c != s)) {
                *keep = false;
            }
        }
        Ok(support)
    }

    fn subtree_has_gibbs(&self, from: UniverseId, toward: UniverseId) -> bool {
        self.tree.subtree(from, toward).iter().any(|w| self.mode(*w) == Mode::Gibbs)
    }

    fn qualifies(&self, u: UniverseId, v: UniverseId, link: LinkId, payload: &Payload) -> Result<bool, PropagateError> {
        if !self.cfg.cascading || payload.is_complete() {
            return Ok(false);
        }
        let gibbs = self.subtree_has_gibbs(u, v);
        let received = self.sched.any_sent(v, u);
        if !gibbs || received {
            return Ok(false);
        }
        let support = self.recipient_support(v, &self.tree.link(link).separator)?;
        Ok(needs_cascade(payload, gibbs, received, &support))
    }

    fn deliver(
        &mut self,
        u: UniverseId,
        v: UniverseId,
        link: LinkId,
        payload: Payload,
        cascade: bool,
    ) -> Result<(), PropagateError> {
        let active = self.sched.would_be_active(u, v);
        let kind = MessageKind::from_flags(active, cascade)
            .ok_or(PropagateError::Internal("message is neither active nor cascade"))?;
        self.trace.push(MessageRecord {
            seq: self.trace.len() + 1,
            sender: u,
            recipient: v,
            kind,
            separator: payload.scope().vars().to_vec(),
            complete: payload.is_complete(),
            entries: payload.stored_entries(),
            during_cascade: self.sched.cascade_in_progress(),
            phase: self.phase,
        });
        self.sched.record(u, v, active);
        self.absorb(v, u, link, payload)
    }

    /// Absorption with per-link replacement: DE joints are multiplied by the
    /// ratio of the new separator table to the previous one, GIBBS universes
    /// swap the stored payload for that link.
    fn absorb(
        &mut self,
        v: UniverseId,
        from: UniverseId,
        link: LinkId,
        payload: Payload,
    ) -> Result<(), PropagateError> {
        let dense = payload.to_dense()?;
        match self.mode(v) {
            Mode::De => {
                let update = match &self.separators[link.0] {
                    Some(old) => dense.update_ratio(old)?,
                    None => dense.clone(),
                };
                let joint = self.universes[v.0].joint.as_mut().ok_or(PropagateError::NotDe(v))?;
                joint.multiply_in_place(&update)?;
                if joint.sum() <= 0.0 {
                    let at_root = self.sched.received_active_from_all_but(v, None);
                    return Err(PropagateError::Inconsistent { universe: v, from: Some(from), at_root });
                }
            }
            Mode::Gibbs => {
                self.absorbed[v.0].insert(link, payload);
            }
        }
        self.separators[link.0] = Some(dense);
        Ok(())
    }

    /// Depth-first cascade starting at a universe that has just sampled or
    /// absorbed a cascade message.
    fn cascade_from(&mut self, origin: UniverseId) -> Result<(), PropagateError> {
        if !self.cfg.cascading {
            return Ok(());
        }
        let outer = self.sched.cascade_in_progress();
        self.sched.set_cascade(true);
        let mut stack = vec![(origin, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            let neighbours = self.tree.neighbours(u);
            if i >= neighbours.len() {
                stack.pop();
                continue;
            }
            top.1 += 1;
            let (v, link) = neighbours[i];
            if self.sched.any_sent(v, u) {
                continue;
            }
            let payload = self.generate(u, link)?;
            if !self.qualifies(u, v, link, &payload)? {
                continue;
            }
            self.deliver(u, v, link, payload, true)?;
            if self.mode(v) == Mode::Gibbs {
                self.sample(v)?;
            }
            stack.push((v, 0));
        }
        self.sched.set_cascade(outer);
        Ok(())
    }

    /// An active message under Rule 4, sampling first if the sender is GIBBS.
    fn send_active(&mut self, u: UniverseId, v: UniverseId) -> Result<(), PropagateError> {
        debug_assert!(!self.sched.cascade_in_progress());
        if self.mode(u) == Mode::Gibbs {
            self.sample(u)?;
            self.cascade_from(u)?;
            if self.sched.active_sent(u, v) {
                return Ok(());
            }
        }
        let link = self.link_between(u, v);
        let payload = self.generate(u, link)?;
        let cascade = self.qualifies(u, v, link, &payload)?;
        self.deliver(u, v, link, payload, cascade)?;
        if cascade {
            self.sched.set_cascade(true);
            if self.mode(v) == Mode::Gibbs {
                self.sample(v)?;
            }
            self.cascade_from(v)?;
            self.sched.set_cascade(false);
        }
        Ok(())
    }

    fn next_sender(&self) -> Option<(UniverseId, UniverseId)> {
        let mut best: Option<(SendKey, (UniverseId, UniverseId))> = None;
        for u in self.universes.iter().map(|u| u.id) {
            for &(v, _) in self.tree.neighbours(u) {
                if !self.sched.would_be_active(u, v) {
                    continue;
                }
                let rank = match &self.cfg.policy {
                    SchedulePolicy::DeFirst => 0,
                    SchedulePolicy::Prefer(list) => list.iter().position(|w| *w == u).unwrap_or(list.len()),
                };
                let key = (rank, self.mode(u) != Mode::De, u, v);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, (u, v)));
                }
            }
        }
        best.map(|(_, pair)| pair)
    }

    pub(super) fn run(mut self) -> Result<Calibrated, PropagateError> {
        if self.universes.is_empty() {
            return Err(PropagateError::EmptyTree);
        }
        let mut root = None;
        let mut root_mass = 0.0;
        loop {
            if root.is_none() {
                if let Some(r) =
                    self.universes.iter().map(|u| u.id).find(|&r| self.sched.received_active_from_all_but(r, None))
                {
                    if self.mode(r) == Mode::Gibbs {
                        self.sample(r)?;
                        self.cascade_from(r)?;
                    }
                    let joint = self.universes[r.0].joint.as_mut().ok_or(PropagateError::NotDe(r))?;
                    root_mass = joint.normalize();
                    if root_mass <= 0.0 {
                        return Err(PropagateError::Inconsistent { universe: r, from: None, at_root: true });
                    }
                    root = Some(r);
                    self.phase = Phase::Outward;
                }
            }
            match self.next_sender() {
                Some((u, v)) => self.send_active(u, v)?,
                None => break,
            }
        }
        let root = root.ok_or(PropagateError::Internal("inward pass did not designate a root"))?;
        if !self.sched.is_equilibrium() {
            return Err(PropagateError::Internal("message passing stopped before equilibrium"));
        }
        if self.universes.iter().any(|u| u.mode != Mode::De) {
            return Err(PropagateError::Internal("a universe is still in GIBBS mode"));
        }
        Ok(Calibrated {
            universes: self.universes,
            names: self.tree.names().to_vec(),
            trace: self.trace,
            root,
            root_mass,
            samples: self.samples,
            sweeps: self.sweeps,
            scheduler: self.sched,
        })
    }
}
