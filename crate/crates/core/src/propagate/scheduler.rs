use crate::compile::{JunctionTree, LinkId, UniverseId};

/// Per-link message bookkeeping.
///
/// Each link has two directions; direction 0 runs from the link's `a` end
/// to its `b` end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchedulerState {
    ends: Vec<(UniverseId, UniverseId)>,
    neighbours: Vec<Vec<(UniverseId, LinkId)>>,
    active: Vec<[bool; 2]>,
    any: Vec<[bool; 2]>,
    active_counts: Vec<[usize; 2]>,
    cascade_in_progress: bool,
}

impl SchedulerState {
    pub fn new(tree: &JunctionTree) -> Self {
        let n = tree.links().len();
        SchedulerState {
            ends: tree.links().iter().map(|l| (l.a, l.b)).collect(),
            neighbours: tree.universes().iter().map(|u| tree.neighbours(u.id).to_vec()).collect(),
            active: vec![[false; 2]; n],
            any: vec![[false; 2]; n],
            active_counts: vec![[0; 2]; n],
            cascade_in_progress: false,
        }
    }

    fn direction(&self, link: LinkId, from: UniverseId) -> usize {
        usize::from(self.ends[link.0].0 != from)
    }

    fn link_between(&self, u: UniverseId, v: UniverseId) -> LinkId {
        self.neighbours[u.0].iter().find(|(w, _)| *w == v).map(|&(_, l)| l).expect("universes are adjacent")
    }

    pub fn neighbours(&self, u: UniverseId) -> &[(UniverseId, LinkId)] {
        &self.neighbours[u.0]
    }

    pub fn active_sent(&self, from: UniverseId, to: UniverseId) -> bool {
        let l = self.link_between(from, to);
        self.active[l.0][self.direction(l, from)]
    }

    pub fn any_sent(&self, from: UniverseId, to: UniverseId) -> bool {
        let l = self.link_between(from, to);
        self.any[l.0][self.direction(l, from)]
    }

    /// True iff `u` has received active messages from every neighbour other
    /// than `except`.
    pub fn received_active_from_all_but(&self, u: UniverseId, except: Option<UniverseId>) -> bool {
        self.neighbours[u.0].iter().all(|&(v, _)| Some(v) == except || self.active_sent(v, u))
    }

    /// Whether a message from `from` to `to` sent now would be active.
    pub fn would_be_active(&self, from: UniverseId, to: UniverseId) -> bool {
        !self.active_sent(from, to) && self.received_active_from_all_but(from, Some(to))
    }

    pub fn record(&mut self, from: UniverseId, to: UniverseId, active: bool) {
        let l = self.link_between(from, to);
        let d = self.direction(l, from);
        self.any[l.0][d] = true;
        if active {
            self.active[l.0][d] = true;
            self.active_counts[l.0][d] += 1;
        }
    }

    pub fn cascade_in_progress(&self) -> bool {
        self.cascade_in_progress
    }

    pub fn set_cascade(&mut self, on: bool) {
        self.cascade_in_progress = on;
    }

    /// Every universe has sent and received an active message on every link.
    pub fn is_equilibrium(&self) -> bool {
        self.active.iter().all(|d| d[0] && d[1])
    }

    /// Number of active messages recorded per link direction.
    pub fn active_counts(&self) -> &[[usize; 2]] {
        &self.active_counts
    }
}
