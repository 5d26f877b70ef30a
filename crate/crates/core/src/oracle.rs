//! Brute-force inference by joint enumeration, and storage accounting for
//! hybrid trees.

use std::fmt::Write as _;

use thiserror::Error;

use crate::compile::{JunctionTree, Mode};
use crate::model::{Evidence, Network};

/// Default limit on the number of joint configurations enumerated.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Bytes per dense table entry (32-bit floats).
pub const BYTES_PER_ENTRY: u128 = 4;
/// Bytes per variable in a stored sample (16-bit state index).
pub const BYTES_PER_SAMPLE_VAR: u128 = 2;
/// Bytes for the weight stored with each sample.
pub const BYTES_PER_SAMPLE_WEIGHT: u128 = 4;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("joint has {0} configurations, above the enumeration cap")]
    TooLarge(u64),
    #[error("evidence has zero probability")]
    Inconsistent,
    #[error("evidence vector for `{0}` has the wrong length")]
    BadEvidence(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumeration {
    /// Unnormalized joint including evidence, row-major over all variables
    /// in declaration order.
    pub joint: Vec<f64>,
    /// Probability of the evidence.
    pub mass: f64,
    /// Posterior marginal of every variable.
    pub posteriors: Vec<Vec<f64>>,
}

pub fn enumerate_joint(net: &Network, evidence: &Evidence) -> Result<Enumeration, OracleError> {
    enumerate_joint_capped(net, evidence, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_joint_capped(net: &Network, evidence: &Evidence, cap: u64) -> Result<Enumeration, OracleError> {
    let cards = net.cardinalities();
    let size = cards.iter().try_fold(1u64, |acc, &c| acc.checked_mul(c as u64)).unwrap_or(u64::MAX);
    if size > cap {
        return Err(OracleError::TooLarge(size));
    }
    for (var, l) in evidence.iter() {
        if var.index() >= cards.len() || l.len() != cards[var.index()] {
            return Err(OracleError::BadEvidence(format!("{var}")));
        }
    }
    let n = cards.len();
    let mut joint = Vec::with_capacity(size as usize);
    let mut x = vec![0usize; n];
    let mut parent_states = Vec::new();
    for _ in 0..size {
        let mut p = 1.0;
        for v in net.ids() {
            parent_states.clear();
            parent_states.extend(net.parents(v).iter().map(|q| x[q.index()]));
            p *= net.probability(v, &parent_states, x[v.index()]);
            if let Some(l) = evidence.get(v) {
                p *= l[x[v.index()]];
            }
        }
        joint.push(p);
        for k in (0..n).rev() {
            x[k] += 1;
            if x[k] < cards[k] {
                break;
            }
            x[k] = 0;
        }
    }
    let mass: f64 = joint.iter().sum();
    if mass <= 0.0 {
        return Err(OracleError::Inconsistent);
    }
    let mut posteriors: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
    let mut x = vec![0usize; n];
    for &p in &joint {
        for (k, &s) in x.iter().enumerate() {
            posteriors[k][s] += p / mass;
        }
        for k in (0..n).rev() {
            x[k] += 1;
            if x[k] < cards[k] {
                break;
            }
            x[k] = 0;
        }
    }
    Ok(Enumeration { joint, mass, posteriors })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageRow {
    pub universe: usize,
    pub mode: Mode,
    pub variables: usize,
    pub entries: u64,
    pub dense_bytes: u128,
    pub hybrid_bytes: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageReport {
    pub threshold: Option<u64>,
    pub samples: u64,
    pub rows: Vec<StorageRow>,
    pub dense_bytes: u128,
    pub hybrid_bytes: u128,
    /// Dense bytes of the universes that are GIBBS under the threshold.
    pub gibbs_dense_bytes: u128,
}

impl StorageReport {
    pub fn gibbs_count(&self) -> usize {
        self.rows.iter().filter(|r| r.mode == Mode::Gibbs).count()
    }

    /// Fraction of dense storage saved by the hybrid layout.
    pub fn savings(&self) -> f64 {
        if self.dense_bytes == 0 {
            return 0.0;
        }
        1.0 - self.hybrid_bytes as f64 / self.dense_bytes as f64
    }

    /// Fraction of dense storage taken by GIBBS universes.
    pub fn gibbs_share(&self) -> f64 {
        if self.dense_bytes == 0 {
            return 0.0;
        }
        self.gibbs_dense_bytes as f64 / self.dense_bytes as f64
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let threshold = self.threshold.map_or("inf".to_string(), |t| t.to_string());
        let _ = writeln!(s, "threshold {threshold}  samples {}", self.samples);
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>5} {:>14} {:>16} {:>16}",
            "universe", "mode", "vars", "entries", "dense_bytes", "hybrid_bytes"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>8} {:>5} {:>5} {:>14} {:>16} {:>16}",
                format!("U{}", r.universe),
                r.mode.to_string(),
                r.variables,
                r.entries,
                r.dense_bytes,
                r.hybrid_bytes
            );
        }
        let _ = writeln!(s, "universes {} (GIBBS {})", self.rows.len(), self.gibbs_count());
        let _ = writeln!(s, "dense bytes {}", self.dense_bytes);
        let _ = writeln!(s, "hybrid bytes {}", self.hybrid_bytes);
        let _ = writeln!(s, "gibbs dense share {:.1}%", 100.0 * self.gibbs_share());
        let _ = writeln!(s, "savings {:.1}%", 100.0 * self.savings());
        s
    }

    pub fn render_csv(&self) -> String {
        let mut s =
            String::from("record,universe,mode,variables,entries,dense_bytes,hybrid_bytes,gibbs_share,savings\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "universe,U{},{},{},{},{},{},,",
                r.universe, r.mode, r.variables, r.entries, r.dense_bytes, r.hybrid_bytes
            );
        }
        let vars: usize = self.rows.iter().map(|r| r.variables).sum();
        let entries: u64 = self.rows.iter().map(|r| r.entries).fold(0, u64::saturating_add);
        let _ = writeln!(
            s,
            "total,,,{vars},{entries},{},{},{:.6},{:.6}",
            self.dense_bytes,
            self.hybrid_bytes,
            self.gibbs_share(),
            self.savings()
        );
        s
    }
}

/// Storage needed by the tree when universes above `threshold` keep
/// `samples` sample records instead of a dense table. A record stores one
/// 16-bit state per variable and a 32-bit weight.
pub fn storage_report(tree: &JunctionTree, threshold: Option<u64>, samples: u64) -> StorageReport {
    let mut rows = Vec::with_capacity(tree.universes().len());
    let (mut dense_total, mut hybrid_total, mut gibbs_dense) = (0u128, 0u128, 0u128);
    for u in tree.universes() {
        let entries = u.entry_count();
        let mode = match threshold {
            Some(t) if entries > t => Mode::Gibbs,
            _ => Mode::De,
        };
        let dense = entries as u128 * BYTES_PER_ENTRY;
        let hybrid = match mode {
            Mode::De => dense,
            Mode::Gibbs => {
                gibbs_dense += dense;
                samples as u128 * (u.scope.len() as u128 * BYTES_PER_SAMPLE_VAR + BYTES_PER_SAMPLE_WEIGHT)
            }
        };
        dense_total += dense;
        hybrid_total += hybrid;
        rows.push(StorageRow {
            universe: u.id.0,
            mode,
            variables: u.scope.len(),
            entries,
            dense_bytes: dense,
            hybrid_bytes: hybrid,
        });
    }
    StorageReport {
        threshold,
        samples,
        rows,
        dense_bytes: dense_total,
        hybrid_bytes: hybrid_total,
        gibbs_dense_bytes: gibbs_dense,
    }
}
