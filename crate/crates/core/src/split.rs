//! Geometric splitting of the meet and the bound family it yields.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::distribution::{entropy, Distribution, Instance};
use crate::error::{MecError, Result};
use crate::greedy::greedy_couple;
use crate::majorization::{
    check_strong_majorization_entropy_bound, is_strongly_majorized, meet, EntropyOrderReport,
    StrongMajorization,
};
use crate::scalar::{cmp_mass, Scalar, Tolerance};

/// Largest `z` accepted for the split bound.
pub const MAX_Z: u64 = 1_000_000;

/// Default un-materialized mass for infinite supports.
pub const DEFAULT_TAIL: f64 = 1e-12;

/// Entropy in bits of the geometric distribution `gamma (1 - gamma)^(k-1)`.
pub fn geom_entropy(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(MecError::DomainError(format!(
            "gamma = {gamma} must lie in (0, 1)"
        )));
    }
    let q = 1.0 - gamma;
    let nats = -q * (-gamma).ln_1p() - gamma * gamma.ln();
    Ok(nats / gamma / std::f64::consts::LN_2)
}

/// `H(meet) + H(Geom(1/z)) - log2(z - 1)`, an upper bound on the greedy
/// coupling entropy for every integer `z >= 2`.
pub fn split_entropy_bound(meet_entropy: f64, z: u64) -> Result<f64> {
    if z < 2 {
        return Err(MecError::DomainError(format!("z = {z} must be at least 2")));
    }
    let geom = geom_entropy(1.0 / z as f64)?;
    Ok(meet_entropy + geom - ((z - 1) as f64).log2())
}

/// One materialized state of a split: `source` state of the meet times the
/// `geom_index`-th geometric weight (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEntry<T: Scalar = f64> {
    pub source: usize,
    pub geom_index: usize,
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDistribution<T: Scalar = f64> {
    pub entries: Vec<SplitEntry<T>>,
    pub gamma: T,
    /// Mass not yet materialized.
    pub tail_bound: T,
}

impl<T: Scalar> SplitDistribution<T> {
    pub fn masses(&self) -> Vec<T> {
        self.entries.iter().map(|e| e.mass.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

struct Frontier<T: Scalar> {
    mass: T,
    source: usize,
    geom_index: usize,
}

impl<T: Scalar> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Frontier<T> {}

impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Frontier<T> {
    // max mass first; equal masses by (source, geom_index) ascending
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_mass(&self.mass, &other.mass)
            .then_with(|| other.source.cmp(&self.source))
            .then_with(|| other.geom_index.cmp(&self.geom_index))
    }
}

/// Materializes `meet × Geom(gamma)` in nonincreasing order until at most
/// `tail` mass remains.
///
/// Only `(l, k + 1)` can follow `(l, k)`, so a frontier holding one pending
/// entry per meet state yields the global order.
pub fn split<T: Scalar>(
    meet: &Distribution<T>,
    gamma: &T,
    tail: &T,
) -> Result<SplitDistribution<T>> {
    let zero = T::zero();
    let one = T::one();
    if !(*gamma > zero && *gamma < one) {
        return Err(MecError::DomainError(format!(
            "gamma = {gamma} must lie in (0, 1)"
        )));
    }
    if !(*tail > zero && *tail < one) {
        return Err(MecError::DomainError(format!(
            "tail = {tail} must lie in (0, 1)"
        )));
    }
    let decay = one - gamma.clone();
    let mut frontier: BinaryHeap<Frontier<T>> = meet
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.gt_zero())
        .map(|(source, p)| Frontier {
            mass: p.clone() * gamma.clone(),
            source,
            geom_index: 1,
        })
        .collect();
    let mut remaining = crate::scalar::sum(meet.probs());
    let mut entries = Vec::new();
    while remaining > *tail {
        let Some(top) = frontier.pop() else { break };
        remaining = remaining - top.mass.clone();
        frontier.push(Frontier {
            mass: top.mass.clone() * decay.clone(),
            source: top.source,
            geom_index: top.geom_index + 1,
        });
        entries.push(SplitEntry {
            source: top.source,
            geom_index: top.geom_index,
            mass: top.mass,
        });
    }
    Ok(SplitDistribution {
        entries,
        gamma: gamma.clone(),
        tail_bound: remaining,
    })
}

/// Result of checking that the split at `1/z` is `(z-1)`-strongly
/// majorized by the greedy mass sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMajorizationReport {
    pub z: u64,
    pub outcome: StrongMajorization,
    pub split_len: usize,
    pub tail_bound: f64,
    /// Entropy comparison for the same triple, present when the outcome holds.
    pub entropy_order: Option<EntropyOrderReport>,
    pub coupling_entropy: f64,
    pub meet_entropy: f64,
    pub split_bound: f64,
}

impl SplitMajorizationReport {
    pub fn passed(&self) -> bool {
        self.outcome.holds()
    }
}

/// Builds the split of the meet at `1/z` and tests it against the greedy
/// masses with `alpha = z - 1` over every materialized prefix.
pub fn verify_split_majorization<T: Scalar>(
    instance: &Instance<T>,
    z: u64,
    tail: &T,
    tol: Tolerance,
) -> Result<SplitMajorizationReport> {
    if !(2..=MAX_Z).contains(&z) {
        return Err(MecError::DomainError(format!(
            "z = {z} must lie in [2, {MAX_Z}]"
        )));
    }
    let meet = meet(instance);
    let trace = greedy_couple(instance);
    let greedy = trace.masses();
    let gamma = T::ratio(1, z as i64);
    let split = split(&meet.meet, &gamma, tail)?;
    let p = split.masses();
    let alpha = T::from_usize(z as usize - 1);
    let outcome = is_strongly_majorized(&p, &greedy, &alpha, tol)?;
    let entropy_order = if outcome.holds() {
        Some(check_strong_majorization_entropy_bound(
            &p, &greedy, &alpha, tol,
        )?)
    } else {
        None
    };
    let meet_entropy = entropy(meet.meet.probs());
    Ok(SplitMajorizationReport {
        z,
        outcome,
        split_len: split.len(),
        tail_bound: split.tail_bound.to_f64(),
        entropy_order,
        coupling_entropy: trace.entropy(),
        meet_entropy,
        split_bound: split_entropy_bound(meet_entropy, z)?,
    })
}
