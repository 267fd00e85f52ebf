//! Greedy coupling: repeatedly join the largest residual state of every
//! marginal with the smallest of those maxima as weight.
//!
//! Each marginal keeps a max-heap over its residual states. Decreases are
//! lazy: the updated residual is pushed again and stale entries are skipped
//! on pop. A run costs `O(m^2 n log n)`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::coupling::{Cell, Coupling};
use crate::distribution::{entropy, prefix_sums, Instance};
use crate::error::{MecError, Result};
use crate::majorization::{meet, MeetResult};
use crate::scalar::{cmp_mass, Scalar, Tolerance};
use crate::split::split_entropy_bound;

/// log2(e), the additive gap the greedy coupling never exceeds over the meet.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep<T: Scalar = f64> {
    /// Argmax state of each marginal at this step.
    pub indices: Vec<usize>,
    /// Assigned mass: the smallest of the per-marginal maxima.
    pub mass: T,
    /// Marginal whose maximum was the smallest (lowest index on ties).
    pub limiting_marginal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace<T: Scalar = f64> {
    pub coupling: Coupling<T>,
    pub steps: Vec<GreedyStep<T>>,
    /// Residual marginals after every step, when requested.
    pub residual_checkpoints: Option<Vec<Vec<Vec<T>>>>,
    /// Largest residual left unassigned when a marginal ran out first.
    /// Always zero in exact mode.
    pub leftover: f64,
}

impl<T: Scalar> GreedyTrace<T> {
    /// The greedy mass sequence in step order.
    pub fn masses(&self) -> Vec<T> {
        self.steps.iter().map(|s| s.mass.clone()).collect()
    }

    pub fn entropy(&self) -> f64 {
        self.coupling.entropy()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyOptions {
    pub record_residuals: bool,
}

struct HeapEntry<T: Scalar> {
    value: T,
    index: Reverse<usize>,
}

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for HeapEntry<T> {}

impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for HeapEntry<T> {
    // larger value first, then smaller state index
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_mass(&self.value, &other.value).then(self.index.cmp(&other.index))
    }
}

struct ResidualMarginal<T: Scalar> {
    residual: Vec<T>,
    heap: BinaryHeap<HeapEntry<T>>,
}

impl<T: Scalar> ResidualMarginal<T> {
    fn new(probs: &[T]) -> Self {
        let heap = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.gt_zero())
            .map(|(k, p)| HeapEntry {
                value: p.clone(),
                index: Reverse(k),
            })
            .collect();
        ResidualMarginal {
            residual: probs.to_vec(),
            heap,
        }
    }

    /// Current argmax, discarding stale heap entries.
    fn peek(&mut self) -> Option<(usize, T)> {
        while let Some(top) = self.heap.peek() {
            let k = top.index.0;
            if top.value == self.residual[k] && top.value.gt_zero() {
                return Some((k, top.value.clone()));
            }
            self.heap.pop();
        }
        None
    }

    fn subtract(&mut self, k: usize, u: &T) {
        self.heap.pop();
        let next = (self.residual[k].clone() - u.clone()).snap();
        let next = if next.lt_zero() { T::zero() } else { next };
        if next.gt_zero() {
            self.heap.push(HeapEntry {
                value: next.clone(),
                index: Reverse(k),
            });
        }
        self.residual[k] = next;
    }
}

/// Runs the greedy coupling on `instance`.
pub fn greedy_couple<T: Scalar>(instance: &Instance<T>) -> GreedyTrace<T> {
    greedy_couple_with(instance, GreedyOptions::default())
}

pub fn greedy_couple_with<T: Scalar>(
    instance: &Instance<T>,
    options: GreedyOptions,
) -> GreedyTrace<T> {
    let m = instance.m();
    let n = instance.n();
    let mut marginals: Vec<ResidualMarginal<T>> = instance
        .marginals()
        .iter()
        .map(|d| ResidualMarginal::new(d.probs()))
        .collect();
    let mut steps = Vec::new();
    let mut cells = Vec::new();
    let mut checkpoints = options.record_residuals.then(Vec::new);

    loop {
        let mut maxima = Vec::with_capacity(m);
        for marginal in marginals.iter_mut() {
            match marginal.peek() {
                Some(top) => maxima.push(top),
                None => break,
            }
        }
        if maxima.len() < m {
            break;
        }
        let mut limiting = 0;
        for (j, (_, value)) in maxima.iter().enumerate().skip(1) {
            if *value < maxima[limiting].1 {
                limiting = j;
            }
        }
        let u = maxima[limiting].1.clone();
        let indices: Vec<usize> = maxima.iter().map(|(k, _)| *k).collect();
        for (marginal, (k, _)) in marginals.iter_mut().zip(&maxima) {
            marginal.subtract(*k, &u);
        }
        cells.push(Cell {
            indices: indices.clone(),
            mass: u.clone(),
        });
        steps.push(GreedyStep {
            indices,
            mass: u,
            limiting_marginal: limiting,
        });
        if let Some(cps) = checkpoints.as_mut() {
            cps.push(marginals.iter().map(|r| r.residual.clone()).collect());
        }
    }

    let leftover = marginals
        .iter()
        .flat_map(|r| r.residual.iter())
        .map(Scalar::to_f64)
        .fold(0.0, f64::max);

    GreedyTrace {
        coupling: Coupling::new(m, n, cells),
        steps,
        residual_checkpoints: checkpoints,
        leftover,
    }
}

/// Per-step lower bound `max_j (prefix(meet, j) - sum of earlier states) / j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepBound {
    pub bound: f64,
    /// Maximizing prefix length `j` (smallest on ties).
    pub argmax: usize,
    pub state: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepCertificate {
    pub steps: Vec<StepBound>,
}

impl StepCertificate {
    /// Smallest `state - bound` over all steps.
    pub fn min_margin(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.state - s.bound)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates the closed-form lower bound for every element of `masses`,
/// in order, against the meet prefix sums. Returns the bound value, its
/// maximizing prefix length, and the state, without asserting anything.
pub fn lower_bounds<T: Scalar>(masses: &[T], meet: &[T]) -> Vec<(T, usize)> {
    let meet_prefix = prefix_sums(meet);
    let mut assigned = T::zero();
    let mut out = Vec::with_capacity(masses.len());
    for g in masses {
        let mut best: Option<(T, usize)> = None;
        for j in 1..=meet.len() {
            let value = (meet_prefix[j].clone() - assigned.clone()) / T::from_usize(j);
            match &best {
                Some((b, _)) if value <= *b => {}
                _ => best = Some((value, j)),
            }
        }
        out.push(best.unwrap_or((T::zero(), 0)));
        assigned = assigned + g.clone();
    }
    out
}

/// Checks that every greedy state is at least its closed-form lower bound.
pub fn step_certificate<T: Scalar>(
    trace: &GreedyTrace<T>,
    meet: &MeetResult<T>,
    tol: Tolerance,
) -> Result<StepCertificate> {
    let masses = trace.masses();
    let bounds = lower_bounds(&masses, meet.meet.probs());
    let mut steps = Vec::with_capacity(masses.len());
    for (i, (g, (lb, argmax))) in masses.iter().zip(bounds).enumerate() {
        if !lb.le_tol(g, tol.compare) {
            return Err(MecError::CertificateViolation {
                step: i + 1,
                state: g.to_f64(),
                bound: lb.to_f64(),
            });
        }
        steps.push(StepBound {
            bound: lb.to_f64(),
            argmax,
            state: g.to_f64(),
        });
    }
    Ok(StepCertificate { steps })
}

/// Default `z` values for the split-based bound family.
pub const DEFAULT_Z: [u64; 4] = [2, 3, 5, 10];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T: Scalar = f64> {
    pub trace: GreedyTrace<T>,
    pub meet: MeetResult<T>,
    pub coupling_entropy: f64,
    pub meet_entropy: f64,
    /// `H(coupling) - H(meet)`.
    pub gap: f64,
    /// `None` if the per-step certificate failed.
    pub certificate: Option<StepCertificate>,
    /// `(z, bound)` pairs of the split-based upper bound on `H(coupling)`.
    pub split_bounds: Vec<(u64, f64)>,
    pub marginals_ok: bool,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl<T: Scalar> BoundReport<T> {
    /// Computes every quantity without asserting.
    pub fn build(instance: &Instance<T>, zs: &[u64], tol: Tolerance) -> Self {
        let trace = greedy_couple(instance);
        let meet = meet(instance);
        let coupling_entropy = trace.entropy();
        let meet_entropy = entropy(meet.meet.probs());
        let gap = coupling_entropy - meet_entropy;
        let certificate = step_certificate(&trace, &meet, tol).ok();
        let split_bounds = zs
            .iter()
            .filter_map(|&z| split_entropy_bound(meet_entropy, z).ok().map(|b| (z, b)))
            .collect();
        let marginals_ok = trace.coupling.check_marginals(instance, tol).is_ok();
        BoundReport {
            trace,
            meet,
            coupling_entropy,
            meet_entropy,
            gap,
            certificate,
            split_bounds,
            marginals_ok,
            lower_ok: gap >= -tol.compare,
            upper_ok: gap <= LOG2_E + tol.compare,
        }
    }

    pub fn split_bounds_ok(&self, tol: Tolerance) -> bool {
        self.split_bounds
            .iter()
            .all(|&(_, b)| self.coupling_entropy <= b + tol.compare)
    }

    pub fn passed(&self, tol: Tolerance) -> bool {
        self.marginals_ok
            && self.certificate.is_some()
            && self.lower_ok
            && self.upper_ok
            && self.split_bounds_ok(tol)
    }

    /// Turns the first failed check into an error.
    pub fn check(&self, tol: Tolerance) -> Result<()> {
        if !self.marginals_ok {
            return Err(MecError::BoundViolation(
                "coupling marginals do not match the instance".into(),
            ));
        }
        if self.certificate.is_none() {
            return Err(MecError::BoundViolation(
                "per-step lower bound violated".into(),
            ));
        }
        if !self.lower_ok {
            return Err(MecError::BoundViolation(format!(
                "H(G) = {} below H(meet) = {}",
                self.coupling_entropy, self.meet_entropy
            )));
        }
        if !self.upper_ok {
            return Err(MecError::BoundViolation(format!(
                "gap {} exceeds log2(e)",
                self.gap
            )));
        }
        if let Some(&(z, b)) = self
            .split_bounds
            .iter()
            .find(|&&(_, b)| self.coupling_entropy > b + tol.compare)
        {
            return Err(MecError::BoundViolation(format!(
                "H(G) = {} exceeds the z = {z} bound {b}",
                self.coupling_entropy
            )));
        }
        Ok(())
    }
}

/// Greedy coupling, meet, gap and certificates for `instance`; errors on
/// any violated bound.
pub fn bound_report<T: Scalar>(instance: &Instance<T>, tol: Tolerance) -> Result<BoundReport<T>> {
    let report = BoundReport::build(instance, &DEFAULT_Z, tol);
    report.check(tol)?;
    Ok(report)
}
