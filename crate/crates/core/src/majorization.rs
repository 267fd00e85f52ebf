//! Majorization predicates, the meet of a set of distributions, and
//! α-strong majorization with its entropy consequence.

use crate::distribution::{entropy, prefix_sums, Distribution, Instance};
use crate::error::{MecError, Result};
use crate::scalar::{Scalar, Tolerance};

/// `true` iff `q` majorizes `p`: every prefix sum of `p` is at most the
/// matching prefix sum of `q`. The shorter input is zero-padded.
pub fn majorizes<T: Scalar>(q: &Distribution<T>, p: &Distribution<T>, tol: Tolerance) -> bool {
    majorizes_masses(q.probs(), p.probs(), tol)
}

/// [`majorizes`] over raw sorted mass sequences.
pub fn majorizes_masses<T: Scalar>(q: &[T], p: &[T], tol: Tolerance) -> bool {
    let len = q.len().max(p.len());
    let mut qs = T::zero();
    let mut ps = T::zero();
    for i in 0..len {
        if let Some(x) = q.get(i) {
            qs = qs + x.clone();
        }
        if let Some(x) = p.get(i) {
            ps = ps + x.clone();
        }
        if !ps.le_tol(&qs, tol.compare) {
            return false;
        }
    }
    true
}

/// Greatest lower bound of an instance under majorization.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetResult<T: Scalar = f64> {
    pub meet: Distribution<T>,
    /// For each prefix length `i + 1`, the first marginal attaining the
    /// minimum prefix sum.
    pub per_index_argmin: Vec<usize>,
}

/// Prefix sums of the meet are the pointwise minima of the marginals'
/// prefix sums; the meet is their successive differences.
pub fn meet<T: Scalar>(instance: &Instance<T>) -> MeetResult<T> {
    let n = instance.n();
    let prefixes: Vec<Vec<T>> = instance
        .marginals()
        .iter()
        .map(|d| d.prefix_sums())
        .collect();
    let mut probs = Vec::with_capacity(n);
    let mut per_index_argmin = Vec::with_capacity(n);
    let mut previous = T::zero();
    for i in 1..=n {
        let (arg, min) = prefixes
            .iter()
            .enumerate()
            .fold(None::<(usize, &T)>, |best, (k, pre)| match best {
                Some((_, b)) if pre[i] >= *b => best,
                _ => Some((k, &pre[i])),
            })
            .expect("instance has at least one marginal");
        probs.push(min.clone() - previous.clone());
        per_index_argmin.push(arg);
        previous = min.clone();
    }
    MeetResult {
        meet: Distribution::from_sorted(probs),
        per_index_argmin,
    }
}

/// Outcome of the α-strong majorization test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrongMajorization {
    /// `witness[i] = j` means the prefix `q[..=j]` covers `p[..=i]` and
    /// `alpha * p[i] <= q[j]`.
    Holds { witness: Vec<usize> },
    /// The first position of `p` with no admissible prefix of `q`.
    Fails { index: usize },
}

impl StrongMajorization {
    pub fn holds(&self) -> bool {
        matches!(self, StrongMajorization::Holds { .. })
    }
}

/// Decides whether `p` is `alpha`-strongly majorized by `q`.
///
/// For each `i`, the smallest `j` whose prefix of `q` covers the prefix of
/// `p` is the only one worth testing: `q` is nonincreasing, so later `j`
/// only shrink `q[j]`. `p` may be a truncated prefix of a longer sequence.
pub fn is_strongly_majorized<T: Scalar>(
    p: &[T],
    q: &[T],
    alpha: &T,
    tol: Tolerance,
) -> Result<StrongMajorization> {
    if alpha.lt_zero() {
        return Err(MecError::DomainError(format!(
            "alpha = {alpha} must be >= 0"
        )));
    }
    let mut witness = Vec::with_capacity(p.len());
    let mut p_prefix = T::zero();
    let mut q_prefix = T::zero();
    let mut j = 0usize;
    let mut covered = 0usize; // prefix length of q summed into q_prefix
    for (i, pi) in p.iter().enumerate() {
        p_prefix = p_prefix + pi.clone();
        loop {
            if covered > 0 && p_prefix.le_tol(&q_prefix, tol.compare) {
                break;
            }
            if covered == q.len() {
                return Err(MecError::NoCoveringPrefix {
                    index: i,
                    prefix: p_prefix.to_f64(),
                });
            }
            q_prefix = q_prefix + q[covered].clone();
            j = covered;
            covered += 1;
        }
        let scaled = alpha.clone() * pi.clone();
        if !scaled.le_tol(&q[j], tol.compare) {
            return Ok(StrongMajorization::Fails { index: i });
        }
        witness.push(j);
    }
    Ok(StrongMajorization::Holds { witness })
}

/// Entropy comparison implied by strong majorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyOrderReport {
    pub entropy_p: f64,
    pub entropy_q: f64,
    pub log_alpha: f64,
    /// `H(p) - log2(alpha) - H(q)`; nonnegative up to tolerance.
    pub slack: f64,
}

/// Checks `H(q) <= H(p) - log2(alpha)` for a strongly majorized pair.
pub fn check_strong_majorization_entropy_bound<T: Scalar>(
    p: &[T],
    q: &[T],
    alpha: &T,
    tol: Tolerance,
) -> Result<EntropyOrderReport> {
    match is_strongly_majorized(p, q, alpha, tol)? {
        StrongMajorization::Holds { .. } => {}
        StrongMajorization::Fails { index } => {
            return Err(MecError::PreconditionViolated(format!(
                "p is not {alpha}-strongly majorized by q (fails at position {index})"
            )))
        }
    }
    let entropy_p = entropy(p);
    let entropy_q = entropy(q);
    let log_alpha = alpha.to_f64().log2();
    let slack = entropy_p - log_alpha - entropy_q;
    if slack < -tol.compare {
        return Err(MecError::BoundViolation(format!(
            "H(q) = {entropy_q} exceeds H(p) - log2(alpha) = {}",
            entropy_p - log_alpha
        )));
    }
    Ok(EntropyOrderReport {
        entropy_p,
        entropy_q,
        log_alpha,
        slack,
    })
}

/// Prefix sums of the meet checked against the marginals, index by index.
pub fn check_meet<T: Scalar>(
    instance: &Instance<T>,
    result: &MeetResult<T>,
    tol: Tolerance,
) -> Result<()> {
    let meet_prefix = prefix_sums(result.meet.probs());
    for i in 1..=instance.n() {
        let mut min: Option<T> = None;
        for d in instance.marginals() {
            let s = d.prefix_sum(i)?;
            min = Some(match min {
                Some(m) if m <= s => m,
                _ => s,
            });
        }
        let min = min.expect("nonempty instance");
        if !meet_prefix[i].approx_eq(&min, tol.mass) {
            return Err(MecError::InvariantViolated(format!(
                "meet prefix {i} is {}, expected {}",
                meet_prefix[i], min
            )));
        }
    }
    Ok(())
}
