//! Coupling the set of all distributions that majorize a base `p`.
//!
//! Greedy is optimal there and its output equals the recursion
//! `G'(i) = max_j (prefix(p, j) - Σ_{k<i} G'(k)) / j`. This module
//! materializes that recursion, builds the adversarial member used to refute
//! any candidate coupling that escapes majorization by `G'`, and provides
//! the closed forms for a uniform base.

use crate::distribution::{entropy, prefix_sums, Distribution};
use crate::error::{MecError, Result};
use crate::majorization::majorizes_masses;
use crate::scalar::{sum, Scalar, Tolerance};

/// Default cap on candidate support for the exhaustive partition search.
pub const PARTITION_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct GPrime<T: Scalar = f64> {
    pub base: Distribution<T>,
    pub states: Vec<T>,
    /// Maximizing prefix length `j` for each state (smallest on ties).
    pub argmax: Vec<usize>,
    /// Mass not yet materialized.
    pub residual: T,
}

impl<T: Scalar> GPrime<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Entropy of the materialized states plus an allowance covering the
    /// residual: `r log2(1 / last) + r log2(e)`.
    pub fn entropy_with_allowance(&self) -> (f64, f64) {
        let h = entropy(&self.states);
        let r = self.residual.to_f64();
        let allowance = match self.states.last() {
            Some(last) if r > 0.0 => {
                r * (1.0 / last.to_f64()).log2() + r * std::f64::consts::LOG2_E
            }
            _ => 0.0,
        };
        (h, allowance)
    }
}

/// Materializes `G'` for base `p` until at most `tail` mass remains.
pub fn gprime<T: Scalar>(p: &Distribution<T>, tail: &T) -> Result<GPrime<T>> {
    if !(tail.gt_zero() && *tail < T::one()) {
        return Err(MecError::DomainError(format!(
            "tail = {tail} must lie in (0, 1)"
        )));
    }
    let prefix = p.prefix_sums();
    let total = prefix.last().cloned().unwrap_or_else(T::zero);
    let mut assigned = T::zero();
    let mut states = Vec::new();
    let mut argmax = Vec::new();
    let mut residual = total.clone();
    while residual > *tail {
        let (value, j) = best_prefix(&prefix, &assigned);
        if !value.gt_zero() {
            break;
        }
        assigned = assigned + value.clone();
        residual = total.clone() - assigned.clone();
        states.push(value);
        argmax.push(j);
    }
    Ok(GPrime {
        base: p.clone(),
        states,
        argmax,
        residual,
    })
}

/// `max_j (prefix[j] - assigned) / j` with the smallest maximizing `j`.
fn best_prefix<T: Scalar>(prefix: &[T], assigned: &T) -> (T, usize) {
    let mut best = (T::zero(), 0);
    for j in 1..prefix.len() {
        let value = (prefix[j].clone() - assigned.clone()) / T::from_usize(j);
        if best.1 == 0 || value > best.0 {
            best = (value, j);
        }
    }
    best
}

/// The member of the majorizing set that refutes a candidate escaping
/// majorization by `G'` at state `i_prime` (1-based), using the recorded
/// maximizing prefix length `j_prime`.
///
/// Its first state is `Σ_{l<=i'} G'(l)`, states `2..=j'` equal `G'(i')`,
/// and later states copy `p`.
pub fn adversary<T: Scalar>(
    p: &Distribution<T>,
    gp: &GPrime<T>,
    i_prime: usize,
    j_prime: usize,
    tol: Tolerance,
) -> Result<Distribution<T>> {
    if i_prime == 0 || i_prime > gp.len() {
        return Err(MecError::IndexOutOfRange {
            index: i_prime,
            len: gp.len(),
        });
    }
    let n = p.len();
    if j_prime == 0 || j_prime > n {
        return Err(MecError::IndexOutOfRange {
            index: j_prime,
            len: n,
        });
    }
    let g = gp.states[i_prime - 1].clone();
    let before = sum(&gp.states[..i_prime - 1]);
    let prefix = p.prefix_sums();
    let at_j = (prefix[j_prime].clone() - before.clone()) / T::from_usize(j_prime);
    if !at_j.approx_eq(&g, tol.mass) {
        return Err(MecError::InvalidWitness { i_prime, j_prime });
    }

    let mut probs = Vec::with_capacity(n);
    probs.push(before + g.clone());
    probs.extend(std::iter::repeat_n(g, j_prime - 1));
    probs.extend(p.probs()[j_prime..].iter().cloned());

    let total = sum(&probs);
    if !total.approx_eq(&T::one(), tol.mass) {
        return Err(MecError::InvariantViolated(format!(
            "adversary sums to {total}"
        )));
    }
    if probs.windows(2).any(|w| !w[1].le_tol(&w[0], tol.compare)) {
        return Err(MecError::InvariantViolated(
            "adversary is not sorted".into(),
        ));
    }
    if !majorizes_masses(&probs, p.probs(), tol) {
        return Err(MecError::InvariantViolated(
            "adversary does not majorize the base".into(),
        ));
    }
    Ok(Distribution::from_sorted(probs))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DefeatVerdict<T: Scalar = f64> {
    /// The candidate is majorized by the materialized `G'`.
    Consistent,
    /// The candidate escapes at `i_prime` and cannot couple `adversary`.
    Defeated {
        i_prime: usize,
        j_prime: usize,
        adversary: Distribution<T>,
    },
}

/// Tests a candidate coupling distribution against `G'`.
///
/// When the candidate is not majorized by `G'`, builds the adversary at the
/// earliest escaping prefix and confirms by exhaustive search that the
/// candidate's states cannot be grouped to reproduce it.
pub fn defeat_check<T: Scalar>(
    candidate: &Distribution<T>,
    p: &Distribution<T>,
    gp: &GPrime<T>,
    cap: usize,
    tol: Tolerance,
) -> Result<DefeatVerdict<T>> {
    let c_prefix = candidate.prefix_sums();
    let g_prefix = prefix_sums(&gp.states);
    let span = candidate.len().min(gp.len());
    let Some(i_prime) = (1..=span).find(|&i| !c_prefix[i].le_tol(&g_prefix[i], tol.compare)) else {
        return Ok(DefeatVerdict::Consistent);
    };
    let j_prime = gp.argmax[i_prime - 1];
    let adversary = adversary(p, gp, i_prime, j_prime, tol)?;
    let support: Vec<T> = candidate
        .probs()
        .iter()
        .filter(|c| c.gt_zero())
        .cloned()
        .collect();
    if support.len() > cap {
        return Err(MecError::SupportTooLarge {
            support: support.len(),
            cap,
        });
    }
    if can_partition(&support, adversary.probs(), tol) {
        return Err(MecError::InvariantViolated(format!(
            "candidate escapes G' at state {i_prime} yet couples the adversary"
        )));
    }
    Ok(DefeatVerdict::Defeated {
        i_prime,
        j_prime,
        adversary,
    })
}

/// Whether `items` can be split into groups (one per target, possibly empty)
/// whose sums equal `targets`. `items.len() <= 20`.
///
/// Targets are filled one at a time, in order. Every subset of items that
/// fills targets in that order without overshooting has a sum that fixes
/// which target is currently open, so one reachability bit per subset is
/// enough: `O(2^k k)` for `k` items.
pub fn can_partition<T: Scalar>(items: &[T], targets: &[T], tol: Tolerance) -> bool {
    let k = items.len();
    assert!(k <= 20, "partition search supports at most 20 items");
    let bounds: Vec<T> = prefix_sums(
        &targets
            .iter()
            .filter(|t| t.gt_zero())
            .cloned()
            .collect::<Vec<_>>(),
    )
    .split_off(1);
    let Some(total) = bounds.last() else {
        return k == 0;
    };
    if !sum(items).approx_eq(total, tol.mass) {
        return false;
    }
    let full = (1usize << k) - 1;
    let mut subset_sum = vec![T::zero(); 1 << k];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        subset_sum[mask] = subset_sum[mask & (mask - 1)].clone() + items[low].clone();
    }
    let mut reachable = vec![false; 1 << k];
    reachable[0] = true;
    for mask in 0..full {
        if !reachable[mask] {
            continue;
        }
        let filled = &subset_sum[mask];
        // first target boundary not yet reached
        let Some(limit) = bounds.iter().find(|b| !b.le_tol(filled, tol.mass)) else {
            continue;
        };
        for (i, item) in items.iter().enumerate() {
            let bit = 1 << i;
            if mask & bit == 0 && (filled.clone() + item.clone()).le_tol(limit, tol.mass) {
                reachable[mask | bit] = true;
            }
        }
    }
    reachable[full]
}

/// Greedy state `i` (1-based) for the majorizing set of the uniform
/// distribution on `n` states: `(1 - 1/n)^(i-1) / n`.
pub fn uniform_greedy_state(n: u64, i: u64) -> Result<f64> {
    if n == 0 || i == 0 {
        return Err(MecError::DomainError(format!(
            "n = {n} and i = {i} must be positive"
        )));
    }
    let nf = n as f64;
    Ok((1.0 - 1.0 / nf).powf((i - 1) as f64) / nf)
}

/// Entropy gap `(n - 1) log2(n / (n - 1))` between greedy and the meet for
/// the uniform majorizing set. Increases toward `log2(e)`.
pub fn uniform_gap(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(MecError::DomainError(format!("n = {n} must be at least 2")));
    }
    let k = (n - 1) as f64;
    Ok(k * (1.0 / k).ln_1p() / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    const TOL: Tolerance = Tolerance::DEFAULT;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::ratio(a, b)
    }

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec(), false, TOL).unwrap()
    }

    #[test]
    fn gprime_of_point_mass() {
        let g = gprime(&dist(&[1.0]), &1e-12).unwrap();
        assert_eq!(g.states, vec![1.0]);
        assert_eq!(g.argmax, vec![1]);
    }

    #[test]
    fn gprime_of_uniform_pair_is_geometric() {
        let p = Distribution::<BigRational>::uniform(2).unwrap();
        let g = gprime(&p, &q(1, 1 << 20)).unwrap();
        assert_eq!(g.len(), 20);
        for (i, s) in g.states.iter().enumerate() {
            assert_eq!(*s, q(1, 1 << (i + 1)));
        }
        assert_eq!(g.argmax[0], 1);
        assert!(g.argmax[1..].iter().all(|&j| j == 2));
    }

    #[test]
    fn gprime_hand_iteration() {
        let p = Distribution::new(vec![q(3, 4), q(1, 4)], false, TOL).unwrap();
        let g = gprime(&p, &q(1, 100)).unwrap();
        assert_eq!(&g.states[..3], &[q(3, 4), q(1, 8), q(1, 16)]);
        assert_eq!(&g.argmax[..3], &[1, 2, 2]);
    }

    #[test]
    fn gprime_rejects_bad_tail() {
        assert!(gprime(&dist(&[1.0]), &0.0).is_err());
        assert!(gprime(&dist(&[1.0]), &1.0).is_err());
    }

    #[test]
    fn adversary_examples() {
        let p = Distribution::new(vec![q(1, 2), q(1, 2)], false, TOL).unwrap();
        let g = gprime(&p, &q(1, 1024)).unwrap();
        let a = adversary(&p, &g, 1, 1, TOL).unwrap();
        assert_eq!(a.probs(), &[q(1, 2), q(1, 2)]);
        let a = adversary(&p, &g, 2, 2, TOL).unwrap();
        assert_eq!(a.probs(), &[q(3, 4), q(1, 4)]);

        let point = Distribution::new(vec![q(1, 1)], false, TOL).unwrap();
        let g = gprime(&point, &q(1, 1024)).unwrap();
        assert_eq!(
            adversary(&point, &g, 1, 1, TOL).unwrap().probs(),
            &[q(1, 1)]
        );
    }

    #[test]
    fn adversary_rejects_non_maximizer() {
        let p = Distribution::new(vec![q(1, 2), q(1, 2)], false, TOL).unwrap();
        let g = gprime(&p, &q(1, 1024)).unwrap();
        assert_eq!(
            adversary(&p, &g, 2, 1, TOL),
            Err(MecError::InvalidWitness {
                i_prime: 2,
                j_prime: 1
            })
        );
        assert!(adversary(&p, &g, 0, 1, TOL).is_err());
    }

    #[test]
    fn defeat_check_examples() {
        let p = dist(&[0.5, 0.5]);
        let g = gprime(&p, &1e-12).unwrap();
        let truncated = Distribution::from_sorted(g.states[..30].to_vec());
        assert_eq!(
            defeat_check(&truncated, &p, &g, PARTITION_CAP, TOL).unwrap(),
            DefeatVerdict::Consistent
        );

        match defeat_check(&dist(&[0.6, 0.4]), &p, &g, PARTITION_CAP, TOL).unwrap() {
            DefeatVerdict::Defeated {
                i_prime,
                j_prime,
                adversary,
            } => {
                assert_eq!((i_prime, j_prime), (1, 1));
                assert_eq!(adversary.probs(), &[0.5, 0.5]);
            }
            other => panic!("{other:?}"),
        }

        // The earliest escaping prefix is the first: 0.75 > G'(1) = 0.5.
        match defeat_check(&dist(&[0.75, 0.2, 0.05]), &p, &g, PARTITION_CAP, TOL).unwrap() {
            DefeatVerdict::Defeated {
                i_prime, adversary, ..
            } => {
                assert_eq!(i_prime, 1);
                assert_eq!(adversary.probs(), &[0.5, 0.5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defeat_check_escaping_late() {
        // Candidate agrees with G' = (1/2, 1/4, ...) at the first prefix but
        // exceeds it at the second: 0.5 + 0.3 > 0.75.
        let p = Distribution::new(vec![q(1, 2), q(1, 2)], false, TOL).unwrap();
        let g = gprime(&p, &q(1, 1024)).unwrap();
        let c = Distribution::new(vec![q(1, 2), q(3, 10), q(1, 5)], false, TOL).unwrap();
        match defeat_check(&c, &p, &g, PARTITION_CAP, TOL).unwrap() {
            DefeatVerdict::Defeated {
                i_prime,
                j_prime,
                adversary,
            } => {
                assert_eq!((i_prime, j_prime), (2, 2));
                assert_eq!(adversary.probs(), &[q(3, 4), q(1, 4)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defeat_check_caps_support() {
        let p = dist(&[0.5, 0.5]);
        let g = gprime(&p, &1e-12).unwrap();
        let mut c = vec![0.6];
        c.extend(std::iter::repeat_n(0.4 / 13.0, 13));
        let c = Distribution::new(c, false, TOL).unwrap();
        assert_eq!(
            defeat_check(&c, &p, &g, PARTITION_CAP, TOL),
            Err(MecError::SupportTooLarge {
                support: 14,
                cap: 12
            })
        );
    }

    #[test]
    fn partition_search() {
        assert!(can_partition(&[0.5, 0.25, 0.25], &[0.5, 0.5], TOL));
        assert!(!can_partition(&[0.6, 0.4], &[0.5, 0.5], TOL));
        assert!(can_partition(
            &[q(1, 4), q(1, 4), q(1, 2)],
            &[q(3, 4), q(1, 4)],
            TOL
        ));
        assert!(!can_partition(&[0.75, 0.2, 0.05], &[0.5, 0.5], TOL));
    }

    #[test]
    fn uniform_state_examples() {
        assert_eq!(uniform_greedy_state(1, 1).unwrap(), 1.0);
        assert_eq!(uniform_greedy_state(2, 3).unwrap(), 0.125);
        assert!((uniform_greedy_state(3, 2).unwrap() - 2.0 / 9.0).abs() < 1e-16);
        assert!(uniform_greedy_state(0, 1).is_err());
    }

    #[test]
    fn uniform_gap_examples() {
        assert!((uniform_gap(2).unwrap() - 1.0).abs() < 1e-15);
        // 9 log2(10/9) = 1.36802784100544986...
        assert!((uniform_gap(10).unwrap() - 1.368_027_841_005_450).abs() < 1e-12);
        assert!((uniform_gap(1_000_000).unwrap() - std::f64::consts::LOG2_E).abs() < 1e-6);
        assert!(uniform_gap(1).is_err());
    }

    #[test]
    fn gprime_entropy_allowance_covers_tail() {
        let p = dist(&[0.5, 0.5]);
        let g = gprime(&p, &1e-6).unwrap();
        let (h, allowance) = g.entropy_with_allowance();
        // G' is geometric(1/2) here: 2 bits in full, one above H(p)
        assert!(h < 2.0 && h > 2.0 - 1e-4);
        assert!(allowance > 0.0 && allowance < 1e-4);
        assert!(
            h + allowance >= p.entropy() && h + allowance - p.entropy() <= std::f64::consts::LOG2_E
        );
    }
}
