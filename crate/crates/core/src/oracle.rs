//! Exact minimum-entropy coupling for small instances.
//!
//! Entropy is concave, so its minimum over the coupling polytope sits at an
//! extreme point. Extreme points are generated by the rule "pick a cell whose
//! coordinates all have residual mass, assign the smallest of those
//! residuals, repeat" over every pick order. For two marginals every vertex
//! of the transportation polytope arises this way; for more marginals the
//! result is the best over that family.
//!
//! Each pick empties at least one residual state, so no cell is picked twice
//! and entropy adds up cell by cell. The minimum therefore only depends on
//! the residual marginals, and [`exact_mec`] memoizes on them. States within
//! a marginal and the marginals themselves are interchangeable as far as
//! entropy goes, so the memo key is the sorted multiset of sorted residuals.
//! [`enumerate_vertices`] keeps the full per-support enumeration for
//! callers that want the extreme points themselves.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use std::hash::Hash;
use std::ops::{AddAssign, SubAssign};

use num::{BigInt, BigRational, Integer, One, ToPrimitive, Zero};

use crate::coupling::{Cell, Coupling};
use crate::distribution::{entropy, Instance};
use crate::error::{MecError, Result};
use crate::greedy::{greedy_couple, LOG2_E};
use crate::majorization::meet;
use crate::scalar::{Scalar, Tolerance};

pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCaps {
    pub max_nodes: u64,
    pub time_limit: Option<Duration>,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_nodes: DEFAULT_NODE_CAP,
            time_limit: None,
        }
    }
}

struct Budget {
    caps: OracleCaps,
    started: Instant,
    nodes: u64,
    aborted: bool,
}

impl Budget {
    fn new(caps: OracleCaps) -> Self {
        Budget {
            caps,
            started: Instant::now(),
            nodes: 0,
            aborted: false,
        }
    }

    /// Counts one expanded node; false (and sticky) once a cap is hit.
    fn spend(&mut self) -> bool {
        if self.aborted {
            return false;
        }
        let timed_out = self
            .caps
            .time_limit
            .is_some_and(|limit| self.nodes.is_multiple_of(1024) && self.started.elapsed() > limit);
        if self.nodes >= self.caps.max_nodes || timed_out {
            self.aborted = true;
            return false;
        }
        self.nodes += 1;
        true
    }
}

/// Masses rescaled to integer numerators over a common denominator, so the
/// search runs on plain integer arithmetic.
trait Mass:
    Clone + Ord + Hash + Zero + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self>
{
    fn from_big(x: BigInt) -> Self;
    fn ratio_f64(&self, den: &Self) -> f64;
    fn ratio(&self, den: &Self) -> BigRational;
}

impl Mass for u128 {
    fn from_big(x: BigInt) -> Self {
        x.to_u128().expect("numerator fits the fixed-width path")
    }

    fn ratio_f64(&self, den: &Self) -> f64 {
        *self as f64 / *den as f64
    }

    fn ratio(&self, den: &Self) -> BigRational {
        BigRational::new(BigInt::from(*self), BigInt::from(*den))
    }
}

impl Mass for BigInt {
    fn from_big(x: BigInt) -> Self {
        x
    }

    fn ratio_f64(&self, den: &Self) -> f64 {
        Scalar::to_f64(&self.ratio(den))
    }

    fn ratio(&self, den: &Self) -> BigRational {
        BigRational::new(self.clone(), den.clone())
    }
}

/// Residual marginals plus the common denominator.
struct Scaled<M: Mass> {
    residual: Vec<Vec<M>>,
    den: M,
}

/// Numerators over the least common denominator of every mass.
fn scale(instance: &Instance<BigRational>) -> (Vec<Vec<BigInt>>, BigInt) {
    let den = instance
        .marginals()
        .iter()
        .flat_map(|d| d.probs())
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let residual = instance
        .marginals()
        .iter()
        .map(|d| {
            d.probs()
                .iter()
                .map(|x| x.numer() * (&den / x.denom()))
                .collect()
        })
        .collect();
    (residual, den)
}

fn to_mass<M: Mass>(residual: Vec<Vec<BigInt>>, den: BigInt) -> Scaled<M> {
    Scaled {
        residual: residual
            .into_iter()
            .map(|r| r.into_iter().map(M::from_big).collect())
            .collect(),
        den: M::from_big(den),
    }
}

/// Whether integer sums up to the denominator fit in `u128`.
fn fits_u128(den: &BigInt) -> bool {
    den.bits() < 120
}

/// Every cell the pick rule may take next: one live state per marginal.
/// With `dedupe`, states whose residual repeats an earlier state of the same
/// marginal are skipped; they lead to relabelings of the same subproblem.
fn picks<M: Mass>(residual: &[Vec<M>], dedupe: bool) -> Vec<Vec<usize>> {
    let mut live: Vec<Vec<usize>> = Vec::with_capacity(residual.len());
    for r in residual {
        let mut states: Vec<usize> = Vec::new();
        for (k, x) in r.iter().enumerate() {
            if !x.is_zero() && !(dedupe && states.iter().any(|&s| r[s] == *x)) {
                states.push(k);
            }
        }
        if states.is_empty() {
            return Vec::new();
        }
        live.push(states);
    }
    let mut out = vec![Vec::new()];
    for states in &live {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                states.iter().map(move |&k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    out
}

fn apply<M: Mass>(residual: &mut [Vec<M>], indices: &[usize]) -> M {
    let u = indices
        .iter()
        .enumerate()
        .map(|(j, &k)| &residual[j][k])
        .min()
        .expect("at least one marginal")
        .clone();
    for (j, &k) in indices.iter().enumerate() {
        residual[j][k] -= &u;
    }
    u
}

fn undo<M: Mass>(residual: &mut [Vec<M>], indices: &[usize], u: &M) {
    for (j, &k) in indices.iter().enumerate() {
        residual[j][k] += u;
    }
}

fn canonical<M: Mass>(residual: &[Vec<M>]) -> Vec<Vec<M>> {
    let mut key: Vec<Vec<M>> = residual
        .iter()
        .map(|r| {
            let mut live: Vec<M> = r.iter().filter(|x| !x.is_zero()).cloned().collect();
            live.sort_unstable_by(|a, b| b.cmp(a));
            live
        })
        .collect();
    key.sort_unstable();
    key
}

struct Solver<M: Mass> {
    den: M,
    memo: HashMap<Vec<Vec<M>>, f64>,
    budget: Budget,
}

impl<M: Mass> Solver<M> {
    fn cell_entropy(&self, u: &M) -> f64 {
        let x = u.ratio_f64(&self.den);
        -x * x.log2()
    }

    /// Least entropy of any completion of `residual`; `None` once aborted.
    fn best(&mut self, residual: &mut [Vec<M>]) -> Option<f64> {
        let key = canonical(residual);
        if let Some(&h) = self.memo.get(&key) {
            return Some(h);
        }
        let options = picks(residual, true);
        if options.is_empty() {
            self.memo.insert(key, 0.0);
            return Some(0.0);
        }
        if !self.budget.spend() {
            return None;
        }
        let mut best = f64::INFINITY;
        for indices in options {
            let u = apply(residual, &indices);
            let rest = self.best(residual);
            undo(residual, &indices, &u);
            best = best.min(self.cell_entropy(&u) + rest?);
        }
        self.memo.insert(key, best);
        Some(best)
    }

    /// Walks the memo from `residual` down to a full coupling.
    fn reconstruct(&self, residual: &mut [Vec<M>], m: usize, n: usize) -> Coupling<BigRational> {
        let mut cells = Vec::new();
        loop {
            let options = picks(residual, true);
            if options.is_empty() {
                break;
            }
            let target = self.memo[&canonical(residual)];
            let mut chosen = None;
            for indices in options {
                let u = apply(residual, &indices);
                let rest = self.memo.get(&canonical(residual)).copied();
                undo(residual, &indices, &u);
                if rest.is_some_and(|r| self.cell_entropy(&u) + r == target) {
                    chosen = Some(indices);
                    break;
                }
            }
            let indices = chosen.expect("memo holds an optimal child of every solved state");
            let u = apply(residual, &indices);
            cells.push(Cell {
                indices,
                mass: u.ratio(&self.den),
            });
        }
        Coupling::new(m, n, cells)
    }
}

/// Runs the memoized search; `None` if a cap stopped it.
fn solve<M: Mass>(
    scaled: Scaled<M>,
    caps: OracleCaps,
    m: usize,
    n: usize,
) -> (Option<Coupling<BigRational>>, u64) {
    let Scaled { mut residual, den } = scaled;
    let mut solver = Solver {
        den,
        memo: HashMap::new(),
        budget: Budget::new(caps),
    };
    let solved = solver.best(&mut residual).is_some();
    let coupling = solved.then(|| solver.reconstruct(&mut residual, m, n));
    (coupling, solver.budget.nodes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_entropy: f64,
    pub best_coupling: Coupling<BigRational>,
    /// Distinct residual subproblems expanded.
    pub nodes_explored: u64,
    /// The search ran to completion under the caps. When it did not, the
    /// reported coupling is the greedy one.
    pub exhaustive: bool,
    /// `exhaustive` and the instance has at most two marginals, so
    /// `best_entropy` is the true minimum.
    pub optimal: bool,
}

impl OracleResult {
    pub fn require_exhaustive(&self) -> Result<&Self> {
        if self.exhaustive {
            Ok(self)
        } else {
            Err(MecError::CapExceeded {
                nodes: self.nodes_explored,
            })
        }
    }
}

/// Least-entropy coupling over every pick order. Float instances are
/// rationalized first (see [`Instance::to_exact`]).
pub fn exact_mec<T: Scalar>(instance: &Instance<T>, caps: OracleCaps) -> OracleResult {
    let exact = instance.to_exact();
    let (m, n) = (exact.m(), exact.n());
    let (residual, den) = scale(&exact);
    let (found, nodes) = if fits_u128(&den) {
        solve(to_mass::<u128>(residual, den), caps, m, n)
    } else {
        solve(to_mass::<BigInt>(residual, den), caps, m, n)
    };
    let exhaustive = found.is_some();
    let best_coupling = found.unwrap_or_else(|| greedy_couple(&exact).coupling);
    OracleResult {
        best_entropy: best_coupling.entropy(),
        best_coupling,
        nodes_explored: nodes,
        exhaustive,
        optimal: exhaustive && m <= 2,
    }
}

type SupportKey = Vec<(usize, BigInt)>;

struct VertexSearch {
    m: usize,
    n: usize,
    residual: Vec<Vec<BigInt>>,
    cells: Vec<(usize, BigInt)>,
    seen: HashSet<SupportKey>,
    leaves: Vec<SupportKey>,
    budget: Budget,
}

impl VertexSearch {
    fn cell_id(&self, indices: &[usize]) -> usize {
        indices.iter().rev().fold(0, |acc, &k| acc * self.n + k)
    }

    fn cell_indices(&self, mut id: usize) -> Vec<usize> {
        (0..self.m)
            .map(|_| {
                let k = id % self.n;
                id /= self.n;
                k
            })
            .collect()
    }

    fn visit(&mut self) {
        let mut key = self.cells.clone();
        key.sort();
        if !self.seen.insert(key.clone()) {
            return;
        }
        if !self.budget.spend() {
            return;
        }
        let options = picks(&self.residual, false);
        if options.is_empty() {
            self.leaves.push(key);
            return;
        }
        for indices in options {
            let u = apply(&mut self.residual, &indices);
            let id = self.cell_id(&indices);
            self.cells.push((id, u.clone()));
            self.visit();
            self.cells.pop();
            undo(&mut self.residual, &indices, &u);
            if self.budget.aborted {
                return;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexEnumeration {
    /// Distinct couplings reached by the pick rule.
    pub vertices: Vec<Coupling<BigRational>>,
    pub nodes_explored: u64,
    pub exhaustive: bool,
}

/// Every coupling the pick rule reaches, one per distinct support. For two
/// marginals these are exactly the vertices of the transportation polytope.
/// Far slower than [`exact_mec`]; meant for small cross-checks.
pub fn enumerate_vertices<T: Scalar>(
    instance: &Instance<T>,
    caps: OracleCaps,
) -> VertexEnumeration {
    let exact = instance.to_exact();
    let (m, n) = (exact.m(), exact.n());
    let (residual, den) = scale(&exact);
    let mut search = VertexSearch {
        m,
        n,
        residual,
        cells: Vec::new(),
        seen: HashSet::new(),
        leaves: Vec::new(),
        budget: Budget::new(caps),
    };
    search.visit();
    let vertices = search
        .leaves
        .iter()
        .map(|key| {
            let cells = key
                .iter()
                .map(|(id, mass)| Cell {
                    indices: search.cell_indices(*id),
                    mass: mass.ratio(&den),
                })
                .collect();
            Coupling::new(m, n, cells)
        })
        .collect();
    VertexEnumeration {
        vertices,
        nodes_explored: search.budget.nodes,
        exhaustive: !search.budget.aborted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub greedy_entropy: f64,
    pub oracle_entropy: f64,
    pub meet_entropy: f64,
    /// `H(greedy) - H(oracle)`.
    pub difference: f64,
}

/// Runs the oracle and greedy on the same exact instance and checks
/// `H(meet) <= H(oracle) <= H(greedy) <= H(oracle) + c`, with `c = 1` for
/// two marginals and `log2(e)` otherwise.
pub fn compare_greedy_to_oracle<T: Scalar>(
    instance: &Instance<T>,
    caps: OracleCaps,
    tol: Tolerance,
) -> Result<OracleComparison> {
    let oracle = exact_mec(instance, caps);
    if !oracle.exhaustive {
        return Err(MecError::PreconditionViolated(format!(
            "oracle enumeration stopped after {} nodes",
            oracle.nodes_explored
        )));
    }
    let exact = instance.to_exact();
    let greedy_entropy = greedy_couple(&exact).entropy();
    let meet_entropy = entropy(meet(&exact).meet.probs());
    let oracle_entropy = oracle.best_entropy;
    let difference = greedy_entropy - oracle_entropy;
    let report = OracleComparison {
        greedy_entropy,
        oracle_entropy,
        meet_entropy,
        difference,
    };
    let slack = tol.compare;
    if oracle_entropy < meet_entropy - slack {
        return Err(MecError::BoundViolation(format!(
            "oracle entropy {oracle_entropy} below H(meet) = {meet_entropy}"
        )));
    }
    if difference < -slack {
        return Err(MecError::BoundViolation(format!(
            "greedy entropy {greedy_entropy} below oracle entropy {oracle_entropy}"
        )));
    }
    let limit = if exact.m() == 2 { 1.0 } else { LOG2_E };
    if difference > limit + slack {
        return Err(MecError::BoundViolation(format!(
            "greedy exceeds the oracle by {difference} > {limit}"
        )));
    }
    Ok(report)
}
