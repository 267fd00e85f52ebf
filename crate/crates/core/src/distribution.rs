use num::BigRational;

use crate::error::{MecError, Result};
use crate::scalar::{cmp_mass, sum, NumericMode, Scalar, Tolerance};

/// A finite distribution whose states are sorted nonincreasing.
///
/// Zero-mass states are kept so that every marginal of an [`Instance`] has
/// the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<T: Scalar = f64> {
    probs: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    /// Sorts, validates and optionally rescales `values` into a distribution.
    pub fn new(values: Vec<T>, renormalize: bool, tol: Tolerance) -> Result<Self> {
        make_distribution(values, renormalize, tol)
    }

    /// Wraps masses already known to be sorted and normalized.
    pub(crate) fn from_sorted(probs: Vec<T>) -> Self {
        Distribution { probs }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(MecError::Empty);
        }
        Ok(Distribution {
            probs: vec![T::ratio(1, n as i64); n],
        })
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mode(&self) -> NumericMode {
        T::MODE
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    /// Sum of the first `i` states; `i == 0` gives zero.
    pub fn prefix_sum(&self, i: usize) -> Result<T> {
        prefix_sum(&self.probs, i)
    }

    /// All prefix sums, `out[i]` covering the first `i` states.
    pub fn prefix_sums(&self) -> Vec<T> {
        prefix_sums(&self.probs)
    }

    /// Copy padded with zero states up to `n`.
    pub fn padded(&self, n: usize) -> Self {
        let mut probs = self.probs.clone();
        if probs.len() < n {
            probs.resize(n, T::zero());
        }
        Distribution { probs }
    }

    pub fn to_f64(&self) -> Distribution<f64> {
        Distribution {
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }
}

/// Sorts nonincreasing (stable), rejects negative mass and checks unit sum.
///
/// Values in `[-tol, 0)` are clamped to zero in float mode.
pub fn make_distribution<T: Scalar>(
    values: Vec<T>,
    renormalize: bool,
    tol: Tolerance,
) -> Result<Distribution<T>> {
    if values.is_empty() {
        return Err(MecError::Empty);
    }
    let neg_tol = T::MODE == NumericMode::Float64;
    let mut probs = Vec::with_capacity(values.len());
    for (index, value) in values.into_iter().enumerate() {
        if value.lt_zero() {
            let tolerated = neg_tol && value.to_f64() >= -tol.mass;
            if !tolerated {
                return Err(MecError::NegativeMass {
                    index,
                    value: value.to_f64(),
                });
            }
            probs.push(T::zero());
        } else {
            probs.push(value);
        }
    }
    let total = sum(&probs);
    if renormalize {
        if !total.gt_zero() {
            return Err(MecError::NotNormalized {
                sum: total.to_f64(),
            });
        }
        probs = probs.into_iter().map(|p| p / total.clone()).collect();
    } else if !total.approx_eq(&T::one(), tol.mass) {
        return Err(MecError::NotNormalized {
            sum: total.to_f64(),
        });
    }
    probs.sort_by(|a, b| cmp_mass(b, a));
    Ok(Distribution { probs })
}

/// Shannon entropy in bits of a list of masses; zero masses contribute nothing.
pub fn entropy<T: Scalar>(masses: &[T]) -> f64 {
    masses
        .iter()
        .map(Scalar::to_f64)
        .filter(|&x| x > 0.0)
        .map(|x| -x * x.log2())
        .sum()
}

pub fn prefix_sum<T: Scalar>(masses: &[T], i: usize) -> Result<T> {
    if i > masses.len() {
        return Err(MecError::IndexOutOfRange {
            index: i,
            len: masses.len(),
        });
    }
    Ok(sum(&masses[..i]))
}

pub fn prefix_sums<T: Scalar>(masses: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(masses.len() + 1);
    let mut acc = T::zero();
    out.push(acc.clone());
    for m in masses {
        acc = acc + m.clone();
        out.push(acc.clone());
    }
    out
}

/// An ordered set of marginals sharing one support size.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T: Scalar = f64> {
    marginals: Vec<Distribution<T>>,
}

impl<T: Scalar> Instance<T> {
    /// Pads every marginal with zero states to the longest support.
    pub fn new(marginals: Vec<Distribution<T>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(MecError::EmptyInstance);
        }
        let n = marginals.iter().map(Distribution::len).max().unwrap_or(0);
        if n == 0 {
            return Err(MecError::Empty);
        }
        Ok(Instance {
            marginals: marginals.iter().map(|d| d.padded(n)).collect(),
        })
    }

    /// Builds each marginal with [`make_distribution`].
    pub fn from_values(values: Vec<Vec<T>>, renormalize: bool, tol: Tolerance) -> Result<Self> {
        let marginals = values
            .into_iter()
            .map(|v| make_distribution(v, renormalize, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(marginals)
    }

    pub fn marginals(&self) -> &[Distribution<T>] {
        &self.marginals
    }

    /// Number of marginals.
    pub fn m(&self) -> usize {
        self.marginals.len()
    }

    /// Common support size.
    pub fn n(&self) -> usize {
        self.marginals[0].len()
    }

    pub fn mode(&self) -> NumericMode {
        T::MODE
    }

    pub fn to_f64(&self) -> Instance<f64> {
        Instance {
            marginals: self.marginals.iter().map(Distribution::to_f64).collect(),
        }
    }

    /// Exact copy of the instance. Float masses are rounded to multiples of
    /// `1e-12` and the largest state of each marginal absorbs the rounding,
    /// so every marginal sums to exactly 1.
    pub fn to_exact(&self) -> Instance<BigRational> {
        let marginals = self
            .marginals
            .iter()
            .map(|d| {
                let mut probs: Vec<BigRational> = d.probs.iter().map(Scalar::to_rational).collect();
                let total = sum(&probs);
                probs[0] = probs[0].clone() + (BigRational::from_usize(1) - total);
                probs.sort_by(|a, b| cmp_mass(b, a));
                Distribution { probs }
            })
            .collect();
        Instance { marginals }
    }
}
