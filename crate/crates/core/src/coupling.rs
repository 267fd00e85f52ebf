use crate::distribution::{entropy, Instance};
use crate::error::{MecError, Result};
use crate::scalar::{sum, Scalar, Tolerance};

/// One joint state: a state index per marginal (0-based) and its mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell<T: Scalar = f64> {
    pub indices: Vec<usize>,
    pub mass: T,
}

/// Sparse joint distribution over `m` marginals of support `n`.
///
/// Cells keep construction order.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T: Scalar = f64> {
    m: usize,
    n: usize,
    cells: Vec<Cell<T>>,
}

impl<T: Scalar> Coupling<T> {
    pub fn new(m: usize, n: usize, cells: Vec<Cell<T>>) -> Self {
        Coupling { m, n, cells }
    }

    pub fn cells(&self) -> &[Cell<T>] {
        &self.cells
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Masses in construction order.
    pub fn masses(&self) -> Vec<T> {
        self.cells.iter().map(|c| c.mass.clone()).collect()
    }

    pub fn total_mass(&self) -> T {
        sum(self.cells.iter().map(|c| &c.mass))
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.masses())
    }

    /// Marginal `j` of the coupling, indexed by state.
    pub fn marginal(&self, j: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        for cell in &self.cells {
            let k = cell.indices[j];
            out[k] = out[k].clone() + cell.mass.clone();
        }
        out
    }

    /// Checks unit mass and that every marginal reproduces the instance.
    ///
    /// Exact in rational mode, within `tol.mass` in float mode.
    pub fn check_marginals(&self, instance: &Instance<T>, tol: Tolerance) -> Result<()> {
        if self.m != instance.m() || self.n != instance.n() {
            return Err(MecError::InvariantViolated(format!(
                "coupling shape {}x{} does not match instance {}x{}",
                self.m,
                self.n,
                instance.m(),
                instance.n()
            )));
        }
        for cell in &self.cells {
            if cell.indices.len() != self.m || cell.indices.iter().any(|&k| k >= self.n) {
                return Err(MecError::InvariantViolated(format!(
                    "cell {:?} outside the {}x{} index space",
                    cell.indices, self.m, self.n
                )));
            }
            if cell.mass.lt_zero() {
                return Err(MecError::InvariantViolated(format!(
                    "cell {:?} has negative mass",
                    cell.indices
                )));
            }
        }
        let total = self.total_mass();
        if !total.approx_eq(&T::one(), tol.mass) {
            return Err(MecError::InvariantViolated(format!(
                "coupling mass sums to {total}"
            )));
        }
        for (j, marginal) in instance.marginals().iter().enumerate() {
            let got = self.marginal(j);
            for (k, (have, want)) in got.iter().zip(marginal.probs()).enumerate() {
                if !have.approx_eq(want, tol.mass) {
                    return Err(MecError::InvariantViolated(format!(
                        "marginal {j} state {k}: coupling gives {have}, expected {want}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginal_check_catches_mismatch() {
        let inst = Instance::from_values(
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            false,
            Tolerance::DEFAULT,
        )
        .unwrap();
        let good = Coupling::new(
            2,
            2,
            vec![
                Cell {
                    indices: vec![0, 0],
                    mass: 0.5,
                },
                Cell {
                    indices: vec![1, 1],
                    mass: 0.5,
                },
            ],
        );
        good.check_marginals(&inst, Tolerance::DEFAULT).unwrap();
        assert_eq!(good.entropy(), 1.0);

        let bad = Coupling::new(
            2,
            2,
            vec![
                Cell {
                    indices: vec![0, 0],
                    mass: 0.5,
                },
                Cell {
                    indices: vec![0, 1],
                    mass: 0.5,
                },
            ],
        );
        assert!(bad.check_marginals(&inst, Tolerance::DEFAULT).is_err());
    }
}
