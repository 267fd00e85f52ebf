//! Cross-checks the oracle's vertex enumeration for two marginals against an
//! independent construction: every vertex of a 2-marginal transportation
//! polytope has a support that is a forest in the row/column bipartite
//! graph, and a forest support determines the masses by leaf peeling.

use std::collections::BTreeSet;

use mec_core::oracle::{enumerate_vertices, exact_mec, OracleCaps};
use mec_core::*;
use num::{BigInt, Zero};
use proptest::prelude::*;

type Vertex = Vec<((usize, usize), BigRational)>;

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Solves the transportation system on `support` by peeling rows/columns
/// with a single open cell. `None` if the support is not a spanning forest
/// solution with nonnegative masses.
fn solve_forest(
    rows: &[BigRational],
    cols: &[BigRational],
    support: &[(usize, usize)],
) -> Option<Vertex> {
    let mut row_left = rows.to_vec();
    let mut col_left = cols.to_vec();
    let mut open: Vec<bool> = vec![true; support.len()];
    let mut mass: Vec<Option<BigRational>> = vec![None; support.len()];
    loop {
        let mut progressed = false;
        for (c, &(r, k)) in support.iter().enumerate() {
            if !open[c] {
                continue;
            }
            let row_open = support
                .iter()
                .enumerate()
                .filter(|(d, &(r2, _))| open[*d] && r2 == r)
                .count();
            let col_open = support
                .iter()
                .enumerate()
                .filter(|(d, &(_, k2))| open[*d] && k2 == k)
                .count();
            let value = if row_open == 1 {
                row_left[r].clone()
            } else if col_open == 1 {
                col_left[k].clone()
            } else {
                continue;
            };
            if value < BigRational::zero() {
                return None;
            }
            row_left[r] -= &value;
            col_left[k] -= &value;
            mass[c] = Some(value);
            open[c] = false;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    // a cycle leaves cells open; infeasible supports leave residual mass
    if open.iter().any(|&o| o) || row_left.iter().chain(&col_left).any(|x| !x.is_zero()) {
        return None;
    }
    let mut v: Vertex = support
        .iter()
        .zip(mass)
        .filter_map(|(&cell, m)| m.filter(|m| !m.is_zero()).map(|m| (cell, m)))
        .collect();
    v.sort();
    Some(v)
}

fn forest_vertices(rows: &[BigRational], cols: &[BigRational]) -> BTreeSet<Vertex> {
    let cells: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|r| (0..cols.len()).map(move |k| (r, k)))
        .collect();
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << cells.len()) {
        if mask.count_ones() as usize > rows.len() + cols.len() - 1 {
            continue;
        }
        let support: Vec<(usize, usize)> = (0..cells.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| cells[b])
            .collect();
        if let Some(v) = solve_forest(rows, cols, &support) {
            out.insert(v);
        }
    }
    out
}

fn oracle_vertices(instance: &Instance<BigRational>) -> BTreeSet<Vertex> {
    let r = enumerate_vertices(instance, OracleCaps::default());
    assert!(r.exhaustive);
    r.vertices
        .iter()
        .map(|c| {
            let mut v: Vertex = c
                .cells()
                .iter()
                .map(|cell| ((cell.indices[0], cell.indices[1]), cell.mass.clone()))
                .collect();
            v.sort();
            v
        })
        .collect()
}

fn check(rows: Vec<BigRational>, cols: Vec<BigRational>) {
    let inst = Instance::from_values(vec![rows, cols], false, Tolerance::DEFAULT).unwrap();
    let rows = inst.marginals()[0].probs();
    let cols = inst.marginals()[1].probs();
    let want = forest_vertices(rows, cols);
    let got = oracle_vertices(&inst);
    assert_eq!(got, want, "rows {rows:?} cols {cols:?}");
    let best = want
        .iter()
        .map(|v| entropy(&v.iter().map(|(_, m)| m.clone()).collect::<Vec<_>>()))
        .fold(f64::INFINITY, f64::min);
    // the memoized search must land on the best vertex
    let oracle = exact_mec(&inst, OracleCaps::default());
    assert!(oracle.optimal);
    assert!((oracle.best_entropy - best).abs() < 1e-12);
}

#[test]
fn two_by_two_vertices() {
    check(vec![q(3, 5), q(2, 5)], vec![q(1, 2), q(1, 2)]);
}

#[test]
fn degenerate_three_by_three_vertices() {
    // equal partial sums make the polytope degenerate
    check(
        vec![q(1, 3), q(1, 3), q(1, 3)],
        vec![q(1, 3), q(1, 3), q(1, 3)],
    );
    check(vec![q(1, 2), q(1, 4), q(1, 4)], vec![q(1, 2), q(1, 2)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_finds_every_vertex(
        a in prop::collection::vec(1i64..6, 1..=3),
        b in prop::collection::vec(1i64..6, 1..=3),
    ) {
        let ta: i64 = a.iter().sum();
        let tb: i64 = b.iter().sum();
        check(a.iter().map(|&x| q(x, ta)).collect(), b.iter().map(|&x| q(x, tb)).collect());
    }
}
