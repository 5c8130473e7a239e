//! Dense linear algebra over exact rationals.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

/// Rectangular matrix of rationals, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Panics when the rows have different lengths.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| rational::int(v)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: Vec<Rational>) {
        if self.rows == 0 && self.cols == 0 {
            self.cols = row.len();
        }
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend(row);
        self.rows += 1;
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(Rational::zero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn rank(&self) -> usize {
        rref(self).1.len()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (r, c): (usize, usize)) -> &Rational {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Rational {
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let cells: Vec<String> = self.row(r).iter().map(rational::format).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Reduced row-echelon form and the pivot columns (zero-based).
///
/// The pivot in each column is the first row at or below the current one
/// with a nonzero entry.
pub fn rref(m: &RatMatrix) -> (RatMatrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row == a.rows {
            break;
        }
        let Some(p) = (row..a.rows).find(|&r| !a[(r, col)].is_zero()) else { continue };
        a.swap_rows(row, p);
        let inv = a[(row, col)].recip();
        for c in col..a.cols {
            a[(row, c)] *= &inv;
        }
        for r in 0..a.rows {
            if r == row || a[(r, col)].is_zero() {
                continue;
            }
            let factor = a[(r, col)].clone();
            for c in col..a.cols {
                let delta = &factor * &a[(row, c)];
                a[(r, c)] -= delta;
            }
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

/// Basis of the kernel: one vector per free column, with that column set
/// to 1 and the other free columns to 0.
pub fn nullspace(m: &RatMatrix) -> Vec<Vec<Rational>> {
    let (r, pivots) = rref(m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); m.cols];
            v[f] = Rational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[(row, f)].clone();
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSolution {
    /// Solution with every free variable set to zero.
    pub particular: Vec<Rational>,
    pub nullspace: Vec<Vec<Rational>>,
    /// Zero-based indices of the free variables.
    pub free: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("linear system is inconsistent")]
pub struct Inconsistent;

/// Solves `m x = rhs`.
pub fn solve(m: &RatMatrix, rhs: &[Rational]) -> Result<LinearSolution, Inconsistent> {
    assert_eq!(rhs.len(), m.rows, "right-hand side length mismatch");
    let mut aug = RatMatrix::zeros(m.rows, m.cols + 1);
    for r in 0..m.rows {
        for c in 0..m.cols {
            aug[(r, c)] = m[(r, c)].clone();
        }
        aug[(r, m.cols)] = rhs[r].clone();
    }
    let (red, pivots) = rref(&aug);
    if pivots.last() == Some(&m.cols) {
        return Err(Inconsistent);
    }
    let mut particular = vec![Rational::zero(); m.cols];
    for (row, &p) in pivots.iter().enumerate() {
        particular[p] = red[(row, m.cols)].clone();
    }
    let free = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    Ok(LinearSolution {
        particular,
        nullspace: nullspace(m),
        free,
    })
}
