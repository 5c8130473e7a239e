use nalgebra::DMatrix;
use thiserror::Error;

use super::Trajectory;
use crate::liealg::LieAlgebra;
use crate::rational::to_f64;

/// Tolerance for the bracket relations of a representation.
pub const REP_TOLERANCE: f64 = 1e-12;

/// Matrices `B_i` with `[B_i, B_j] = C^k_ij B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    basis: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("{got} basis matrices for an algebra of dimension {dim}")]
    Count { got: usize, dim: usize },
    #[error("basis matrices must be square and of equal size")]
    Shape,
    #[error("[B{i}, B{j}] differs from the bracket by {residual:e}", i = .i + 1, j = .j + 1)]
    Bracket { i: usize, j: usize, residual: f64 },
}

impl MatrixRep {
    pub fn new(alg: &LieAlgebra, basis: Vec<DMatrix<f64>>) -> Result<Self, RepError> {
        let n = alg.dim();
        if basis.len() != n {
            return Err(RepError::Count { got: basis.len(), dim: n });
        }
        let m = basis.first().map_or(0, DMatrix::nrows);
        if m == 0 || basis.iter().any(|b| b.nrows() != m || b.ncols() != m) {
            return Err(RepError::Shape);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut diff = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                for (k, b) in basis.iter().enumerate() {
                    diff -= b * to_f64(alg.c(k, i, j));
                }
                let residual = diff.amax();
                if residual > REP_TOLERANCE {
                    return Err(RepError::Bracket { i, j, residual });
                }
            }
        }
        Ok(Self { basis })
    }

    /// `(ad E_i)^k_j = C^k_ij`; faithful only for algebras with trivial centre.
    pub fn adjoint(alg: &LieAlgebra) -> Self {
        let n = alg.dim();
        let basis = (0..n).map(|i| DMatrix::from_fn(n, n, |k, j| to_f64(alg.c(k, i, j)))).collect();
        Self { basis }
    }

    /// Faithful representations of the named algebras.
    pub fn catalog(name: &str, alg: &LieAlgebra) -> Option<Self> {
        let unit = |m: usize, r: usize, c: usize| {
            let mut e = DMatrix::zeros(m, m);
            e[(r, c)] = 1.0;
            e
        };
        let basis = match name {
            "heisenberg3" => vec![unit(3, 0, 1), unit(3, 0, 2), unit(3, 1, 2)],
            "a4_8" => vec![unit(3, 0, 2), unit(3, 0, 1), unit(3, 1, 2), unit(3, 1, 1)],
            "affine_line" => vec![unit(2, 0, 0), unit(2, 0, 1)],
            "bloch_iserles_2" => {
                // S -> S N
                let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
                let sym = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
                sym.iter().map(|s| DMatrix::from_row_slice(2, 2, s) * &n).collect()
            }
            _ if alg.is_abelian() => (0..alg.dim()).map(|i| unit(alg.dim(), i, i)).collect(),
            _ => return None,
        };
        Self::new(alg, basis).ok()
    }

    pub fn size(&self) -> usize {
        self.basis[0].nrows()
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// `w^i B_i`.
    pub fn element(&self, w: &[f64]) -> DMatrix<f64> {
        let m = self.size();
        self.basis.iter().zip(w).fold(DMatrix::zeros(m, m), |acc, (b, wi)| acc + b * *wi)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("representation has {rep} basis matrices, trajectory has dimension {traj}")]
    Dimension { rep: usize, traj: usize },
    #[error("initial group element must be {size}x{size}")]
    InitialShape { size: usize },
}

/// Solves `g' = g (w^i B_i)` along `traj` with fourth-order Runge–Kutta.
///
/// The midpoint value of `w` comes from cubic Hermite interpolation of the
/// stored states and rates, which keeps the scheme fourth order.
pub fn reconstruct(traj: &Trajectory, rep: &MatrixRep, g0: Option<DMatrix<f64>>) -> Result<Vec<DMatrix<f64>>, ReconstructError> {
    let size = rep.size();
    if let Some(w) = traj.states.first() {
        if w.len() != rep.basis.len() {
            return Err(ReconstructError::Dimension {
                rep: rep.basis.len(),
                traj: w.len(),
            });
        }
    }
    let mut g = match g0 {
        Some(g) if g.nrows() != size || g.ncols() != size => return Err(ReconstructError::InitialShape { size }),
        Some(g) => g,
        None => DMatrix::identity(size, size),
    };
    let dt = traj.dt;
    let mut out = Vec::with_capacity(traj.len());
    out.push(g.clone());
    for s in 0..traj.len().saturating_sub(1) {
        let (w0, w1) = (&traj.states[s], &traj.states[s + 1]);
        let (v0, v1) = (&traj.rates[s], &traj.rates[s + 1]);
        let mid: Vec<f64> = (0..w0.len()).map(|i| 0.5 * (w0[i] + w1[i]) + dt / 8.0 * (v0[i] - v1[i])).collect();
        let (a0, am, a1) = (rep.element(w0), rep.element(&mid), rep.element(w1));
        let k1 = &g * &a0;
        let k2 = (&g + &k1 * (dt / 2.0)) * &am;
        let k3 = (&g + &k2 * (dt / 2.0)) * &am;
        let k4 = (&g + &k3 * dt) * &a1;
        g += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        out.push(g.clone());
    }
    Ok(out)
}
