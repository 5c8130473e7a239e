//! Euler–Poincaré dynamics: checking, deriving and integrating the reduced
//! equations, and reconstructing curves in a matrix group.

mod integrate;
mod reconstruct;

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use thiserror::Error;

use crate::exactlin::{solve, RatMatrix};
use crate::expr::{self, is_zero, EvalError, Expr, IdentityError, Params, Region, ZeroVerdict};
use crate::liealg::LieAlgebra;
use crate::obstruct::ep_vector;
use crate::redgeom::{linear, ReducedSode, SodeError};

pub use integrate::{integrate, IntegrateError, Trajectory};
pub use reconstruct::{reconstruct, MatrixRep, ReconstructError, RepError};

/// Result of checking that `l` generates `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpCheck {
    pub verdict: ZeroVerdict,
    /// First component of the Euler–Poincaré defect that is not zero.
    pub component: Option<usize>,
}

impl EpCheck {
    pub fn passed(&self) -> bool {
        self.component.is_none()
    }
}

/// Checks that every component of the Euler–Poincaré defect of `l` vanishes.
pub fn ep_check(sode: &ReducedSode, l: &Expr, region: &Region, tol: f64) -> Result<EpCheck, IdentityError> {
    let mut seen = Vec::new();
    for (i, v) in ep_vector(sode, l).iter().enumerate() {
        let verdict = is_zero(v, region, tol)?;
        if !verdict.is_zero() {
            return Ok(EpCheck { verdict, component: Some(i) });
        }
        seen.push(verdict);
    }
    Ok(EpCheck {
        verdict: ZeroVerdict::combine(&seen),
        component: None,
    })
}

/// `w^i dl/dw^i - l`.
pub fn energy(l: &Expr, n: usize) -> Expr {
    let grad = expr::gradient(l, n);
    let pairing = Expr::sum(grad.into_iter().enumerate().map(|(i, g)| Expr::var(i) * g));
    (pairing - l).expand(n)
}

/// Right-hand side `C^k_mi w^m dl/dw^k` of `k_ij gamma^j = ...`.
fn ep_rhs(alg: &LieAlgebra, grad: &[Expr]) -> Vec<Expr> {
    let n = alg.dim();
    (0..n)
        .map(|i| Expr::sum(grad.iter().enumerate().map(|(k, g)| linear(n, |m| alg.c(k, m, i).clone()) * g)).expand(n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeriveError {
    #[error("the Hessian of l is singular at the given point")]
    SingularAt,
    #[error("the Hessian of l is identically singular")]
    Singular,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sode(#[from] SodeError),
}

/// `gamma(point)` for the Euler–Poincaré equations of `l`.
pub fn derive_gamma_at(alg: &LieAlgebra, l: &Expr, params: &Params, point: &[f64]) -> Result<Vec<f64>, DeriveError> {
    let n = alg.dim();
    let l = l.bind(params);
    let grad = expr::gradient(&l, n);
    let hess = expr::hessian(&l, n);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = hess[i][j].eval(point, params)?;
        }
    }
    let rhs = ep_rhs(alg, &grad);
    let mut b = DVector::zeros(n);
    for i in 0..n {
        b[i] = rhs[i].eval(point, params)?;
    }
    let gamma = k.lu().solve(&b).ok_or(DeriveError::SingularAt)?;
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(DeriveError::SingularAt);
    }
    Ok(gamma.iter().copied().collect())
}

/// The reduced vector field generated by `l`.
///
/// A constant Hessian is inverted exactly; otherwise Cramer's rule gives
/// `gamma` as a quotient with the Hessian determinant as denominator.
pub fn derive_sode(alg: &LieAlgebra, l: &Expr, params: &Params) -> Result<ReducedSode, DeriveError> {
    let n = alg.dim();
    let l = l.bind(params);
    let grad = expr::gradient(&l, n);
    let hess = expr::hessian(&l, n);
    let rhs = ep_rhs(alg, &grad);

    let constant: Option<Vec<Vec<_>>> = hess.iter().map(|row| row.iter().map(|e| e.as_const().cloned()).collect()).collect();
    let gamma = if let Some(rows) = constant {
        let m = RatMatrix::from_rows(rows);
        if m.rank() < n {
            return Err(DeriveError::Singular);
        }
        // gamma = K^{-1} rhs, column by column of K^{-1}
        let mut gamma = vec![Expr::zero(); n];
        for c in 0..n {
            let mut e = vec![Zero::zero(); n];
            e[c] = num_traits::One::one();
            let col = solve(&m, &e).map_err(|_| DeriveError::Singular)?.particular;
            for (g, v) in gamma.iter_mut().zip(col) {
                if !v.is_zero() {
                    *g = &*g + Expr::Const(v) * &rhs[c];
                }
            }
        }
        gamma.into_iter().map(|g| g.expand(n)).collect()
    } else {
        let det = expr::determinant(&hess).expand(n);
        if det.is_const_zero() {
            return Err(DeriveError::Singular);
        }
        (0..n)
            .map(|j| {
                let replaced: Vec<Vec<Expr>> = (0..n)
                    .map(|r| (0..n).map(|c| if c == j { rhs[r].clone() } else { hess[r][c].clone() }).collect())
                    .collect();
                expr::determinant(&replaced).expand(n).quotient(det.clone())
            })
            .collect()
    };
    Ok(ReducedSode::new(alg.clone(), gamma, Params::new())?)
}
