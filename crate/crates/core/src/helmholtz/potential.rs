use num_traits::Zero;
use thiserror::Error;

use super::Multiplier;
use crate::expr::{Expr, Poly};
use crate::rational::int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PotentialError {
    #[error("multiplier entry k{}{} is not a polynomial", .0 + 1, .1 + 1)]
    NotPolynomial(usize, usize),
    #[error("closure condition fails: d k{i}{j} / d w{l} != d k{l}{j} / d w{i}", i = .0 + 1, j = .1 + 1, l = .2 + 1)]
    NotClosed(usize, usize, usize),
}

/// A polynomial `l` with `Hessian(l) = k`, `l(0) = 0` and `grad l(0) = 0`.
///
/// Computed as `l(w) = int_0^1 (1 - s) w^i w^j k_ij(s w) ds`, which for a
/// monomial of degree `d` in `k_ij` contributes a factor `1 / ((d+1)(d+2))`.
pub fn recover_potential(k: &Multiplier) -> Result<Expr, PotentialError> {
    let n = k.dim();
    let mut entries = vec![vec![Poly::zero(n); n]; n];
    for i in 0..n {
        for j in i..n {
            let p = k.get(i, j).to_poly(n).ok_or(PotentialError::NotPolynomial(i, j))?;
            entries[j][i] = p.clone();
            entries[i][j] = p;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for l in i + 1..n {
                if !(&entries[i][j].derivative(l) - &entries[l][j].derivative(i)).is_zero() {
                    return Err(PotentialError::NotClosed(i, j, l));
                }
            }
        }
    }
    let mut l = Poly::zero(n);
    for i in 0..n {
        for j in 0..n {
            let wij = &Poly::var(n, i) * &Poly::var(n, j);
            for (m, c) in entries[i][j].terms() {
                if c.is_zero() {
                    continue;
                }
                let d: u32 = m.iter().sum();
                let weight = int(1) / int(i64::from((d + 1) * (d + 2)));
                let term = Poly::monomial(m.clone(), c * weight);
                l = &l + &(&term * &wij);
            }
        }
    }
    Ok(l.to_expr())
}
