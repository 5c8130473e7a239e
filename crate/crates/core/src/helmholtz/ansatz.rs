//! Exact polynomial ansatz for multiplier matrices.
//!
//! Every entry `k_ij`, `i <= j`, is a polynomial of total degree at most `d`
//! with unknown rational coefficients. The Helmholtz residuals are linear in
//! those coefficients, so equating every monomial coefficient of every
//! residual to zero gives a homogeneous rational system whose nullspace is
//! the solution family.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::Multiplier;
use crate::exactlin::{nullspace, RatMatrix};
use crate::expr::{monomials_up_to, Monomial, Poly};
use crate::rational::{int, Rational};
use crate::redgeom::{compute_lambda, compute_phi, ExprMatrix, PhiMethod, ReducedSode};

const GENERIC_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnsatzError {
    #[error("gamma component {} is not a polynomial", .0 + 1)]
    NotPolynomial(usize),
}

/// Coefficient of `monomial` in `k_ij` (zero-based, `i <= j`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unknown {
    pub i: usize,
    pub j: usize,
    pub monomial: Monomial,
}

#[derive(Debug, Clone)]
pub struct Generator {
    /// Coefficients, indexed like [`AnsatzFamily::legend`].
    pub vector: Vec<Rational>,
    pub multiplier: Multiplier,
    pub det_identically_zero: bool,
}

/// Solution space of the ansatz.
#[derive(Debug, Clone)]
pub struct AnsatzFamily {
    pub degree: u32,
    pub dim: usize,
    pub legend: Vec<Unknown>,
    pub generators: Vec<Generator>,
    /// Coefficients of the pseudo-random member used for the regularity test.
    pub generic_coefficients: Vec<Rational>,
    /// `det` of the generic member vanishes identically.
    pub singular_family: bool,
    /// Whether the phi condition was imposed.
    pub with_phi: bool,
}

impl AnsatzFamily {
    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    /// Whether some member has a determinant that is not identically zero.
    pub fn has_regular_member(&self) -> bool {
        !self.generators.is_empty() && !self.singular_family
    }

    /// `sum_g coeffs[g] * generator_g`; missing coefficients count as zero.
    pub fn combination(&self, coeffs: &[Rational]) -> Multiplier {
        let mut vector = vec![Rational::zero(); self.legend.len()];
        for (g, c) in self.generators.iter().zip(coeffs) {
            for (acc, v) in vector.iter_mut().zip(&g.vector) {
                *acc += c * v;
            }
        }
        multiplier_from_vector(self.dim, &self.legend, &vector)
    }

    /// The generic member.
    pub fn generic(&self) -> Multiplier {
        self.combination(&self.generic_coefficients)
    }
}

/// Ansatz with all Helmholtz conditions imposed.
pub fn solve_ansatz(sode: &ReducedSode, degree: u32) -> Result<AnsatzFamily, AnsatzError> {
    solve(sode, degree, true)
}

/// Ansatz with the nabla and closure conditions only.
pub fn solve_nabla_ansatz(sode: &ReducedSode, degree: u32) -> Result<AnsatzFamily, AnsatzError> {
    solve(sode, degree, false)
}

fn to_polys(n: usize, m: &ExprMatrix) -> Vec<Vec<Poly>> {
    m.iter()
        .map(|row| row.iter().map(|e| e.to_poly(n).expect("polynomial gamma gives polynomial data")).collect())
        .collect()
}

fn solve(sode: &ReducedSode, degree: u32, with_phi: bool) -> Result<AnsatzFamily, AnsatzError> {
    let n = sode.dim();
    let gamma: Vec<Poly> = sode
        .gamma()
        .iter()
        .enumerate()
        .map(|(i, g)| g.to_poly(n).ok_or(AnsatzError::NotPolynomial(i)))
        .collect::<Result<_, _>>()?;
    let lambda = to_polys(n, &compute_lambda(sode));
    let phi = with_phi.then(|| to_polys(n, &compute_phi(sode, PhiMethod::Civilized)));

    let monomials = monomials_up_to(n, degree);
    let mut legend = Vec::new();
    for i in 0..n {
        for j in i..n {
            for m in &monomials {
                legend.push(Unknown { i, j, monomial: m.clone() });
            }
        }
    }

    // (condition, component, monomial) -> column -> coefficient
    let mut rows: BTreeMap<(u8, Vec<usize>, Monomial), BTreeMap<usize, Rational>> = BTreeMap::new();
    for (col, u) in legend.iter().enumerate() {
        let k = UnitMultiplier {
            i: u.i,
            j: u.j,
            poly: Poly::monomial(u.monomial.clone(), int(1)),
        };
        let mut record = |cond: u8, comp: Vec<usize>, p: Poly| {
            for (m, c) in p.terms() {
                rows.entry((cond, comp.clone(), m.clone())).or_default().insert(col, c.clone());
            }
        };
        for a in 0..n {
            for b in a..n {
                let mut r = directional(&gamma, &k.get(n, a, b));
                for c in 0..n {
                    r = &r - &(&k.get(n, c, b) * &lambda[c][a]);
                    r = &r - &(&k.get(n, a, c) * &lambda[c][b]);
                }
                record(0, vec![a, b], r);
            }
        }
        if let Some(phi) = &phi {
            for j in 0..n {
                for m in j + 1..n {
                    let mut r = Poly::zero(n);
                    for i in 0..n {
                        r = &r + &(&k.get(n, i, j) * &phi[i][m]);
                        r = &r - &(&k.get(n, i, m) * &phi[i][j]);
                    }
                    record(1, vec![j, m], r);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for l in i + 1..n {
                    let r = &k.get(n, i, j).derivative(l) - &k.get(n, l, j).derivative(i);
                    record(2, vec![i, j, l], r);
                }
            }
        }
    }

    let mut matrix = RatMatrix::zeros(rows.len(), legend.len());
    for (r, cols) in rows.values().enumerate() {
        for (c, v) in cols {
            matrix[(r, *c)] = v.clone();
        }
    }
    let basis = if rows.is_empty() {
        (0..legend.len())
            .map(|c| {
                let mut v = vec![Rational::zero(); legend.len()];
                v[c] = int(1);
                v
            })
            .collect()
    } else {
        nullspace(&matrix)
    };

    let generators: Vec<Generator> = basis
        .into_iter()
        .map(|vector| {
            let det_identically_zero = poly_det(&poly_matrix(n, &legend, &vector)).is_zero();
            let multiplier = multiplier_from_vector(n, &legend, &vector);
            Generator {
                vector,
                multiplier,
                det_identically_zero,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(GENERIC_SEED);
    let generic_coefficients: Vec<Rational> = generators.iter().map(|_| int(rng.gen_range(1..=97))).collect();
    let mut generic = vec![Rational::zero(); legend.len()];
    for (g, c) in generators.iter().zip(&generic_coefficients) {
        for (acc, v) in generic.iter_mut().zip(&g.vector) {
            *acc += c * v;
        }
    }
    let singular_family = poly_det(&poly_matrix(n, &legend, &generic)).is_zero();

    Ok(AnsatzFamily {
        degree,
        dim: n,
        legend,
        generators,
        generic_coefficients,
        singular_family,
        with_phi,
    })
}

/// Multiplier with a single polynomial in slots `(i, j)` and `(j, i)`.
struct UnitMultiplier {
    i: usize,
    j: usize,
    poly: Poly,
}

impl UnitMultiplier {
    fn get(&self, n: usize, a: usize, b: usize) -> Poly {
        if (a, b) == (self.i, self.j) || (b, a) == (self.i, self.j) {
            self.poly.clone()
        } else {
            Poly::zero(n)
        }
    }
}

fn directional(gamma: &[Poly], f: &Poly) -> Poly {
    let mut acc = Poly::zero(f.nvars());
    for (i, g) in gamma.iter().enumerate() {
        acc = &acc + &(g * &f.derivative(i));
    }
    acc
}

fn poly_matrix(n: usize, legend: &[Unknown], vector: &[Rational]) -> Vec<Vec<Poly>> {
    let mut m = vec![vec![Poly::zero(n); n]; n];
    for (u, c) in legend.iter().zip(vector) {
        if c.is_zero() {
            continue;
        }
        let term = Poly::monomial(u.monomial.clone(), c.clone());
        m[u.i][u.j] = &m[u.i][u.j] + &term;
        if u.i != u.j {
            m[u.j][u.i] = &m[u.j][u.i] + &term;
        }
    }
    m
}

fn multiplier_from_vector(n: usize, legend: &[Unknown], vector: &[Rational]) -> Multiplier {
    let m = poly_matrix(n, legend, vector);
    Multiplier::from_fn(n, |i, j| m[i][j].to_expr())
}

/// Determinant by cofactor expansion along the first row.
fn poly_det(m: &[Vec<Poly>]) -> Poly {
    match m.len() {
        0 => Poly::constant(0, int(1)),
        1 => m[0][0].clone(),
        n => {
            let mut acc = Poly::zero(m[0][0].nvars());
            for col in 0..n {
                if m[0][col].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, p)| p.clone()).collect())
                    .collect();
                let term = &m[0][col] * &poly_det(&minor);
                acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr, Params, SymbolTable};
    use crate::helmholtz::{closure_residual, nabla_residual, phi_residual};
    use crate::liealg::catalog;
    use crate::rational::frac;

    fn bloch_iserles() -> ReducedSode {
        crate::helmholtz::tests::bloch_iserles()
    }

    #[test]
    fn bloch_iserles_constant_family() {
        let fam = solve_ansatz(&bloch_iserles(), 0).unwrap();
        assert_eq!(fam.dimension(), 1);
        let v = &fam.generators[0].vector;
        // legend order: xx, xy, xz, yy, yz, zz
        let scale = v[0].clone();
        let expected: Vec<Rational> = [1, 0, 0, 2, 0, 1].iter().map(|&x| &scale * int(x)).collect();
        assert_eq!(v, &expected);
        assert!(!fam.generators[0].det_identically_zero);
        assert!(fam.has_regular_member());
    }

    #[test]
    fn heisenberg_constant_family_is_singular() {
        let s = ReducedSode::canonical(catalog("heisenberg3").unwrap());
        let fam = solve_ansatz(&s, 0).unwrap();
        assert_eq!(fam.dimension(), 3);
        for g in &fam.generators {
            let k = &g.multiplier;
            assert!(k.get(0, 1).is_const_zero());
            assert!(k.get(1, 1).is_const_zero());
            assert!(k.get(1, 2).is_const_zero());
            assert!(g.det_identically_zero);
        }
        assert!(fam.singular_family);
        assert!(solve_ansatz(&s, 1).unwrap().singular_family);
    }

    #[test]
    fn abelian_constant_family_is_all_symmetric_matrices() {
        let s = ReducedSode::canonical(catalog("abelian2").unwrap());
        let fam = solve_ansatz(&s, 0).unwrap();
        assert_eq!(fam.dimension(), 3);
        assert!(fam.has_regular_member());
    }

    #[test]
    fn affine_case_2c_has_no_regular_polynomial_multiplier() {
        // a = b = 0 turns x*(b*x - a*y) into 0
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec!["a".into(), "b".into()]);
        let gamma = vec![Expr::zero(), parse("x*(b*x - a*y)", &sym).unwrap()];
        let params = Params::new().with("a", int(0)).with("b", int(0));
        let s = ReducedSode::new(catalog("affine_line").unwrap(), gamma, params).unwrap();
        for d in 0..=2 {
            let fam = solve_ansatz(&s, d).unwrap();
            assert!(!fam.has_regular_member(), "degree {d}");
        }
    }

    #[test]
    fn solutions_substitute_back_to_zero() {
        let systems = vec![
            bloch_iserles(),
            ReducedSode::canonical(catalog("a4_8").unwrap()),
            ReducedSode::canonical(catalog("heisenberg3").unwrap()),
        ];
        for s in systems {
            let n = s.dim();
            let fam = solve_ansatz(&s, 1).unwrap();
            for g in &fam.generators {
                let k = &g.multiplier;
                let zero = |e: &Expr| e.to_poly(n).unwrap().is_zero();
                assert!(nabla_residual(&s, k).iter().flatten().all(zero));
                assert!(phi_residual(&s, k).iter().flatten().all(zero));
                assert!(closure_residual(k).iter().flatten().flatten().all(zero));
            }
        }
    }

    #[test]
    fn a48_linear_family_contains_paper_matrix() {
        // k14 = -1, k23 = 1, k44 = arbitrary constant
        let s = ReducedSode::canonical(catalog("a4_8").unwrap());
        let fam = solve_ansatz(&s, 0).unwrap();
        let target = Multiplier::from_fn(4, |i, j| match (i, j) {
            (0, 3) => Expr::int(-1),
            (1, 2) => Expr::one(),
            (3, 3) => Expr::Const(frac(5, 2)),
            _ => Expr::zero(),
        });
        let zero = |e: &Expr| e.to_poly(4).unwrap().is_zero();
        assert!(nabla_residual(&s, &target).iter().flatten().all(zero));
        assert!(fam.has_regular_member());
    }

    #[test]
    fn non_polynomial_gamma_is_rejected() {
        let s = ReducedSode::new(catalog("abelian1").unwrap(), vec![Expr::var(0).exp()], Params::new()).unwrap();
        assert_eq!(solve_ansatz(&s, 0).unwrap_err(), AnsatzError::NotPolynomial(0));
    }
}
