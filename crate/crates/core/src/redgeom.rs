//! Reduced second-order systems on a Lie algebra and their connection data.
//!
//! For a reduced field `gamma = gamma^i d/dw^i` on the algebra:
//!
//! * `lambda^k_i = -1/2 (d gamma^k / d w^i - w^j C^k_ji)`, stored `[k][i]`
//! * `psi^i_j = 1/2 (d gamma^i / d w^j + C^i_kj w^k)`, stored `[i][j]`
//! * `phi^l_j`, the Jacobi endomorphism, stored `[l][j]` as the coefficient
//!   of `E_l` in `Phi(E_j)`.

use num_traits::Zero;
use thiserror::Error;

use crate::expr::{is_zero, EvalError, Expr, IdentityError, Params, Region, ZeroVerdict};
use crate::liealg::{LieAlgebra, StructureError};
use crate::rational::{frac, Rational};

/// Square matrix of expressions, row-major.
pub type ExprMatrix = Vec<Vec<Expr>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SodeError {
    #[error("gamma has {got} components, the algebra has dimension {dim}")]
    Length { got: usize, dim: usize },
    #[error("gamma component {component} uses coordinate index {index} beyond dimension {dim}", component = .component + 1, index = .index + 1)]
    Coordinate { component: usize, index: usize, dim: usize },
    #[error("gamma component {component} uses unassigned parameter `{name}`", component = .component + 1)]
    UnassignedParam { component: usize, name: String },
}

/// An algebra together with a reduced vector field `gamma`.
///
/// Parameters are substituted at construction; the original assignments are
/// kept for reporting.
#[derive(Debug, Clone)]
pub struct ReducedSode {
    alg: LieAlgebra,
    gamma: Vec<Expr>,
    params: Params,
}

impl ReducedSode {
    pub fn new(alg: LieAlgebra, gamma: Vec<Expr>, params: Params) -> Result<Self, SodeError> {
        let dim = alg.dim();
        if gamma.len() != dim {
            return Err(SodeError::Length { got: gamma.len(), dim });
        }
        let mut bound = Vec::with_capacity(dim);
        for (component, g) in gamma.iter().enumerate() {
            let g = g.bind(&params);
            if let Some(index) = g.max_var().filter(|&i| i >= dim) {
                return Err(SodeError::Coordinate { component, index, dim });
            }
            if let Some(name) = g.params().into_iter().next() {
                return Err(SodeError::UnassignedParam { component, name });
            }
            bound.push(g);
        }
        Ok(Self { alg, gamma: bound, params })
    }

    /// The canonical connection, `gamma = 0`.
    pub fn canonical(alg: LieAlgebra) -> Self {
        let n = alg.dim();
        Self {
            alg,
            gamma: vec![Expr::zero(); n],
            params: Params::new(),
        }
    }

    pub fn alg(&self) -> &LieAlgebra {
        &self.alg
    }

    pub fn dim(&self) -> usize {
        self.alg.dim()
    }

    pub fn gamma(&self) -> &[Expr] {
        &self.gamma
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn is_polynomial(&self) -> bool {
        self.gamma.iter().all(|g| g.to_poly(self.dim()).is_some())
    }

    /// Directional derivative `gamma(f) = gamma^i df/dw^i`.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(self.gamma.iter().enumerate().map(|(i, g)| g * &f.differentiate(i)))
    }

    pub fn gamma_at(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.gamma.iter().map(|g| g.eval(point, &Params::new())).collect()
    }

    /// `gamma(0)`, or `None` when the origin cannot be evaluated.
    pub fn gamma_at_origin(&self) -> Option<Vec<f64>> {
        self.gamma_at(&vec![0.0; self.dim()]).ok()
    }

    pub fn vanishes_at_origin(&self) -> bool {
        self.gamma_at_origin().is_none_or(|v| v.iter().all(|x| *x == 0.0))
    }
}

/// Linear form `sum_m coeff(m) w^m`.
pub(crate) fn linear(n: usize, coeff: impl Fn(usize) -> Rational) -> Expr {
    Expr::sum((0..n).filter_map(|m| {
        let c = coeff(m);
        (!c.is_zero()).then(|| Expr::Const(c) * Expr::var(m))
    }))
}

fn half() -> Expr {
    Expr::Const(frac(1, 2))
}

pub fn compute_lambda(sode: &ReducedSode) -> ExprMatrix {
    let n = sode.dim();
    let alg = sode.alg();
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| {
                    let wc = linear(n, |j| alg.c(k, j, i).clone());
                    (half() * (wc - sode.gamma()[k].differentiate(i))).expand(n)
                })
                .collect()
        })
        .collect()
}

pub fn compute_psi(sode: &ReducedSode) -> ExprMatrix {
    let n = sode.dim();
    let alg = sode.alg();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let cw = linear(n, |k| alg.c(i, k, j).clone());
                    (half() * (sode.gamma()[i].differentiate(j) + cw)).expand(n)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiMethod {
    /// Written out in derivatives of `gamma` and the structure constants.
    Direct,
    /// Written in terms of `psi`.
    Civilized,
}

pub fn compute_phi(sode: &ReducedSode, method: PhiMethod) -> ExprMatrix {
    match method {
        PhiMethod::Direct => phi_direct(sode),
        PhiMethod::Civilized => phi_civilized(sode, &compute_psi(sode)),
    }
}

fn phi_direct(sode: &ReducedSode) -> ExprMatrix {
    let n = sode.dim();
    let alg = sode.alg();
    let gamma = sode.gamma();
    let jac: ExprMatrix = gamma.iter().map(|g| (0..n).map(|i| g.differentiate(i)).collect()).collect();
    let q = |r: i64| Expr::Const(frac(r, 4));
    let mut out = vec![vec![Expr::zero(); n]; n];
    for (l, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let mut terms = Vec::new();
            for i in 0..n {
                terms.push(half() * &gamma[i] * jac[l][i].differentiate(j));
                let c = alg.c(l, i, j);
                if !c.is_zero() {
                    terms.push(half() * Expr::Const(c.clone()) * &gamma[i]);
                }
                terms.push(q(-1) * &jac[i][j] * &jac[l][i]);
            }
            for k in 0..n {
                // C^k_ij w^i and w^i C^l_ik
                let a = linear(n, |i| alg.c(k, i, j).clone());
                let b = linear(n, |i| alg.c(l, i, k).clone());
                terms.push(q(-3) * &a * &jac[l][k]);
                terms.push(q(1) * &b * &jac[k][j]);
                terms.push(q(-1) * a * b);
            }
            *entry = Expr::sum(terms).expand(n);
        }
    }
    out
}

fn phi_civilized(sode: &ReducedSode, psi: &ExprMatrix) -> ExprMatrix {
    let n = sode.dim();
    let alg = sode.alg();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for (l, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let mut terms = vec![sode.apply(&psi[l][j])];
            for i in 0..n {
                let a = linear(n, |k| alg.c(i, k, j).clone());
                let b = linear(n, |k| alg.c(l, k, i).clone());
                terms.push(-(a * &psi[l][i]));
                terms.push(b * &psi[i][j]);
            }
            for k in 0..n {
                terms.push(-(&psi[k][j] * &psi[l][k]));
            }
            *entry = Expr::sum(terms).expand(n);
        }
    }
    out
}

/// `lambda`, `psi` and the civilized `phi` of a system.
#[derive(Debug, Clone)]
pub struct ConnectionData {
    pub lambda: ExprMatrix,
    pub psi: ExprMatrix,
    pub phi: ExprMatrix,
}

impl ConnectionData {
    pub fn new(sode: &ReducedSode) -> Self {
        let psi = compute_psi(sode);
        let phi = phi_civilized(sode, &psi);
        Self {
            lambda: compute_lambda(sode),
            psi,
            phi,
        }
    }
}

/// Compares the direct and civilized forms of `phi` entry by entry.
pub fn phi_cross_check(sode: &ReducedSode, region: &Region, tol: f64) -> Result<ZeroVerdict, IdentityError> {
    let direct = compute_phi(sode, PhiMethod::Direct);
    let civil = compute_phi(sode, PhiMethod::Civilized);
    let mut verdicts = Vec::new();
    for (dr, cr) in direct.iter().zip(&civil) {
        for (d, c) in dr.iter().zip(cr) {
            let v = is_zero(&(d - c), region, tol)?;
            if !v.is_zero() {
                return Ok(v);
            }
            verdicts.push(v);
        }
    }
    Ok(ZeroVerdict::combine(&verdicts))
}

/// Builds and validates the doubled bracket table on `e_i, W_i`:
/// `[e_i, e_j] = C^k_ij e_k`, `[e_i, W_j] = C^k_ij W_k`, `[W_i, W_j] = 0`.
pub fn verify_basis_brackets(alg: &LieAlgebra) -> Result<LieAlgebra, StructureError> {
    let doubled = alg.doubled();
    doubled.validate()?;
    Ok(doubled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, SymbolTable};
    use crate::liealg::{catalog, CATALOG_NAMES};
    use crate::rational::int;

    fn affine(a: i64, b: i64) -> ReducedSode {
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec!["a".into(), "b".into()]);
        let gamma = vec![Expr::zero(), parse("x*(b*x - a*y)", &sym).unwrap()];
        let params = Params::new().with("a", int(a)).with("b", int(b));
        ReducedSode::new(catalog("affine_line").unwrap(), gamma, params).unwrap()
    }

    fn xy(text: &str) -> Expr {
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec![]);
        parse(text, &sym).unwrap()
    }

    fn assert_same(a: &Expr, b: &Expr, n: usize) {
        assert!((a - b).to_poly(n).unwrap().is_zero(), "{a} != {b}");
    }

    #[test]
    fn affine_lambda_matches_hand_values() {
        // a = 3, b = 2: lambda^2_2 = (a+1)x/2 = 2x, lambda^2_1 = -bx + (a-1)y/2 = -2x + y
        let s = affine(3, 2);
        let lam = compute_lambda(&s);
        assert_same(&lam[1][1], &xy("2*x"), 2);
        assert_same(&lam[1][0], &xy("-2*x + y"), 2);
        assert!(lam[0].iter().all(Expr::is_const_zero));
    }

    #[test]
    fn affine_psi_and_phi() {
        // a = 3: psi^2_2 = (1-a)x/2 = -x, phi^2_1 = (a-1)^2 xy/4 = xy, phi^2_2 = -(a-1)^2 x^2/4 = -x^2
        let s = affine(3, 2);
        let psi = compute_psi(&s);
        assert_same(&psi[1][1], &xy("-x"), 2);
        for method in [PhiMethod::Direct, PhiMethod::Civilized] {
            let phi = compute_phi(&s, method);
            assert_same(&phi[1][0], &xy("x*y"), 2);
            assert_same(&phi[1][1], &xy("-x^2"), 2);
            assert!(phi[0].iter().all(Expr::is_const_zero));
        }
    }

    #[test]
    fn canonical_connection_data() {
        for name in CATALOG_NAMES {
            let alg = catalog(name).unwrap();
            let n = alg.dim();
            let s = ReducedSode::canonical(alg.clone());
            let lam = compute_lambda(&s);
            let psi = compute_psi(&s);
            let phi = compute_phi(&s, PhiMethod::Civilized);
            for k in 0..n {
                for i in 0..n {
                    let expected = half() * linear(n, |j| alg.c(k, j, i).clone());
                    assert_same(&lam[k][i], &expected, n);
                    assert_same(&psi[k][i], &expected, n);
                }
            }
            for l in 0..n {
                for j in 0..n {
                    let expected =
                        Expr::sum((0..n).map(|k| Expr::Const(frac(-1, 4)) * linear(n, |m| alg.c(k, m, j).clone()) * linear(n, |nn| alg.c(l, nn, k).clone())));
                    assert_same(&phi[l][j], &expected, n);
                }
            }
        }
    }

    #[test]
    fn psi_minus_lambda_is_jacobian() {
        let s = affine(5, -1);
        let lam = compute_lambda(&s);
        let psi = compute_psi(&s);
        for k in 0..2 {
            for i in 0..2 {
                assert_same(&(&psi[k][i] - &lam[k][i]), &s.gamma()[k].differentiate(i), 2);
                let cw = linear(2, |j| s.alg().c(k, j, i).clone());
                assert_same(&(&psi[k][i] + &lam[k][i]), &cw, 2);
            }
        }
    }

    #[test]
    fn bloch_iserles_phi_matches_published_table() {
        let alg = catalog("bloch_iserles_2").unwrap();
        let sym = SymbolTable::new(alg.names().to_vec(), vec![]);
        let p = |t: &str| parse(t, &sym).unwrap();
        let gamma = vec![p("-2*y*(x+z)"), p("x^2 - z^2"), p("2*y*(x+z)")];
        let s = ReducedSode::new(alg, gamma, Params::new()).unwrap();
        let phi = compute_phi(&s, PhiMethod::Civilized);
        // columns are Phi(E_x), Phi(E_y), Phi(E_z)
        let table = [
            ["-3*y^2 + 1/2*z^2", "3*x*y - 4*y*z", "4*y^2 - 1/2*x*z"],
            ["3/2*x*y - 2*y*z", "4*x*z - 3/2*x^2 - 3/2*z^2", "3/2*y*z - 2*x*y"],
            ["4*y^2 - 1/2*x*z", "3*y*z - 4*x*y", "-3*y^2 + 1/2*x^2"],
        ];
        for l in 0..3 {
            for j in 0..3 {
                assert_same(&phi[l][j], &p(table[l][j]), 3);
            }
        }
        let lam = compute_lambda(&s);
        // nabla E_x = -(x + z/2) E_y - y E_z, so lambda^y_x = -(x + z/2)
        assert_same(&lam[1][0], &p("-(x + 1/2*z)"), 3);
        assert_same(&lam[2][0], &p("-y"), 3);
        assert_same(&lam[0][1], &p("2*x + z"), 3);
        assert_same(&lam[2][1], &p("-(x + 2*z)"), 3);
        assert_same(&lam[0][2], &p("y"), 3);
        assert_same(&lam[1][2], &p("z + 1/2*x"), 3);
    }

    #[test]
    fn phi_methods_agree_on_transcendental_gamma() {
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec![]);
        let gamma = vec![parse("x*exp(y/x)", &sym).unwrap(), parse("ln(abs(x - y))*y", &sym).unwrap()];
        let s = ReducedSode::new(catalog("affine_line").unwrap(), gamma, Params::new()).unwrap();
        let region = Region::new(2)
            .with_constraint(crate::expr::Constraint::positive(xy("x - 1/10")))
            .with_constraint(crate::expr::Constraint::positive(xy("x - y - 1/10")));
        let v = phi_cross_check(&s, &region, 1e-9).unwrap();
        assert!(matches!(v, ZeroVerdict::SampledZero { .. }), "{v:?}");
    }

    #[test]
    fn sode_input_errors() {
        let alg = catalog("affine_line").unwrap();
        assert!(matches!(
            ReducedSode::new(alg.clone(), vec![Expr::zero()], Params::new()),
            Err(SodeError::Length { .. })
        ));
        assert!(matches!(
            ReducedSode::new(alg.clone(), vec![Expr::zero(), Expr::var(2)], Params::new()),
            Err(SodeError::Coordinate { .. })
        ));
        assert!(matches!(
            ReducedSode::new(alg, vec![Expr::zero(), Expr::param("a")], Params::new()),
            Err(SodeError::UnassignedParam { .. })
        ));
    }

    #[test]
    fn basis_bracket_tables() {
        let d = verify_basis_brackets(&catalog("heisenberg3").unwrap()).unwrap();
        assert_eq!(d.c(4, 0, 5), &int(1));
        assert_eq!(verify_basis_brackets(&catalog("a4_8").unwrap()).map(|d| d.dim()), Ok(8));
    }
}
