//! The reduced Helmholtz conditions for a multiplier matrix `k`:
//!
//! * symmetry `k_ij = k_ji` and regularity `det k != 0`;
//! * `N_ij = gamma(k_ij) - k_kj lambda^k_i - k_ik lambda^k_j = 0`;
//! * `R_jk = k_ij phi^i_k - k_ik phi^i_j = 0`;
//! * closure `T_ijl = d k_ij / d w^l - d k_lj / d w^i = 0`.

mod ansatz;
mod potential;

use crate::expr::{self, is_zero, Expr, IdentityError, Params, Region, ZeroVerdict};
use crate::redgeom::{compute_lambda, ConnectionData, ExprMatrix, ReducedSode};

pub use ansatz::{solve_ansatz, solve_nabla_ansatz, AnsatzError, AnsatzFamily, Generator, Unknown};
pub use potential::{recover_potential, PotentialError};

/// Symmetric matrix of expressions; only `i <= j` is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    n: usize,
    upper: Vec<Expr>,
}

impl Multiplier {
    /// Calls `entry(i, j)` for `i <= j` only.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(entry(i, j));
            }
        }
        Self { n, upper }
    }

    pub fn constant_identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    /// Hessian of `l`.
    pub fn hessian(l: &Expr, n: usize) -> Self {
        let h = expr::hessian(l, n);
        Self::from_fn(n, |i, j| h[i][j].expand(n))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.upper[self.slot(i, j)]
    }

    pub fn matrix(&self) -> ExprMatrix {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).clone()).collect()).collect()
    }

    pub fn bind(&self, params: &Params) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|e| e.bind(params)).collect(),
        }
    }

    pub fn determinant(&self) -> Expr {
        expr::determinant(&self.matrix()).expand(self.n)
    }

    pub fn is_polynomial(&self) -> bool {
        self.upper.iter().all(|e| e.to_poly(self.n).is_some())
    }
}

pub fn nabla_residual(sode: &ReducedSode, k: &Multiplier) -> ExprMatrix {
    nabla_residual_with(sode, k, &compute_lambda(sode))
}

fn nabla_residual_with(sode: &ReducedSode, k: &Multiplier, lambda: &ExprMatrix) -> ExprMatrix {
    let n = sode.dim();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut terms = vec![sode.apply(k.get(i, j))];
            for m in 0..n {
                terms.push(-(k.get(m, j) * &lambda[m][i]));
                terms.push(-(k.get(i, m) * &lambda[m][j]));
            }
            let e = Expr::sum(terms).expand(n);
            out[j][i] = e.clone();
            out[i][j] = e;
        }
    }
    out
}

pub fn phi_residual(sode: &ReducedSode, k: &Multiplier) -> ExprMatrix {
    phi_residual_with(k, &ConnectionData::new(sode).phi)
}

fn phi_residual_with(k: &Multiplier, phi: &ExprMatrix) -> ExprMatrix {
    let n = k.dim();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for j in 0..n {
        for m in j + 1..n {
            let e = Expr::sum((0..n).flat_map(|i| [k.get(i, j) * &phi[i][m], -(k.get(i, m) * &phi[i][j])])).expand(n);
            out[m][j] = -e.clone();
            out[j][m] = e;
        }
    }
    out
}

/// `T[i][j][l] = d k_ij / d w^l - d k_lj / d w^i`.
pub fn closure_residual(k: &Multiplier) -> Vec<ExprMatrix> {
    let n = k.dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|l| (k.get(i, j).differentiate(l) - k.get(l, j).differentiate(i)).expand(n))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Verdict for one family of residual components.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub verdict: ZeroVerdict,
    /// Zero-based indices of the first failing component.
    pub component: Option<Vec<usize>>,
}

impl ConditionVerdict {
    pub fn passed(&self) -> bool {
        self.verdict.is_zero()
    }

    fn evaluate<'a>(entries: impl IntoIterator<Item = (Vec<usize>, &'a Expr)>, region: &Region, tol: f64) -> Result<Self, IdentityError> {
        let mut seen = Vec::new();
        for (idx, e) in entries {
            let v = is_zero(e, region, tol)?;
            if !v.is_zero() {
                return Ok(Self {
                    verdict: v,
                    component: Some(idx),
                });
            }
            seen.push(v);
        }
        Ok(Self {
            verdict: ZeroVerdict::combine(&seen),
            component: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regularity {
    /// `det k` is not identically zero; `proved` when this was decided on
    /// the exact polynomial.
    Regular { proved: bool, min_abs_det: f64 },
    /// `det k` vanishes identically on the region.
    Singular { witness: Vec<f64> },
}

impl Regularity {
    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular { .. })
    }
}

/// Outcome of [`check_multiplier`].
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub symmetry: ConditionVerdict,
    pub regularity: Regularity,
    pub determinant: Expr,
    pub nabla: ConditionVerdict,
    pub phi: ConditionVerdict,
    pub closure: ConditionVerdict,
    pub warnings: Vec<String>,
    pub samples: usize,
    pub seed: u64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }

    /// Symmetry, nabla, phi and closure all hold; regularity is not
    /// considered.
    pub fn conditions_passed(&self) -> bool {
        self.symmetry.passed() && self.nabla.passed() && self.phi.passed() && self.closure.passed()
    }

    /// Name of the first failing condition, in the order symmetry,
    /// regularity, nabla, phi, closure.
    pub fn failure(&self) -> Option<&'static str> {
        if !self.symmetry.passed() {
            Some("symmetry")
        } else if !self.regularity.is_regular() {
            Some("regularity")
        } else if !self.nabla.passed() {
            Some("nabla")
        } else if !self.phi.passed() {
            Some("phi")
        } else if !self.closure.passed() {
            Some("closure")
        } else {
            None
        }
    }

    /// Witness point of the first failing condition.
    pub fn witness(&self) -> Option<&[f64]> {
        fn from(c: &ConditionVerdict) -> Option<&[f64]> {
            match &c.verdict {
                ZeroVerdict::Nonzero { witness, .. } => Some(witness.as_slice()),
                _ => None,
            }
        }
        match self.failure()? {
            "symmetry" => from(&self.symmetry),
            "regularity" => match &self.regularity {
                Regularity::Singular { witness } => Some(witness.as_slice()),
                Regularity::Regular { .. } => None,
            },
            "nabla" => from(&self.nabla),
            "phi" => from(&self.phi),
            _ => from(&self.closure),
        }
    }
}

/// Message used when `gamma(0) != 0`.
pub const ORIGIN_WARNING: &str = "gamma does not vanish at the origin; no regular Lagrangian can exist";

/// Checks all reduced Helmholtz conditions for `k` on `region`.
pub fn check_multiplier(sode: &ReducedSode, k: &Multiplier, region: &Region, tol: f64) -> Result<CheckReport, IdentityError> {
    let n = sode.dim();
    let conn = ConnectionData::new(sode);
    let mut warnings = Vec::new();
    if !sode.vanishes_at_origin() {
        warnings.push(ORIGIN_WARNING.to_string());
    }

    let symmetry = ConditionVerdict {
        verdict: ZeroVerdict::ProvedZero,
        component: None,
    };

    let determinant = k.determinant();
    let regularity = regularity(&determinant, region, tol)?;

    let nabla = nabla_residual_with(sode, k, &conn.lambda);
    let nabla = ConditionVerdict::evaluate(
        (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).map(|(i, j)| (vec![i, j], &nabla[i][j])),
        region,
        tol,
    )?;

    let phi = phi_residual_with(k, &conn.phi);
    let phi = ConditionVerdict::evaluate(
        (0..n).flat_map(|j| (j + 1..n).map(move |m| (j, m))).map(|(j, m)| (vec![j, m], &phi[j][m])),
        region,
        tol,
    )?;

    let closure = closure_residual(k);
    let closure = ConditionVerdict::evaluate(
        (0..n)
            .flat_map(|i| (0..n).flat_map(move |j| (i + 1..n).map(move |l| (i, j, l))))
            .map(|(i, j, l)| (vec![i, j, l], &closure[i][j][l])),
        region,
        tol,
    )?;

    Ok(CheckReport {
        symmetry,
        regularity,
        determinant,
        nabla,
        phi,
        closure,
        warnings,
        samples: region.samples(),
        seed: region.seed(),
    })
}

fn regularity(det: &Expr, region: &Region, tol: f64) -> Result<Regularity, IdentityError> {
    let points = region.points()?;
    let mut min_abs_det = f64::INFINITY;
    for p in points {
        let v = det.eval(p, &Params::new()).map_err(|source| IdentityError::Eval { point: p.clone(), source })?;
        min_abs_det = min_abs_det.min(v.abs());
    }
    let witness = points.first().cloned().unwrap_or_default();
    Ok(match is_zero(det, region, tol)? {
        ZeroVerdict::ProvedZero | ZeroVerdict::SampledZero { .. } => Regularity::Singular { witness },
        ZeroVerdict::Nonzero { .. } => Regularity::Regular {
            proved: det.to_poly(region.dim()).is_some(),
            min_abs_det,
        },
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::{parse, Constraint, SymbolTable};
    use crate::liealg::{catalog, CATALOG_NAMES};
    use crate::rational::int;
    use proptest::prelude::*;

    pub(crate) fn bloch_iserles() -> ReducedSode {
        let alg = catalog("bloch_iserles_2").unwrap();
        let sym = SymbolTable::new(alg.names().to_vec(), vec![]);
        let p = |t: &str| parse(t, &sym).unwrap();
        ReducedSode::new(alg, vec![p("-2*y*(x+z)"), p("x^2 - z^2"), p("2*y*(x+z)")], Params::new()).unwrap()
    }

    fn diag(values: &[i64]) -> Multiplier {
        Multiplier::from_fn(values.len(), |i, j| if i == j { Expr::int(values[i]) } else { Expr::zero() })
    }

    #[test]
    fn bloch_iserles_diag_passes() {
        let s = bloch_iserles();
        let k = diag(&[1, 2, 1]);
        assert!(nabla_residual(&s, &k).iter().flatten().all(Expr::is_const_zero));
        assert!(phi_residual(&s, &k).iter().flatten().all(Expr::is_const_zero));
        let r = check_multiplier(&s, &k, &Region::new(3), 1e-9).unwrap();
        assert!(r.passed(), "{:?}", r.failure());
        assert_eq!(r.nabla.verdict, ZeroVerdict::ProvedZero);
        assert!(matches!(r.regularity, Regularity::Regular { proved: true, .. }));
    }

    #[test]
    fn heisenberg_identity_fails_nabla() {
        let s = ReducedSode::canonical(catalog("heisenberg3").unwrap());
        let r = check_multiplier(&s, &Multiplier::constant_identity(3), &Region::new(3), 1e-9).unwrap();
        // N_12 = w3 / 2
        assert_eq!(r.failure(), Some("nabla"));
        assert_eq!(r.nabla.component, Some(vec![0, 1]));
        assert!(r.witness().unwrap()[2] != 0.0);
    }

    #[test]
    fn abelian_constant_k_is_fine() {
        let s = ReducedSode::canonical(catalog("abelian3").unwrap());
        let k = Multiplier::from_fn(3, |i, j| Expr::int((i + 2 * j) as i64 + 1));
        assert!(nabla_residual(&s, &k).iter().flatten().all(Expr::is_const_zero));
    }

    #[test]
    fn closure_examples() {
        let k = diag(&[3, -1]);
        assert!(closure_residual(&k).iter().flatten().flatten().all(Expr::is_const_zero));
        let sym = SymbolTable::standard(3);
        let l = parse("w1^3*w2 - exp(w3*w1) + ln(abs(w2 - 3))", &sym).unwrap();
        let h = Multiplier::hessian(&l, 3);
        let region = Region::new(3).with_constraint(Constraint::negative(parse("w2 - 3", &sym).unwrap()));
        for t in closure_residual(&h).iter().flatten().flatten() {
            assert!(is_zero(t, &region, 1e-9).unwrap().is_zero());
        }
    }

    #[test]
    fn a48_closure_failure() {
        // k11 = (w4)^2 F with F = w4: d k11/d w4 - d k41/d w1 = 3 (w4)^2
        let k = Multiplier::from_fn(4, |i, j| match (i, j) {
            (0, 0) => Expr::var(3).powi(3),
            _ => Expr::zero(),
        });
        let t = closure_residual(&k);
        assert_eq!(t[0][0][3], (Expr::int(3) * Expr::var(3).powi(2)).expand(4));
        assert!(!t[0][0][3].is_const_zero());
    }

    #[test]
    fn heisenberg_singular_constant_member() {
        // k11 = k33 = 1, k13 = 1: inside the nabla nullspace, det = 0
        let s = ReducedSode::canonical(catalog("heisenberg3").unwrap());
        let k = Multiplier::from_fn(3, |i, j| match (i, j) {
            (0, 0) | (2, 2) | (0, 2) => Expr::one(),
            _ => Expr::zero(),
        });
        let r = check_multiplier(&s, &k, &Region::new(3), 1e-9).unwrap();
        assert!(r.nabla.passed());
        assert!(matches!(r.regularity, Regularity::Singular { .. }));
        assert_eq!(r.failure(), Some("regularity"));
    }

    #[test]
    fn affine_case_one_hessian_passes() {
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec![]);
        let p = |t: &str| parse(t, &sym).unwrap();
        let s = ReducedSode::new(catalog("affine_line").unwrap(), vec![Expr::zero(), p("x*(x - y)")], Params::new()).unwrap();
        let k = Multiplier::hessian(&p("-x*ln(abs(x - y))"), 2);
        let region = Region::new(2)
            .with_constraint(Constraint::positive(p("x - y - 1/10")))
            .with_constraint(Constraint::positive(p("x - 1/10")));
        let r = check_multiplier(&s, &k, &region, 1e-9).unwrap();
        assert!(r.passed(), "{:?} {:?}", r.failure(), r.witness());
        assert!(matches!(r.nabla.verdict, ZeroVerdict::SampledZero { .. }));
        // det k = -1/(x - y)^2
        for pt in region.points().unwrap() {
            let det = r.determinant.eval(pt, &Params::new()).unwrap();
            let expected = -1.0 / (pt[0] - pt[1]).powi(2);
            assert!((det - expected).abs() <= 1e-9 * expected.abs());
        }
    }

    #[test]
    fn affine_a_equals_one_phi_is_trivial() {
        let sym = SymbolTable::new(vec!["x".into(), "y".into()], vec!["b".into()]);
        let gamma = parse("x*(b*x - y)", &sym).unwrap();
        for b in [-2, 1, 3] {
            let s = ReducedSode::new(
                catalog("affine_line").unwrap(),
                vec![Expr::zero(), gamma.clone()],
                Params::new().with("b", int(b)),
            )
            .unwrap();
            let k = Multiplier::from_fn(2, |i, j| Expr::var(i) * Expr::var(j) + Expr::var(0).exp());
            assert!(phi_residual(&s, &k).iter().flatten().all(Expr::is_const_zero));
        }
    }

    #[test]
    fn origin_warning() {
        let s = ReducedSode::new(catalog("abelian1").unwrap(), vec![Expr::one()], Params::new()).unwrap();
        let r = check_multiplier(&s, &Multiplier::constant_identity(1), &Region::new(1), 1e-9).unwrap();
        assert_eq!(r.warnings, vec![ORIGIN_WARNING.to_string()]);
    }

    fn rational_vector(len: usize) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-4i64..5, len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn canonical_nabla_implies_phi(idx in 0usize..CATALOG_NAMES.len(), coeffs in rational_vector(10)) {
            let alg = catalog(CATALOG_NAMES[idx]).unwrap();
            let s = ReducedSode::canonical(alg.clone());
            let family = solve_nabla_ansatz(&s, 0).unwrap();
            let k = family.combination(&coeffs.iter().map(|&c| int(c)).collect::<Vec<_>>());
            prop_assert!(nabla_residual(&s, &k).iter().flatten().all(|e| e.to_poly(alg.dim()).unwrap().is_zero()));
            prop_assert!(phi_residual(&s, &k).iter().flatten().all(|e| e.to_poly(alg.dim()).unwrap().is_zero()));
        }
    }
}
