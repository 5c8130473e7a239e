//! Cohomological obstructions to a Lagrangian whose Hessian is a multiplier.
//!
//! For a candidate `l` the Euler–Poincaré defect is
//! `V_i = gamma^k d2l/dw^i dw^k - C^l_ki w^k dl/dw^l`. When the Hessian of `l`
//! satisfies the Helmholtz conditions, `V_i = mu_ji w^j + nu_i` is affine,
//! `nu` is a 1-cocycle and `mu` a 2-cocycle. `l` can be corrected into a
//! Lagrangian exactly when `nu = 0` and `mu_ij = theta_k C^k_ij` for some
//! `theta`; the corrected Lagrangian is `l + theta_k w^k`.

use nalgebra::{DMatrix, DVector};
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::epdyn::{ep_check, EpCheck};
use crate::expr::{self, is_zero, Expr, IdentityError, Params, Region, ZeroVerdict};
use crate::helmholtz::{check_multiplier, recover_potential, solve_ansatz, AnsatzError, AnsatzFamily, CheckReport, Multiplier, PotentialError};
use crate::liealg::{pairs, Cochain1, Cochain2};
use crate::rational::{self, Rational};
use crate::redgeom::{compute_psi, linear, ExprMatrix, ReducedSode};

/// Largest denominator accepted when snapping floats to rationals.
pub const SNAP_MAX_DENOMINATOR: u64 = 1_000_000;
/// Distance within which a float is snapped.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// `V_i = gamma^k d2l/dw^i dw^k - C^l_ki w^k dl/dw^l`.
pub fn ep_vector(sode: &ReducedSode, l: &Expr) -> Vec<Expr> {
    let n = sode.dim();
    let grad = expr::gradient(l, n);
    let alg = sode.alg();
    (0..n)
        .map(|i| {
            let mut terms = vec![sode.apply(&grad[i])];
            for (m, g) in grad.iter().enumerate() {
                let wc = linear(n, |k| alg.c(m, k, i).clone());
                if !wc.is_const_zero() {
                    terms.push(-(wc * g));
                }
            }
            Expr::sum(terms).expand(n)
        })
        .collect()
}

/// A constant read off from `V`, exact when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub value: f64,
    pub exact: Option<Rational>,
    /// The exact value came from snapping a float rather than from exact
    /// polynomial arithmetic.
    pub snapped: bool,
}

impl Coefficient {
    fn exact(r: Rational) -> Self {
        Self {
            value: rational::to_f64(&r),
            exact: Some(r),
            snapped: false,
        }
    }

    fn from_float(value: f64) -> Self {
        let exact = rational::snap(value, SNAP_MAX_DENOMINATOR, SNAP_TOLERANCE);
        Self {
            value,
            snapped: exact.is_some(),
            exact,
        }
    }

    /// Exact value, or the float converted without rounding.
    pub fn as_rational(&self) -> Rational {
        self.exact
            .clone()
            .unwrap_or_else(|| Rational::from_float(self.value).unwrap_or_else(Rational::zero))
    }

    fn is_zero(&self, tol: f64) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.value.abs() < tol,
        }
    }
}

/// How `nu` and `mu` were read off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extraction {
    /// Coefficients of the exact polynomial `V`.
    Polynomial,
    /// Value and first derivatives at the origin.
    Origin,
    /// Least-squares affine fit over the region samples.
    Fit,
}

impl Extraction {
    pub fn label(self) -> &'static str {
        match self {
            Extraction::Polynomial => "polynomial",
            Extraction::Origin => "origin",
            Extraction::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObstructionData {
    pub v: Vec<Expr>,
    pub nu: Vec<Coefficient>,
    /// `mu[i][j] = mu_ij`, so that `V_i = mu[j][i] w^j + nu[i]`.
    pub mu: Vec<Vec<Coefficient>>,
    pub extraction: Extraction,
    pub affine: ZeroVerdict,
    /// `dV_i/dw^j + dV_j/dw^i = 0`.
    pub skew: ZeroVerdict,
    pub chi: ExprMatrix,
    /// `chi_ij - mu_ij - C^k_ij dl/dw^k = 0`.
    pub chi_check: ZeroVerdict,
    pub nu_closed: bool,
    pub mu_closed: bool,
    pub helmholtz: CheckReport,
}

impl ObstructionData {
    pub fn affine_ok(&self) -> bool {
        self.affine.is_zero()
    }

    pub fn cocycle_ok(&self) -> bool {
        self.nu_closed && self.mu_closed
    }

    /// `nu` as an exact cochain, when every component is exact.
    pub fn nu_exact(&self) -> Option<Cochain1> {
        self.nu.iter().map(|c| c.exact.clone()).collect::<Option<Vec<_>>>().map(Cochain1)
    }

    /// `mu` as an exact cochain, when every component is exact.
    pub fn mu_exact(&self) -> Option<Cochain2> {
        let n = self.nu.len();
        let mut out = Cochain2::zero(n);
        for (i, j) in pairs(n) {
            out.set(i, j, self.mu[i][j].exact.clone()?);
        }
        Some(out)
    }

    pub fn any_snapped(&self) -> bool {
        self.nu.iter().chain(self.mu.iter().flatten()).any(|c| c.snapped)
    }
}

#[derive(Debug, Clone, Error)]
pub enum ObstructError {
    #[error("the Hessian of l fails the {} condition", .0.failure().unwrap_or("helmholtz"))]
    Helmholtz(Box<CheckReport>),
    #[error("V is not affine in w (component {component}); the input is inconsistent", component = .component + 1)]
    NotAffine { component: usize, witness: Vec<f64> },
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("not enough sample points for an affine fit")]
    Underdetermined,
}

/// Checks the Hessian of `l`, then reads off `nu` and `mu` and checks that
/// they are cocycles.
pub fn extract_obstructions(sode: &ReducedSode, l: &Expr, region: &Region, tol: f64) -> Result<ObstructionData, ObstructError> {
    let n = sode.dim();
    let k = Multiplier::hessian(l, n);
    let helmholtz = check_multiplier(sode, &k, region, tol)?;
    if !helmholtz.passed() {
        return Err(ObstructError::Helmholtz(Box::new(helmholtz)));
    }

    let v = ep_vector(sode, l);
    let (nu, mu, extraction) = read_constants(&v, n, region)?;

    let mut affine = Vec::new();
    for (i, vi) in v.iter().enumerate() {
        let fit = Expr::sum(
            (0..n)
                .map(|j| Expr::Const(mu[j][i].as_rational()) * Expr::var(j))
                .chain([Expr::Const(nu[i].as_rational())]),
        );
        let verdict = is_zero(&(vi - &fit).expand(n), region, tol)?;
        if let ZeroVerdict::Nonzero { witness, .. } = &verdict {
            return Err(ObstructError::NotAffine {
                component: i,
                witness: witness.clone(),
            });
        }
        affine.push(verdict);
    }
    let affine = ZeroVerdict::combine(&affine);

    let mut skew = Vec::new();
    for (i, j) in (0..n).flat_map(|i| (i..n).map(move |j| (i, j))) {
        skew.push(is_zero(&(v[i].differentiate(j) + v[j].differentiate(i)).expand(n), region, tol)?);
    }
    let skew = ZeroVerdict::combine(&skew);

    let alg = sode.alg();
    let grad = expr::gradient(l, n);
    let psi = compute_psi(sode);
    let mut chi = vec![vec![Expr::zero(); n]; n];
    let mut chi_check = Vec::new();
    for i in 0..n {
        for j in 0..n {
            chi[i][j] = Expr::sum((0..n).flat_map(|m| [&psi[m][i] * k.get(j, m), -(&psi[m][j] * k.get(i, m))])).expand(n);
            if i < j {
                let cgrad = Expr::sum((0..n).map(|m| Expr::Const(alg.c(m, i, j).clone()) * &grad[m]));
                let e = (&chi[i][j] - Expr::Const(mu[i][j].as_rational()) - cgrad).expand(n);
                chi_check.push(is_zero(&e, region, tol)?);
            }
        }
    }
    let chi_check = ZeroVerdict::combine(&chi_check);

    let nu_closed = pairs(n).into_iter().all(|(i, j)| {
        let mut acc = Rational::zero();
        let mut approx = 0.0;
        for (m, c) in nu.iter().enumerate() {
            acc += c.as_rational() * alg.c(m, i, j);
            approx += c.value * rational::to_f64(alg.c(m, i, j));
        }
        if nu.iter().all(|c| c.exact.is_some()) {
            acc.is_zero()
        } else {
            approx.abs() < tol
        }
    });
    let mu_closed = {
        let exact = mu.iter().flatten().all(|c| c.exact.is_some());
        let mut cochain = Cochain2::zero(n);
        for (i, j) in pairs(n) {
            cochain.set(i, j, mu[i][j].as_rational());
        }
        let d = alg.d2(&cochain);
        (0..n).all(|i| {
            (i + 1..n).all(|j| {
                (j + 1..n).all(|kk| {
                    let val = d.get(i, j, kk);
                    if exact {
                        val.is_zero()
                    } else {
                        val.to_f64().is_some_and(|x| x.abs() < tol)
                    }
                })
            })
        })
    };

    Ok(ObstructionData {
        v,
        nu,
        mu,
        extraction,
        affine,
        skew,
        chi,
        chi_check,
        nu_closed,
        mu_closed,
        helmholtz,
    })
}

type Constants = (Vec<Coefficient>, Vec<Vec<Coefficient>>, Extraction);

/// `nu_i` and `mu[j][i] = dV_i/dw^j`, returned with `mu` indexed `[i][j] = mu_ij`.
fn read_constants(v: &[Expr], n: usize, region: &Region) -> Result<Constants, ObstructError> {
    let polys: Option<Vec<_>> = v.iter().map(|e| e.to_poly(n)).collect();
    // dv[i][j] = dV_i / dw^j at the origin
    let (nu, dv, how) = if let Some(polys) = polys {
        let nu = polys.iter().map(|p| Coefficient::exact(p.constant_term())).collect();
        let dv = polys
            .iter()
            .map(|p| {
                (0..n)
                    .map(|j| {
                        let mut m = vec![0; n];
                        m[j] = 1;
                        Coefficient::exact(p.coefficient(&m))
                    })
                    .collect()
            })
            .collect();
        (nu, dv, Extraction::Polynomial)
    } else if let Some((nu, dv)) = at_origin(v, n, region) {
        (nu, dv, Extraction::Origin)
    } else {
        let (nu, dv) = affine_fit(v, n, region)?;
        (nu, dv, Extraction::Fit)
    };
    let mu = (0..n).map(|i| (0..n).map(|j| dv[j][i].clone()).collect()).collect();
    Ok((nu, mu, how))
}

type Affine = (Vec<Coefficient>, Vec<Vec<Coefficient>>);

fn at_origin(v: &[Expr], n: usize, region: &Region) -> Option<Affine> {
    let origin = vec![0.0; n];
    if !region.contains(&origin) {
        return None;
    }
    let params = Params::new();
    let mut nu = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    for vi in v {
        nu.push(Coefficient::from_float(vi.eval(&origin, &params).ok()?));
        let row = (0..n)
            .map(|j| vi.differentiate(j).eval(&origin, &params).ok().map(Coefficient::from_float))
            .collect::<Option<Vec<_>>>()?;
        dv.push(row);
    }
    Some((nu, dv))
}

fn affine_fit(v: &[Expr], n: usize, region: &Region) -> Result<Affine, ObstructError> {
    let points = region.points().map_err(IdentityError::from)?;
    if points.len() < n + 1 {
        return Err(ObstructError::Underdetermined);
    }
    let design = DMatrix::from_fn(points.len(), n + 1, |r, c| if c == 0 { 1.0 } else { points[r][c - 1] });
    let svd = design.svd(true, true);
    let params = Params::new();
    let mut nu = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    for vi in v {
        let mut rhs = DVector::zeros(points.len());
        for (r, p) in points.iter().enumerate() {
            rhs[r] = vi.eval(p, &params).map_err(|source| IdentityError::Eval { point: p.clone(), source })?;
        }
        let coef = svd.solve(&rhs, 1e-12).map_err(|_| ObstructError::Underdetermined)?;
        nu.push(Coefficient::from_float(coef[0]));
        dv.push((0..n).map(|j| Coefficient::from_float(coef[j + 1])).collect());
    }
    Ok((nu, dv))
}

/// A nonzero cohomology class representative.
#[derive(Debug, Clone, PartialEq)]
pub enum ObstructionClass {
    H1 { nu: Vec<Coefficient> },
    H2 { mu: Vec<Vec<Coefficient>> },
}

impl ObstructionClass {
    pub fn label(&self) -> &'static str {
        match self {
            ObstructionClass::H1 { .. } => "H1",
            ObstructionClass::H2 { .. } => "H2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Corrected {
    /// `theta` with every free component set to zero.
    pub theta: Vec<Rational>,
    /// Zero-based indices of the free components of `theta`.
    pub theta_free: Vec<usize>,
    pub lagrangian: Expr,
    pub ep: EpCheck,
}

#[derive(Debug, Clone)]
pub enum Correction {
    Corrected(Corrected),
    Obstructed(ObstructionClass),
}

#[derive(Debug, Clone, Error)]
pub enum CorrectionError {
    #[error("nu or mu is not a cocycle")]
    NotCocycle,
    #[error("the corrected Lagrangian fails the Euler-Poincare check (component {})", .0 + 1)]
    PostCheck(usize),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

/// Removes a coboundary `mu` by adding `theta_k w^k` to `l`, then verifies
/// the result.
pub fn correct_lagrangian(sode: &ReducedSode, l: &Expr, data: &ObstructionData, region: &Region, tol: f64) -> Result<Correction, CorrectionError> {
    if !data.cocycle_ok() {
        return Err(CorrectionError::NotCocycle);
    }
    if !data.nu.iter().all(|c| c.is_zero(tol)) {
        return Ok(Correction::Obstructed(ObstructionClass::H1 { nu: data.nu.clone() }));
    }
    let n = sode.dim();
    let solved = match data.mu_exact() {
        Some(mu) => sode.alg().solve_coboundary(&mu).ok().map(|s| (s.particular, s.free)),
        None => approximate_coboundary(sode, &data.mu, tol),
    };
    let Some((theta, theta_free)) = solved else {
        return Ok(Correction::Obstructed(ObstructionClass::H2 { mu: data.mu.clone() }));
    };
    let shift = Expr::sum(theta.iter().enumerate().map(|(k, t)| Expr::Const(t.clone()) * Expr::var(k)));
    let lagrangian = (l + &shift).expand(n);
    let ep = ep_check(sode, &lagrangian, region, tol)?;
    if let Some(component) = ep.component {
        return Err(CorrectionError::PostCheck(component));
    }
    Ok(Correction::Corrected(Corrected {
        theta,
        theta_free,
        lagrangian,
        ep,
    }))
}

/// Least-squares `theta` for float `mu`, accepted when the residual is
/// below `tol`; components are snapped where possible.
fn approximate_coboundary(sode: &ReducedSode, mu: &[Vec<Coefficient>], tol: f64) -> Option<(Vec<Rational>, Vec<usize>)> {
    let n = sode.dim();
    let ps = pairs(n);
    if ps.is_empty() {
        return Some((vec![Rational::zero(); n], (0..n).collect()));
    }
    let a = DMatrix::from_fn(ps.len(), n, |r, k| rational::to_f64(sode.alg().c(k, ps[r].0, ps[r].1)));
    let b = DVector::from_iterator(ps.len(), ps.iter().map(|&(i, j)| mu[i][j].value));
    let theta = a.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    if (&a * &theta - &b).amax() >= tol {
        return None;
    }
    let exact = theta.iter().map(|&t| Coefficient::from_float(t).as_rational()).collect();
    let free = {
        let rank = a.rank(1e-12);
        if rank == n {
            Vec::new()
        } else {
            crate::exactlin::nullspace(&to_ratmatrix(sode, &ps))
                .iter()
                .filter_map(|v| v.iter().rposition(|x| !x.is_zero()))
                .collect()
        }
    };
    Some((exact, free))
}

fn to_ratmatrix(sode: &ReducedSode, ps: &[(usize, usize)]) -> crate::exactlin::RatMatrix {
    let n = sode.dim();
    crate::exactlin::RatMatrix::from_rows(ps.iter().map(|&(i, j)| (0..n).map(|k| sode.alg().c(k, i, j).clone()).collect()).collect())
}

/// Where the candidate comes from.
#[derive(Debug, Clone)]
pub enum Source {
    Lagrangian(Expr),
    /// Polynomial multiplier; the Lagrangian is recovered from it.
    Multiplier(Multiplier),
    /// Polynomial ansatz of the given degree.
    Ansatz(u32),
}

#[derive(Debug, Clone)]
pub enum Verdict {
    LagrangianFound(Corrected),
    /// Every multiplier the ansatz admits is singular.
    NoGoSingular,
    Obstructed(ObstructionClass),
    CheckFailed {
        condition: String,
        witness: Option<Vec<f64>>,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::LagrangianFound(_) => "LagrangianFound",
            Verdict::NoGoSingular => "NoGoSingular",
            Verdict::Obstructed(_) => "Obstructed",
            Verdict::CheckFailed { .. } => "CheckFailed",
        }
    }

    pub fn is_affirmative(&self) -> bool {
        matches!(self, Verdict::LagrangianFound(_))
    }
}

/// Verdict plus the evidence gathered on the way.
#[derive(Debug, Clone)]
pub struct Decision {
    pub verdict: Verdict,
    pub family: Option<AnsatzFamily>,
    /// Lagrangian fed into the obstruction stage.
    pub candidate: Option<Expr>,
    pub helmholtz: Option<CheckReport>,
    pub obstructions: Option<ObstructionData>,
}

#[derive(Debug, Clone, Error)]
pub enum DecideError {
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Obstruct(ObstructError),
    #[error(transparent)]
    Correction(#[from] CorrectionError),
}

/// Full pipeline: Helmholtz check, obstruction extraction, correction.
pub fn decide(sode: &ReducedSode, source: &Source, region: &Region, tol: f64) -> Result<Decision, DecideError> {
    let mut decision = Decision {
        verdict: Verdict::NoGoSingular,
        family: None,
        candidate: None,
        helmholtz: None,
        obstructions: None,
    };
    let l = match source {
        Source::Lagrangian(l) => l.clone(),
        Source::Multiplier(k) => recover_potential(k)?,
        Source::Ansatz(degree) => {
            let family = solve_ansatz(sode, *degree)?;
            let pick = family
                .generators
                .iter()
                .find(|g| !g.det_identically_zero)
                .map(|g| g.multiplier.clone())
                .or_else(|| family.has_regular_member().then(|| family.generic()));
            decision.family = Some(family);
            match pick {
                Some(k) => recover_potential(&k)?,
                None => return Ok(decision),
            }
        }
    };
    decision.candidate = Some(l.clone());
    let data = match extract_obstructions(sode, &l, region, tol) {
        Ok(d) => d,
        Err(ObstructError::Helmholtz(report)) => {
            decision.verdict = Verdict::CheckFailed {
                condition: report.failure().unwrap_or("helmholtz").to_string(),
                witness: report.witness().map(<[f64]>::to_vec),
            };
            decision.helmholtz = Some(*report);
            return Ok(decision);
        }
        Err(ObstructError::Identity(e)) => return Err(e.into()),
        Err(e) => return Err(DecideError::Obstruct(e)),
    };
    decision.helmholtz = Some(data.helmholtz.clone());
    decision.verdict = match correct_lagrangian(sode, &l, &data, region, tol)? {
        Correction::Corrected(c) => Verdict::LagrangianFound(c),
        Correction::Obstructed(class) => Verdict::Obstructed(class),
    };
    decision.obstructions = Some(data);
    Ok(decision)
}
