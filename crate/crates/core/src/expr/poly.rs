//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops;

use num_traits::{One, Signed, Zero};

use super::{Expr, Params};
use crate::rational::{self, Rational};

/// Exponent vector, one entry per coordinate.
pub type Monomial = Vec<u32>;

/// Polynomial in `nvars` coordinates; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, value: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], value);
        p
    }

    pub fn var(nvars: usize, index: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[index] = 1;
        Self::monomial(exps, Rational::one())
    }

    pub fn monomial(exps: Monomial, coeff: Rational) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Constant term.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&vec![0; self.nvars])
    }

    /// `Some(c)` when the polynomial is the constant `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    pub fn add_term(&mut self, exps: Monomial, coeff: Rational) {
        debug_assert_eq!(exps.len(), self.nvars);
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(slot) => {
                slot.insert(coeff);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coeff;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        if factor.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * factor)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut acc = Self::constant(self.nvars, Rational::one());
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    pub fn derivative(&self, index: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m[index];
            if e == 0 {
                continue;
            }
            let mut dm = m.clone();
            dm[index] -= 1;
            out.add_term(dm, c * Rational::from_integer(e.into()));
        }
        out
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(m) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| m.iter().zip(point).fold(rational::to_f64(c), |acc, (&e, &x)| acc * x.powi(e as i32)))
            .sum()
    }

    /// Expanded expression; monomials in ascending order.
    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().map(|(m, c)| {
            let factors = m.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| Expr::var(i).powi(e as i32));
            Expr::product(std::iter::once(Expr::Const(c.clone())).chain(factors))
        }))
    }
}

impl ops::Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl ops::Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl ops::Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                *acc.entry(m).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { nvars: self.nvars, terms: acc }
    }
}

impl ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

/// All exponent vectors in `nvars` variables with total degree `<= degree`,
/// ordered by degree and then lexicographically (descending in `w1`).
pub fn monomials_up_to(nvars: usize, degree: u32) -> Vec<Monomial> {
    fn fill(prefix: &mut Monomial, remaining_vars: usize, budget: u32, out: &mut Vec<Monomial>) {
        if remaining_vars == 0 {
            if budget == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for e in (0..=budget).rev() {
            prefix.push(e);
            fill(prefix, remaining_vars - 1, budget - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        fill(&mut Vec::with_capacity(nvars), nvars, d, &mut out);
    }
    out
}

impl Expr {
    /// Exact expanded form, or `None` when the expression is not a
    /// polynomial in the coordinates (transcendental nodes, division by a
    /// non-constant, unassigned parameters).
    pub fn as_polynomial(&self, nvars: usize, params: &Params) -> Option<Poly> {
        Some(match self {
            Expr::Const(c) => Poly::constant(nvars, c.clone()),
            Expr::Var(i) => {
                if *i >= nvars {
                    return None;
                }
                Poly::var(nvars, *i)
            }
            Expr::Param(name) => Poly::constant(nvars, params.get(name)?.clone()),
            Expr::Add(ts) => {
                let mut acc = Poly::zero(nvars);
                for t in ts {
                    acc = &acc + &t.as_polynomial(nvars, params)?;
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = Poly::constant(nvars, Rational::one());
                for f in fs {
                    acc = &acc * &f.as_polynomial(nvars, params)?;
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Expr::Div(a, b) => {
                let den = b.as_polynomial(nvars, params)?.as_constant()?;
                if den.is_zero() {
                    return None;
                }
                a.as_polynomial(nvars, params)?.scale(&den.recip())
            }
            Expr::Pow(b, e) => {
                let base = b.as_polynomial(nvars, params)?;
                if *e >= 0 {
                    base.pow(*e as u32)
                } else {
                    let c = base.as_constant()?;
                    if c.is_zero() {
                        return None;
                    }
                    Poly::constant(nvars, num_traits::pow::Pow::pow(&c, *e))
                }
            }
            Expr::Abs(u) => {
                let c = u.as_polynomial(nvars, params)?.as_constant()?;
                Poly::constant(nvars, c.abs())
            }
            Expr::Exp(u) => {
                let c = u.as_polynomial(nvars, params)?.as_constant()?;
                if !c.is_zero() {
                    return None;
                }
                Poly::constant(nvars, Rational::one())
            }
            Expr::LnAbs(u) => {
                let c = u.as_polynomial(nvars, params)?.as_constant()?;
                if !c.abs().is_one() {
                    return None;
                }
                Poly::zero(nvars)
            }
        })
    }

    /// Expanded polynomial form when available, otherwise a clone.
    pub fn expand(&self, nvars: usize) -> Expr {
        self.to_poly(nvars).map_or_else(|| self.clone(), |p| p.to_expr())
    }

    /// [`Expr::as_polynomial`] with no parameter assignments.
    pub fn to_poly(&self, nvars: usize) -> Option<Poly> {
        self.as_polynomial(nvars, &Params::new())
    }
}
