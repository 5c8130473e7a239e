//! A small symbolic expression engine over the coordinates `w1..wn` of the
//! Lie algebra and named rational parameters.
//!
//! Expressions are immutable trees built through simplifying constructors
//! ([`Expr::sum`], [`Expr::product`], ...). The simplification is local and
//! cheap: constants are folded, nested sums and products are flattened, like
//! terms and repeated factors are merged. Deciding whether an expression is
//! identically zero is the job of [`is_zero`], which first attempts an exact
//! polynomial normalization and falls back to seeded sampling.

mod display;
mod eval;
mod identity;
mod parse;
mod poly;
mod region;

use std::collections::{BTreeMap, BTreeSet};
use std::ops;

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

pub use display::ExprDisplay;
pub use eval::EvalError;
pub use identity::{is_zero, IdentityError, ZeroVerdict};
pub use parse::{parse, ParseError, ParseErrorKind, SymbolTable};
pub use poly::{monomials_up_to, Monomial, Poly};
pub use region::{Constraint, Region, RegionError, Sign, DEFAULT_MARGIN};

/// Rational values assigned to named parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, Rational>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Rational) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: Rational) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.0.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Symbolic expression tree.
///
/// Coordinates are addressed by a zero-based index (`Var(0)` is `w1`).
/// `LnAbs(u)` is `ln|u|`; there is no plain logarithm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Rational),
    Var(usize),
    Param(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    LnAbs(Box<Expr>),
    Abs(Box<Expr>),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Self {
        Expr::Const(Rational::one())
    }

    pub fn constant(value: Rational) -> Self {
        Expr::Const(value)
    }

    pub fn int(value: i64) -> Self {
        Expr::Const(crate::rational::int(value))
    }

    pub fn frac(num: i64, den: i64) -> Self {
        Expr::Const(crate::rational::frac(num, den))
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn param(name: &str) -> Self {
        Expr::Param(name.to_string())
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_const_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_const_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Sum with constant folding, flattening, and merging of like terms.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Rational::zero();
        let mut merged: Vec<(Rational, Expr)> = Vec::new();
        let push = |coeff: Rational, rest: Expr, merged: &mut Vec<(Rational, Expr)>| {
            if let Some(slot) = merged.iter_mut().find(|(_, r)| *r == rest) {
                slot.0 += coeff;
            } else {
                merged.push((coeff, rest));
            }
        };
        let mut stack: Vec<(Rational, Expr)> = terms.into_iter().map(|t| (Rational::one(), t)).collect();
        stack.reverse();
        while let Some((scale, term)) = stack.pop() {
            match term {
                Expr::Const(c) => constant += scale * c,
                Expr::Add(inner) => {
                    for t in inner.into_iter().rev() {
                        stack.push((scale.clone(), t));
                    }
                }
                other => {
                    let (coeff, rest) = other.split_coefficient();
                    let coeff = scale * coeff;
                    if let Expr::Add(inner) = rest {
                        for t in inner.into_iter().rev() {
                            stack.push((coeff.clone(), t));
                        }
                    } else {
                        push(coeff, rest, &mut merged);
                    }
                }
            }
        }
        let mut out: Vec<Expr> = merged
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, rest)| Expr::scaled(c, rest))
            .collect();
        if !constant.is_zero() {
            out.push(Expr::Const(constant));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }

    /// Product with constant folding, flattening, and merging of equal bases
    /// into integer powers.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut coeff = Rational::one();
        let mut bases: Vec<(Expr, i32)> = Vec::new();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        stack.reverse();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    coeff *= c;
                }
                Expr::Mul(inner) => {
                    for g in inner.into_iter().rev() {
                        stack.push(g);
                    }
                }
                other => {
                    let (base, exp) = match other {
                        Expr::Pow(b, e) => (*b, e),
                        b => (b, 1),
                    };
                    if let Some(slot) = bases.iter_mut().find(|(b, _)| *b == base) {
                        slot.1 += exp;
                    } else {
                        bases.push((base, exp));
                    }
                }
            }
        }
        bases.sort_by(|(a, _), (b, _)| {
            let rank = |e: &Expr| !matches!(e, Expr::Param(_));
            (rank(a), a).cmp(&(rank(b), b))
        });
        let mut out: Vec<Expr> = Vec::with_capacity(bases.len() + 1);
        for (base, exp) in bases {
            match exp {
                0 => {}
                1 => out.push(base),
                e => out.push(Expr::Pow(Box::new(base), e)),
            }
        }
        if out.is_empty() {
            return Expr::Const(coeff);
        }
        if coeff.is_one() && out.len() == 1 {
            return out.pop().unwrap();
        }
        if !coeff.is_one() {
            out.insert(0, Expr::Const(coeff));
        }
        Expr::Mul(out)
    }

    /// `coeff * rest` where `rest` carries no constant factor of its own.
    fn scaled(coeff: Rational, rest: Expr) -> Expr {
        if coeff.is_one() {
            return rest;
        }
        match rest {
            Expr::Mul(mut fs) => {
                fs.insert(0, Expr::Const(coeff));
                Expr::Mul(fs)
            }
            Expr::Const(c) => Expr::Const(coeff * c),
            other => Expr::Mul(vec![Expr::Const(coeff), other]),
        }
    }

    /// Splits a term into its rational coefficient and the remaining factor.
    pub fn split_coefficient(self) -> (Rational, Expr) {
        match self {
            Expr::Const(c) => (c, Expr::one()),
            Expr::Mul(mut fs) => {
                if let Some(Expr::Const(_)) = fs.first() {
                    let Expr::Const(c) = fs.remove(0) else { unreachable!() };
                    let rest = if fs.len() == 1 { fs.pop().unwrap() } else { Expr::Mul(fs) };
                    (c, rest)
                } else {
                    (Rational::one(), Expr::Mul(fs))
                }
            }
            other => (Rational::one(), other),
        }
    }

    pub fn negate(self) -> Expr {
        Expr::product([Expr::int(-1), self])
    }

    pub fn powi(self, exp: i32) -> Expr {
        match (self, exp) {
            (_, 0) => Expr::one(),
            (base, 1) => base,
            (Expr::Const(c), e) if !(c.is_zero() && e < 0) => Expr::Const(num_traits::pow::Pow::pow(&c, e)),
            (Expr::Pow(b, m), e) => Expr::product([Expr::Pow(b, m * e)]),
            (base, e) => Expr::product([Expr::Pow(Box::new(base), e)]),
        }
    }

    pub fn quotient(self, den: Expr) -> Expr {
        match den {
            Expr::Const(c) if !c.is_zero() => Expr::product([Expr::Const(c.recip()), self]),
            den => {
                if self.is_const_zero() {
                    Expr::zero()
                } else if self == den {
                    Expr::one()
                } else {
                    Expr::Div(Box::new(self), Box::new(den))
                }
            }
        }
    }

    pub fn exp(self) -> Expr {
        if self.is_const_zero() {
            Expr::one()
        } else {
            Expr::Exp(Box::new(self))
        }
    }

    pub fn ln_abs(self) -> Expr {
        match self {
            Expr::Abs(inner) => Expr::LnAbs(inner),
            Expr::Const(c) if c.abs().is_one() => Expr::zero(),
            other => Expr::LnAbs(Box::new(other)),
        }
    }

    pub fn abs(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.abs()),
            Expr::Abs(inner) => Expr::Abs(inner),
            other => Expr::Abs(Box::new(other)),
        }
    }

    /// Exact partial derivative with respect to coordinate `index` (zero-based).
    pub fn differentiate(&self, index: usize) -> Expr {
        match self {
            Expr::Const(_) | Expr::Param(_) => Expr::zero(),
            Expr::Var(i) => {
                if *i == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(terms) => Expr::sum(terms.iter().map(|t| t.differentiate(index))),
            Expr::Mul(factors) => {
                let mut terms = Vec::new();
                for (k, f) in factors.iter().enumerate() {
                    let df = f.differentiate(index);
                    if df.is_const_zero() {
                        continue;
                    }
                    let others = factors.iter().enumerate().filter(|(m, _)| *m != k).map(|(_, g)| g.clone());
                    terms.push(Expr::product(others.chain(std::iter::once(df))));
                }
                Expr::sum(terms)
            }
            Expr::Div(num, den) => {
                let dn = num.differentiate(index);
                let dd = den.differentiate(index);
                if dd.is_const_zero() {
                    return dn.quotient((**den).clone());
                }
                let numer = Expr::sum([Expr::product([dn, (**den).clone()]), Expr::product([Expr::int(-1), (**num).clone(), dd])]);
                numer.quotient((**den).clone().powi(2))
            }
            Expr::Pow(base, e) => {
                let db = base.differentiate(index);
                if db.is_const_zero() {
                    return Expr::zero();
                }
                Expr::product([Expr::int(*e as i64), (**base).clone().powi(e - 1), db])
            }
            Expr::Exp(u) => {
                let du = u.differentiate(index);
                if du.is_const_zero() {
                    return Expr::zero();
                }
                Expr::product([du, self.clone()])
            }
            Expr::LnAbs(u) => {
                let du = u.differentiate(index);
                if du.is_const_zero() {
                    return Expr::zero();
                }
                du.quotient((**u).clone())
            }
            Expr::Abs(u) => {
                let du = u.differentiate(index);
                if du.is_const_zero() {
                    return Expr::zero();
                }
                Expr::product([du, (**u).clone().quotient(self.clone())])
            }
        }
    }

    /// Replaces every assigned parameter by its value.
    pub fn bind(&self, params: &Params) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Param(name) => params.get(name).map(|v| Expr::Const(v.clone())),
            _ => None,
        })
    }

    /// Replaces coordinate `Var(i)` by `values[i]`.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Var(i) => values.get(*i).cloned(),
            _ => None,
        })
    }

    fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => f(self).unwrap_or_else(|| self.clone()),
            Expr::Add(ts) => Expr::sum(ts.iter().map(|t| t.map_leaves(f))),
            Expr::Mul(fs) => Expr::product(fs.iter().map(|t| t.map_leaves(f))),
            Expr::Div(a, b) => a.map_leaves(f).quotient(b.map_leaves(f)),
            Expr::Pow(b, e) => b.map_leaves(f).powi(*e),
            Expr::Exp(u) => u.map_leaves(f).exp(),
            Expr::LnAbs(u) => u.map_leaves(f).ln_abs(),
            Expr::Abs(u) => u.map_leaves(f).abs(),
        }
    }

    fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => Vec::new(),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().collect(),
            Expr::Div(a, b) => vec![a, b],
            Expr::Pow(b, _) | Expr::Exp(b) | Expr::LnAbs(b) | Expr::Abs(b) => vec![b],
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(i) => Some(*i),
            _ => self.children().into_iter().filter_map(Expr::max_var).max(),
        }
    }

    /// Names of all parameters referenced.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        if let Expr::Param(name) = self {
            out.insert(name.clone());
        }
        for c in self.children() {
            c.collect_params(out);
        }
    }

    /// True when the tree contains `exp`, `ln|.|` or `abs`.
    pub fn is_transcendental(&self) -> bool {
        matches!(self, Expr::Exp(_) | Expr::LnAbs(_) | Expr::Abs(_)) || self.children().into_iter().any(Expr::is_transcendental)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    /// Renders with the given coordinate names (`w1..wn` when empty).
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay::new(self, names)
    }
}

/// Gradient of `e` in `n` coordinates.
pub fn gradient(e: &Expr, n: usize) -> Vec<Expr> {
    (0..n).map(|i| e.differentiate(i)).collect()
}

/// Hessian of `e` in `n` coordinates; symmetric by construction.
pub fn hessian(e: &Expr, n: usize) -> Vec<Vec<Expr>> {
    let grad = gradient(e, n);
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let h = grad[i].differentiate(j);
            out[j][i] = h.clone();
            out[i][j] = h;
        }
    }
    out
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => Expr::sum([
            Expr::product([m[0][0].clone(), m[1][1].clone()]),
            Expr::product([Expr::int(-1), m[0][1].clone(), m[1][0].clone()]),
        ]),
        n => {
            let mut terms = Vec::with_capacity(n);
            for col in 0..n {
                if m[0][col].is_const_zero() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, e)| e.clone()).collect())
                    .collect();
                let sign = if col % 2 == 0 { 1 } else { -1 };
                terms.push(Expr::product([Expr::int(sign), m[0][col].clone(), determinant(&minor)]));
            }
            Expr::sum(terms)
        }
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Self {
        Expr::Const(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([a, b.negate()]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| a.quotient(b));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::negate(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn w(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn sums_merge_like_terms() {
        let e = &(&w(0) * &w(1)) + &(Expr::int(2) * w(1) * w(0));
        assert_eq!(e, Expr::product([Expr::int(3), w(0), w(1)]));
        assert_eq!(&w(0) - &w(0), Expr::zero());
        let s = Expr::sum([w(0), Expr::int(3), Expr::int(-3)]);
        assert_eq!(s, w(0));
    }

    #[test]
    fn products_merge_powers() {
        assert_eq!(&w(0) * &w(0), w(0).powi(2));
        assert_eq!(w(0).powi(2) * w(0).powi(-2), Expr::one());
        assert_eq!(w(0) * Expr::zero(), Expr::zero());
        assert_eq!(w(0).powi(2).powi(3), w(0).powi(6));
    }

    #[test]
    fn constant_scaling_distributes_over_sums() {
        let e = Expr::int(2) * (w(0) + w(1)) - w(0);
        let expected = Expr::sum([w(0), Expr::product([Expr::int(2), w(1)])]);
        assert_eq!(e, expected);
    }

    #[test]
    fn derivative_of_square() {
        let e = w(0).powi(2);
        assert_eq!(e.differentiate(0), Expr::int(2) * w(0));
        assert_eq!(e.differentiate(1), Expr::zero());
    }

    #[test]
    fn derivative_of_ln_abs_is_quotient() {
        let u = w(0) - w(1);
        let d = u.clone().ln_abs().differentiate(0);
        assert_eq!(d, Expr::one().quotient(u));
    }

    #[test]
    fn bind_replaces_params() {
        let e = Expr::param("b") * w(0) - w(1);
        let bound = e.bind(&Params::new().with("b", frac(1, 2)));
        assert_eq!(bound, Expr::frac(1, 2) * w(0) - w(1));
        assert!(bound.params().is_empty());
    }

    #[test]
    fn hessian_is_symmetric() {
        let l = w(0) * w(1).powi(3) + w(2).exp() * w(0);
        let h = hessian(&l, 3);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[i][j], h[j][i]);
            }
        }
    }

    #[test]
    fn determinant_of_diagonal() {
        let m = vec![
            vec![Expr::int(1), Expr::zero(), Expr::zero()],
            vec![Expr::zero(), Expr::int(2), Expr::zero()],
            vec![Expr::zero(), Expr::zero(), w(0)],
        ];
        assert_eq!(determinant(&m), Expr::int(2) * w(0));
    }
}
