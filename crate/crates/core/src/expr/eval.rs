use num_traits::{Signed, Zero};
use thiserror::Error;

use super::{Expr, Params};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln|u| evaluated at u = 0")]
    LogOfZero,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("parameter `{0}` has no assigned value")]
    UnassignedParam(String),
    #[error("coordinate index {0} is out of range")]
    CoordinateOutOfRange(usize),
    #[error("expression has no exact rational value")]
    NotRational,
}

impl Expr {
    /// Floating-point evaluation at `point`.
    pub fn eval(&self, point: &[f64], params: &Params) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => rational::to_f64(c),
            Expr::Var(i) => *point.get(*i).ok_or(EvalError::CoordinateOutOfRange(*i))?,
            Expr::Param(name) => rational::to_f64(params.get(name).ok_or_else(|| EvalError::UnassignedParam(name.clone()))?),
            Expr::Add(ts) => {
                let mut acc = 0.0;
                for t in ts {
                    acc += t.eval(point, params)?;
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = 1.0;
                for g in fs {
                    acc *= g.eval(point, params)?;
                }
                acc
            }
            Expr::Div(a, b) => {
                let den = b.eval(point, params)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(point, params)? / den
            }
            Expr::Pow(b, e) => {
                let base = b.eval(point, params)?;
                if base == 0.0 && *e < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*e)
            }
            Expr::Exp(u) => u.eval(point, params)?.exp(),
            Expr::LnAbs(u) => {
                let v = u.eval(point, params)?;
                if v == 0.0 {
                    return Err(EvalError::LogOfZero);
                }
                v.abs().ln()
            }
            Expr::Abs(u) => u.eval(point, params)?.abs(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Value together with a magnitude scale: the sum of absolute values of
    /// the top-level summands (or `|value|` for a non-sum).
    pub fn eval_with_scale(&self, point: &[f64], params: &Params) -> Result<(f64, f64), EvalError> {
        match self {
            Expr::Add(ts) => {
                let mut value = 0.0;
                let mut scale = 0.0;
                for t in ts {
                    let v = t.eval(point, params)?;
                    value += v;
                    scale += v.abs();
                }
                Ok((value, scale))
            }
            other => {
                let v = other.eval(point, params)?;
                Ok((v, v.abs()))
            }
        }
    }

    /// Exact evaluation at a rational point; fails on `exp` and `ln|.|` of
    /// anything other than the trivial arguments removed at construction.
    pub fn eval_exact(&self, point: &[Rational], params: &Params) -> Result<Rational, EvalError> {
        Ok(match self {
            Expr::Const(c) => c.clone(),
            Expr::Var(i) => point.get(*i).cloned().ok_or(EvalError::CoordinateOutOfRange(*i))?,
            Expr::Param(name) => params.get(name).cloned().ok_or_else(|| EvalError::UnassignedParam(name.clone()))?,
            Expr::Add(ts) => {
                let mut acc = Rational::zero();
                for t in ts {
                    acc += t.eval_exact(point, params)?;
                }
                acc
            }
            Expr::Mul(fs) => {
                let mut acc = Rational::from_integer(1.into());
                for g in fs {
                    acc *= g.eval_exact(point, params)?;
                }
                acc
            }
            Expr::Div(a, b) => {
                let den = b.eval_exact(point, params)?;
                if den.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_exact(point, params)? / den
            }
            Expr::Pow(b, e) => {
                let base = b.eval_exact(point, params)?;
                if base.is_zero() && *e < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                num_traits::pow::Pow::pow(&base, *e)
            }
            Expr::Abs(u) => u.eval_exact(point, params)?.abs(),
            Expr::Exp(_) | Expr::LnAbs(_) => return Err(EvalError::NotRational),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn evaluates_sum() {
        let e = Expr::var(0) + Expr::var(1);
        assert_eq!(e.eval(&[1.0, 2.0], &Params::new()).unwrap(), 3.0);
    }

    #[test]
    fn ln_abs_at_zero_is_domain_error() {
        let e = Expr::var(0).ln_abs();
        assert_eq!(e.eval(&[0.0, 1.0], &Params::new()), Err(EvalError::LogOfZero));
        assert!((e.eval(&[-2.0, 1.0], &Params::new()).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn abs_is_defined_everywhere() {
        let e = Expr::var(0).abs();
        assert_eq!(e.eval(&[0.0], &Params::new()).unwrap(), 0.0);
        assert_eq!(e.eval(&[-1.5], &Params::new()).unwrap(), 1.5);
    }

    #[test]
    fn affine_line_gamma_by_hand() {
        // x*(b*x - a*y) with a = 1, b = 2 at (1, 3): 1*(2 - 3) = -1
        let (x, y) = (Expr::var(0), Expr::var(1));
        let e = &x * (Expr::param("b") * &x - Expr::param("a") * &y);
        let params = Params::new().with("a", int(1)).with("b", int(2));
        assert_eq!(e.eval(&[1.0, 3.0], &params).unwrap(), -1.0);
        assert_eq!(e.eval_exact(&[int(1), int(3)], &params).unwrap(), int(-1));
    }

    #[test]
    fn unassigned_parameter() {
        let e = Expr::param("alpha") * Expr::var(0);
        assert_eq!(e.eval(&[1.0], &Params::new()), Err(EvalError::UnassignedParam("alpha".into())));
    }

    #[test]
    fn division_by_zero() {
        let e = Expr::one().quotient(Expr::var(0));
        assert_eq!(e.eval(&[0.0], &Params::new()), Err(EvalError::DivisionByZero));
        assert_eq!(e.eval_exact(&[int(0)], &Params::new()), Err(EvalError::DivisionByZero));
    }
}
