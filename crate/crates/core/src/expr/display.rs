use std::fmt;

use num_traits::{One, Signed};

use super::Expr;
use crate::rational::{self, Rational};

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 3;

/// Printer that emits text accepted by [`super::parse`] with the same names.
pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl<'a> ExprDisplay<'a> {
    pub(super) fn new(expr: &'a Expr, names: &'a [String]) -> Self {
        Self { expr, names }
    }

    fn name(&self, index: usize) -> String {
        self.names.get(index).cloned().unwrap_or_else(|| format!("w{}", index + 1))
    }

    fn write(&self, e: &Expr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(c) => {
                let simple = c.is_integer() && !c.is_negative();
                let needs_parens = (!simple && parent >= POWER) || (!c.is_integer() && parent > PRODUCT);
                if needs_parens {
                    write!(f, "({})", rational::format(c))
                } else {
                    write!(f, "{}", rational::format(c))
                }
            }
            Expr::Var(i) => write!(f, "{}", self.name(*i)),
            Expr::Param(name) => write!(f, "{name}"),
            Expr::Add(terms) => {
                let paren = parent > SUM;
                if paren {
                    f.write_str("(")?;
                }
                for (k, t) in terms.iter().enumerate() {
                    if k == 0 {
                        self.write(t, SUM, f)?;
                    } else if let Some(positive) = negated(t) {
                        f.write_str(" - ")?;
                        self.write(&positive, SUM, f)?;
                    } else {
                        f.write_str(" + ")?;
                        self.write(t, SUM, f)?;
                    }
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Mul(factors) => {
                let paren = parent > PRODUCT;
                if paren {
                    f.write_str("(")?;
                }
                let mut rest: &[Expr] = factors;
                if let Some(Expr::Const(c)) = factors.first() {
                    if (-c).is_one() {
                        f.write_str("-")?;
                        rest = &factors[1..];
                    }
                }
                for (k, factor) in rest.iter().enumerate() {
                    if k > 0 {
                        f.write_str("*")?;
                    }
                    let level = if matches!(factor, Expr::Div(..)) { POWER } else { PRODUCT };
                    self.write(factor, level, f)?;
                }
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Div(num, den) => {
                let paren = parent > PRODUCT;
                if paren {
                    f.write_str("(")?;
                }
                self.write(num, PRODUCT, f)?;
                f.write_str("/")?;
                self.write(den, POWER, f)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Expr::Pow(base, exp) => {
                self.write(base, POWER + 1, f)?;
                write!(f, "^{exp}")
            }
            Expr::Exp(u) => {
                f.write_str("exp(")?;
                self.write(u, 0, f)?;
                f.write_str(")")
            }
            Expr::LnAbs(u) => {
                f.write_str("ln(abs(")?;
                self.write(u, 0, f)?;
                f.write_str("))")
            }
            Expr::Abs(u) => {
                f.write_str("abs(")?;
                self.write(u, 0, f)?;
                f.write_str(")")
            }
        }
    }
}

/// For a term with a negative leading coefficient, the term with that sign flipped.
fn negated(term: &Expr) -> Option<Expr> {
    match term {
        Expr::Const(c) if c.is_negative() => Some(Expr::Const(-c)),
        Expr::Mul(fs) => match fs.first() {
            Some(Expr::Const(c)) if c.is_negative() => {
                let flipped: Rational = -c;
                Some(Expr::product(std::iter::once(Expr::Const(flipped)).chain(fs[1..].iter().cloned())))
            }
            _ => None,
        },
        _ => None,
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, 0, f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        ExprDisplay::new(self, &[]).fmt(f)
    }
}
