use thiserror::Error;

use super::{EvalError, Expr, Params, Region, RegionError};

/// Outcome of an identity test `e == 0` on a region.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroVerdict {
    /// Polynomial normalization produced the zero polynomial.
    ProvedZero,
    /// Small at every sample point; `max_residual` is the largest `|e|` seen.
    SampledZero { max_residual: f64 },
    /// A concrete point where `e` is not zero.
    Nonzero { witness: Vec<f64>, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::Nonzero { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::ProvedZero => "ProvedZero",
            ZeroVerdict::SampledZero { .. } => "SampledZero",
            ZeroVerdict::Nonzero { .. } => "Nonzero",
        }
    }

    /// Largest residual magnitude, zero when proved.
    pub fn residual(&self) -> f64 {
        match self {
            ZeroVerdict::ProvedZero => 0.0,
            ZeroVerdict::SampledZero { max_residual } => *max_residual,
            ZeroVerdict::Nonzero { value, .. } => value.abs(),
        }
    }

    /// Combines verdicts for a family of conditions: the first `Nonzero`
    /// wins, then any `SampledZero`, then `ProvedZero`.
    pub fn combine<'a, I: IntoIterator<Item = &'a ZeroVerdict>>(verdicts: I) -> ZeroVerdict {
        let mut out = ZeroVerdict::ProvedZero;
        for v in verdicts {
            match (v, &mut out) {
                (ZeroVerdict::Nonzero { .. }, _) => return v.clone(),
                (ZeroVerdict::SampledZero { max_residual }, ZeroVerdict::SampledZero { max_residual: acc }) => {
                    *acc = acc.max(*max_residual);
                }
                (ZeroVerdict::SampledZero { .. }, ZeroVerdict::ProvedZero) => out = v.clone(),
                _ => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("evaluation failed at sample {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
}

/// Decides whether `e` vanishes identically on `region`.
///
/// Exact when `e` normalizes to a polynomial; otherwise every sample must
/// satisfy `|e| < tol * (1 + scale)` where `scale` is the sum of the absolute
/// values of the top-level summands. Samples are visited in order and the
/// first failing one is the witness.
pub fn is_zero(e: &Expr, region: &Region, tol: f64) -> Result<ZeroVerdict, IdentityError> {
    let params = Params::new();
    if let Some(p) = e.as_polynomial(region.dim(), &params) {
        if p.is_zero() {
            return Ok(ZeroVerdict::ProvedZero);
        }
        let points = region.points()?;
        let witness = points
            .iter()
            .map(|pt| (pt, p.eval(pt)))
            .fold(None::<(&Vec<f64>, f64)>, |best, (pt, v)| match best {
                Some((_, bv)) if bv.abs() >= v.abs() => best,
                _ => Some((pt, v)),
            });
        let (witness, value) = witness.map(|(pt, v)| (pt.clone(), v)).unwrap_or((vec![0.0; region.dim()], 0.0));
        return Ok(ZeroVerdict::Nonzero { witness, value });
    }
    let mut max_residual: f64 = 0.0;
    for pt in region.points()? {
        let (value, scale) = e
            .eval_with_scale(pt, &params)
            .map_err(|source| IdentityError::Eval { point: pt.clone(), source })?;
        if value.abs() >= tol * (1.0 + scale) {
            return Ok(ZeroVerdict::Nonzero { witness: pt.clone(), value });
        }
        max_residual = max_residual.max(value.abs());
    }
    Ok(ZeroVerdict::SampledZero { max_residual })
}
