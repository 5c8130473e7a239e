use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::redgeom::ReducedSode;

/// Samples of `w' = gamma(w)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `gamma` at each state.
    pub rates: Vec<Vec<f64>>,
    /// Energy at each state; empty when no energy was supplied.
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    /// `max |E(t) - E(0)|`.
    pub fn energy_drift(&self) -> Option<f64> {
        let e0 = *self.energies.first()?;
        Some(self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("initial state has {got} components, expected {dim}")]
    Dimension { got: usize, dim: usize },
    #[error("step size must be positive and finite")]
    BadStep,
    #[error("left the domain at t = {time} (step {step}); last valid time {reached}: {source}")]
    Domain {
        step: usize,
        time: f64,
        reached: f64,
        source: EvalError,
        /// Everything computed before the failure.
        partial: Box<Trajectory>,
    },
}

/// Classical fourth-order Runge–Kutta for `w' = gamma(w)`.
///
/// Evaluation failures of `gamma` or of `energy` stop the integration with
/// [`IntegrateError::Domain`].
pub fn integrate(sode: &ReducedSode, w0: &[f64], dt: f64, steps: usize, energy: Option<&Expr>) -> Result<Trajectory, IntegrateError> {
    let n = sode.dim();
    if w0.len() != n {
        return Err(IntegrateError::Dimension { got: w0.len(), dim: n });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(IntegrateError::BadStep);
    }
    let params = sode.params().clone();
    let mut traj = Trajectory {
        dt,
        times: Vec::new(),
        states: Vec::new(),
        rates: Vec::new(),
        energies: Vec::new(),
    };

    let mut w = w0.to_vec();
    for step in 0..=steps {
        let t = step as f64 * dt;
        let fail = |traj: Trajectory, source: EvalError| {
            let reached = traj.times.last().copied().unwrap_or(0.0);
            IntegrateError::Domain {
                step,
                time: t,
                reached,
                source,
                partial: Box::new(traj),
            }
        };
        let rate = match sode.gamma_at(&w) {
            Ok(r) => r,
            Err(e) => return Err(fail(traj, e)),
        };
        if let Some(en) = energy {
            match en.eval(&w, &params) {
                Ok(v) => traj.energies.push(v),
                Err(e) => return Err(fail(traj, e)),
            }
        }
        traj.times.push(t);
        traj.states.push(w.clone());
        traj.rates.push(rate.clone());
        if step == steps {
            break;
        }

        match rk4_step(sode, &w, &rate, dt) {
            Ok(next) => w = next,
            Err(e) => return Err(fail(traj, e)),
        }
    }
    Ok(traj)
}

fn rk4_step(sode: &ReducedSode, w: &[f64], k1: &[f64], dt: f64) -> Result<Vec<f64>, EvalError> {
    let shifted = |k: &[f64], h: f64| -> Vec<f64> { w.iter().zip(k).map(|(b, k)| b + h * k).collect() };
    let k2 = sode.gamma_at(&shifted(k1, dt / 2.0))?;
    let k3 = sode.gamma_at(&shifted(&k2, dt / 2.0))?;
    let k4 = sode.gamma_at(&shifted(&k3, dt))?;
    let next: Vec<f64> = (0..w.len()).map(|i| w[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    if next.iter().all(|x| x.is_finite()) {
        Ok(next)
    } else {
        Err(EvalError::NonFinite)
    }
}
