use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Expr, Params};

/// Points closer than this to a constraint's zero set are rejected.
pub const DEFAULT_MARGIN: f64 = 1e-3;
const DEFAULT_HALF_WIDTH: f64 = 2.0;
const DEFAULT_SAMPLES: usize = 64;
const DEFAULT_SEED: u64 = 7;
const ATTEMPTS_PER_SAMPLE: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => ">0",
            Sign::Negative => "<0",
        }
    }
}

/// Strict sign condition `expr > 0` or `expr < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: Expr,
    pub sign: Sign,
}

impl Constraint {
    pub fn positive(expr: Expr) -> Self {
        Self { expr, sign: Sign::Positive }
    }

    pub fn negative(expr: Expr) -> Self {
        Self { expr, sign: Sign::Negative }
    }

    fn holds(&self, point: &[f64], margin: f64) -> bool {
        match self.expr.eval(point, &Params::new()) {
            Ok(v) => match self.sign {
                Sign::Positive => v > margin,
                Sign::Negative => v < -margin,
            },
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("could not find {wanted} points in the region after {attempts} attempts (found {found})")]
    Exhausted { wanted: usize, found: usize, attempts: usize },
    #[error("bounding box has {got} intervals, expected {expected}")]
    BoxDimension { expected: usize, got: usize },
    #[error("empty interval [{0}, {1}] in bounding box")]
    EmptyInterval(f64, f64),
}

/// A sampling region: a bounding box cut down by strict sign constraints.
///
/// Points are drawn by rejection sampling from a seeded ChaCha stream, so the
/// same region always produces the same points.
#[derive(Debug, Clone)]
pub struct Region {
    dim: usize,
    constraints: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
    samples: usize,
    seed: u64,
    margin: f64,
    cache: OnceLock<Result<Vec<Vec<f64>>, RegionError>>,
}

impl Region {
    /// The box `[-2, 2]^dim` with 64 samples and seed 7.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constraints: Vec::new(),
            bounds: vec![(-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH); dim],
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            margin: DEFAULT_MARGIN,
            cache: OnceLock::new(),
        }
    }

    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraints.push(constraint);
        self.cache = OnceLock::new();
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self, RegionError> {
        if bounds.len() != self.dim {
            return Err(RegionError::BoxDimension {
                expected: self.dim,
                got: bounds.len(),
            });
        }
        if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less)) {
            return Err(RegionError::EmptyInterval(lo, hi));
        }
        self.bounds = bounds;
        self.cache = OnceLock::new();
        Ok(self)
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self.cache = OnceLock::new();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.cache = OnceLock::new();
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self.cache = OnceLock::new();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Whether `point` satisfies every constraint strictly (no margin) and
    /// lies inside the bounding box.
    pub fn contains(&self, point: &[f64]) -> bool {
        point.iter().zip(&self.bounds).all(|(x, (lo, hi))| lo <= x && x <= hi) && self.constraints.iter().all(|c| c.holds(point, 0.0))
    }

    /// The sample points, generated once and cached.
    pub fn points(&self) -> Result<&[Vec<f64>], RegionError> {
        self.cache.get_or_init(|| self.draw()).as_ref().map(Vec::as_slice).map_err(Clone::clone)
    }

    fn draw(&self) -> Result<Vec<Vec<f64>>, RegionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.samples);
        let max_attempts = ATTEMPTS_PER_SAMPLE * self.samples.max(1);
        let mut attempts = 0;
        while out.len() < self.samples {
            if attempts == max_attempts {
                return Err(RegionError::Exhausted {
                    wanted: self.samples,
                    found: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let p: Vec<f64> = self.bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
            if self.constraints.iter().all(|c| c.holds(&p, self.margin)) {
                out.push(p);
            }
        }
        Ok(out)
    }
}
