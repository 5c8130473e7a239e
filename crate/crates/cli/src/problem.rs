//! Problem files: TOML with the sections `algebra`, `params`, `sode`,
//! `lagrangian`, `multiplier`, `region`, `representation` and `integrate`.

use std::collections::BTreeMap;
use std::path::Path;

use invlag::expr::{parse, Constraint, ParseError, SymbolTable};
use invlag::helmholtz::Multiplier;
use invlag::liealg::{catalog, StructureError};
use invlag::nalgebra::DMatrix;
use invlag::rational::{parse_rational, to_f64};
use invlag::{Expr, LieAlgebra, Params, Rational, Region};
use serde::Deserialize;
use thiserror::Error;

/// Keyword asking for `gamma` to be derived from the Lagrangian.
pub const DERIVE_KEYWORD: &str = "derive-from-lagrangian";

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Syntax(String),
    #[error("{field}: {error} in `{text}`")]
    Expression { field: String, text: String, error: ParseError },
    #[error("algebra: {0}")]
    Structure(StructureError),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ProblemError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ProblemError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    algebra: RawAlgebra,
    #[serde(default)]
    params: BTreeMap<String, RawNumber>,
    sode: Option<RawSode>,
    lagrangian: Option<RawLagrangian>,
    multiplier: Option<BTreeMap<String, String>>,
    region: Option<RawRegion>,
    representation: Option<RawRepresentation>,
    integrate: Option<RawIntegrate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    catalog: Option<String>,
    dim: Option<usize>,
    names: Option<Vec<String>>,
    constants: Option<Vec<(usize, usize, usize, RawNumber)>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Int(i64),
    Float(f64),
    Text(String),
}

impl RawNumber {
    fn rational(&self, field: &str) -> Result<Rational, ProblemError> {
        match self {
            RawNumber::Int(i) => Ok(Rational::from_integer((*i).into())),
            RawNumber::Text(t) => parse_rational(t).map_err(|_| ProblemError::invalid(field, format!("`{t}` is not a rational number"))),
            RawNumber::Float(x) => Err(ProblemError::invalid(field, format!("{x} must be written as an exact string such as \"1/10\""))),
        }
    }

    fn real(&self, field: &str) -> Result<f64, ProblemError> {
        match self {
            RawNumber::Float(x) => Ok(*x),
            _ => self.rational(field).map(|r| to_f64(&r)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGamma {
    List(Vec<String>),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSode {
    gamma: RawGamma,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLagrangian {
    l: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    #[serde(default)]
    constraints: Vec<(String, String)>,
    #[serde(rename = "box")]
    bounds: Option<Vec<(RawNumber, RawNumber)>>,
    samples: Option<usize>,
    seed: Option<u64>,
    margin: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRepresentation {
    matrices: Vec<Vec<Vec<RawNumber>>>,
    g0: Option<Vec<Vec<RawNumber>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrate {
    w0: Vec<RawNumber>,
    dt: RawNumber,
    steps: usize,
}

#[derive(Debug, Clone)]
pub enum GammaSource {
    Given(Vec<Expr>),
    Derive,
}

#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub constraints: Vec<Constraint>,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct IntegrateSpec {
    pub w0: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub algebra: LieAlgebra,
    pub catalog: Option<String>,
    /// Antisymmetry or Jacobi violation of the given constants.
    pub structure_error: Option<StructureError>,
    pub params: Params,
    pub gamma: Option<GammaSource>,
    /// Parameters already substituted.
    pub lagrangian: Option<Expr>,
    /// Parameters already substituted.
    pub multiplier: Option<Multiplier>,
    pub region: RegionSpec,
    pub representation: Option<Vec<DMatrix<f64>>>,
    pub g0: Option<DMatrix<f64>>,
    pub integrate: Option<IntegrateSpec>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn names(&self) -> &[String] {
        self.algebra.names()
    }

    /// Region with the file settings, overridden by any explicit values.
    pub fn region(&self, samples: Option<usize>, seed: Option<u64>) -> Result<Region, ProblemError> {
        let mut region = Region::new(self.dim());
        if let Some(b) = &self.region.bounds {
            region = region.with_bounds(b.clone()).map_err(|e| ProblemError::invalid("region.box", e.to_string()))?;
        }
        for c in &self.region.constraints {
            region = region.with_constraint(c.clone());
        }
        if let Some(m) = self.region.margin {
            region = region.with_margin(m);
        }
        if let Some(s) = samples.or(self.region.samples) {
            region = region.with_samples(s);
        }
        if let Some(s) = seed.or(self.region.seed) {
            region = region.with_seed(s);
        }
        Ok(region)
    }
}

pub fn load(path: &Path) -> Result<(Problem, Vec<u8>), ProblemError> {
    let bytes = std::fs::read(path).map_err(|source| ProblemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| ProblemError::Syntax("file is not UTF-8".into()))?;
    Ok((parse_problem(&text)?, bytes))
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let raw: RawProblem = toml::from_str(text).map_err(|e| ProblemError::Syntax(e.message().to_string()))?;
    let (algebra, catalog_name) = build_algebra(&raw.algebra)?;
    let structure_error = algebra.validate().err();
    let n = algebra.dim();

    let mut params = Params::new();
    for (name, value) in &raw.params {
        if !is_identifier(name) || algebra.names().contains(name) {
            return Err(ProblemError::invalid(format!("params.{name}"), "not a valid parameter name"));
        }
        params.insert(name, value.rational(&format!("params.{name}"))?);
    }
    let symbols = SymbolTable::new(algebra.names().to_vec(), raw.params.keys().cloned().collect());
    let expr = |field: &str, text: &str| -> Result<Expr, ProblemError> {
        parse(text, &symbols).map_err(|error| ProblemError::Expression {
            field: field.into(),
            text: text.into(),
            error,
        })
    };

    let gamma = match raw.sode.map(|s| s.gamma) {
        None => None,
        Some(RawGamma::Keyword(k)) if k == DERIVE_KEYWORD => Some(GammaSource::Derive),
        Some(RawGamma::Keyword(k)) => {
            return Err(ProblemError::invalid(
                "sode.gamma",
                format!("expected a list of expressions or \"{DERIVE_KEYWORD}\", found \"{k}\""),
            ))
        }
        Some(RawGamma::List(list)) => {
            if list.len() != n {
                return Err(ProblemError::invalid("sode.gamma", format!("{} components for dimension {n}", list.len())));
            }
            let exprs = list
                .iter()
                .enumerate()
                .map(|(i, t)| expr(&format!("sode.gamma[{}]", i + 1), t))
                .collect::<Result<_, _>>()?;
            Some(GammaSource::Given(exprs))
        }
    };

    let lagrangian = raw.lagrangian.map(|l| expr("lagrangian.l", &l.l)).transpose()?.map(|l| l.bind(&params));
    if matches!(gamma, Some(GammaSource::Derive)) && lagrangian.is_none() {
        return Err(ProblemError::invalid("sode.gamma", "derivation requested but no [lagrangian] given"));
    }

    let multiplier = match raw.multiplier {
        None => None,
        Some(entries) => {
            let mut given = BTreeMap::new();
            for (key, text) in &entries {
                let (i, j) =
                    multiplier_key(key, n).ok_or_else(|| ProblemError::invalid(format!("multiplier.{key}"), "expected a key kIJ with 1 <= I <= J <= dim"))?;
                given.insert((i, j), expr(&format!("multiplier.{key}"), text)?.bind(&params));
            }
            Some(Multiplier::from_fn(n, |i, j| given.get(&(i, j)).cloned().unwrap_or_else(Expr::zero)))
        }
    };

    let region = match raw.region {
        None => RegionSpec {
            constraints: Vec::new(),
            bounds: None,
            samples: None,
            seed: None,
            margin: None,
        },
        Some(r) => {
            let mut constraints = Vec::new();
            for (idx, (text, sign)) in r.constraints.iter().enumerate() {
                let field = format!("region.constraints[{}]", idx + 1);
                let e = expr(&field, text)?.bind(&params);
                constraints.push(match sign.replace(' ', "").as_str() {
                    ">0" => Constraint::positive(e),
                    "<0" => Constraint::negative(e),
                    other => return Err(ProblemError::invalid(field, format!("sign must be \">0\" or \"<0\", found \"{other}\""))),
                });
            }
            let bounds = match r.bounds {
                None => None,
                Some(b) => {
                    if b.len() != n {
                        return Err(ProblemError::invalid("region.box", format!("{} intervals for dimension {n}", b.len())));
                    }
                    Some(
                        b.iter()
                            .map(|(lo, hi)| Ok((lo.real("region.box")?, hi.real("region.box")?)))
                            .collect::<Result<_, ProblemError>>()?,
                    )
                }
            };
            if r.samples == Some(0) {
                return Err(ProblemError::invalid("region.samples", "must be positive"));
            }
            RegionSpec {
                constraints,
                bounds,
                samples: r.samples,
                seed: r.seed,
                margin: r.margin,
            }
        }
    };

    let (representation, g0) = match raw.representation {
        None => (None, None),
        Some(rep) => {
            let matrices = rep
                .matrices
                .iter()
                .enumerate()
                .map(|(i, m)| matrix(m, &format!("representation.matrices[{}]", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            let g0 = rep.g0.as_ref().map(|m| matrix(m, "representation.g0")).transpose()?;
            (Some(matrices), g0)
        }
    };

    let integrate = match raw.integrate {
        None => None,
        Some(i) => {
            if i.w0.len() != n {
                return Err(ProblemError::invalid("integrate.w0", format!("{} components for dimension {n}", i.w0.len())));
            }
            let w0 = i.w0.iter().map(|x| x.real("integrate.w0")).collect::<Result<_, _>>()?;
            Some(IntegrateSpec {
                w0,
                dt: i.dt.real("integrate.dt")?,
                steps: i.steps,
            })
        }
    };

    Ok(Problem {
        algebra,
        catalog: catalog_name,
        structure_error,
        params,
        gamma,
        lagrangian,
        multiplier,
        region,
        representation,
        g0,
        integrate,
    })
}

fn build_algebra(raw: &RawAlgebra) -> Result<(LieAlgebra, Option<String>), ProblemError> {
    if let Some(name) = &raw.catalog {
        if raw.constants.is_some() {
            return Err(ProblemError::invalid("algebra", "give either a catalog name or constants, not both"));
        }
        let mut alg = catalog(name).ok_or_else(|| ProblemError::invalid("algebra.catalog", format!("unknown algebra `{name}`")))?;
        if let Some(dim) = raw.dim {
            if dim != alg.dim() {
                return Err(ProblemError::invalid("algebra.dim", format!("`{name}` has dimension {}", alg.dim())));
            }
        }
        if let Some(names) = &raw.names {
            check_names(names, alg.dim())?;
            alg = LieAlgebra::from_brackets(names.clone(), &alg.brackets()).map_err(ProblemError::Structure)?;
        }
        return Ok((alg, Some(name.trim().to_string())));
    }
    let dim = raw
        .dim
        .or(raw.names.as_ref().map(Vec::len))
        .ok_or_else(|| ProblemError::invalid("algebra", "either catalog or dim is required"))?;
    if dim == 0 {
        return Err(ProblemError::invalid("algebra.dim", "must be positive"));
    }
    let names = raw.names.clone().unwrap_or_else(|| (1..=dim).map(|i| format!("w{i}")).collect());
    check_names(&names, dim)?;
    let mut brackets = Vec::new();
    for (idx, (i, j, k, v)) in raw.constants.iter().flatten().enumerate() {
        let field = format!("algebra.constants[{}]", idx + 1);
        if [*i, *j, *k].contains(&0) {
            return Err(ProblemError::invalid(field, "indices start at 1"));
        }
        brackets.push((i - 1, j - 1, k - 1, v.rational(&field)?));
    }
    let alg = LieAlgebra::from_brackets(names, &brackets).map_err(ProblemError::Structure)?;
    Ok((alg, None))
}

fn check_names(names: &[String], dim: usize) -> Result<(), ProblemError> {
    if names.len() != dim {
        return Err(ProblemError::Structure(StructureError::NameCount { names: names.len(), dim }));
    }
    for (i, name) in names.iter().enumerate() {
        if !is_identifier(name) || matches!(name.as_str(), "exp" | "ln" | "abs") {
            return Err(ProblemError::invalid("algebra.names", format!("`{name}` is not a valid coordinate name")));
        }
        if names[..i].contains(name) {
            return Err(ProblemError::invalid("algebra.names", format!("`{name}` appears twice")));
        }
    }
    Ok(())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `kIJ` (single digits) or `kI_J`, one-based, upper triangle only.
fn multiplier_key(key: &str, n: usize) -> Option<(usize, usize)> {
    let rest = key.strip_prefix('k')?;
    let (i, j) = match rest.split_once('_') {
        Some((a, b)) => (a.parse::<usize>().ok()?, b.parse::<usize>().ok()?),
        None if rest.len() == 2 && rest.chars().all(|c| c.is_ascii_digit()) => {
            let d: Vec<usize> = rest.chars().map(|c| c as usize - '0' as usize).collect();
            (d[0], d[1])
        }
        None => return None,
    };
    (1 <= i && i <= j && j <= n).then(|| (i - 1, j - 1))
}

fn matrix(rows: &[Vec<RawNumber>], field: &str) -> Result<DMatrix<f64>, ProblemError> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(ProblemError::invalid(field, "must be a non-empty square matrix"));
    }
    let mut out = DMatrix::zeros(m, m);
    for (r, row) in rows.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            out[(r, c)] = x.real(field)?;
        }
    }
    Ok(out)
}
