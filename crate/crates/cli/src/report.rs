//! JSON report assembly. Field names are part of the output contract; see
//! the README for the schema.

use invlag::epdyn::EpCheck;
use invlag::helmholtz::{AnsatzFamily, CheckReport, ConditionVerdict, Multiplier, Regularity};
use invlag::liealg::LieAlgebra;
use invlag::obstruct::{Coefficient, ObstructionClass, ObstructionData};
use invlag::rational::format;
use invlag::{Expr, Rational, ZeroVerdict};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Report {
    doc: Map<String, Value>,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

impl Report {
    pub fn new(command: &str, file: &str, bytes: Option<&[u8]>) -> Self {
        let mut doc = Map::new();
        doc.insert("tool".into(), json!("invlag"));
        doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        doc.insert("schema".into(), json!(SCHEMA_VERSION));
        doc.insert("command".into(), json!(command));
        let name = std::path::Path::new(file)
            .file_name()
            .map_or_else(|| file.to_string(), |n| n.to_string_lossy().into_owned());
        doc.insert("input".into(), json!({ "file": name, "sha256": bytes.map(|b| hex::encode(Sha256::digest(b))) }));
        Self { doc }
    }

    pub fn settings(&mut self, s: Settings) {
        self.insert("settings", json!({ "seed": s.seed, "samples": s.samples, "tol": s.tol }));
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.doc.insert(key.into(), value);
    }

    pub fn finish(mut self, verdict: &str, exit_code: i32) -> Value {
        self.doc.insert("verdict".into(), json!(verdict));
        self.doc.insert("exit_code".into(), json!(exit_code));
        Value::Object(self.doc)
    }
}

pub fn rational(r: &Rational) -> Value {
    json!(format(r))
}

pub fn expr(e: &Expr, names: &[String]) -> Value {
    json!(e.display(names).to_string())
}

pub fn algebra(alg: &LieAlgebra) -> Value {
    let brackets: Vec<Value> = alg.brackets().iter().map(|(i, j, k, c)| json!([i + 1, j + 1, k + 1, format(c)])).collect();
    json!({ "dim": alg.dim(), "names": alg.names(), "constants": brackets })
}

pub fn verdict(v: &ZeroVerdict) -> Value {
    match v {
        ZeroVerdict::ProvedZero => json!({ "status": "ProvedZero" }),
        ZeroVerdict::SampledZero { max_residual } => json!({ "status": "SampledZero", "max_residual": max_residual }),
        ZeroVerdict::Nonzero { witness, value } => json!({ "status": "Nonzero", "witness": witness, "value": value }),
    }
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

pub fn condition(c: &ConditionVerdict) -> Value {
    let mut v = verdict(&c.verdict);
    v["passed"] = json!(c.passed());
    v["component"] = json!(c.component.as_deref().map(one_based));
    v
}

pub fn check_report(r: &CheckReport, names: &[String]) -> Value {
    let regularity = match &r.regularity {
        Regularity::Regular { proved, min_abs_det } => json!({ "status": "Regular", "proved": proved, "min_abs_det": min_abs_det }),
        Regularity::Singular { witness } => json!({ "status": "Singular", "witness": witness }),
    };
    json!({
        "passed": r.passed(),
        "failure": r.failure(),
        "witness": r.witness(),
        "symmetry": condition(&r.symmetry),
        "regularity": regularity,
        "determinant": expr(&r.determinant, names),
        "nabla": condition(&r.nabla),
        "phi": condition(&r.phi),
        "closure": condition(&r.closure),
        "warnings": r.warnings,
        "samples": r.samples,
        "seed": r.seed,
    })
}

pub fn multiplier(k: &Multiplier, names: &[String]) -> Value {
    let n = k.dim();
    let mut out = Map::new();
    for i in 0..n {
        for j in i..n {
            let key = if n < 10 {
                format!("k{}{}", i + 1, j + 1)
            } else {
                format!("k{}_{}", i + 1, j + 1)
            };
            out.insert(key, expr(k.get(i, j), names));
        }
    }
    Value::Object(out)
}

pub fn family(f: &AnsatzFamily, names: &[String]) -> Value {
    let generators: Vec<Value> = f
        .generators
        .iter()
        .map(|g| json!({ "k": multiplier(&g.multiplier, names), "det_identically_zero": g.det_identically_zero }))
        .collect();
    json!({
        "degree": f.degree,
        "with_phi": f.with_phi,
        "unknowns": f.legend.len(),
        "dimension": f.dimension(),
        "regular_member": f.has_regular_member(),
        "generic_coefficients": f.generic_coefficients.iter().map(rational).collect::<Vec<_>>(),
        "generic_singular": f.singular_family,
        "generators": generators,
    })
}

pub fn coefficient(c: &Coefficient) -> Value {
    json!({ "value": c.value, "exact": c.exact.as_ref().map(format), "snapped": c.snapped })
}

fn mu_map(mu: &[Vec<Coefficient>]) -> Value {
    let n = mu.len();
    let mut out = Map::new();
    for i in 0..n {
        for j in i + 1..n {
            out.insert(format!("mu{}_{}", i + 1, j + 1), coefficient(&mu[i][j]));
        }
    }
    Value::Object(out)
}

pub fn obstructions(d: &ObstructionData, names: &[String]) -> Value {
    json!({
        "extraction": d.extraction.label(),
        "v": d.v.iter().map(|e| expr(e, names)).collect::<Vec<_>>(),
        "nu": d.nu.iter().map(coefficient).collect::<Vec<_>>(),
        "mu": mu_map(&d.mu),
        "snapped": d.any_snapped(),
        "affine": verdict(&d.affine),
        "skew_derivative": verdict(&d.skew),
        "chi_identity": verdict(&d.chi_check),
        "nu_closed": d.nu_closed,
        "mu_closed": d.mu_closed,
    })
}

pub fn class(c: &ObstructionClass) -> Value {
    match c {
        ObstructionClass::H1 { nu } => json!({ "class": "H1", "nu": nu.iter().map(coefficient).collect::<Vec<_>>() }),
        ObstructionClass::H2 { mu } => json!({ "class": "H2", "mu": mu_map(mu) }),
    }
}

pub fn ep(e: &EpCheck) -> Value {
    let mut v = verdict(&e.verdict);
    v["passed"] = json!(e.passed());
    v["component"] = json!(e.component.map(|c| c + 1));
    v
}
