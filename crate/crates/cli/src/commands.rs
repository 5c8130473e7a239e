use std::path::Path;

use invlag::epdyn::{derive_sode, energy, integrate, reconstruct, DeriveError, IntegrateError, MatrixRep, Trajectory};
use invlag::expr::IdentityError;
use invlag::helmholtz::{check_multiplier, solve_ansatz, AnsatzError, Multiplier, PotentialError, ORIGIN_WARNING};
use invlag::liealg::StructureError;
use invlag::nalgebra::DMatrix;
use invlag::obstruct::{decide, DecideError, Source, Verdict};
use invlag::{ReducedSode, Region};
use serde_json::{json, Value};

use crate::problem::{GammaSource, Problem};
use crate::report::{self, Report, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Which multiplier to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzMode {
    Given,
    Poly(u32),
}

impl std::str::FromStr for AnsatzMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "given" => Ok(AnsatzMode::Given),
            "constant" => Ok(AnsatzMode::Poly(0)),
            _ => s
                .strip_prefix("poly:")
                .and_then(|d| d.parse().ok())
                .map(AnsatzMode::Poly)
                .ok_or_else(|| format!("expected given, constant or poly:D, found `{s}`")),
        }
    }
}

/// Result of a command: the report, its exit code and human-readable lines.
pub struct Outcome {
    pub verdict: String,
    pub exit: i32,
    pub sections: Vec<(String, Value)>,
    pub lines: Vec<String>,
}

impl Outcome {
    fn new(verdict: &str, exit: i32) -> Self {
        Self {
            verdict: verdict.into(),
            exit,
            sections: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn section(mut self, key: &str, value: Value) -> Self {
        self.sections.push((key.into(), value));
        self
    }

    fn line(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    pub fn into_report(self, mut report: Report) -> (Value, Vec<String>, i32) {
        for (k, v) in self.sections {
            report.insert(&k, v);
        }
        (report.finish(&self.verdict, self.exit), self.lines, self.exit)
    }
}

/// A failure that is not a mathematical verdict.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub message: String,
    pub detail: Value,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_INPUT,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            exit: EXIT_DOMAIN,
            message: message.into(),
            detail: Value::Null,
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.exit == EXIT_INPUT {
            "InputError"
        } else {
            "DomainError"
        }
    }

    pub fn into_outcome(self) -> Outcome {
        let verdict = self.verdict();
        let line = format!("error: {}", self.message);
        let mut error = json!({ "message": self.message });
        if !self.detail.is_null() {
            error["detail"] = self.detail;
        }
        Outcome::new(verdict, self.exit).section("error", error).line(line)
    }
}

impl From<IdentityError> for Failure {
    fn from(e: IdentityError) -> Self {
        Failure::domain(e.to_string())
    }
}

fn require_valid(p: &Problem) -> Result<(), Failure> {
    match &p.structure_error {
        Some(e) => Err(Failure::input(format!("invalid algebra: {e}"))),
        None => Ok(()),
    }
}

fn sode(p: &Problem) -> Result<ReducedSode, Failure> {
    require_valid(p)?;
    match &p.gamma {
        None => Err(Failure::input("the problem has no [sode] section")),
        Some(GammaSource::Given(g)) => ReducedSode::new(p.algebra.clone(), g.clone(), p.params.clone()).map_err(|e| Failure::input(e.to_string())),
        Some(GammaSource::Derive) => {
            let l = p.lagrangian.as_ref().expect("checked on load");
            derive_sode(&p.algebra, l, &p.params).map_err(|e| match e {
                DeriveError::Eval(_) => Failure::domain(format!("cannot derive gamma: {e}")),
                _ => Failure::input(format!("cannot derive gamma: {e}")),
            })
        }
    }
}

fn gamma_section(s: &ReducedSode) -> Value {
    json!(s.gamma().iter().map(|g| report::expr(g, s.alg().names())).collect::<Vec<_>>())
}

pub fn validate(p: &Problem) -> Outcome {
    let alg = report::algebra(&p.algebra);
    match &p.structure_error {
        None => Outcome::new("Valid", EXIT_OK)
            .section("algebra", alg)
            .section("validation", json!({ "valid": true }))
            .line(format!("valid Lie algebra of dimension {}", p.dim())),
        Some(e) => {
            let violation = match e {
                StructureError::Jacobi { i, j, k, m, value } => {
                    json!({ "kind": "jacobi", "triple": [i + 1, j + 1, k + 1], "component": m + 1, "value": value })
                }
                StructureError::NotAntisymmetric { i, j, k, .. } => json!({ "kind": "antisymmetry", "constant": [k + 1, i + 1, j + 1] }),
                _ => json!({ "kind": "other" }),
            };
            Outcome::new("Invalid", EXIT_NEGATIVE)
                .section("algebra", alg)
                .section("validation", json!({ "valid": false, "error": e.to_string(), "violation": violation }))
                .line(format!("invalid: {e}"))
        }
    }
}

pub fn cohomology(p: &Problem) -> Result<Outcome, Failure> {
    require_valid(p)?;
    let (h1, h2) = p.algebra.cohomology_dims();
    Ok(Outcome::new("Computed", EXIT_OK)
        .section("algebra", report::algebra(&p.algebra))
        .section("cohomology", json!({ "h1": h1, "h2": h2 }))
        .line(format!("dim H1 = {h1}, dim H2 = {h2}")))
}

fn origin_warnings(s: &ReducedSode) -> Vec<String> {
    if s.vanishes_at_origin() {
        Vec::new()
    } else {
        vec![ORIGIN_WARNING.to_string()]
    }
}

pub fn helmholtz(p: &Problem, mode: AnsatzMode, region: &Region, tol: f64) -> Result<Outcome, Failure> {
    let s = sode(p)?;
    let names = p.names();
    match mode {
        AnsatzMode::Given => {
            let (k, source) = match (&p.multiplier, &p.lagrangian) {
                (Some(k), _) => (k.clone(), "multiplier"),
                (None, Some(l)) => (Multiplier::hessian(l, p.dim()), "lagrangian-hessian"),
                (None, None) => return Err(Failure::input("--ansatz given needs a [multiplier] or [lagrangian] section")),
            };
            let check = check_multiplier(&s, &k, region, tol)?;
            let (verdict, exit) = if check.passed() { ("Pass", EXIT_OK) } else { ("Fail", EXIT_NEGATIVE) };
            let mut out = Outcome::new(verdict, exit)
                .section("algebra", report::algebra(&p.algebra))
                .section("gamma", gamma_section(&s))
                .section(
                    "helmholtz",
                    json!({ "mode": "given", "source": source, "multiplier": report::multiplier(&k, names), "check": report::check_report(&check, names) }),
                );
            out = match check.failure() {
                None => out.line("all Helmholtz conditions hold"),
                Some(f) => out.line(format!("{f} condition fails at {:?}", check.witness().unwrap_or(&[]))),
            };
            for w in &check.warnings {
                out = out.line(format!("warning: {w}"));
            }
            Ok(out)
        }
        AnsatzMode::Poly(degree) => {
            let family = solve_ansatz(&s, degree).map_err(ansatz_failure)?;
            let (verdict, exit, line) = if family.generators.is_empty() {
                ("NoSolution", EXIT_NEGATIVE, "no nonzero multiplier of this degree".to_string())
            } else if family.has_regular_member() {
                (
                    "RegularFamily",
                    EXIT_OK,
                    format!("family of dimension {} with regular members", family.dimension()),
                )
            } else {
                (
                    "AllSingular",
                    EXIT_NEGATIVE,
                    format!("family of dimension {}; all members singular", family.dimension()),
                )
            };
            let warnings = origin_warnings(&s);
            let mut out = Outcome::new(verdict, exit)
                .section("algebra", report::algebra(&p.algebra))
                .section("gamma", gamma_section(&s))
                .section(
                    "helmholtz",
                    json!({ "mode": "ansatz", "family": report::family(&family, names), "warnings": warnings }),
                )
                .line(line);
            for w in warnings {
                out = out.line(format!("warning: {w}"));
            }
            Ok(out)
        }
    }
}

fn ansatz_failure(e: AnsatzError) -> Failure {
    Failure::input(format!("{e}"))
}

pub fn obstruct(p: &Problem, mode: AnsatzMode, region: &Region, tol: f64) -> Result<Outcome, Failure> {
    let s = sode(p)?;
    let names = p.names();
    let (source, label) = match mode {
        AnsatzMode::Poly(d) => (Source::Ansatz(d), format!("ansatz:{d}")),
        AnsatzMode::Given => match (&p.lagrangian, &p.multiplier) {
            (Some(l), _) => (Source::Lagrangian(l.clone()), "lagrangian".into()),
            (None, Some(k)) => (Source::Multiplier(k.clone()), "multiplier".into()),
            (None, None) => return Err(Failure::input("obstruct needs a [lagrangian] or [multiplier] section, or --ansatz")),
        },
    };
    let decision = match decide(&s, &source, region, tol) {
        Ok(d) => d,
        Err(DecideError::Potential(PotentialError::NotClosed(i, j, l))) => {
            return Ok(Outcome::new("CheckFailed", EXIT_NEGATIVE)
                .section("algebra", report::algebra(&p.algebra))
                .section(
                    "obstruct",
                    json!({ "source": label, "condition": "closure", "component": [i + 1, j + 1, l + 1] }),
                )
                .line("closure condition fails for the given multiplier"));
        }
        Err(DecideError::Potential(e)) => return Err(Failure::input(e.to_string())),
        Err(DecideError::Ansatz(e)) => return Err(ansatz_failure(e)),
        Err(DecideError::Identity(e)) => return Err(e.into()),
        Err(e) => return Err(Failure::domain(e.to_string())),
    };

    let mut section = json!({ "source": label });
    section["candidate"] = json!(decision.candidate.as_ref().map(|l| report::expr(l, names)));
    if let Some(f) = &decision.family {
        section["family"] = report::family(f, names);
    }
    if let Some(h) = &decision.helmholtz {
        section["helmholtz"] = report::check_report(h, names);
    }
    if let Some(o) = &decision.obstructions {
        section["obstructions"] = report::obstructions(o, names);
    }
    let mut lines = Vec::new();
    let exit = if decision.verdict.is_affirmative() { EXIT_OK } else { EXIT_NEGATIVE };
    section["result"] = match &decision.verdict {
        Verdict::LagrangianFound(c) => {
            lines.push(format!("l' = {}", c.lagrangian.display(names)));
            json!({
                "lagrangian": report::expr(&c.lagrangian, names),
                "theta": c.theta.iter().map(report::rational).collect::<Vec<_>>(),
                "theta_free": c.theta_free.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "ep_check": report::ep(&c.ep),
            })
        }
        Verdict::NoGoSingular => {
            lines.push("every multiplier admitted by the ansatz is singular".into());
            json!({})
        }
        Verdict::Obstructed(class) => {
            lines.push(format!("obstructed by a nonzero class in {}", class.label()));
            report::class(class)
        }
        Verdict::CheckFailed { condition, witness } => {
            lines.push(format!("{condition} condition fails at {:?}", witness.as_deref().unwrap_or(&[])));
            json!({ "condition": condition, "witness": witness })
        }
    };
    let mut out = Outcome::new(decision.verdict.label(), exit)
        .section("algebra", report::algebra(&p.algebra))
        .section("gamma", gamma_section(&s))
        .section("obstruct", section);
    out.lines = lines;
    for w in origin_warnings(&s) {
        out = out.line(format!("warning: {w}"));
    }
    if decision.obstructions.as_ref().is_some_and(|o| o.any_snapped()) {
        out = out.line("warning: some obstruction coefficients were snapped to rationals from floating-point values".to_string());
    }
    Ok(out)
}

pub fn integrate_cmd(p: &Problem, with_reconstruction: bool, csv: Option<&Path>) -> Result<Outcome, Failure> {
    let s = sode(p)?;
    let setup = p.integrate.as_ref().ok_or_else(|| Failure::input("the problem has no [integrate] section"))?;
    let rep = if with_reconstruction {
        let rep = match (&p.representation, &p.catalog) {
            (Some(m), _) => MatrixRep::new(&p.algebra, m.clone()).map_err(|e| Failure::input(format!("representation: {e}")))?,
            (None, Some(name)) => MatrixRep::catalog(name, &p.algebra).ok_or_else(|| Failure::input("no [representation] given and none built in"))?,
            (None, None) => return Err(Failure::input("--reconstruct needs a [representation] section")),
        };
        if let Some(g0) = &p.g0 {
            if g0.nrows() != rep.size() {
                return Err(Failure::input(format!("representation.g0 must be {0}x{0}", rep.size())));
            }
            if g0.determinant().abs() < 1e-12 {
                return Err(Failure::input("representation.g0 is not invertible"));
            }
        }
        Some(rep)
    } else {
        None
    };
    let energy_expr = p.lagrangian.as_ref().map(|l| energy(l, p.dim()));

    let (traj, domain) = match integrate(&s, &setup.w0, setup.dt, setup.steps, energy_expr.as_ref()) {
        Ok(t) => (t, None),
        Err(IntegrateError::Domain {
            step,
            time,
            reached,
            source,
            partial,
        }) => (*partial, Some((step, time, reached, source))),
        Err(e) => return Err(Failure::input(e.to_string())),
    };
    let group = match &rep {
        Some(rep) => Some(reconstruct(&traj, rep, p.g0.clone()).map_err(|e| Failure::input(e.to_string()))?),
        None => None,
    };
    if let Some(path) = csv {
        write_csv(path, &traj, group.as_deref()).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    }

    let mut section = json!({
        "dt": traj.dt,
        "steps_requested": setup.steps,
        "samples": traj.len(),
        "t_end": traj.times.last(),
        "w0": setup.w0,
        "w_final": traj.last(),
        "csv": csv.map(|c| c.display().to_string()),
    });
    section["energy"] = match (&energy_expr, traj.energies.first()) {
        (Some(e), Some(&e0)) => {
            let drift = traj.energy_drift().unwrap_or(0.0);
            json!({
                "expression": report::expr(e, p.names()),
                "initial": e0,
                "final": traj.energies.last(),
                "max_drift": drift,
                "relative_drift": drift / (1.0 + e0.abs()),
            })
        }
        _ => Value::Null,
    };
    section["reconstruction"] = match &group {
        Some(gs) => {
            let dets: Vec<f64> = gs.iter().map(|g| g.determinant()).collect();
            let last = gs.last().expect("at least the initial element");
            json!({
                "size": last.nrows(),
                "g_final": last.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                "det_min": dets.iter().copied().fold(f64::INFINITY, f64::min),
                "det_max": dets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        }
        None => Value::Null,
    };
    let mut out = match domain {
        None => Outcome::new("Completed", EXIT_OK).line(format!("integrated {} steps to t = {}", setup.steps, traj.times.last().unwrap_or(&0.0))),
        Some((step, time, reached, source)) => {
            section["error"] = json!({ "kind": "domain", "step": step, "time": time, "reached": reached, "message": source.to_string() });
            Outcome::new("DomainError", EXIT_DOMAIN).line(format!("left the domain at t = {time} (last valid t = {reached}): {source}"))
        }
    };
    if let Some(e) = section["energy"]["max_drift"].as_f64() {
        out = out.line(format!("max energy drift {e:e}"));
    }
    Ok(out
        .section("algebra", report::algebra(&p.algebra))
        .section("gamma", gamma_section(&s))
        .section("integrate", section))
}

fn write_csv(path: &Path, traj: &Trajectory, group: Option<&[DMatrix<f64>]>) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("w{i}")));
    if !traj.energies.is_empty() {
        header.push("energy".into());
    }
    let m = group.and_then(|g| g.first()).map_or(0, DMatrix::nrows);
    for r in 1..=m {
        for c in 1..=m {
            header.push(format!("g{r}_{c}"));
        }
    }
    let mut text = header.join(",");
    text.push('\n');
    for (s, t) in traj.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(traj.states[s].iter().map(f64::to_string));
        if let Some(e) = traj.energies.get(s) {
            row.push(e.to_string());
        }
        if let Some(g) = group.and_then(|g| g.get(s)) {
            for r in 0..m {
                for c in 0..m {
                    row.push(g[(r, c)].to_string());
                }
            }
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
}

pub fn settings(region: &Region, tol: f64) -> Settings {
    Settings {
        seed: region.seed(),
        samples: region.samples(),
        tol,
    }
}

pub fn base_report(command: &str, file: &Path, bytes: Option<&[u8]>) -> Report {
    Report::new(command, &file.display().to_string(), bytes)
}
