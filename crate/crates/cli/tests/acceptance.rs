//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use invlag::epdyn::{derive_sode, energy, ep_check, integrate, reconstruct, MatrixRep};
use invlag::expr::{parse, Constraint, SymbolTable};
use invlag::helmholtz::{check_multiplier, phi_residual, solve_ansatz, solve_nabla_ansatz, Multiplier};
use invlag::liealg::{catalog, pairs, LieAlgebra, CATALOG_NAMES};
use invlag::nalgebra::DMatrix;
use invlag::obstruct::{decide, extract_obstructions, Source, Verdict};
use invlag::rational::{int, to_f64};
use invlag::redgeom::phi_cross_check;
use invlag::{Expr, Params, Rational, ReducedSode, Region, ZeroVerdict};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, Option<f64>, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table(alg: &LieAlgebra) -> SymbolTable {
    SymbolTable::new(alg.names().to_vec(), vec![])
}

fn same_poly(a: &Expr, b: &Expr, n: usize) -> bool {
    (a - b).to_poly(n).is_some_and(|p| p.is_zero())
}

fn bloch_iserles() -> ReducedSode {
    let alg = catalog("bloch_iserles_2").unwrap();
    let sym = table(&alg);
    let gamma = ["-2*y*(x + z)", "x^2 - z^2", "2*y*(x + z)"].map(|t| parse(t, &sym).unwrap());
    ReducedSode::new(alg, gamma.to_vec(), Params::new()).unwrap()
}

fn affine(a: i64, b: i64) -> ReducedSode {
    let alg = catalog("affine_line").unwrap();
    let sym = SymbolTable::new(alg.names().to_vec(), vec!["a".into(), "b".into()]);
    let gamma = vec![Expr::zero(), parse("x*(b*x - a*y)", &sym).unwrap()];
    ReducedSode::new(alg, gamma, Params::new().with("a", int(a)).with("b", int(b))).unwrap()
}

fn diag(values: &[i64]) -> Multiplier {
    Multiplier::from_fn(values.len(), |i, j| if i == j { Expr::int(values[i]) } else { Expr::zero() })
}

fn criterion_1() -> Outcome {
    let s = bloch_iserles();
    let family = solve_ansatz(&s, 0).map_err(|e| e.to_string())?;
    ensure(family.dimension() == 1, format!("family dimension {}", family.dimension()))?;
    let k = &family.generators[0].multiplier;
    let c = k.get(0, 0).as_const().cloned().ok_or("k11 not constant")?;
    ensure(!c.is_zero(), "k11 = 0")?;
    for i in 0..3 {
        for j in i..3 {
            let expected = if i == j { &c * int([1, 2, 1][i]) } else { Rational::zero() };
            ensure(
                k.get(i, j).as_const() == Some(&expected),
                format!("k{}{} not proportional to diag(1,2,1)", i + 1, j + 1),
            )?;
        }
    }
    let expected = parse("1/2*(x^2 + 2*y^2 + z^2)", &table(s.alg())).unwrap();
    for source in [Source::Multiplier(diag(&[1, 2, 1])), Source::Ansatz(0)] {
        let d = decide(&s, &source, &Region::new(3), 1e-9).map_err(|e| e.to_string())?;
        let Verdict::LagrangianFound(found) = d.verdict else {
            return Err(format!("verdict {}", d.verdict.label()));
        };
        ensure(
            same_poly(&found.lagrangian, &expected, 3),
            format!("l' = {}", found.lagrangian.display(s.alg().names())),
        )?;
    }
    Ok(format!(
        "family dim 1, generator {}*diag(1,2,1), l' = 1/2(x^2+2y^2+z^2)",
        invlag::rational::format(&c)
    ))
}

fn criterion_2() -> Outcome {
    let s = ReducedSode::canonical(catalog("heisenberg3").unwrap());
    let mut dims = Vec::new();
    for degree in 0..=1 {
        let family = solve_ansatz(&s, degree).map_err(|e| e.to_string())?;
        ensure(family.singular_family, format!("degree {degree}: generic member regular"))?;
        dims.push(family.dimension());
        let d = decide(&s, &Source::Ansatz(degree), &Region::new(3), 1e-9).map_err(|e| e.to_string())?;
        ensure(
            matches!(d.verdict, Verdict::NoGoSingular),
            format!("degree {degree}: verdict {}", d.verdict.label()),
        )?;
    }
    Ok(format!("family dims {dims:?}, generic det == 0, NoGoSingular"))
}

fn criterion_3() -> Outcome {
    let s = ReducedSode::canonical(catalog("a4_8").unwrap());
    let l = parse("w2*w3 - w1*w4 + 1*w1 + 2*w2 + 3*w3 + 1/2*w4^2", &SymbolTable::standard(4)).unwrap();
    let region = Region::new(4);
    let data = extract_obstructions(&s, &l, &region, 1e-9).map_err(|e| e.to_string())?;
    ensure(data.helmholtz.passed(), "Helmholtz check fails")?;
    ensure(data.nu.iter().all(|c| c.exact == Some(int(0))), "nu != 0")?;
    let mu = |i: usize, j: usize| data.mu[i - 1][j - 1].exact.clone();
    ensure(
        mu(2, 3) == Some(int(-1)) && mu(2, 4) == Some(int(-2)) && mu(3, 4) == Some(int(3)),
        "mu23, mu24, mu34 differ from (-1, -2, 3)",
    )?;
    let d = decide(&s, &Source::Lagrangian(l), &region, 1e-9).map_err(|e| e.to_string())?;
    let Verdict::LagrangianFound(c) = d.verdict else {
        return Err(format!("verdict {}", d.verdict.label()));
    };
    ensure(
        c.theta[..3] == [int(-1), int(-2), int(-3)] && c.theta_free == [3],
        "theta differs from (-1, -2, -3, free)",
    )?;
    ensure(c.ep.verdict == ZeroVerdict::ProvedZero, "ep_check of l' not ProvedZero")?;
    Ok("mu = (-1, -2, 3), theta = (-1, -2, -3, free), ep_check ProvedZero".into())
}

fn affine_case_one_region(sym: &SymbolTable) -> Region {
    Region::new(2).with_constraint(Constraint::positive(parse("x - y - 1/10", sym).unwrap()))
}

fn criterion_4() -> Outcome {
    let s = affine(1, 1);
    let sym = table(s.alg());
    let region = affine_case_one_region(&sym);
    let l = parse("-x*ln(abs(x - y))", &sym).unwrap();
    let report = check_multiplier(&s, &Multiplier::hessian(&l, 2), &region, 1e-9).map_err(|e| e.to_string())?;
    ensure(report.passed(), format!("Helmholtz fails: {:?}", report.failure()))?;
    let overall = ZeroVerdict::combine([&report.symmetry.verdict, &report.nabla.verdict, &report.phi.verdict, &report.closure.verdict]);
    ensure(
        matches!(overall, ZeroVerdict::SampledZero { .. }),
        format!("overall verdict {}", overall.label()),
    )?;
    ensure(report.samples == 64, "sample count")?;
    let formula = parse("-1/(x - y)^2", &sym).unwrap();
    let mut worst: f64 = 0.0;
    for p in region.points().map_err(|e| e.to_string())? {
        let det = report.determinant.eval(p, &Params::new()).map_err(|e| e.to_string())?;
        let expected = formula.eval(p, &Params::new()).unwrap();
        worst = worst.max(((det - expected) / expected).abs());
    }
    ensure(worst <= 1e-9, format!("det relative error {worst:e}"))?;
    ensure(ep_check(&s, &l, &region, 1e-9).map_err(|e| e.to_string())?.passed(), "ep_check fails")?;
    let data = extract_obstructions(&s, &l, &region, 1e-9).map_err(|e| e.to_string())?;
    ensure(
        data.nu.iter().chain(data.mu.iter().flatten()).all(|c| c.exact == Some(int(0))),
        "nu or mu nonzero",
    )?;
    Ok(format!("Helmholtz SampledZero at 64 samples, det rel err {worst:.1e}, nu = mu = 0"))
}

fn criterion_5() -> Outcome {
    let s = affine(0, 1);
    let sym = table(s.alg());
    let region = Region::new(2).with_constraint(Constraint::positive(parse("x - 1/10", &sym).unwrap()));
    let l = parse("x*exp(y/x)", &sym).unwrap();
    ensure(ep_check(&s, &l, &region, 1e-9).map_err(|e| e.to_string())?.passed(), "2B ep_check fails")?;
    let report = check_multiplier(&s, &Multiplier::hessian(&l, 2), &region, 1e-9).map_err(|e| e.to_string())?;
    ensure(report.conditions_passed(), format!("2B Helmholtz conditions fail: {:?}", report.failure()))?;
    let regular = parse("x*exp(y/x) + x^2", &sym).unwrap();
    let d = decide(&s, &Source::Lagrangian(regular), &region, 1e-9).map_err(|e| e.to_string())?;
    ensure(d.verdict.is_affirmative(), format!("2B with h = x^2: {}", d.verdict.label()))?;
    let c = affine(0, 0);
    for degree in 0..=2 {
        let d = decide(&c, &Source::Ansatz(degree), &Region::new(2), 1e-9).map_err(|e| e.to_string())?;
        ensure(matches!(d.verdict, Verdict::NoGoSingular), format!("2C degree {degree}: {}", d.verdict.label()))?;
    }
    let regularity = if report.regularity.is_regular() { "regular" } else { "singular (h = 0)" };
    Ok(format!(
        "2B ep_check and Helmholtz conditions pass, Hessian {regularity}; with h = x^2 LagrangianFound; 2C NoGoSingular for degrees 0..2"
    ))
}

fn criterion_6() -> Outcome {
    let mut cases: Vec<(String, ReducedSode, Region)> = CATALOG_NAMES
        .iter()
        .map(|n| {
            let alg = catalog(n).unwrap();
            let dim = alg.dim();
            (format!("{n} canonical"), ReducedSode::canonical(alg), Region::new(dim))
        })
        .collect();
    cases.push(("bloch_iserles_2".into(), bloch_iserles(), Region::new(3)));
    for (a, b) in [(1, 1), (0, 1), (2, 3)] {
        cases.push((format!("affine a={a} b={b}"), affine(a, b), Region::new(2)));
    }
    let alg = catalog("affine_line").unwrap();
    let sym = table(&alg);
    let derived = derive_sode(&alg, &parse("-x*ln(abs(x - y))", &sym).unwrap(), &Params::new()).map_err(|e| e.to_string())?;
    cases.push(("affine derived from -x ln|x-y|".into(), derived, affine_case_one_region(&sym)));
    let transcendental = ReducedSode::new(alg, vec![Expr::zero(), parse("exp(x)*y", &sym).unwrap()], Params::new()).unwrap();
    cases.push(("affine exp(x) y".into(), transcendental, Region::new(2)));

    let (mut proved, mut sampled) = (0, 0);
    for (name, s, region) in &cases {
        let v = phi_cross_check(s, region, 1e-9).map_err(|e| format!("{name}: {e}"))?;
        match (s.is_polynomial(), &v) {
            (true, ZeroVerdict::ProvedZero) => proved += 1,
            (false, ZeroVerdict::SampledZero { .. }) => sampled += 1,
            _ => return Err(format!("{name}: {}", v.label())),
        }
    }
    Ok(format!("{proved} polynomial fields ProvedZero, {sampled} others SampledZero"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut total = 0;
    for name in CATALOG_NAMES {
        let s = ReducedSode::canonical(catalog(name).unwrap());
        let family = solve_nabla_ansatz(&s, 0).map_err(|e| e.to_string())?;
        for _ in 0..200 {
            let coeffs: Vec<Rational> = family.generators.iter().map(|_| int(rng.gen_range(-9..=9))).collect();
            let k = family.combination(&coeffs);
            ensure(
                phi_residual(&s, &k).iter().flatten().all(Expr::is_const_zero),
                format!("{name}: phi residual nonzero for {coeffs:?}"),
            )?;
            total += 1;
        }
    }
    Ok(format!("{total} multipliers, phi residual identically zero"))
}

fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::identity(m, m);
    let mut sum = term.clone();
    for k in 1..=16 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn criterion_8() -> Outcome {
    let alg = catalog("affine_line").unwrap();
    let rep = MatrixRep::new(
        &alg,
        vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        ],
    )
    .map_err(|e| e.to_string())?;
    let w0 = [0.8, -0.6];
    let traj = integrate(&ReducedSode::canonical(alg), &w0, 1e-3, 1000, None).map_err(|e| e.to_string())?;
    let g = reconstruct(&traj, &rep, None).map_err(|e| e.to_string())?;
    let exp_err = (g.last().unwrap() - expm(&rep.element(&w0))).amax();
    ensure(exp_err <= 1e-8, format!("exponential mismatch {exp_err:e}"))?;

    let s = bloch_iserles();
    let l = parse("1/2*(x^2 + 2*y^2 + z^2)", &table(s.alg())).unwrap();
    let e = energy(&l, 3);
    let mut worst_energy: f64 = 0.0;
    for w0 in [[1.0, 0.5, 0.25], [1.0, 0.5, -1.0], [-0.7, 1.3, 0.4]] {
        let traj = integrate(&s, &w0, 1e-3, 1000, Some(&e)).map_err(|e| e.to_string())?;
        worst_energy = worst_energy.max(traj.energy_drift().unwrap() / (1.0 + traj.energies[0].abs()));
    }
    ensure(worst_energy <= 1e-9, format!("relative energy drift {worst_energy:e}"))?;

    let end = |steps: usize| -> Vec<f64> {
        integrate(&s, &[1.0, 0.5, 0.25], 2.0 / steps as f64, steps, None)
            .unwrap()
            .last()
            .unwrap()
            .to_vec()
    };
    let reference = end(20 * 8 * 16);
    let points: Vec<(f64, f64)> = [20, 40, 80, 160]
        .iter()
        .map(|&steps| {
            let err = end(steps).iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ((2.0 / steps as f64).ln(), err.ln())
        })
        .collect();
    let slope = fit_slope(&points);
    ensure(slope >= 3.5, format!("convergence order {slope:.2}"))?;
    Ok(format!("exp error {exp_err:.1e}, energy drift {worst_energy:.1e}, order {slope:.2}"))
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    cov / var
}

/// Ranks of the coboundary maps, computed in floating point from the
/// constants, independently of the exact implementation.
fn cohomology_oracle(alg: &LieAlgebra) -> (usize, usize) {
    let n = alg.dim();
    let c = |k: usize, i: usize, j: usize| to_f64(alg.c(k, i, j));
    let ps = pairs(n);
    let d1 = DMatrix::from_fn(ps.len(), n, |r, l| -c(l, ps[r].0, ps[r].1));
    let triples: Vec<(usize, usize, usize)> = (0..n).flat_map(|i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k)))).collect();
    // (d2 mu)_ijk = mu_il C^l_jk + mu_jl C^l_ki + mu_kl C^l_ij, mu skew, in the basis of pairs (a < b)
    let d2 = DMatrix::from_fn(triples.len().max(1), ps.len(), |r, col| {
        if triples.is_empty() {
            return 0.0;
        }
        let (i, j, k) = triples[r];
        let (a, b) = ps[col];
        let mu = |p: usize, q: usize| {
            if (p, q) == (a, b) {
                1.0
            } else if (q, p) == (a, b) {
                -1.0
            } else {
                0.0
            }
        };
        (0..n).map(|l| mu(i, l) * c(l, j, k) + mu(j, l) * c(l, k, i) + mu(k, l) * c(l, i, j)).sum()
    });
    let r1 = if ps.is_empty() { 0 } else { d1.rank(1e-9) };
    let r2 = d2.rank(1e-9);
    (n - r1, ps.len() - r2 - r1)
}

fn criterion_9() -> Outcome {
    let expected = [("abelian3", (3, 3)), ("heisenberg3", (2, 2)), ("affine_line", (1, 0))];
    for (name, dims) in expected {
        let alg = catalog(name).unwrap();
        let oracle = cohomology_oracle(&alg);
        ensure(oracle == dims, format!("{name}: oracle gives {oracle:?}"))?;
        let got = alg.cohomology_dims();
        ensure(got == dims, format!("{name}: library gives {got:?}"))?;
    }
    Ok("(3,3) abelian3, (2,2) heisenberg3, (1,0) affine_line".into())
}

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(problems_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    files.sort();
    let commands: [&[&str]; 6] = [
        &["validate"],
        &["cohomology"],
        &["helmholtz"],
        &["obstruct"],
        &["integrate", "--reconstruct"],
        &["helmholtz", "--ansatz", "constant"],
    ];
    let mut runs = 0;
    for file in &files {
        for args in commands {
            let mut outputs = Vec::new();
            for round in 0..2 {
                let out = dir.path().join(format!("r{round}.json"));
                let status = Command::new(env!("CARGO_BIN_EXE_invlag"))
                    .args(args)
                    .arg(file)
                    .arg("--json")
                    .arg(&out)
                    .output()
                    .map_err(|e| e.to_string())?;
                outputs.push((status.status.code(), std::fs::read(&out).map_err(|e| e.to_string())?));
            }
            ensure(outputs[0] == outputs[1], format!("{} {:?} differs between runs", file.display(), args))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} command/file pairs byte-identical across two runs"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, Some(1.0), criterion_1),
        (2, Some(1.0), criterion_2),
        (3, Some(1.0), criterion_3),
        (4, Some(2.0), criterion_4),
        (5, Some(5.0), criterion_5),
        (6, Some(2.0), criterion_6),
        (7, None, criterion_7),
        (8, None, criterion_8),
        (9, None, criterion_9),
        (10, None, criterion_10),
    ];
    let mut failed = 0;
    for (n, limit, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if secs > l => Err(format!("took {secs:.2} s, limit {l} s")),
            (r, _) => r,
        };
        match result {
            Ok(msg) => println!("criterion {n:>2}: PASS ({secs:.2} s) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL ({secs:.2} s) {msg}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
