//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` cannot be met as literally stated (see
//! the README); they are still evaluated in full and reported as FAIL, but
//! only an unexpected failure makes the process exit non-zero.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use jsr_core::conitope::{gauge_among, Conitope};
use jsr_core::engine::{algorithm1, algorithm2, brute_force_bounds, detect_invariant_subspace, EngineOptions, RunOutcome};
use jsr_core::io::{parse_problem, CertificateFile};
use jsr_core::lift::{lift_operator, lift_vector, lifted_matrix_set, ConeKind, SymPoint};
use jsr_core::matrix::{
    cyclic_canonical, leading_eigenpair, product_eval, spectral_radius, spectral_radius_real,
    CMat, CVec, MatrixSet, ProductWord, RMat,
};
use jsr_core::sdp::{psd_check, solve_norm_program, NormProgram, SdpStatus};
use jsr_core::tol::Tolerances;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const KNOWN_RED: &[(usize, &str)] = &[
    (1, "rho(A2) = 1.77792 rounds to 1.778, not 1.779"),
    (4, "the tested image is itself the lifted vertex v4"),
    (9, "the dynamic procedure started at I does not terminate finitely on Examples 1-2"),
];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict { pass, detail: detail.into() }
    }
}

struct Run {
    code: i32,
    report: Value,
    cert: PathBuf,
    elapsed: Duration,
}

struct Ctx {
    dir: tempfile::TempDir,
    runs: HashMap<String, Run>,
    started: Instant,
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn jsr(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_jsr")).args(args).output().expect("run jsr")
}

impl Ctx {
    /// `jsr compute` on a fixture, memoised per argument list.
    fn compute(&mut self, name: &str, extra: &[&str]) -> &Run {
        let key = format!("{name} {}", extra.join(" "));
        if !self.runs.contains_key(&key) {
            let tag = self.runs.len();
            let report = self.dir.path().join(format!("report{tag}.json"));
            let cert = self.dir.path().join(format!("cert{tag}.json"));
            let problem = fixture(name);
            let mut args = vec!["compute", problem.to_str().unwrap()];
            args.extend_from_slice(extra);
            args.extend_from_slice(&["--out", report.to_str().unwrap(), "--cert", cert.to_str().unwrap()]);
            let t = Instant::now();
            let o = jsr(&args);
            let elapsed = t.elapsed();
            let text = std::fs::read_to_string(&report).unwrap_or_else(|_| "null".into());
            self.runs.insert(
                key.clone(),
                Run {
                    code: o.status.code().unwrap_or(-1),
                    report: serde_json::from_str(&text).unwrap(),
                    cert,
                    elapsed,
                },
            );
        }
        &self.runs[&key]
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn word_of(v: &Value) -> ProductWord {
    ProductWord::new(v.as_array().map(|a| a.iter().map(|x| x.as_u64().unwrap() as usize).collect()).unwrap_or_default())
}

fn real_matrix(r: &mut impl Rng, n: usize) -> RMat {
    RMat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0))
}

fn random_set(r: &mut impl Rng, m: usize, n: usize, complex: bool) -> MatrixSet {
    if complex {
        let mats = (0..m)
            .map(|_| CMat::from_fn(n, n, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))))
            .collect();
        MatrixSet::from_complex(mats).unwrap()
    } else {
        MatrixSet::from_real((0..m).map(|_| real_matrix(r, n)).collect()).unwrap()
    }
}

fn random_psd(r: &mut impl Rng, kind: ConeKind, n: usize, rank: usize) -> SymPoint {
    let g = CMat::from_fn(n, rank, |_, _| match kind {
        ConeKind::RealSymmetric => Complex64::new(r.random_range(-1.0..1.0), 0.0),
        ConeKind::Hermitian => Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
    });
    let m = &g * g.adjoint();
    SymPoint::new(kind, (&m + m.adjoint()).scale(0.5)).unwrap()
}

fn sandwich_ok(out: &RunOutcome) -> bool {
    out.state.history.iter().all(|h| h.c <= h.y + 1e-9) && out.lower() <= out.upper() * (1.0 + 1e-12)
}

fn criterion1(ctx: &mut Ctx) -> Verdict {
    let set = parse_problem(fixture("ex1.json")).unwrap();
    let rho2 = spectral_radius(set.matrix(1)).unwrap();
    let run = ctx.compute("ex1.json", &["--algorithm", "conitope"]);
    let exact = run.code == 0 && run.report["exact"] == true;
    let value = f(&run.report["lower"]);
    let close = (value - rho2).abs() <= 1e-6 * rho2 && (f(&run.report["upper"]) - rho2).abs() <= 1e-6 * rho2;
    let three = (rho2 * 1e3).round() / 1e3;
    let matches_quoted = three == 1.779;
    let fast = run.elapsed < Duration::from_secs(10);
    Verdict::new(
        exact && close && matches_quoted && fast,
        format!(
            "exact={exact} value={value:.12} rho(A2)={rho2:.12} |diff|<=1e-6*rho: {close}; rho(A2) to 3 decimals = {three} (quoted 1.779): {matches_quoted}; {:.2?} < 10s: {fast}",
            run.elapsed
        ),
    )
}

fn criterion2(ctx: &mut Ctx) -> Verdict {
    let run = ctx.compute("ex1.json", &["--algorithm", "conitope"]);
    let steps = run.report["steps"].as_u64().unwrap_or(u64::MAX);
    let vertices = run.report["vertices"].as_u64().unwrap_or(u64::MAX);
    let exact = run.report["exact"] == true;
    Verdict::new(
        exact && steps <= 6 && vertices <= 16,
        format!("exact={exact} steps={steps} (<= 6) essential vertices={vertices} (<= 16)"),
    )
}

fn criterion3(ctx: &mut Ctx) -> Verdict {
    let run = ctx.compute("ex2.json", &["--algorithm", "conitope"]);
    let exact = run.code == 0 && run.report["exact"] == true;
    let value = f(&run.report["lower"]);
    let word = word_of(&run.report["smp_word"]);
    let class_ok = cyclic_canonical(&word) == cyclic_canonical(&ProductWord::new(vec![0, 0, 1, 0, 1]));
    let steps = run.report["steps"].as_u64().unwrap_or(u64::MAX);
    let vertices = run.report["vertices"].as_u64().unwrap_or(0);
    let fast = run.elapsed < Duration::from_secs(60);
    Verdict::new(
        exact && (value - 2.2401).abs() <= 1e-3 && class_ok && steps <= 20 && fast,
        format!(
            "exact={exact} value={value:.10} smp={word} (class of A1A1A2A1A2: {class_ok}) steps={steps} (<= 20) restarts={} essential vertices={vertices} {:.2?} < 60s: {fast}",
            run.report["restarts"], run.elapsed
        ),
    )
}

fn criterion4() -> Verdict {
    let set = parse_problem(fixture("ex3.json")).unwrap();
    let tol = Tolerances::default();
    let p = product_eval(&ProductWord::new(vec![0, 1]), &set).unwrap();
    let e = leading_eigenpair(&p, &tol).unwrap();
    let rho_p = e.spectral_radius;
    // the listed normalisation A_i' = A_i / rho(P)
    let a: Vec<CMat> = set.matrices().iter().map(|m| m.unscale(rho_p)).collect();
    let x: CVec = e.leading_vector.map(|z| Complex64::new(z.re, 0.0));
    let v1 = x.clone();
    let v2 = &a[0] * &v1;
    let v3 = &a[1] * &v1;
    let v4 = &a[1] * &v2;
    let v5 = &a[1] * &v3;
    let v6 = &a[0] * &v5;
    let kind = ConeKind::RealSymmetric;
    let lifted: Vec<SymPoint> = [&v1, &v2, &v3, &v4, &v5, &v6].iter().map(|v| lift_vector(v, kind).unwrap()).collect();
    let a2 = lift_operator(&a[1], kind).unwrap();
    let w = jsr_core::lift::apply_lifted(&a2, &lifted[1]).unwrap();
    let pts: Vec<&SymPoint> = lifted.iter().collect();
    let g = gauge_among(&pts, &w, &tol).unwrap();
    let contains = Conitope::from_points(lifted.clone(), &tol)
        .ok()
        .filter(Conitope::is_valid)
        .map(|c| c.contains(&w, &tol).unwrap());
    let dist = w.sub(&lifted[3]).frobenius();
    Verdict::new(
        contains == Some(false) && g.value > 1.0 + 1e-6,
        format!(
            "contains(conitope, A2~' v2~) = {contains:?} (expected false), norm = {:.12} (expected > 1 + 1e-6); |w~ - v4~|_F = {dist:.1e}",
            g.value
        ),
    )
}

fn criterion5() -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut worst_set = 0.0f64;
    let mut bad_sets = 0;
    for k in 0..50 {
        let m = r.random_range(1..=3);
        let n = r.random_range(2..=4);
        let set = random_set(&mut r, m, n, k % 3 == 2);
        let plain = brute_force_bounds(&set, 4, usize::MAX).unwrap();
        let lifted = brute_force_bounds(&lifted_matrix_set(&set).unwrap(), 4, usize::MAX).unwrap();
        let err = (lifted.lower - plain.lower.powi(2)).abs() / (1.0 + plain.lower.powi(2));
        worst_set = worst_set.max(err);
        if err > 1e-6 {
            bad_sets += 1;
        }
    }
    let mut worst_single = 0.0f64;
    for k in 0..50 {
        let n = r.random_range(1..=4);
        let set = random_set(&mut r, 1, n, k % 2 == 1);
        let kind = ConeKind::for_scalar(set.kind());
        let rho = spectral_radius(set.matrix(0)).unwrap();
        let lr = spectral_radius_real(lift_operator(set.matrix(0), kind).unwrap().rep()).unwrap();
        worst_single = worst_single.max((lr - rho * rho).abs() / (rho * rho).max(f64::MIN_POSITIVE));
    }
    Verdict::new(
        bad_sets == 0 && worst_single <= 1e-8,
        format!(
            "50 sets at depth 4: worst |lifted - plain^2|/(1+plain^2) = {worst_set:.1e} (<= 1e-6); 50 single matrices: worst relative error {worst_single:.1e} (<= 1e-8)"
        ),
    )
}

fn criterion6(ctx: &mut Ctx) -> Verdict {
    let mut checked = 0;
    let mut failures = Vec::new();
    for name in ["ex1.json", "ex2.json", "ex3.json", "swap.json", "single_diag23.json"] {
        let run = ctx.compute(name, &["--algorithm", "conitope"]);
        let set = parse_problem(fixture(name)).unwrap();
        let bf = brute_force_bounds(&set, 4, usize::MAX).unwrap();
        let its = run.report["iterations"].as_array().cloned().unwrap_or_default();
        if its.iter().any(|h| f(&h["C"]) > f(&h["Y"]) + 1e-9) {
            failures.push(format!("{name}: C > Y"));
        }
        if f(&run.report["lower"]) < bf.lower - 1e-8 {
            failures.push(format!("{name}: C below the depth-4 lower bound"));
        }
        checked += 1;
    }
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let opts = EngineOptions { max_iters: 25, max_vertices: 300, ..EngineOptions::default() };
    for k in 0..20 {
        let m = r.random_range(1..=3);
        let n = r.random_range(2..=3);
        let set = random_set(&mut r, m, n, k % 4 == 3);
        let bf = brute_force_bounds(&set, 4, usize::MAX).unwrap();
        let a1 = algorithm1(&set, &opts).unwrap();
        let a2 = algorithm2(&set, &opts).unwrap();
        if !sandwich_ok(&a1) || !sandwich_ok(&a2) {
            failures.push(format!("random set {k}: C > Y"));
        }
        // Algorithm 1 searches every word up to length 4
        if a1.lower() < bf.lower - 1e-8 {
            failures.push(format!("random set {k}: C below the depth-4 lower bound"));
        }
        if a2.upper() < bf.lower * (1.0 - 1e-9) {
            failures.push(format!("random set {k}: dynamic upper bound below the oracle"));
        }
        checked += 1;
    }
    Verdict::new(
        failures.is_empty(),
        format!("{checked} sets, {} violations {}", failures.len(), failures.join("; ")),
    )
}

fn norm_instance(r: &mut impl Rng) -> (Vec<SymPoint>, SymPoint) {
    let kind = if r.random_bool(0.5) { ConeKind::RealSymmetric } else { ConeKind::Hermitian };
    let max_n = (1..=5).filter(|&n| kind.lifted_dim(n) <= 15).max().unwrap();
    let n = r.random_range(1..=max_n);
    let l = r.random_range(1..=10);
    let mut us: Vec<SymPoint> = (0..l)
        .map(|_| {
            let rank = r.random_range(1..=n);
            random_psd(r, kind, n, rank)
        })
        .collect();
    us[0] = random_psd(r, kind, n, n).add(&SymPoint::identity(kind, n).scaled(0.1));
    let rank = r.random_range(1..=n);
    (us, random_psd(r, kind, n, rank))
}

/// `min { t : t M - X PSD }` for 2x2 Hermitian `M` positive definite.
fn dominating_scale(m: &CMat, x: &CMat) -> f64 {
    let det = |a: &CMat| a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let dm = det(m);
    if dm.re <= 1e-14 {
        return f64::INFINITY;
    }
    let inv = CMat::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]]).map(|z| z / dm);
    let p = &inv * x;
    let tr = (p[(0, 0)] + p[(1, 1)]).re;
    let disc = (tr * tr - 4.0 * det(&p).re).max(0.0);
    ((tr + disc.sqrt()) / 2.0).max(0.0)
}

fn grid_norm(us: &[SymPoint], x: &SymPoint) -> f64 {
    let k = 1000usize;
    let h = 1.0 / k as f64;
    let mut best = f64::INFINITY;
    for i in 0..=k {
        for j in 0..=(if us.len() == 3 { k - i } else { 0 }) {
            let w = match us.len() {
                1 => vec![1.0],
                2 => vec![i as f64 * h, 1.0 - i as f64 * h],
                _ => vec![i as f64 * h, j as f64 * h, (1.0 - (i + j) as f64 * h).max(0.0)],
            };
            let mut m = CMat::zeros(2, 2);
            for (wi, u) in w.iter().zip(us) {
                m += u.matrix().map(|z| z * *wi);
            }
            best = best.min(dominating_scale(&m, x.matrix()));
            if us.len() == 1 {
                return best;
            }
        }
    }
    best
}

fn criterion7() -> Verdict {
    let tol = Tolerances::default();
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut not_optimal = 0;
    for _ in 0..200 {
        let (us, x) = norm_instance(&mut r);
        let s = solve_norm_program(&NormProgram::new(us.iter().collect(), &x, &tol)).unwrap();
        if s.status != SdpStatus::Optimal {
            not_optimal += 1;
            continue;
        }
        worst = worst.max((s.objective - s.dual_objective).abs() / (1.0 + s.objective));
    }
    let mut worst_grid = 0.0f64;
    for case in 0..12 {
        let kind = if case % 2 == 0 { ConeKind::RealSymmetric } else { ConeKind::Hermitian };
        let l = 1 + case % 3;
        let mut us: Vec<SymPoint> = (0..l)
            .map(|_| {
                let rank = r.random_range(1..=2);
                random_psd(&mut r, kind, 2, rank)
            })
            .collect();
        us[0] = random_psd(&mut r, kind, 2, 2).add(&SymPoint::identity(kind, 2).scaled(0.05));
        let rank = r.random_range(1..=2);
        let x = random_psd(&mut r, kind, 2, rank);
        let sdp = solve_norm_program(&NormProgram::new(us.iter().collect(), &x, &tol)).unwrap().objective;
        worst_grid = worst_grid.max((sdp - grid_norm(&us, &x)).abs() / (1.0 + sdp));
    }
    Verdict::new(
        not_optimal == 0 && worst <= 1e-7 && worst_grid <= 2e-3,
        format!(
            "200 programs: {not_optimal} not optimal, worst |primal - dual|/(1+obj) = {worst:.1e} (<= 1e-7); 12 grid cases (step 1e-3): worst deviation {worst_grid:.1e} (<= 2e-3)"
        ),
    )
}

fn criterion8(ctx: &mut Ctx) -> Verdict {
    let names = ["ex1.json", "ex2.json", "ex3.json", "swap.json", "single_diag23.json"];
    let mut certs = Vec::new();
    let mut reverified = 0;
    let mut problems = Vec::new();
    for name in names {
        let run = ctx.compute(name, &["--algorithm", "conitope"]);
        if run.report["exact"] != true {
            continue;
        }
        let o = jsr(&["verify", run.cert.to_str().unwrap(), fixture(name).to_str().unwrap()]);
        if o.status.code() == Some(0) {
            reverified += 1;
        } else {
            problems.push(format!("{name} did not re-verify"));
        }
        certs.push((name, run.cert.clone()));
    }
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let with_vertices: Vec<(&str, CertificateFile)> = certs
        .iter()
        .filter_map(|(n, p)| {
            let c: CertificateFile = serde_json::from_str(&std::fs::read_to_string(p).ok()?).ok()?;
            c.vertices.is_some().then_some((*n, c))
        })
        .collect();
    let mut caught = 0;
    for k in 0..20 {
        let (name, base) = &with_vertices[k % with_vertices.len()];
        let mut c = base.clone();
        let vs = c.vertices.as_mut().unwrap();
        let i = r.random_range(0..vs.len());
        let j = r.random_range(0..vs[i].svec.len());
        vs[i].svec[j] += if r.random_bool(0.5) { 1e-3 } else { -1e-3 };
        let path = ctx.dir.path().join(format!("mutant{k}.json"));
        std::fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
        let o = jsr(&["verify", path.to_str().unwrap(), fixture(name).to_str().unwrap()]);
        if o.status.code() == Some(1) {
            caught += 1;
        } else {
            problems.push(format!("mutant {k} ({name} vertex {i} coord {j}) exit {:?}", o.status.code()));
        }
    }
    Verdict::new(
        reverified == certs.len() && !certs.is_empty() && caught == 20,
        format!(
            "{reverified}/{} exact certificates re-verify (exit 0); {caught}/20 perturbed certificates rejected (exit 1) {}",
            certs.len(),
            problems.join("; ")
        ),
    )
}

/// Random 2x2 pairs without a common eigenvector, scaled to JSR about 1.
fn irreducible_pairs(count: usize) -> Vec<MatrixSet> {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let tol = Tolerances::default();
    let mut out = Vec::new();
    while out.len() < count {
        let set = random_set(&mut r, 2, 2, false);
        let (a, b) = (set.matrix(0), set.matrix(1));
        let comm = a * b - b * a;
        let det = (comm[(0, 0)] * comm[(1, 1)] - comm[(0, 1)] * comm[(1, 0)]).norm();
        if det < 1e-2 {
            continue;
        }
        let reducible = set.matrices().iter().any(|m| {
            let v = leading_eigenpair(m, &tol).unwrap().leading_vector;
            detect_invariant_subspace(&set, &v, &tol).unwrap().is_some()
        });
        if reducible {
            continue;
        }
        let bf = brute_force_bounds(&set, 6, usize::MAX).unwrap();
        out.push(set.scaled(bf.lower));
    }
    out
}

fn criterion9(ctx: &mut Ctx) -> Verdict {
    let mut parts = Vec::new();
    let mut all = true;
    for (name, iters) in [("ex1.json", "40"), ("ex2.json", "20")] {
        let c = ctx.compute(name, &["--algorithm", "conitope"]);
        let (c_exact, c_val) = (c.report["exact"] == true, f(&c.report["lower"]));
        let d = ctx.compute(name, &["--algorithm", "dynamic", "--max-iters", iters]);
        let (d_exact, d_val, d_up) = (d.report["exact"] == true, f(&d.report["lower"]), f(&d.report["upper"]));
        let agree = (c_val - d_val).abs() <= 1e-6 * c_val;
        let ok = c_exact && d_exact && agree;
        all &= ok;
        parts.push(format!(
            "{name}: conitope exact={c_exact}, dynamic exact={d_exact} after {iters} steps (interval [{d_val:.10}, {d_up:.10}]), values agree: {agree}"
        ));
    }
    let opts = EngineOptions::default();
    let mut agreeing = 0;
    let mut both_exact = 0;
    let pairs = irreducible_pairs(10);
    for set in &pairs {
        let a1 = algorithm1(set, &opts).unwrap();
        let a2 = algorithm2(set, &EngineOptions { max_iters: 60, ..opts }).unwrap();
        let exact = a1.is_exact() && a2.is_exact();
        if exact {
            both_exact += 1;
        }
        if exact && (a1.lower() - a2.lower()).abs() <= 1e-6 * a1.lower() {
            agreeing += 1;
        }
    }
    all &= agreeing == pairs.len();
    parts.push(format!("random irreducible pairs: {both_exact}/10 exact for both, {agreeing}/10 agree within 1e-6"));
    Verdict::new(all, parts.join("; "))
}

fn criterion10() -> Verdict {
    let tol = Tolerances::default();
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut failures: Vec<String> = Vec::new();
    let instances = 500;
    for k in 0..instances {
        let kind = if r.random_bool(0.5) { ConeKind::RealSymmetric } else { ConeKind::Hermitian };
        let n = r.random_range(1..=3);
        let mut pts = vec![random_psd(&mut r, kind, n, n).add(&SymPoint::identity(kind, n).scaled(0.05))];
        for _ in 0..r.random_range(1..=5) {
            let rank = r.random_range(1..=n);
            pts.push(random_psd(&mut r, kind, n, rank));
        }
        let (i, j) = (r.random_range(0..pts.len()), r.random_range(0..pts.len()));
        let s: f64 = r.random_range(0.3..0.95);
        pts.push(pts[i].scaled(0.5 * s).add(&pts[j].scaled(0.5 * s)));
        let u = Conitope::from_points(pts, &tol).unwrap();
        let e = u.essential_system(&tol);
        let probe = |r: &mut ChaCha8Rng| {
            let rank = r.random_range(1..=n);
            random_psd(r, kind, n, rank).scaled(r.random_range(0.01..3.0))
        };
        let x = probe(&mut r);
        let y = probe(&mut r);
        let (nx, ny) = (u.norm(&x, &tol).unwrap(), u.norm(&y, &tol).unwrap());
        let c = r.random_range(0.1..10.0);
        if (u.norm(&x.scaled(c), &tol).unwrap() - c * nx).abs() > 1e-7 * c * nx {
            failures.push(format!("{k}: homogeneity"));
        }
        if u.norm(&x.add(&y), &tol).unwrap() > nx + ny + tol.tol_member * (1.0 + nx + ny) {
            failures.push(format!("{k}: triangle"));
        }
        if !(nx > 0.0) {
            failures.push(format!("{k}: definiteness"));
        }
        let z = x.add(&y);
        if psd_check(&z.sub(&x), tol.tol_psd).0 && nx > u.norm(&z, &tol).unwrap() + tol.tol_member {
            failures.push(format!("{k}: monotonicity"));
        }
        for _ in 0..20 {
            let p = probe(&mut r);
            let (a, b) = (u.norm(&p, &tol).unwrap(), e.norm(&p, &tol).unwrap());
            if (a - b).abs() > 1e-7 * (1.0 + a) {
                failures.push(format!("{k}: pruning changed a norm ({a} vs {b})"));
                break;
            }
        }
        if e.essential_system(&tol).len() != e.len() {
            failures.push(format!("{k}: idempotence"));
        }
        let ep = e.points();
        for v in 0..ep.len() {
            let others: Vec<&SymPoint> = ep.iter().enumerate().filter(|&(w, _)| w != v).map(|(_, p)| *p).collect();
            if gauge_among(&others, ep[v], &tol).unwrap().value <= 1.0 + tol.tol_member {
                failures.push(format!("{k}: vertex {v} is redundant"));
            }
        }
    }
    Verdict::new(
        failures.is_empty(),
        format!(
            "{instances} instances (axioms, monotonicity, pruning preservation over 20 probes each, idempotence, minimality): {} failures {}",
            failures.len(),
            failures.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
        ),
    )
}

fn main() {
    let mut ctx = Ctx { dir: tempfile::tempdir().unwrap(), runs: HashMap::new(), started: Instant::now() };
    let titles = [
        "Example 1 value",
        "Example 1 shape",
        "Example 2 (complex)",
        "Example 3 non-invariance",
        "square law",
        "sandwich and oracle",
        "solver duality",
        "certificate mutations",
        "cross-algorithm agreement",
        "conitope property suites",
    ];
    let mut unexpected = 0;
    for (k, title) in titles.iter().enumerate() {
        let id = k + 1;
        let t = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(|| match id {
            1 => criterion1(&mut ctx),
            2 => criterion2(&mut ctx),
            3 => criterion3(&mut ctx),
            4 => criterion4(),
            5 => criterion5(),
            6 => criterion6(&mut ctx),
            7 => criterion7(),
            8 => criterion8(&mut ctx),
            9 => criterion9(&mut ctx),
            _ => criterion10(),
        }))
        .unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::new(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let known = KNOWN_RED.iter().find(|(c, _)| *c == id).map(|(_, why)| *why);
        let mark = if verdict.pass { "PASS" } else { "FAIL" };
        let note = match (verdict.pass, known) {
            (false, Some(why)) => format!(" [known: {why}]"),
            (false, None) => {
                unexpected += 1;
                String::new()
            }
            _ => String::new(),
        };
        println!("criterion {id:>2} {mark} {title} ({:.1?}): {}{note}", t.elapsed(), verdict.detail);
    }
    let total = ctx.started.elapsed();
    println!("acceptance suite finished in {total:.1?}");
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
