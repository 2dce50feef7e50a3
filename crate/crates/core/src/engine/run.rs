//! Algorithm 1 (conitope method) and Algorithm 2 (dynamical procedure).

use log::{debug, info, warn};

use super::certificate::{Certificate, CertificateKind, SplitCertificate, UpperSource};
use super::smp::{brute_force_bounds, prefix_scan, smp_search_cached, SmpCandidate, SpectralCache};
use super::subspace::{detect_invariant_subspace, SubspaceSplit};
use super::{BoundsState, EngineOptions, IterationRecord, RunOutcome};
use crate::conitope::{gauge_among, Conitope, Vertex};
use crate::error::{JsrError, Result};
use crate::lift::{apply_lifted, lift_set, lift_vector, ConeKind, LiftedOperator, SymPoint};
use crate::matrix::{leading_eigenspace, product_eval, MatrixSet, ProductWord};
use crate::sdp::SdpStatus;
use crate::tol::Tolerances;

/// A rescale or restart needs the new value to beat `C` by this much.
const IMPROVE_REL: f64 = 1e-10;

fn scaled(ops: &[LiftedOperator], c: f64) -> Vec<LiftedOperator> {
    ops.iter().map(|op| op.scaled(c * c)).collect()
}

/// `W = { A u : u in U, A in ops }`; the word of `A_i u` is `[i] ++ word(u)`.
fn images(u: &Conitope, ops: &[LiftedOperator]) -> Result<Vec<Vertex>> {
    let mut out = Vec::with_capacity(u.len() * ops.len());
    for v in u.vertices() {
        for (i, op) in ops.iter().enumerate() {
            out.push(Vertex {
                point: apply_lifted(op, &v.point)?,
                word: v.word.prepend(i),
                scale_log: v.scale_log,
                seed: v.seed,
            });
        }
    }
    Ok(out)
}

/// Upper bounds on `|w|_U` (infinite when undominated).
fn gauges(u: &Conitope, w: &[Vertex], tol: &Tolerances) -> Result<Vec<f64>> {
    let pts = u.points();
    w.iter()
        .map(|v| {
            let g = gauge_among(&pts, &v.point, tol)?;
            Ok(match g.status {
                SdpStatus::Infeasible => f64::INFINITY,
                SdpStatus::Optimal => g.value,
                SdpStatus::IterationLimit => {
                    warn!("norm program hit the iteration limit; using its primal bound {:.12e}", g.value);
                    g.value
                }
            })
        })
        .collect()
}

/// `max_{u, A} |A u|_U`: every lifted operator is a contraction of the
/// conitope norm up to this factor, so it bounds the lifted JSR.
pub fn upper_bound_from_conitope(c: &Conitope, ops: &[LiftedOperator], tol: &Tolerances) -> Result<f64> {
    if !c.is_valid() {
        return Err(JsrError::State("upper bound needs a conitope with interior".into()));
    }
    let w = images(c, ops)?;
    Ok(gauges(c, &w, tol)?.into_iter().fold(0.0, f64::max))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Essential system of `U ∪ W`. Images already inside `coni(U)` are
/// dropped up front: newest-first pruning would remove them anyway, since
/// the set they are tested against contains `U`.
fn extend_with(u: &Conitope, w: Vec<Vertex>, g: &[f64], tol: &Tolerances) -> Result<Conitope> {
    let fresh: Vec<Vertex> = w
        .into_iter()
        .zip(g)
        .filter(|(_, &gi)| gi > 1.0 + tol.tol_member)
        .map(|(v, _)| v)
        .collect();
    if fresh.is_empty() {
        return Ok(u.clone());
    }
    u.extend(fresh, tol)
}

struct BestUpper {
    y: f64,
    scale: f64,
    conitope: Conitope,
    seeds: Vec<SymPoint>,
}

struct Ctx<'a> {
    set: &'a MatrixSet,
    opts: &'a EngineOptions,
    kind: ConeKind,
    lifted: Vec<LiftedOperator>,
    cache: SpectralCache,
    history: Vec<IterationRecord>,
    best: Option<BestUpper>,
    smp: Option<SmpCandidate>,
    restarts: usize,
    last_b: f64,
    last_steps: usize,
}

impl<'a> Ctx<'a> {
    fn new(set: &'a MatrixSet, opts: &'a EngineOptions) -> Result<Self> {
        Ok(Ctx {
            set,
            opts,
            kind: ConeKind::for_scalar(set.kind()),
            lifted: lift_set(set)?,
            cache: SpectralCache::new(),
            history: Vec::new(),
            best: None,
            smp: None,
            restarts: 0,
            last_b: f64::NAN,
            last_steps: 0,
        })
    }

    fn tol(&self) -> &Tolerances {
        &self.opts.tol
    }

    fn record(&mut self, restart: usize, step: usize, c: f64, b: f64, u: &Conitope, seeds: &[SymPoint]) -> f64 {
        let y = c * b.sqrt();
        debug!("restart {restart} step {step}: C = {c:.15} B = {b:.15e} Y = {y:.15} vertices = {}", u.len());
        self.history.push(IterationRecord { restart, step, c, y, b, vertices: u.len() });
        self.last_b = b;
        self.last_steps = step;
        if y.is_finite() && self.best.as_ref().is_none_or(|bu| y < bu.y) {
            self.best = Some(BestUpper { y, scale: c, conitope: u.clone(), seeds: seeds.to_vec() });
        }
        y
    }

    fn state(&self, cert: &Certificate, vertex_count: usize) -> BoundsState {
        BoundsState {
            lower: cert.lower,
            upper: cert.upper,
            b: self.last_b,
            iteration: self.last_steps,
            vertex_count,
            restarts: self.restarts,
            history: self.history.clone(),
        }
    }

    fn exact(&self, smp: &SmpCandidate, seeds: Vec<SymPoint>, u: Conitope, y: f64) -> RunOutcome {
        let cert = Certificate {
            kind: CertificateKind::Exact,
            cone: self.kind,
            n: self.set.dim(),
            smp: smp.clone(),
            scale: smp.value,
            seeds,
            upper_source: UpperSource::Conitope,
            lower: smp.value,
            upper: y.max(smp.value),
            tolerances: *self.tol(),
            split: None,
            conitope: Some(u),
        };
        let state = self.state(&cert, cert.conitope.as_ref().map_or(0, |c| c.len()));
        RunOutcome { certificate: cert, state }
    }

    /// Best valid sandwich when exactness was not reached: the lowest
    /// conitope bound seen, or the classical norm estimate if smaller.
    fn bounds_only(&self) -> Result<RunOutcome> {
        let smp = self
            .smp
            .clone()
            .ok_or_else(|| JsrError::State("no SMP candidate was evaluated".into()))?;
        let bf = brute_force_bounds(self.set, self.opts.classical_depth.max(1), self.opts.product_budget)?;
        let mut cert = Certificate {
            kind: CertificateKind::BoundsOnly,
            cone: self.kind,
            n: self.set.dim(),
            smp: smp.clone(),
            scale: 0.0,
            seeds: Vec::new(),
            conitope: None,
            upper_source: UpperSource::Classical { depth: bf.depth },
            lower: smp.value,
            upper: bf.upper.max(smp.value),
            tolerances: *self.tol(),
            split: None,
        };
        if let Some(b) = &self.best {
            if b.y < bf.upper {
                cert.scale = b.scale;
                cert.seeds = b.seeds.clone();
                cert.conitope = Some(b.conitope.clone());
                cert.upper_source = UpperSource::Conitope;
                cert.upper = b.y.max(smp.value);
            }
        }
        if cert.upper - cert.lower <= self.tol().tol_cert * (1.0 + cert.lower) && cert.upper_source != UpperSource::Conitope {
            // the classical estimate alone closes the gap (e.g. nilpotent sets)
            cert.kind = CertificateKind::Exact;
        }
        let count = cert.conitope.as_ref().map_or(0, |c| c.len());
        let state = self.state(&cert, count);
        Ok(RunOutcome { certificate: cert, state })
    }
}

enum Attempt {
    Done(Box<RunOutcome>),
    Restart(Option<SmpCandidate>),
    Split(Box<SubspaceSplit>),
}

/// Algorithm 1: SMP search, then a conitope seeded with the lifted leading
/// eigenvector(s) of the candidate, iterated until invariant. A seed point
/// falling strictly inside the conitope (`D < 1`) proves the candidate is
/// not an SMP and restarts with a longer search.
pub fn algorithm1(set: &MatrixSet, opts: &EngineOptions) -> Result<RunOutcome> {
    let mut ctx = Ctx::new(set, opts)?;
    let mut max_len = opts.max_smp_len.max(1);
    let mut seeded: Option<SmpCandidate> = None;
    for restart in 0..=opts.max_restarts {
        let mut cand = smp_search_cached(set, max_len, opts.product_budget, &mut ctx.cache)?;
        for other in [seeded.take(), ctx.smp.clone()].into_iter().flatten() {
            if other.beats(&cand) {
                cand = other;
            }
        }
        ctx.smp = Some(cand.clone());
        info!("restart {restart}: candidate {} with value {:.15}", cand.word, cand.value);
        if !(cand.value > 0.0) {
            return ctx.bounds_only();
        }
        match conitope_run(&mut ctx, &cand, restart)? {
            Attempt::Done(o) => return Ok(*o),
            Attempt::Restart(better) => {
                seeded = better;
                max_len += 1;
                ctx.restarts += 1;
            }
            Attempt::Split(split) => return combine_split(set, &split, opts, ctx.history),
        }
    }
    warn!("restart budget exhausted; returning bounds only");
    ctx.bounds_only()
}

fn conitope_run(ctx: &mut Ctx<'_>, cand: &SmpCandidate, restart: usize) -> Result<Attempt> {
    let tol = *ctx.tol();
    let set = ctx.set;
    let c = cand.value;
    let ops = scaled(&ctx.lifted, c);

    // preprocessing
    // Every rotation of an SMP has its leading eigenvector on the boundary
    // of any extremal norm, so seeding with all of them is free.
    let rotations = if ctx.opts.cyclic_seeds { cand.word.len().max(1) } else { 1 };
    let mut vecs = Vec::new();
    let mut seen = Vec::new();
    for k in 0..rotations {
        let w = cand.word.rotation(k);
        if seen.contains(&w) {
            continue;
        }
        let p = product_eval(&w, set)?;
        vecs.extend(leading_eigenspace(&p, ctx.kind == ConeKind::RealSymmetric, &tol)?);
        seen.push(w);
    }
    let seeds: Vec<SymPoint> = vecs.iter().map(|v| lift_vector(v, ctx.kind)).collect::<Result<_>>()?;
    let mut u0 = Conitope::new(
        seeds.iter().enumerate().map(|(k, s)| Vertex::seeded(s.clone(), k)).collect(),
        &tol,
    )?;
    let mut rounds = 0;
    while !u0.is_valid() && rounds < set.dim() {
        let w = images(&u0, &ops)?;
        u0 = u0.extend(w, &tol)?;
        rounds += 1;
    }
    if !u0.is_valid() {
        for v in &vecs {
            if let Some(split) = detect_invariant_subspace(set, v, &tol)? {
                info!("invariant subspace of dimension {} found; splitting", split.basis_s.ncols());
                return Ok(Attempt::Split(Box::new(split)));
            }
        }
        return Err(JsrError::numeric(
            "preprocessing did not reach the cone interior and no invariant subspace was detected",
        ));
    }
    debug!("preprocessing: {} rounds, {} vertices", rounds, u0.len());

    // main loop
    let mut u = u0.clone();
    for step in 1..=ctx.opts.max_iters {
        let w = images(&u, &ops)?;
        let g = gauges(&u, &w, &tol)?;
        let b = max_of(&g);
        let y = ctx.record(restart, step, c, b, &u, &seeds);
        if b <= 1.0 + tol.tol_b {
            return Ok(Attempt::Done(Box::new(ctx.exact(cand, seeds, u, y))));
        }
        if ctx.opts.scan_in_conitope_method {
            let mut better: Option<SmpCandidate> = None;
            for v in &w {
                if let Some(s) = prefix_scan(&v.word, set, &mut ctx.cache)? {
                    if s.value > c * (1.0 + IMPROVE_REL) && better.as_ref().is_none_or(|b| s.beats(b)) {
                        better = Some(s);
                    }
                }
            }
            if let Some(s) = better {
                info!("subproduct {} beats the candidate ({:.15} > {:.15}); restarting", s.word, s.value, c);
                return Ok(Attempt::Restart(Some(s)));
            }
        }
        u = extend_with(&u, w, &g, &tol)?;
        if u.len() > ctx.opts.max_vertices {
            warn!("vertex cap {} exceeded", ctx.opts.max_vertices);
            return Ok(Attempt::Done(Box::new(ctx.bounds_only()?)));
        }
        let d = max_of(&gauges(&u, u0.vertices(), &tol)?);
        if d < 1.0 - tol.tol_member {
            info!("D = {d:.12} < 1: {} is not an SMP; restarting", cand.word);
            return Ok(Attempt::Restart(None));
        }
    }
    warn!("iteration cap {} reached", ctx.opts.max_iters);
    Ok(Attempt::Done(Box::new(ctx.bounds_only()?)))
}

/// Runs Algorithm 1 on both blocks and combines: the JSR is the larger of
/// the two block JSRs.
fn combine_split(
    set: &MatrixSet,
    split: &SubspaceSplit,
    opts: &EngineOptions,
    mut history: Vec<IterationRecord>,
) -> Result<RunOutcome> {
    let r = algorithm1(&split.restricted, opts)?;
    let q = algorithm1(&split.compressed, opts)?;
    let dom = if r.lower() >= q.lower() { &r } else { &q };
    let smp = if dom.certificate.smp.word.is_empty() {
        dom.certificate.smp.clone()
    } else {
        SmpCandidate::evaluate(&dom.certificate.smp.word, set)?
    };
    let lower = r.lower().max(q.lower());
    let upper = r.upper().max(q.upper()).max(lower);
    let tol = opts.tol;
    let kind = if upper - lower <= tol.tol_cert * (1.0 + lower) {
        CertificateKind::Exact
    } else {
        CertificateKind::BoundsOnly
    };
    history.extend(r.state.history.iter().copied());
    history.extend(q.state.history.iter().copied());
    let state = BoundsState {
        lower,
        upper,
        b: dom.state.b,
        iteration: r.state.iteration.max(q.state.iteration),
        vertex_count: r.state.vertex_count + q.state.vertex_count,
        restarts: r.state.restarts + q.state.restarts,
        history,
    };
    let cert = Certificate {
        kind,
        cone: ConeKind::for_scalar(set.kind()),
        n: set.dim(),
        smp,
        scale: 0.0,
        seeds: Vec::new(),
        conitope: None,
        upper_source: UpperSource::Split,
        lower,
        upper,
        tolerances: tol,
        split: Some(Box::new(SplitCertificate {
            basis_s: split.basis_s.clone(),
            basis_perp: split.basis_perp.clone(),
            restricted: r.certificate,
            compressed: q.certificate,
        })),
    };
    Ok(RunOutcome { certificate: cert, state })
}

/// Algorithm 2: start from the identity with `C = max rho(A_i)` and never
/// restart; whenever a contiguous subproduct of an image word beats `C`,
/// raise `C` to it and rescale every stored vertex by `L^{-2 l(u)}`, which
/// is exactly what a run started with the new scaling would have stored.
pub fn algorithm2(set: &MatrixSet, opts: &EngineOptions) -> Result<RunOutcome> {
    let mut ctx = Ctx::new(set, opts)?;
    let tol = opts.tol;
    let mut smp: Option<SmpCandidate> = None;
    for i in 0..set.len() {
        let w = ProductWord::new(vec![i]);
        let cand = SmpCandidate { value: ctx.cache.value_of(&w, set)?, word: w };
        if smp.as_ref().is_none_or(|b| cand.beats(b)) {
            smp = Some(cand);
        }
    }
    let mut smp = smp.expect("sets are nonempty");
    ctx.smp = Some(smp.clone());
    if !(smp.value > 0.0) {
        return ctx.bounds_only();
    }
    let mut c = smp.value;
    let seeds = vec![SymPoint::identity(ctx.kind, set.dim())];
    let mut u = Conitope::new(vec![Vertex::seeded(seeds[0].clone(), 0)], &tol)?;

    for step in 1..=opts.max_iters {
        let ops = scaled(&ctx.lifted, c);
        let w = images(&u, &ops)?;
        let g = gauges(&u, &w, &tol)?;
        let b = max_of(&g);
        let y = ctx.record(0, step, c, b, &u, &seeds);
        let before = u.clone();
        u = extend_with(&u, w.clone(), &g, &tol)?;

        let mut found: Option<SmpCandidate> = None;
        for v in &w {
            if let Some(s) = prefix_scan(&v.word, set, &mut ctx.cache)? {
                if found.as_ref().is_none_or(|f| s.beats(f)) {
                    found = Some(s);
                }
            }
        }
        match found {
            Some(s) if s.value > c * (1.0 + IMPROVE_REL) => {
                let l = s.value / c;
                info!("step {step}: subproduct {} raises C from {c:.15} to {:.15}", s.word, s.value);
                c = s.value;
                smp = s;
                ctx.smp = Some(smp.clone());
                let ln_l = l.ln();
                u = u
                    .map_vertices(
                        |v| {
                            let e = 2.0 * v.word.len() as f64;
                            Vertex {
                                point: v.point.scaled(l.powf(-e)),
                                word: v.word.clone(),
                                scale_log: v.scale_log - e * ln_l,
                                seed: v.seed,
                            }
                        },
                        &tol,
                    )
                    .essential_system(&tol);
            }
            _ => {
                if b <= 1.0 + tol.tol_b {
                    return Ok(ctx.exact(&smp, seeds, before, y));
                }
            }
        }
        if u.len() > opts.max_vertices {
            warn!("vertex cap {} exceeded with B = {b:.6e}; falling back to the classical estimate", opts.max_vertices);
            return ctx.bounds_only();
        }
    }
    warn!("iteration cap {} reached", opts.max_iters);
    ctx.bounds_only()
}
