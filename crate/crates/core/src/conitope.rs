//! Conitopes: downward closures (in the PSD order) of the convex hull of
//! finitely many PSD points, and the gauge norm they induce.
//!
//! `|x|_U = min { sum mu_i : sum mu_i u_i - x PSD, mu >= 0 }`, which is the
//! Minkowski gauge `inf { l > 0 : x / l in conitope(U) }` because a convex
//! combination scaled by `l` is exactly a nonnegative combination of mass
//! `l`.
//!
//! Validity (the gauge being a norm) needs the hull to meet the cone
//! interior. For PSD vertices that happens iff `sum u_i` is positive
//! definite: a PD element of the span is dominated by a multiple of the
//! plain sum, and the plain sum is itself in the span.

use log::warn;

use crate::error::{JsrError, Result};
use crate::lift::{ConeKind, SymPoint};
use crate::matrix::ProductWord;
use crate::sdp::{is_psd, max_min_eig_combination, solve_norm_program, NormProgram, SdpStatus};
use crate::tol::Tolerances;

/// A conitope vertex with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub point: SymPoint,
    /// Product mapping the seed point to this vertex.
    pub word: ProductWord,
    /// Log of the rescaling factors applied after generation.
    pub scale_log: f64,
    /// Index of the seed point the word acts on.
    pub seed: usize,
}

impl Vertex {
    pub fn new(point: SymPoint, word: ProductWord) -> Self {
        Vertex { point, word, scale_log: 0.0, seed: 0 }
    }

    pub fn seeded(point: SymPoint, seed: usize) -> Self {
        Vertex { point, word: ProductWord::empty(), scale_log: 0.0, seed }
    }
}

/// Outcome of one gauge evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge {
    /// Upper bound on the gauge (the primal objective); `+inf` when the
    /// point is not dominated at any scale.
    pub value: f64,
    /// Certified lower bound (the dual objective).
    pub lower: f64,
    pub status: SdpStatus,
}

/// Gauge of `x` with respect to an arbitrary PSD point list.
pub fn gauge_among(points: &[&SymPoint], x: &SymPoint, tol: &Tolerances) -> Result<Gauge> {
    if x.is_zero() {
        return Ok(Gauge { value: 0.0, lower: 0.0, status: SdpStatus::Optimal });
    }
    if points.is_empty() {
        return Ok(Gauge { value: f64::INFINITY, lower: f64::INFINITY, status: SdpStatus::Infeasible });
    }
    let sol = solve_norm_program(&NormProgram::new(points.to_vec(), x, tol))?;
    Ok(Gauge { value: sol.objective, lower: sol.dual_objective, status: sol.status })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conitope {
    kind: ConeKind,
    n: usize,
    vertices: Vec<Vertex>,
    valid: bool,
}

impl Conitope {
    /// Builds a conitope, checking shapes and that every vertex is PSD
    /// within `tol_psd`. Validity is computed eagerly.
    pub fn new(vertices: Vec<Vertex>, tol: &Tolerances) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| JsrError::input("a conitope needs at least one vertex"))?;
        let kind = first.point.kind();
        let n = first.point.n();
        for (i, v) in vertices.iter().enumerate() {
            if v.point.kind() != kind || v.point.n() != n {
                return Err(JsrError::input(format!("vertex {i} has a different cone or dimension")));
            }
            if !v.scale_log.is_finite() {
                return Err(JsrError::input(format!("vertex {i} has a non-finite scale_log")));
            }
            if !is_psd(&v.point, tol.tol_psd) {
                return Err(JsrError::input(format!("vertex {i} is not PSD")));
            }
        }
        Ok(Self::assemble(kind, n, vertices, tol))
    }

    fn assemble(kind: ConeKind, n: usize, vertices: Vec<Vertex>, tol: &Tolerances) -> Self {
        let mut c = Conitope { kind, n, vertices, valid: false };
        c.valid = c.interior_nonempty(tol);
        c
    }

    /// Shape checks only: vertices are taken as given, PSD or not. Used when
    /// loading certificates, whose verification reports bad vertices itself.
    pub fn new_unchecked(vertices: Vec<Vertex>) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| JsrError::input("a conitope needs at least one vertex"))?;
        let (kind, n) = (first.point.kind(), first.point.n());
        if vertices.iter().any(|v| v.point.kind() != kind || v.point.n() != n) {
            return Err(JsrError::input("vertices differ in cone or dimension"));
        }
        Ok(Self::assemble(kind, n, vertices, &Tolerances::default()))
    }

    pub fn from_points(points: Vec<SymPoint>, tol: &Tolerances) -> Result<Self> {
        Self::new(points.into_iter().map(|p| Vertex::new(p, ProductWord::empty())).collect(), tol)
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn points(&self) -> Vec<&SymPoint> {
        self.vertices.iter().map(|v| &v.point).collect()
    }

    /// Cached result of the interior check.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// `lambda_min(mean of vertices) > tol_interior * max(1, lambda_max)`.
    pub fn interior_nonempty(&self, tol: &Tolerances) -> bool {
        let pts = self.points();
        let lo = max_min_eig_combination(&pts);
        let mean_scale = pts.iter().map(|p| p.trace()).sum::<f64>() / pts.len() as f64;
        lo > tol.tol_interior * mean_scale.max(1.0)
    }

    pub fn gauge(&self, x: &SymPoint, tol: &Tolerances) -> Result<Gauge> {
        self.check_point(x)?;
        gauge_among(&self.points(), x, tol)
    }

    fn check_point(&self, x: &SymPoint) -> Result<()> {
        if x.kind() != self.kind || x.n() != self.n {
            return Err(JsrError::input(format!(
                "point ({:?}, n = {}) does not match conitope ({:?}, n = {})",
                x.kind(),
                x.n(),
                self.kind,
                self.n
            )));
        }
        Ok(())
    }

    /// The conitope norm `|x|_U`. Requires a valid conitope.
    pub fn norm(&self, x: &SymPoint, tol: &Tolerances) -> Result<f64> {
        if !self.valid {
            return Err(JsrError::State(
                "conitope has no interior point, so |.|_U is not a norm; run preprocessing \
                 until the vertex sum is positive definite"
                    .into(),
            ));
        }
        let g = self.gauge(x, tol)?;
        match g.status {
            SdpStatus::Optimal => Ok(g.value),
            SdpStatus::IterationLimit => Err(JsrError::Numeric(format!(
                "norm program hit the iteration limit; best bounds [{:.12e}, {:.12e}]",
                g.lower, g.value
            ))),
            SdpStatus::Infeasible => Err(JsrError::Numeric(
                "norm program reported an undominated target on a valid conitope".into(),
            )),
        }
    }

    pub fn contains(&self, x: &SymPoint, tol: &Tolerances) -> Result<bool> {
        if x.is_zero() {
            return Ok(true);
        }
        Ok(self.norm(x, tol)? <= 1.0 + tol.tol_member)
    }

    /// Greedy essential system: vertices are tested newest first against
    /// every other currently retained vertex and dropped when their gauge is
    /// at most `1 + tol_member`. Solver failures keep the vertex.
    pub fn essential_system(&self, tol: &Tolerances) -> Conitope {
        let kept = prune(self.vertices.clone(), tol);
        Self::assemble(self.kind, self.n, kept, tol)
    }

    /// Essential system of `self` plus `new_points`; the new points count
    /// as newer than every existing vertex.
    pub fn extend(&self, new_points: Vec<Vertex>, tol: &Tolerances) -> Result<Conitope> {
        for v in &new_points {
            self.check_point(&v.point)?;
        }
        let mut all = self.vertices.clone();
        all.extend(new_points);
        Ok(Self::assemble(self.kind, self.n, prune(all, tol), tol))
    }

    /// Replaces vertex points in place (used by rescaling); keeps
    /// provenance.
    pub(crate) fn map_vertices(&self, f: impl Fn(&Vertex) -> Vertex, tol: &Tolerances) -> Conitope {
        let vertices = self.vertices.iter().map(f).collect();
        Self::assemble(self.kind, self.n, vertices, tol)
    }
}

fn prune(vertices: Vec<Vertex>, tol: &Tolerances) -> Vec<Vertex> {
    let total = vertices.len();
    let mut keep: Vec<bool> = vertices.iter().map(|v| !v.point.is_zero()).collect();
    if keep.iter().filter(|&&k| k).count() == 0 && total > 0 {
        // a conitope cannot be empty; keep the oldest point
        keep[0] = true;
    }
    for i in (0..total).rev() {
        if !keep[i] {
            continue;
        }
        let others: Vec<&SymPoint> = (0..total)
            .filter(|&j| j != i && keep[j])
            .map(|j| &vertices[j].point)
            .collect();
        if others.is_empty() {
            continue;
        }
        match gauge_among(&others, &vertices[i].point, tol) {
            Ok(g) if g.status == SdpStatus::Optimal => {
                if g.value <= 1.0 + tol.tol_member {
                    keep[i] = false;
                }
            }
            Ok(g) => {
                if g.status == SdpStatus::IterationLimit {
                    warn!("pruning: norm program hit the iteration limit; keeping vertex {i}");
                }
            }
            Err(e) => warn!("pruning: solver error ({e}); keeping vertex {i}"),
        }
    }
    vertices
        .into_iter()
        .zip(keep)
        .filter_map(|(v, k)| k.then_some(v))
        .collect()
}
