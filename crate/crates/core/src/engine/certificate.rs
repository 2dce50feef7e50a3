//! Certificates and their independent re-verification.
//!
//! An exact certificate is an SMP word `w` with `C = rho(A_w)^{1/|w|}` and a
//! conitope `U` in the lifted space that is invariant under every operator
//! divided by `C^2`. Invariance gives `rho <= C`, the word gives
//! `rho >= C`.
//!
//! Every vertex also records how it was produced: a seed point and a word.
//! The verifier replays that provenance, so a stored vertex that does not
//! match its own history is rejected even when the damaged conitope happens
//! to remain invariant.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::smp::{brute_force_bounds, SmpCandidate};
use super::subspace::{invariance_defect, project};
use crate::conitope::{gauge_among, Conitope};
use crate::error::{JsrError, Result};
use crate::lift::{apply_lifted, lift_set, ConeKind, LiftedOperator, SymPoint};
use crate::matrix::{operator_norm_2, CMat, MatrixSet};
use crate::sdp::is_psd;
use crate::tol::Tolerances;

/// Relative agreement demanded of recomputed SMP values.
const SMP_REL: f64 = 1e-9;
/// Relative agreement demanded of replayed vertices.
const PROVENANCE_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Exact,
    BoundsOnly,
}

/// Where the claimed upper bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum UpperSource {
    /// `scale * sqrt(max image norm)` of the stored conitope.
    Conitope,
    /// `min_k (max_{|w| = k} |A_w|_2)^{1/k}` for `k <= depth`.
    Classical { depth: usize },
    /// Maximum over the two blocks of a split.
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub cone: ConeKind,
    pub n: usize,
    pub smp: SmpCandidate,
    /// The lifted operators are divided by `scale^2`.
    pub scale: f64,
    pub seeds: Vec<SymPoint>,
    pub conitope: Option<Conitope>,
    pub upper_source: UpperSource,
    pub lower: f64,
    pub upper: f64,
    pub tolerances: Tolerances,
    pub split: Option<Box<SplitCertificate>>,
}

/// Certificate over a common invariant subspace `S` and its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCertificate {
    pub basis_s: CMat,
    pub basis_perp: CMat,
    pub restricted: Certificate,
    pub compressed: Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Structure,
    SmpValue,
    Validity,
    Invariance,
    Provenance,
    Sandwich,
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}", self.check, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub violations: Vec<Violation>,
    /// Largest image norm found by the invariance check, if one ran.
    pub max_image_norm: Option<f64>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, check: Check, message: impl Into<String>) {
        self.violations.push(Violation { check, message: message.into() });
    }
}

fn scaled_ops(set: &MatrixSet, scale: f64) -> Result<Vec<LiftedOperator>> {
    Ok(lift_set(set)?.into_iter().map(|op| op.scaled(scale * scale)).collect())
}

/// Structural agreement between certificate and problem; failures here are
/// input errors, not verification failures.
fn check_shape(cert: &Certificate, set: &MatrixSet) -> Result<()> {
    if cert.n != set.dim() {
        return Err(JsrError::input(format!(
            "certificate is for n = {} but the problem has n = {}",
            cert.n,
            set.dim()
        )));
    }
    if cert.cone != ConeKind::for_scalar(set.kind()) {
        return Err(JsrError::input(format!(
            "certificate cone {:?} does not match a {:?} problem",
            cert.cone,
            set.kind()
        )));
    }
    cert.smp.word.validate(set.len())?;
    for (i, s) in cert.seeds.iter().enumerate() {
        if s.kind() != cert.cone || s.n() != cert.n {
            return Err(JsrError::input(format!("seed {i} has the wrong cone or dimension")));
        }
    }
    if let Some(c) = &cert.conitope {
        if c.kind() != cert.cone || c.n() != cert.n {
            return Err(JsrError::input("conitope has the wrong cone or dimension"));
        }
        for (i, v) in c.vertices().iter().enumerate() {
            v.word.validate(set.len())?;
            if v.seed >= cert.seeds.len() {
                return Err(JsrError::input(format!("vertex {i} refers to missing seed {}", v.seed)));
            }
        }
    }
    Ok(())
}

/// Re-checks a certificate against the problem with fresh solves.
pub fn verify_certificate(cert: &Certificate, set: &MatrixSet) -> Result<Verification> {
    check_shape(cert, set)?;
    let mut out = Verification::default();
    verify_into(cert, set, &mut out, "")?;
    Ok(out)
}

fn verify_into(cert: &Certificate, set: &MatrixSet, out: &mut Verification, ctx: &str) -> Result<()> {
    let tol = &cert.tolerances;
    let exact = cert.kind == CertificateKind::Exact;
    let tag = |m: String| if ctx.is_empty() { m } else { format!("{ctx}: {m}") };

    if tol.tol_cert < tol.tol_b {
        out.push(Check::Structure, tag(format!("tol_cert {} is below tol_b {}", tol.tol_cert, tol.tol_b)));
    }
    if !(cert.lower.is_finite() && cert.upper.is_finite() && cert.scale.is_finite()) {
        out.push(Check::Structure, tag("non-finite bound or scale".into()));
        return Ok(());
    }

    // (a) the SMP value
    let recomputed = if cert.smp.word.is_empty() {
        0.0
    } else {
        SmpCandidate::evaluate(&cert.smp.word, set)?.value
    };
    let band = SMP_REL * recomputed.max(cert.smp.value) + f64::MIN_POSITIVE;
    if (recomputed - cert.smp.value).abs() > band {
        out.push(
            Check::SmpValue,
            tag(format!("SMP {} has averaged radius {recomputed:.17e}, certificate claims {:.17e}", cert.smp.word, cert.smp.value)),
        );
    }
    if cert.lower > recomputed * (1.0 + SMP_REL) + f64::MIN_POSITIVE {
        out.push(
            Check::SmpValue,
            tag(format!("lower bound {:.17e} exceeds the SMP value {recomputed:.17e}", cert.lower)),
        );
    }
    if exact && cert.conitope.is_some() && (cert.scale - recomputed).abs() > SMP_REL * recomputed {
        out.push(
            Check::SmpValue,
            tag(format!("scale {:.17e} differs from the SMP value {recomputed:.17e}", cert.scale)),
        );
    }

    // (d) the sandwich itself
    if cert.lower > cert.upper * (1.0 + 1e-12) + 1e-300 {
        out.push(Check::Sandwich, tag(format!("lower {:.17e} > upper {:.17e}", cert.lower, cert.upper)));
    }
    if exact && cert.upper - cert.lower > tol.tol_cert * (1.0 + cert.lower) {
        out.push(
            Check::Sandwich,
            tag(format!("exact claim but upper - lower = {:.3e}", cert.upper - cert.lower)),
        );
    }

    match cert.upper_source {
        UpperSource::Conitope => verify_conitope(cert, set, out, &tag)?,
        UpperSource::Classical { depth } => {
            let bf = brute_force_bounds(set, depth.max(1), usize::MAX)?;
            if cert.upper < bf.upper * (1.0 - 1e-9) {
                out.push(
                    Check::Sandwich,
                    tag(format!("upper {:.17e} below the depth-{depth} norm bound {:.17e}", cert.upper, bf.upper)),
                );
            }
        }
        UpperSource::Split => {
            let Some(split) = &cert.split else {
                out.push(Check::Split, tag("split upper bound without split data".into()));
                return Ok(());
            };
            verify_split(cert, split, set, out, ctx)?;
        }
    }
    Ok(())
}

fn verify_conitope(cert: &Certificate, set: &MatrixSet, out: &mut Verification, tag: &dyn Fn(String) -> String) -> Result<()> {
    let tol = &cert.tolerances;
    let Some(conitope) = &cert.conitope else {
        out.push(Check::Structure, tag("conitope upper bound without a conitope".into()));
        return Ok(());
    };
    if !(cert.scale > 0.0) {
        out.push(Check::Structure, tag(format!("scale {} must be positive", cert.scale)));
        return Ok(());
    }

    // (b) validity
    for (i, v) in conitope.vertices().iter().enumerate() {
        if !is_psd(&v.point, tol.tol_psd) {
            out.push(Check::Validity, tag(format!("vertex {i} is not PSD")));
        }
        if !v.scale_log.is_finite() {
            out.push(Check::Validity, tag(format!("vertex {i} has non-finite scale_log")));
        }
    }
    if !conitope.interior_nonempty(tol) {
        out.push(Check::Validity, tag("conitope does not meet the cone interior".into()));
    }

    let ops = scaled_ops(set, cert.scale)?;

    // provenance replay
    for (i, v) in conitope.vertices().iter().enumerate() {
        let mut p = cert.seeds[v.seed].clone();
        for &k in v.word.indices().iter().rev() {
            p = apply_lifted(&ops[k], &p)?;
        }
        let err = p.sub(&v.point).frobenius();
        if err > PROVENANCE_REL * (1.0 + v.point.frobenius()) {
            out.push(
                Check::Provenance,
                tag(format!("vertex {i} differs from its replayed word {} by {err:.3e}", v.word)),
            );
        }
    }

    // (c) invariance / the claimed upper bound
    let pts = conitope.points();
    let mut worst = 0.0f64;
    let mut worst_at = (0, 0);
    for (i, v) in conitope.vertices().iter().enumerate() {
        for (k, op) in ops.iter().enumerate() {
            let img = apply_lifted(op, &v.point)?;
            let g = gauge_among(&pts, &img, tol)?;
            if g.value > worst {
                worst = g.value;
                worst_at = (i, k);
            }
        }
    }
    out.max_image_norm = Some(worst);
    if cert.kind == CertificateKind::Exact {
        if worst > 1.0 + tol.tol_cert {
            out.push(
                Check::Invariance,
                tag(format!(
                    "image of vertex {} under operator {} has norm {worst:.12e} > 1 + {:.1e}",
                    worst_at.0, worst_at.1, tol.tol_cert
                )),
            );
        }
    } else {
        let implied = cert.scale * worst.sqrt();
        if implied > cert.upper * (1.0 + tol.tol_cert) {
            out.push(
                Check::Invariance,
                tag(format!("conitope only supports upper {implied:.12e}, certificate claims {:.12e}", cert.upper)),
            );
        }
    }
    Ok(())
}

fn verify_split(cert: &Certificate, split: &SplitCertificate, set: &MatrixSet, out: &mut Verification, ctx: &str) -> Result<()> {
    let n = set.dim();
    let k = split.basis_s.ncols();
    if split.basis_s.nrows() != n || split.basis_perp.nrows() != n || k + split.basis_perp.ncols() != n || k == 0 || k == n {
        return Err(JsrError::input("split bases have inconsistent shapes"));
    }
    let mut q = CMat::zeros(n, n);
    q.columns_mut(0, k).copy_from(&split.basis_s);
    q.columns_mut(k, n - k).copy_from(&split.basis_perp);
    let ortho = operator_norm_2(&(q.adjoint() * &q - CMat::identity(n, n)));
    if ortho > 1e-9 {
        out.push(Check::Split, format!("{ctx}split basis is not orthonormal ({ortho:.2e})"));
    }
    let defect = invariance_defect(set, &split.basis_s);
    if defect > 1e-9 {
        out.push(Check::Split, format!("{ctx}subspace is not invariant ({defect:.2e})"));
    }
    let restricted = project(set, &split.basis_s)?;
    let compressed = project(set, &split.basis_perp)?;
    for (name, part, sub) in [("restricted", &split.restricted, &restricted), ("compressed", &split.compressed, &compressed)] {
        let label = format!("{ctx}{name}");
        match check_shape(part, sub) {
            Ok(()) => verify_into(part, sub, out, &label)?,
            Err(e) => out.push(Check::Split, format!("{label}: {e}")),
        }
    }
    let lo = split.restricted.lower.max(split.compressed.lower);
    let hi = split.restricted.upper.max(split.compressed.upper);
    if cert.upper < hi * (1.0 - 1e-12) {
        out.push(Check::Split, format!("{ctx}upper {:.17e} below the block maximum {hi:.17e}", cert.upper));
    }
    if cert.lower > lo * (1.0 + SMP_REL) && cert.lower > cert.smp.value * (1.0 + SMP_REL) {
        out.push(Check::Split, format!("{ctx}lower {:.17e} above every block lower bound", cert.lower));
    }
    Ok(())
}
