//! Common invariant subspaces from eigenvector orbits.
//!
//! If the lifted orbit of the leading eigenvector never reaches the cone
//! interior, the linear span of the unlifted orbit is a proper common
//! invariant subspace `S`. In a basis `[S, S_perp]` every matrix is block
//! upper triangular, so the JSR is the larger of the JSRs of the two
//! diagonal blocks.

use log::warn;

use crate::error::{JsrError, Result};
use crate::matrix::{operator_norm_2, CMat, CVec, MatrixSet, ScalarKind};
use crate::tol::Tolerances;

/// Residuals within this factor of the rank threshold are flagged.
const BORDERLINE: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSplit {
    /// Orthonormal basis of the invariant subspace (`n x k`).
    pub basis_s: CMat,
    /// Orthonormal basis of its orthogonal complement (`n x (n - k)`).
    pub basis_perp: CMat,
    /// Restrictions `S^* A S` and compressions `P^* A P`, index-aligned
    /// with the original set.
    pub restricted: MatrixSet,
    pub compressed: MatrixSet,
    /// Some rank decision was close to the threshold.
    pub borderline: bool,
}

struct Orbit {
    basis: Vec<CVec>,
    borderline: bool,
}

fn orthogonalize(w: &mut CVec, basis: &[CVec]) {
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(w);
            *w -= b * c;
        }
    }
}

fn orbit_span(set: &MatrixSet, start: &CVec, tol: &Tolerances) -> Orbit {
    let n = set.dim();
    let norms: Vec<f64> = set.matrices().iter().map(operator_norm_2).collect();
    let mut basis = vec![start.unscale(start.norm())];
    let mut borderline = false;
    let mut frontier = basis.clone();
    for _ in 0..n {
        let mut grown = Vec::new();
        for b in &frontier {
            for (a, &an) in set.matrices().iter().zip(&norms) {
                let mut w = a * b;
                orthogonalize(&mut w, &basis);
                let r = w.norm();
                let thr = tol.tol_rank * an.max(f64::MIN_POSITIVE);
                if r > thr {
                    if r <= BORDERLINE * thr {
                        borderline = true;
                    }
                    let w = w.unscale(r);
                    basis.push(w.clone());
                    grown.push(w);
                } else if r > thr / BORDERLINE {
                    borderline = true;
                }
                if basis.len() == n {
                    return Orbit { basis, borderline };
                }
            }
        }
        if grown.is_empty() {
            break;
        }
        frontier = grown;
    }
    Orbit { basis, borderline }
}

fn columns(vs: &[CVec], n: usize) -> CMat {
    CMat::from_fn(n, vs.len(), |r, c| vs[c][r])
}

fn complement(basis: &[CVec], n: usize) -> Vec<CVec> {
    let mut all = basis.to_vec();
    let mut out = Vec::new();
    for k in 0..n {
        let mut e = CVec::zeros(n);
        e[k] = num_complex::Complex64::new(1.0, 0.0);
        orthogonalize(&mut e, &all);
        let r = e.norm();
        if r > 1e-6 {
            let e = e.unscale(r);
            all.push(e.clone());
            out.push(e);
        }
        if all.len() == n {
            break;
        }
    }
    out
}

/// `Q^* A Q` for every matrix (real parts kept for real sets).
pub(crate) fn project(set: &MatrixSet, q: &CMat) -> Result<MatrixSet> {
    let mats: Vec<CMat> = set.matrices().iter().map(|a| q.adjoint() * a * q).collect();
    match set.kind() {
        ScalarKind::Real => MatrixSet::new(ScalarKind::Real, mats.iter().map(|m| m.map(|z| z.re.into())).collect(), set.labels().map(|l| l.to_vec())),
        ScalarKind::Complex => MatrixSet::new(ScalarKind::Complex, mats, set.labels().map(|l| l.to_vec())),
    }
}

/// Maximum of `|(I - S S^*) A S|_2 / max(1, |A|_2)` over the set.
pub fn invariance_defect(set: &MatrixSet, basis_s: &CMat) -> f64 {
    let n = set.dim();
    let proj = CMat::identity(n, n) - basis_s * basis_s.adjoint();
    set.matrices()
        .iter()
        .map(|a| operator_norm_2(&(&proj * a * basis_s)) / operator_norm_2(a).max(1.0))
        .fold(0.0, f64::max)
}

/// Builds the split for a given orthonormal basis of an invariant subspace.
pub fn split_along(set: &MatrixSet, basis_s: CMat, borderline: bool) -> Result<SubspaceSplit> {
    let n = set.dim();
    let k = basis_s.ncols();
    if k == 0 || k >= n || basis_s.nrows() != n {
        return Err(JsrError::input(format!("split basis must be {n} x k with 0 < k < {n}")));
    }
    let s_vecs: Vec<CVec> = (0..k).map(|c| basis_s.column(c).into_owned()).collect();
    let perp = complement(&s_vecs, n);
    let basis_perp = columns(&perp, n);
    Ok(SubspaceSplit {
        restricted: project(set, &basis_s)?,
        compressed: project(set, &basis_perp)?,
        basis_s,
        basis_perp,
        borderline,
    })
}

pub fn detect_invariant_subspace(set: &MatrixSet, v0: &CVec, tol: &Tolerances) -> Result<Option<SubspaceSplit>> {
    let n = set.dim();
    if v0.len() != n {
        return Err(JsrError::input(format!("start vector has length {} but the set has n = {n}", v0.len())));
    }
    if v0.norm() == 0.0 {
        return Err(JsrError::input("start vector must be nonzero"));
    }
    let starts: Vec<CVec> = match set.kind() {
        ScalarKind::Complex => vec![v0.clone()],
        ScalarKind::Real => {
            let re = v0.map(|z| z.re.into());
            let im = v0.map(|z| z.im.into());
            [re, im].into_iter().filter(|v: &CVec| v.norm() > 1e-12 * v0.norm()).collect()
        }
    };
    for start in starts {
        let orbit = orbit_span(set, &start, tol);
        if orbit.basis.len() < n {
            let basis_s = columns(&orbit.basis, n);
            let defect = invariance_defect(set, &basis_s);
            if defect > 1e-9 {
                warn!("orbit span of dimension {} fails the invariance check ({defect:.2e}); ignoring it", orbit.basis.len());
                continue;
            }
            return split_along(set, basis_s, orbit.borderline).map(Some);
        }
    }
    Ok(None)
}
