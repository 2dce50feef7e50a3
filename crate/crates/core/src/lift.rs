//! Semidefinite lifting of vectors and matrices.
//!
//! A vector `v` lifts to the PSD matrix `Re(v v^*)` (real-symmetric cone) or
//! `v v^*` (Hermitian cone); a matrix `A` lifts to the congruence
//! `X -> A X A^T` (resp. `A X A^*`), which maps the PSD cone into itself and
//! squares the spectral radius. Lifted operators are materialised as real
//! `d x d` matrices acting on `svec` coordinates.
//!
//! `svec` layout (column-major lower triangle):
//! * real-symmetric, `d = n(n+1)/2`: for each column `j`, `X_jj` then
//!   `sqrt(2) X_ij` for `i > j`;
//! * Hermitian, `d = n^2`: for each column `j`, `X_jj` then the pair
//!   `sqrt(2) Re X_ij, sqrt(2) Im X_ij` for `i > j`.
//!
//! With the `sqrt(2)` factors `svec` is an isometry for the trace inner
//! product `<X, Y> = Re tr(X Y^*)`.

use std::f64::consts::SQRT_2;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{JsrError, Result};
use crate::matrix::{CMat, CVec, MatrixSet, ProductWord, RMat, ScalarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeKind {
    RealSymmetric,
    Hermitian,
}

impl ConeKind {
    /// Real sets live in the real-symmetric cone, complex sets in the
    /// Hermitian one.
    pub fn for_scalar(kind: ScalarKind) -> ConeKind {
        match kind {
            ScalarKind::Real => ConeKind::RealSymmetric,
            ScalarKind::Complex => ConeKind::Hermitian,
        }
    }

    pub fn lifted_dim(self, n: usize) -> usize {
        match self {
            ConeKind::RealSymmetric => n * (n + 1) / 2,
            ConeKind::Hermitian => n * n,
        }
    }

    /// Inverse of [`ConeKind::lifted_dim`].
    pub fn base_dim(self, d: usize) -> Option<usize> {
        (1..=d).find(|&n| self.lifted_dim(n) == d)
    }
}

/// A self-adjoint `n x n` matrix tagged with its cone.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPoint {
    kind: ConeKind,
    mat: CMat,
}

impl SymPoint {
    /// Validates shape and self-adjointness (within `1e-12` relative) and
    /// stores the exactly symmetrised matrix.
    pub fn new(kind: ConeKind, mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(JsrError::input(format!(
                "sym point must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(JsrError::input("sym point has non-finite entries"));
        }
        if kind == ConeKind::RealSymmetric && mat.iter().any(|z| z.im != 0.0) {
            return Err(JsrError::input("real-symmetric point with complex entries"));
        }
        let asym = (&mat - mat.adjoint()).norm();
        if asym > 1e-12 * (1.0 + mat.norm()) {
            return Err(JsrError::input(format!(
                "matrix is not self-adjoint (|X - X^*|_F = {asym:.3e})"
            )));
        }
        Ok(Self::from_raw(kind, mat))
    }

    pub(crate) fn from_raw(kind: ConeKind, mat: CMat) -> Self {
        let mut m = (&mat + mat.adjoint()).map(|z| z * 0.5);
        if kind == ConeKind::RealSymmetric {
            m.iter_mut().for_each(|z| z.im = 0.0);
        }
        SymPoint { kind, mat: m }
    }

    pub fn from_real(mat: RMat) -> Result<Self> {
        Self::new(ConeKind::RealSymmetric, crate::matrix::to_complex(&mat))
    }

    pub fn identity(kind: ConeKind, n: usize) -> Self {
        SymPoint { kind, mat: CMat::identity(n, n) }
    }

    pub fn zeros(kind: ConeKind, n: usize) -> Self {
        SymPoint { kind, mat: CMat::zeros(n, n) }
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn scaled(&self, c: f64) -> SymPoint {
        SymPoint { kind: self.kind, mat: self.mat.scale(c) }
    }

    pub fn add(&self, other: &SymPoint) -> SymPoint {
        SymPoint { kind: self.kind, mat: &self.mat + &other.mat }
    }

    pub fn sub(&self, other: &SymPoint) -> SymPoint {
        SymPoint { kind: self.kind, mat: &self.mat - &other.mat }
    }

    /// `Re tr(X Y^*)`.
    pub fn inner(&self, other: &SymPoint) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

pub fn svec(x: &SymPoint) -> DVector<f64> {
    let n = x.n();
    let m = &x.mat;
    let mut out = Vec::with_capacity(x.kind.lifted_dim(n));
    for j in 0..n {
        out.push(m[(j, j)].re);
        for i in (j + 1)..n {
            match x.kind {
                ConeKind::RealSymmetric => out.push(SQRT_2 * m[(i, j)].re),
                ConeKind::Hermitian => {
                    out.push(SQRT_2 * m[(i, j)].re);
                    out.push(SQRT_2 * m[(i, j)].im);
                }
            }
        }
    }
    DVector::from_vec(out)
}

pub fn smat(v: &DVector<f64>, kind: ConeKind, n: usize) -> Result<SymPoint> {
    let d = kind.lifted_dim(n);
    if v.len() != d {
        return Err(JsrError::input(format!(
            "svec length {} does not match n = {n} (expected {d})",
            v.len()
        )));
    }
    let mut m = CMat::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = Complex64::new(v[k], 0.0);
        k += 1;
        for i in (j + 1)..n {
            let z = match kind {
                ConeKind::RealSymmetric => {
                    k += 1;
                    Complex64::new(v[k - 1] / SQRT_2, 0.0)
                }
                ConeKind::Hermitian => {
                    k += 2;
                    Complex64::new(v[k - 2] / SQRT_2, v[k - 1] / SQRT_2)
                }
            };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Ok(SymPoint { kind, mat: m })
}

/// `Re(v v^*)` on the real-symmetric cone (equal to `v1 v1^T + v2 v2^T` for
/// `v = v1 + i v2`), `v v^*` on the Hermitian cone.
pub fn lift_vector(v: &CVec, kind: ConeKind) -> Result<SymPoint> {
    if v.is_empty() || v.iter().all(|z| z.norm() == 0.0) {
        return Err(JsrError::input("cannot lift the zero vector"));
    }
    let outer = v * v.adjoint();
    Ok(SymPoint::from_raw(kind, outer))
}

/// A lifted congruence materialised in `svec` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedOperator {
    kind: ConeKind,
    n: usize,
    rep: RMat,
    source_word: Option<ProductWord>,
}

impl LiftedOperator {
    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.rep.nrows()
    }

    pub fn rep(&self) -> &RMat {
        &self.rep
    }

    pub fn source_word(&self) -> Option<&ProductWord> {
        self.source_word.as_ref()
    }

    pub fn with_word(mut self, word: ProductWord) -> Self {
        self.source_word = Some(word);
        self
    }

    /// The operator divided by `divisor`.
    pub fn scaled(&self, divisor: f64) -> LiftedOperator {
        LiftedOperator {
            kind: self.kind,
            n: self.n,
            rep: self.rep.unscale(divisor),
            source_word: self.source_word.clone(),
        }
    }

    pub fn compose(&self, other: &LiftedOperator) -> LiftedOperator {
        LiftedOperator {
            kind: self.kind,
            n: self.n,
            rep: &self.rep * &other.rep,
            source_word: None,
        }
    }
}

fn congruence(a: &CMat, x: &CMat) -> CMat {
    a * x * a.adjoint()
}

pub fn lift_operator(a: &CMat, kind: ConeKind) -> Result<LiftedOperator> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(JsrError::input("lift_operator needs a nonempty square matrix"));
    }
    if kind == ConeKind::RealSymmetric && a.iter().any(|z| z.im != 0.0) {
        return Err(JsrError::input(
            "complex matrix cannot act on the real-symmetric cone; use the hermitian cone",
        ));
    }
    let d = kind.lifted_dim(n);
    let mut rep = RMat::zeros(d, d);
    let mut e = DVector::zeros(d);
    for k in 0..d {
        e.fill(0.0);
        e[k] = 1.0;
        let basis = smat(&e, kind, n)?;
        let img = SymPoint::from_raw(kind, congruence(a, &basis.mat));
        rep.set_column(k, &svec(&img));
    }
    Ok(LiftedOperator { kind, n, rep, source_word: None })
}

pub fn apply_lifted(l: &LiftedOperator, x: &SymPoint) -> Result<SymPoint> {
    if x.kind != l.kind || x.n() != l.n {
        return Err(JsrError::input(format!(
            "dimension mismatch: operator acts on {:?} n = {}, point is {:?} n = {}",
            l.kind,
            l.n,
            x.kind,
            x.n()
        )));
    }
    smat(&(&l.rep * svec(x)), l.kind, l.n)
}

/// Lifts every matrix of a set onto the cone matching its scalar kind.
pub fn lift_set(set: &MatrixSet) -> Result<Vec<LiftedOperator>> {
    let kind = ConeKind::for_scalar(set.kind());
    set.matrices()
        .iter()
        .enumerate()
        .map(|(i, a)| Ok(lift_operator(a, kind)?.with_word(ProductWord::new(vec![i]))))
        .collect()
}

/// The lifted family as an ordinary real matrix set of dimension `d`.
pub fn lifted_matrix_set(set: &MatrixSet) -> Result<MatrixSet> {
    let ops = lift_set(set)?;
    MatrixSet::from_real(ops.into_iter().map(|l| l.rep).collect())
}
