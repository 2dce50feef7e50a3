//! Dense small-matrix support: matrix sets, product words, eigenvalues.
//!
//! Every matrix is stored as a complex `DMatrix`; real sets simply carry zero
//! imaginary parts and are routed to the real Francis solver where it
//! matters. Words are read left to right as matrix factors, so the word
//! `[i, j]` denotes `A_i * A_j` and, acting on a vector, applies `A_j` first.

mod eigen;
mod symeig;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{JsrError, Result};

pub use eigen::{
    eigenvalues, eigenvalues_real, leading_eigenpair, leading_eigenspace, spectral_radius,
    spectral_radius_real, EigenResult,
};
pub use symeig::{hermitian_eigen, hermitian_extremes, HermitianEigen};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<Complex64>;

/// Whether a set is made of real or genuinely complex matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Real,
    Complex,
}

/// A finite, nonempty family of square matrices of one common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSet {
    kind: ScalarKind,
    n: usize,
    matrices: Vec<CMat>,
    labels: Option<Vec<String>>,
}

impl MatrixSet {
    pub fn new(kind: ScalarKind, matrices: Vec<CMat>, labels: Option<Vec<String>>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| JsrError::input("matrix set is empty"))?;
        let n = first.nrows();
        if n == 0 {
            return Err(JsrError::input("matrix dimension must be at least 1"));
        }
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != m.ncols() {
                return Err(JsrError::input(format!(
                    "matrices[{i}] is not square ({}x{})",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.nrows() != n {
                return Err(JsrError::input(format!(
                    "inconsistent dimension: matrices[{i}] is {}x{} but matrices[0] is {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(JsrError::input(format!("matrices[{i}] has a non-finite entry")));
            }
            if kind == ScalarKind::Real && m.iter().any(|z| z.im != 0.0) {
                return Err(JsrError::input(format!(
                    "matrices[{i}] has complex entries but the set is declared real"
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != matrices.len() {
                return Err(JsrError::input(format!(
                    "labels has {} entries for {} matrices",
                    l.len(),
                    matrices.len()
                )));
            }
        }
        Ok(MatrixSet { kind, n, matrices, labels })
    }

    pub fn from_real(matrices: Vec<RMat>) -> Result<Self> {
        let cm = matrices.iter().map(to_complex).collect();
        Self::new(ScalarKind::Real, cm, None)
    }

    pub fn from_complex(matrices: Vec<CMat>) -> Result<Self> {
        Self::new(ScalarKind::Complex, matrices, None)
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    pub fn matrix(&self, i: usize) -> &CMat {
        &self.matrices[i]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Every matrix divided by `divisor`.
    pub fn scaled(&self, divisor: f64) -> MatrixSet {
        MatrixSet {
            kind: self.kind,
            n: self.n,
            matrices: self.matrices.iter().map(|m| m.unscale(divisor)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn real_matrix(&self, i: usize) -> RMat {
        self.matrices[i].map(|z| z.re)
    }
}

/// A finite index sequence naming one element of the product semigroup.
/// The empty word is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProductWord(Vec<usize>);

impl ProductWord {
    pub fn new(indices: Vec<usize>) -> Self {
        ProductWord(indices)
    }

    pub fn empty() -> Self {
        ProductWord(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, set_len: usize) -> Result<()> {
        match self.0.iter().position(|&i| i >= set_len) {
            Some(p) => Err(JsrError::input(format!(
                "word index {} at position {p} is out of range for a set of {set_len} matrices",
                self.0[p]
            ))),
            None => Ok(()),
        }
    }

    /// The word of `A_i * self`.
    pub fn prepend(&self, i: usize) -> ProductWord {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(i);
        v.extend_from_slice(&self.0);
        ProductWord(v)
    }

    pub fn rotation(&self, k: usize) -> ProductWord {
        if self.0.is_empty() {
            return self.clone();
        }
        let k = k % self.0.len();
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        ProductWord(v)
    }

    /// Contiguous subwords, full word included, shortest first.
    pub fn subwords(&self) -> impl Iterator<Item = ProductWord> + '_ {
        let n = self.0.len();
        (1..=n).flat_map(move |len| (0..=n - len).map(move |s| ProductWord(self.0[s..s + len].to_vec())))
    }
}

impl fmt::Display for ProductWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

impl From<Vec<usize>> for ProductWord {
    fn from(v: Vec<usize>) -> Self {
        ProductWord(v)
    }
}

/// Lexicographically least rotation. Rotations share every eigenvalue, so
/// this picks one representative per necklace.
pub fn cyclic_canonical(word: &ProductWord) -> ProductWord {
    (0..word.len().max(1))
        .map(|k| word.rotation(k))
        .min()
        .unwrap_or_default()
}

/// `A_{i_1} * ... * A_{i_k}`; the identity for the empty word.
pub fn product_eval(word: &ProductWord, set: &MatrixSet) -> Result<CMat> {
    word.validate(set.len())?;
    let n = set.dim();
    let mut p = CMat::identity(n, n);
    for &i in word.indices() {
        p *= set.matrix(i);
    }
    Ok(p)
}

/// Largest singular value, from the top eigenvalue of `M^* M`.
pub fn operator_norm_2(m: &CMat) -> f64 {
    let gram = m.adjoint() * m;
    let (_, hi) = hermitian_extremes(&gram);
    hi.max(0.0).sqrt()
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}
