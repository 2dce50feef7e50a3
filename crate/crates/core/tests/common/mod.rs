#![allow(dead_code)]

use std::path::PathBuf;

use jsr_core::io::parse_problem;
use jsr_core::lift::{ConeKind, SymPoint};
use jsr_core::matrix::{CMat, MatrixSet, RMat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> MatrixSet {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    parse_problem(p).unwrap()
}

pub fn real_matrix(r: &mut impl Rng, n: usize) -> RMat {
    RMat::from_fn(n, n, |_, _| r.random_range(-1.0..1.0))
}

pub fn complex_matrix(r: &mut impl Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

pub fn matrix(r: &mut impl Rng, kind: ConeKind, n: usize) -> CMat {
    match kind {
        ConeKind::RealSymmetric => real_matrix(r, n).map(Complex64::from),
        ConeKind::Hermitian => complex_matrix(r, n),
    }
}

/// `G G^*` for a random `n x rank` factor.
pub fn psd(r: &mut impl Rng, kind: ConeKind, n: usize, rank: usize) -> SymPoint {
    let g = CMat::from_fn(n, rank, |_, _| match kind {
        ConeKind::RealSymmetric => Complex64::new(r.random_range(-1.0..1.0), 0.0),
        ConeKind::Hermitian => Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
    });
    let m = &g * g.adjoint();
    SymPoint::new(kind, (&m + m.adjoint()).scale(0.5)).unwrap()
}

pub fn kind_of(r: &mut impl Rng) -> ConeKind {
    if r.random_bool(0.5) {
        ConeKind::RealSymmetric
    } else {
        ConeKind::Hermitian
    }
}

pub fn real_set(r: &mut impl Rng, m: usize, n: usize) -> MatrixSet {
    MatrixSet::from_real((0..m).map(|_| real_matrix(r, n)).collect()).unwrap()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}
