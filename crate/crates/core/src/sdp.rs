//! Small dense conic solver for the conitope-norm program
//!
//! ```text
//!   minimise   sum_i mu_i
//!   subject to sum_i mu_i u_i - x  is PSD,   mu >= 0
//! ```
//!
//! and its dual `max <Z, x>` subject to `<Z, u_i> <= 1`, `Z` PSD.
//!
//! Both problems are solved together by a feasible primal-dual interior
//! point method (HKM search direction, Mehrotra-style centering). The
//! primal iterate keeps `S = sum mu_i u_i - x` positive definite and the
//! dual iterate keeps `Z` positive definite with `<Z, u_i> + nu_i = 1`,
//! `nu > 0`, so the reported objective pair always brackets the optimum.
//!
//! Before iterating, the problem is restricted to the range of `sum_i u_i`.
//! A target with mass outside that range is not dominated at any scale and
//! is reported infeasible; otherwise the restricted problem satisfies
//! Slater's condition even when the vertex set has no interior point.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{JsrError, Result};
use crate::lift::SymPoint;
use crate::matrix::{hermitian_eigen, CMat};
use crate::tol::Tolerances;

/// Relative eigenvalue threshold below which a direction of `sum u_i` is
/// treated as outside the vertex range.
const RANGE_TOL: f64 = 1e-11;
/// Fraction of `trace(x)` allowed outside the vertex range.
const OUTSIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NormProgram<'a> {
    pub vertices: Vec<&'a SymPoint>,
    pub target: &'a SymPoint,
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iters: usize,
}

impl<'a> NormProgram<'a> {
    pub fn new(vertices: Vec<&'a SymPoint>, target: &'a SymPoint, tol: &Tolerances) -> Self {
        NormProgram {
            vertices,
            target,
            tol_gap: tol.tol_gap,
            tol_feas: tol.tol_feas,
            max_iters: tol.max_ip_iters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub primal_mu: Vec<f64>,
    pub dual_z: SymPoint,
    /// Primal objective `sum(mu)`: an upper bound on the norm. `+inf` when
    /// infeasible.
    pub objective: f64,
    /// Dual objective `<Z, x>`: a lower bound on the norm.
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    fn trivial(status: SdpStatus, l: usize, target: &SymPoint, objective: f64) -> Self {
        SdpSolution {
            status,
            primal_mu: vec![0.0; l],
            dual_z: SymPoint::zeros(target.kind(), target.n()),
            objective,
            dual_objective: if objective.is_finite() { objective } else { 0.0 },
            gap: 0.0,
            iterations: 0,
        }
    }
}

fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    // Re tr(A B) without forming the product
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

fn hermitian_part(m: CMat) -> CMat {
    (&m + m.adjoint()).map(|z| z * 0.5)
}

struct Reduced {
    basis: CMat,
    vertices: Vec<CMat>,
    target: CMat,
}

/// Restricts the program to the range of `sum u_i`. Returns `None` when the
/// target leaks out of that range.
fn reduce(p: &NormProgram<'_>) -> Option<Reduced> {
    let n = p.target.n();
    let mut sum = CMat::zeros(n, n);
    for u in &p.vertices {
        sum += u.matrix();
    }
    let eig = hermitian_eigen(&sum);
    let top = eig.values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return None;
    }
    let keep: Vec<usize> = (0..n).filter(|&k| eig.values[k] > RANGE_TOL * top).collect();
    let basis = CMat::from_fn(n, keep.len(), |r, c| eig.vectors[(r, keep[c])]);
    let x = p.target.matrix();
    if keep.len() < n {
        let inside = (basis.adjoint() * x * &basis).trace().re;
        let total = x.trace().re;
        if total - inside > OUTSIDE_TOL * total.max(f64::MIN_POSITIVE) {
            return None;
        }
    }
    let proj = |m: &CMat| hermitian_part(basis.adjoint() * m * &basis);
    Some(Reduced {
        vertices: p.vertices.iter().map(|u| proj(u.matrix())).collect(),
        target: proj(x),
        basis,
    })
}

fn slack(vertices: &[CMat], x: &CMat, mu: &DVector<f64>) -> CMat {
    let mut s = -x.clone();
    for (u, &m) in vertices.iter().zip(mu.iter()) {
        s += u * Complex64::new(m, 0.0);
    }
    hermitian_part(s)
}

/// Largest `a` with `x + a dx` still PSD (`x` must be positive definite).
fn max_step_psd(x: &CMat, dx: &CMat) -> f64 {
    let n = x.nrows();
    let Some(ch) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let Some(linv) = ch.l().solve_lower_triangular(&CMat::identity(n, n)) else {
        return 0.0;
    };
    let lo = hermitian_eigen(&hermitian_part(&linv * dx * linv.adjoint())).values[0];
    if lo < 0.0 {
        -1.0 / lo
    } else {
        f64::INFINITY
    }
}

fn max_step_pos(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Solves `H d = -g` for the symmetric positive definite Newton system,
/// with Jacobi scaling and a small ridge as fallback.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let l = g.len();
    let dscale = DVector::from_fn(l, |i, _| 1.0 / h[(i, i)].max(f64::MIN_POSITIVE).sqrt());
    let hs = DMatrix::from_fn(l, l, |i, j| h[(i, j)] * dscale[i] * dscale[j]);
    let gs = g.component_mul(&dscale);
    for ridge in [0.0, 1e-14, 1e-12, 1e-10] {
        let mut m = hs.clone();
        for i in 0..l {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = Cholesky::new(m) {
            let ds = ch.solve(&(-&gs));
            if ds.iter().all(|v| v.is_finite()) {
                return Some(ds.component_mul(&dscale));
            }
        }
    }
    None
}

/// Evaluates the conitope-norm program.
pub fn solve_norm_program(p: &NormProgram<'_>) -> Result<SdpSolution> {
    let l = p.vertices.len();
    if l == 0 {
        return Err(JsrError::input("norm program needs at least one vertex"));
    }
    let kind = p.target.kind();
    let n = p.target.n();
    if p.vertices.iter().any(|u| u.kind() != kind || u.n() != n) {
        return Err(JsrError::input("vertices and target must share cone kind and dimension"));
    }
    if p.target.is_zero() {
        return Ok(SdpSolution::trivial(SdpStatus::Optimal, l, p.target, 0.0));
    }
    let red = match reduce(p) {
        Some(r) => r,
        None => return Ok(SdpSolution::trivial(SdpStatus::Infeasible, l, p.target, f64::INFINITY)),
    };
    let r = red.basis.ncols();

    // Work with a unit-trace target; the objective scales linearly.
    let scale = red.target.trace().re;
    if !(scale > 0.0) {
        return Ok(SdpSolution::trivial(SdpStatus::Optimal, l, p.target, 0.0));
    }
    let x = red.target.unscale(scale);
    let verts = &red.vertices;

    let mut vsum = CMat::zeros(r, r);
    for u in verts {
        vsum += u;
    }
    let vsum_chol = Cholesky::new(vsum.clone())
        .ok_or_else(|| JsrError::numeric("reduced vertex sum is not positive definite"))?;
    let linv = vsum_chol.l().solve_lower_triangular(&CMat::identity(r, r)).unwrap_or_else(|| CMat::identity(r, r));
    let gen = hermitian_eigen(&hermitian_part(&linv * &x * linv.adjoint()));
    let gev = gen.values.last().copied().unwrap_or(0.0).max(0.0);

    // strictly feasible starts on both sides
    let mut mu = DVector::from_element(l, 2.0 * gev + 1.0 / l as f64);
    let max_tr = verts.iter().map(|u| u.trace().re).fold(0.0, f64::max);
    let mut z = CMat::identity(r, r).unscale(2.0 * max_tr);
    let mut nu = DVector::from_fn(l, |i, _| 1.0 - re_trace_product(&z, &verts[i]));

    let dim = (r + l) as f64;
    let mut iterations = 0usize;
    let mut status = SdpStatus::IterationLimit;
    let mut best: Option<(f64, f64, CMat, DVector<f64>)> = None;

    loop {
        let s_mat = slack(verts, &x, &mu);
        let Some(s_chol) = Cholesky::new(s_mat.clone()) else {
            break;
        };
        let sinv = hermitian_part(s_chol.inverse());

        // certified pair: primal sum(mu), dual <Z, x> after pulling Z back
        let mut zc = z.clone();
        let worst = verts.iter().map(|u| re_trace_product(&zc, u)).fold(0.0, f64::max);
        if worst > 1.0 {
            zc = zc.unscale(worst);
        }
        let primal = mu.sum();
        let dual = re_trace_product(&zc, &x);
        if best.as_ref().is_none_or(|b| primal - dual < b.0 - b.1) {
            best = Some((primal, dual, zc, mu.clone()));
        }
        // relative stop: implies the tol_gap * (1 + objective) contract and
        // keeps the gauge accurate for tiny targets as well
        if (primal - dual).max(0.0) <= 0.5 * p.tol_gap * primal {
            status = SdpStatus::Optimal;
            break;
        }
        if iterations >= p.max_iters {
            break;
        }
        iterations += 1;

        let gap = re_trace_product(&z, &s_mat) + nu.dot(&mu);
        let zu: Vec<CMat> = verts.iter().map(|u| &z * u).collect();
        let su: Vec<CMat> = verts.iter().map(|u| &sinv * u).collect();
        let mut m = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in i..l {
                let v = re_trace_product(&zu[j], &su[i]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            m[(i, i)] += nu[i] / mu[i];
        }
        let tr_su = DVector::from_fn(l, |i, _| su[i].trace().re + 1.0 / mu[i]);

        let direction = |tau: f64| -> Option<(DVector<f64>, CMat, CMat, DVector<f64>)> {
            let rhs = tr_su.map(|v| tau * v - 1.0);
            let dmu = newton_direction(&m, &(-rhs))?;
            let ds = slack(verts, &CMat::zeros(r, r), &dmu);
            let dz = hermitian_part(sinv.scale(tau) - &z - &z * &ds * &sinv);
            let dnu = DVector::from_fn(l, |i, _| tau / mu[i] - nu[i] - nu[i] * dmu[i] / mu[i]);
            Some((dmu, ds, dz, dnu))
        };
        let steps = |d: &(DVector<f64>, CMat, CMat, DVector<f64>), frac: f64| {
            let ap = max_step_psd(&s_mat, &d.1).min(max_step_pos(&mu, &d.0));
            let ad = max_step_psd(&z, &d.2).min(max_step_pos(&nu, &d.3));
            ((frac * ap).min(1.0), (frac * ad).min(1.0))
        };

        let Some(aff) = direction(0.0) else {
            break;
        };
        let (ap, ad) = steps(&aff, 1.0);
        let gap_aff = re_trace_product(&(&z + &aff.2 * Complex64::new(ad, 0.0)), &(&s_mat + &aff.1 * Complex64::new(ap, 0.0)))
            + (&nu + &aff.3 * ad).dot(&(&mu + &aff.0 * ap));
        let sigma = (gap_aff.max(0.0) / gap).powi(3).clamp(0.0, 1.0);
        let Some(dir) = direction(sigma * gap / dim) else {
            break;
        };
        let (ap, ad) = steps(&dir, 0.95);
        if !(ap > 0.0 && ad > 0.0) {
            break;
        }
        mu += &dir.0 * ap;
        z = hermitian_part(&z + &dir.2 * Complex64::new(ad, 0.0));
        nu += &dir.3 * ad;
    }

    let (primal, dual, z, mu) = best.ok_or_else(|| JsrError::numeric("norm program produced no iterate"))?;
    let z_full = &red.basis * z * red.basis.adjoint();
    Ok(SdpSolution {
        status,
        primal_mu: mu.iter().map(|m| m * scale).collect(),
        dual_z: SymPoint::from_raw(kind, z_full),
        objective: primal * scale,
        dual_objective: dual * scale,
        gap: (primal - dual).max(0.0) * scale,
        iterations,
    })
}

/// Pivoted Cholesky on a Hermitian matrix; `true` when every pivot stays
/// above `-floor`.
fn pivoted_cholesky_ok(m: &CMat, floor: f64) -> bool {
    let n = m.nrows();
    let mut a = m.clone();
    for k in 0..n {
        let (piv, pval) = (k..n)
            .map(|i| (i, a[(i, i)].re))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty");
        if pval < -floor {
            return false;
        }
        if pval <= floor {
            // remaining block must be (numerically) zero
            return (k..n).all(|i| (k..n).all(|j| a[(i, j)].norm() <= 2.0 * floor));
        }
        a.swap_rows(k, piv);
        a.swap_columns(k, piv);
        let d = pval.sqrt();
        for i in k..n {
            a[(i, k)] /= d;
        }
        for j in (k + 1)..n {
            let ljk = a[(j, k)];
            for i in j..n {
                let lik = a[(i, k)];
                a[(i, j)] -= lik * ljk.conj();
                a[(j, i)] = a[(i, j)].conj();
            }
        }
    }
    true
}

/// Fast PSD test: `lambda_min(X) >= -tol (1 + |X|_F)` decided by pivoted
/// Cholesky on the shifted matrix.
pub fn is_psd(x: &SymPoint, tol: f64) -> bool {
    let n = x.n();
    let shift = tol * (1.0 + x.frobenius());
    let mut m = x.matrix().clone();
    for i in 0..n {
        m[(i, i)] += Complex64::new(shift, 0.0);
    }
    pivoted_cholesky_ok(&m, 1e-14 * (1.0 + x.frobenius()))
}

/// `(lambda_min(X) >= -tol (1 + |X|_F), lambda_min(X))`. The Cholesky test
/// decides first; the eigen-decomposition supplies the reported minimum and
/// settles borderline cases.
pub fn psd_check(x: &SymPoint, tol: f64) -> (bool, f64) {
    let lo = hermitian_eigen(x.matrix()).values[0];
    let eig_ok = lo >= -tol * (1.0 + x.frobenius());
    if is_psd(x, tol) {
        (true, lo)
    } else {
        (eig_ok, lo)
    }
}

/// `lambda_min(sum_i u_i / l)`. For PSD vertices this is positive exactly
/// when some combination of them is positive definite.
pub fn max_min_eig_combination(vertices: &[&SymPoint]) -> f64 {
    let Some(first) = vertices.first() else {
        return 0.0;
    };
    let n = first.n();
    let mut sum = CMat::zeros(n, n);
    for u in vertices {
        sum += u.matrix();
    }
    let sum = sum.unscale(vertices.len() as f64);
    hermitian_eigen(&sum).values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::ConeKind;
    use crate::matrix::RMat;
    use approx::assert_relative_eq;

    fn real(rows: usize, v: &[f64]) -> SymPoint {
        SymPoint::from_real(RMat::from_row_slice(rows, rows, v)).unwrap()
    }

    fn solve(vs: &[&SymPoint], x: &SymPoint) -> SdpSolution {
        solve_norm_program(&NormProgram::new(vs.to_vec(), x, &Tolerances::default())).unwrap()
    }

    #[test]
    fn identity_vertex_gives_lambda_max() {
        let i = SymPoint::identity(ConeKind::RealSymmetric, 2);
        let x = real(2, &[2.0, 0.0, 0.0, 1.0]);
        let s = solve(&[&i], &x);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn self_domination() {
        let u = real(2, &[2.0, 1.0, 1.0, 3.0]);
        let s = solve(&[&u], &u);
        assert_relative_eq!(s.objective, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn separable_diagonal() {
        let e1 = real(2, &[1.0, 0.0, 0.0, 0.0]);
        let e2 = real(2, &[0.0, 0.0, 0.0, 1.0]);
        let x = real(2, &[0.3, 0.0, 0.0, 1.7]);
        let s = solve(&[&e1, &e2], &x);
        assert_relative_eq!(s.objective, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_target() {
        let i = SymPoint::identity(ConeKind::RealSymmetric, 2);
        let s = solve(&[&i], &SymPoint::zeros(ConeKind::RealSymmetric, 2));
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert!(s.primal_mu.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn rank_deficient_vertices() {
        let e1 = real(2, &[1.0, 0.0, 0.0, 0.0]);
        let inside = real(2, &[0.5, 0.0, 0.0, 0.0]);
        let s = solve(&[&e1], &inside);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_relative_eq!(s.objective, 0.5, epsilon = 1e-8);
        let outside = real(2, &[0.0, 0.0, 0.0, 1.0]);
        let s = solve(&[&e1], &outside);
        assert_eq!(s.status, SdpStatus::Infeasible);
        assert!(s.objective.is_infinite());
    }

    #[test]
    fn psd_checks() {
        let (ok, lo) = psd_check(&SymPoint::identity(ConeKind::RealSymmetric, 3), 1e-10);
        assert!(ok);
        assert_relative_eq!(lo, 1.0, epsilon = 1e-14);
        let (ok, lo) = psd_check(&real(2, &[1.0, 0.0, 0.0, -1.0]), 1e-10);
        assert!(!ok);
        assert_relative_eq!(lo, -1.0, epsilon = 1e-14);
        assert!(is_psd(&real(2, &[1.0, 1.0, 1.0, 1.0]), 1e-10));
        assert!(!is_psd(&real(2, &[1.0, 2.0, 2.0, 1.0]), 1e-10));
    }

    #[test]
    fn interior_combination() {
        let e1 = real(2, &[1.0, 0.0, 0.0, 0.0]);
        let e2 = real(2, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(max_min_eig_combination(&[&e1]), 0.0);
        assert_relative_eq!(max_min_eig_combination(&[&e1, &e2]), 0.5, epsilon = 1e-15);
    }
}
