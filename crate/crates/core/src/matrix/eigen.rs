//! Nonsymmetric eigenvalues via Hessenberg reduction and shifted QR.
//!
//! Real matrices go through the Francis double-shift iteration (EISPACK
//! `hqr` lineage) so conjugate pairs come out exactly paired; complex
//! matrices use a single-shift QR sweep with Wilkinson shifts. Eigenvectors
//! are recovered as the right singular vector of `M - lambda I` belonging to
//! its smallest singular value, which stays well defined under ties.

use nalgebra::SVD;
use num_complex::Complex64;

use super::{is_real, operator_norm_2, CMat, CVec, RMat};
use crate::error::{JsrError, Result};
use crate::tol::Tolerances;

const MAX_QR_SWEEPS: usize = 60;

/// The leading eigenpair of a square matrix.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub spectral_radius: f64,
    pub leading_value: Complex64,
    /// Unit 2-norm, phase fixed so its largest entry is real and positive.
    pub leading_vector: CVec,
    /// Set when at least two eigenvalues share the top modulus within
    /// `tol_eig_tie`.
    pub leading_multiplicity_flag: bool,
}

fn hessenberg_real(a: &RMat) -> RMat {
    let n = a.nrows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let mut alpha = 0.0;
        for i in (k + 1)..n {
            alpha += h[(i, k)] * h[(i, k)];
        }
        let alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 > 0.0 { -alpha } else { alpha };
        let mut v = vec![0.0; n];
        v[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            v[i] = h[(i, k)];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- (I - 2 v v^T / v^T v) H (I - 2 v v^T / v^T v)
        for j in 0..n {
            let mut s = 0.0;
            for i in (k + 1)..n {
                s += v[i] * h[(i, j)];
            }
            let f = 2.0 * s / vnorm2;
            for i in (k + 1)..n {
                h[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let mut s = 0.0;
            for j in (k + 1)..n {
                s += h[(i, j)] * v[j];
            }
            let f = 2.0 * s / vnorm2;
            for j in (k + 1)..n {
                h[(i, j)] -= f * v[j];
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
    h
}

/// Francis double-shift QR on an upper Hessenberg matrix. Indices inside
/// follow the 1-based formulation of the classical routine.
fn francis_qr(h0: &RMat) -> Result<Vec<Complex64>> {
    let n = h0.nrows();
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h0[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + if p >= 0.0 { z.abs() } else { -z.abs() };
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn = nn.saturating_sub(2);
                break;
            }
            if its == MAX_QR_SWEEPS {
                return Err(JsrError::numeric(format!(
                    "Francis QR did not converge after {MAX_QR_SWEEPS} sweeps; \
                     {nn} of {n} eigenvalues still undeflated (partial Schur form, active block 1..={nn})"
                )));
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - rr - ss;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k + 1 <= nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let norm = (p * p + q * q + r * r).sqrt();
                let s = if p >= 0.0 { norm } else { -norm };
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

fn hessenberg_complex(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    for k in 0..n - 2 {
        let mut alpha = 0.0;
        for i in (k + 1)..n {
            alpha += h[(i, k)].norm_sqr();
        }
        let alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * alpha;
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k + 1] = x0 - alpha;
        for i in (k + 2)..n {
            v[i] = h[(i, k)];
        }
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for i in (k + 1)..n {
                s += v[i].conj() * h[(i, j)];
            }
            let f = s * (2.0 / vnorm2);
            for i in (k + 1)..n {
                h[(i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                s += h[(i, j)] * v[j];
            }
            let f = s * (2.0 / vnorm2);
            for j in (k + 1)..n {
                h[(i, j)] -= f * v[j].conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
    h
}

/// Single-shift complex QR with Wilkinson shifts on an upper Hessenberg
/// matrix. Only the active window is updated since we need no Schur vectors.
fn complex_qr(h0: &CMat) -> Result<Vec<Complex64>> {
    let n = h0.nrows();
    let mut h = h0.clone();
    let mut eig = vec![Complex64::new(0.0, 0.0); n];
    let hnorm = h.norm().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let zero = Complex64::new(0.0, 0.0);

    let mut hi = n - 1;
    let mut its = 0;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if s == 0.0 {
                s = hnorm;
            }
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = zero;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        if its == MAX_QR_SWEEPS {
            return Err(JsrError::numeric(format!(
                "complex QR did not converge after {MAX_QR_SWEEPS} sweeps; \
                 active block rows {l}..={hi} of {n} still undeflated (partial Schur form)"
            )));
        }
        its += 1;

        let shift = if its % 10 == 0 {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let tr = a + d;
            let det = a * d - b * c;
            let disc = (tr * tr * 0.25 - det).sqrt();
            let l1 = tr * 0.5 + disc;
            let l2 = tr * 0.5 - disc;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        for k in l..=hi {
            h[(k, k)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), zero)
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let a1 = h[(k, j)];
                let a2 = h[(k + 1, j)];
                h[(k, j)] = c.conj() * a1 + s.conj() * a2;
                h[(k + 1, j)] = -s * a1 + c * a2;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            let top = (k + 2).min(hi);
            for i in l..=top {
                let a1 = h[(i, k)];
                let a2 = h[(i, k + 1)];
                h[(i, k)] = a1 * c + a2 * s;
                h[(i, k + 1)] = -(a1 * s.conj()) + a2 * c.conj();
            }
        }
        for k in l..=hi {
            h[(k, k)] += shift;
        }
    }
    Ok(eig)
}

/// All eigenvalues of a real matrix.
pub fn eigenvalues_real(m: &RMat) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(JsrError::input("eigenvalues need a square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(JsrError::input("matrix has non-finite entries"));
    }
    francis_qr(&hessenberg_real(m))
}

/// All eigenvalues; dispatches to the real solver when the imaginary parts
/// vanish identically.
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(JsrError::input("eigenvalues need a square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if is_real(m) {
        return eigenvalues_real(&m.map(|z| z.re));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(JsrError::input("matrix has non-finite entries"));
    }
    complex_qr(&hessenberg_complex(m))
}

pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn spectral_radius_real(m: &RMat) -> Result<f64> {
    Ok(eigenvalues_real(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Orders candidates for the leading eigenvalue: larger modulus, then larger
/// real part, then nonnegative imaginary part.
fn leading_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.norm()
        .total_cmp(&b.norm())
        .then(a.re.total_cmp(&b.re))
        .then(a.im.total_cmp(&b.im))
}

/// Right singular vectors of `m - lambda I` whose singular values are below
/// `threshold`; always at least the smallest one.
fn near_null_space(m: &CMat, lambda: Complex64, threshold: f64) -> Vec<CVec> {
    let n = m.nrows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut out = Vec::new();
    for (rank, &i) in idx.iter().enumerate() {
        if rank > 0 && svd.singular_values[i] > threshold {
            break;
        }
        let row = v_t.row(i);
        out.push(CVec::from_iterator(n, row.iter().map(|z| z.conj())));
    }
    out
}

fn normalize_phase(mut v: CVec) -> CVec {
    let nrm = v.norm();
    if nrm > 0.0 {
        v.unscale_mut(nrm);
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    if pivot.norm() > 0.0 {
        let ph = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|z| *z *= ph);
    }
    v
}

pub fn leading_eigenpair(m: &CMat, tol: &Tolerances) -> Result<EigenResult> {
    let eig = eigenvalues(m)?;
    let lead = *eig
        .iter()
        .max_by(|a, b| leading_order(a, b))
        .ok_or_else(|| JsrError::input("empty matrix"))?;
    let rho = lead.norm();
    let ties = eig
        .iter()
        .filter(|z| z.norm() >= rho - tol.tol_eig_tie * rho.max(f64::MIN_POSITIVE))
        .count();
    let mnorm = operator_norm_2(m);
    let v = near_null_space(m, lead, 0.0)
        .into_iter()
        .next()
        .expect("at least one singular vector");
    let v = normalize_phase(v);
    let residual = (m * &v - &v * lead).norm();
    if residual > tol.tol_eig_res * mnorm.max(1e-300) && residual > 1e-300 {
        return Err(JsrError::numeric(format!(
            "leading eigenvector residual {residual:.3e} exceeds {:.1e} * |M|_2 = {:.3e}",
            tol.tol_eig_res,
            tol.tol_eig_res * mnorm
        )));
    }
    Ok(EigenResult {
        spectral_radius: rho,
        leading_value: lead,
        leading_vector: v,
        leading_multiplicity_flag: ties > 1,
    })
}

/// Orthonormal basis of the span of all eigenvectors whose eigenvalues tie
/// with the leading modulus. For real matrices a conjugate pair contributes
/// only one representative, since both lift to the same PSD point.
pub fn leading_eigenspace(m: &CMat, real_lift: bool, tol: &Tolerances) -> Result<Vec<CVec>> {
    let eig = eigenvalues(m)?;
    let rho = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mnorm = operator_norm_2(m).max(f64::MIN_POSITIVE);
    let tie = tol.tol_eig_tie * rho.max(f64::MIN_POSITIVE);
    let mut reps: Vec<Complex64> = Vec::new();
    let mut sorted = eig.clone();
    sorted.sort_by(|a, b| leading_order(b, a));
    for z in sorted {
        if z.norm() < rho - tie {
            continue;
        }
        let cluster = tie.max(1e-7 * mnorm);
        if reps.iter().any(|r| (r - z).norm() <= cluster) {
            continue;
        }
        if real_lift && reps.iter().any(|r| (r.conj() - z).norm() <= cluster) {
            continue;
        }
        reps.push(z);
    }
    let threshold = 1.5e-8 * mnorm;
    let mut basis: Vec<CVec> = Vec::new();
    for lambda in reps {
        for v in near_null_space(m, lambda, threshold) {
            let mut w = v.clone();
            for b in &basis {
                let proj = b.dotc(&w);
                w -= b * proj;
            }
            let nw = w.norm();
            if nw > 1e-6 {
                basis.push(normalize_phase(w));
            }
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::to_complex;
    use approx::assert_relative_eq;

    fn ex1_a2() -> RMat {
        RMat::from_row_slice(
            4,
            4,
            &[0., -1., 1., 0., -1., -1., 1., 1., -1., 0., 0., 0., -1., -1., 0., -1.],
        )
    }

    #[test]
    fn diagonal_radius() {
        let m = RMat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -3.0]);
        assert_relative_eq!(spectral_radius_real(&m).unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rotation_has_unit_radius() {
        let m = RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let ev = eigenvalues_real(&m).unwrap();
        assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        assert_relative_eq!(ev[0].im.abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn example_one_a2_radius() {
        // LAPACK (numpy.linalg.eigvals) gives 1.77791912203308.
        let r = spectral_radius_real(&ex1_a2()).unwrap();
        assert_relative_eq!(r, 1.77791912203308, epsilon = 1e-12);
    }

    #[test]
    fn leading_pair_of_diag() {
        let m = to_complex(&RMat::from_row_slice(2, 2, &[5.0, 0.0, 0.0, 1.0]));
        let e = leading_eigenpair(&m, &Tolerances::default()).unwrap();
        assert_relative_eq!(e.spectral_radius, 5.0, epsilon = 1e-14);
        assert!(!e.leading_multiplicity_flag);
        assert_relative_eq!(e.leading_vector[0].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(e.leading_vector[1].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_is_a_full_tie() {
        let m = CMat::identity(3, 3);
        let tol = Tolerances::default();
        let e = leading_eigenpair(&m, &tol).unwrap();
        assert!(e.leading_multiplicity_flag);
        assert_relative_eq!(e.leading_vector.norm(), 1.0, epsilon = 1e-12);
        assert_eq!(leading_eigenspace(&m, true, &tol).unwrap().len(), 3);
    }

    #[test]
    fn example_one_a2_residual() {
        let m = to_complex(&ex1_a2());
        let e = leading_eigenpair(&m, &Tolerances::default()).unwrap();
        let res = (&m * &e.leading_vector - &e.leading_vector * e.leading_value).norm();
        assert!(res <= 1e-10, "residual {res}");
        // complex pair ties in modulus, but lifts to one point
        assert!(e.leading_multiplicity_flag);
        assert_eq!(leading_eigenspace(&m, true, &Tolerances::default()).unwrap().len(), 1);
        assert_eq!(leading_eigenspace(&m, false, &Tolerances::default()).unwrap().len(), 2);
    }

    #[test]
    fn complex_matrix_eigenvalues_match_trace_and_det() {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let m = CMat::from_row_slice(
            3,
            3,
            &[c(-1., 1.), c(0., -1.), c(-1., 1.), c(0., 0.), c(1., 0.), c(-1., -1.), c(1., 1.), c(0., -1.), c(-1., -1.)],
        );
        let ev = eigenvalues(&m).unwrap();
        let tr: Complex64 = ev.iter().sum();
        let det: Complex64 = ev.iter().product();
        assert_relative_eq!((tr - m.trace()).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((det - m.determinant()).norm(), 0.0, epsilon = 1e-11);
    }
}
