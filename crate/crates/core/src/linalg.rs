//! Dense complex linear-algebra helpers shared by the design and metric modules.
//!
//! Singular and eigen vectors returned from here carry a canonical phase: the
//! first entry of every right singular vector (or eigenvector) with nonzero
//! magnitude is real and positive. Decompositions computed along different
//! routes for the same subspace therefore agree entrywise, not just up to a
//! per-column unit phase.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITERS: usize = 10_000;

/// Result of a singular value decomposition sorted by decreasing singular value.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    /// Left singular vectors as columns, `m × k` with `k = min(m, n)`.
    pub u: CMat,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns, `n × k`.
    pub v: CMat,
}

impl SortedSvd {
    /// Numerical rank using the usual `max(m, n) · eps · s_max` cutoff.
    pub fn rank(&self) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        let dim = self.u.nrows().max(self.v.nrows()) as f64;
        let tol = dim * f64::EPSILON * smax;
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }
}

pub fn svd_sorted(m: &CMat) -> Result<SortedSvd> {
    let svd = m
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITERS)
        .ok_or(Error::DecompositionFailed("svd"))?;
    let u = svd.u.ok_or(Error::DecompositionFailed("svd"))?;
    let v_t = svd.v_t.ok_or(Error::DecompositionFailed("svd"))?;
    let k = svd.singular_values.len();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut out_u = CMat::zeros(m.nrows(), k);
    let mut out_v = CMat::zeros(m.ncols(), k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let v_col: CVec = v_t.row(src).adjoint();
        let phase = canonical_phase(v_col.as_slice());
        out_v.set_column(dst, &(v_col * phase));
        out_u.set_column(dst, &(u.column(src) * phase));
        values.push(svd.singular_values[src]);
    }
    Ok(SortedSvd {
        u: out_u,
        singular_values: values,
        v: out_v,
    })
}

/// Unit-modulus factor that rotates the first nonzero entry of `v` onto the
/// positive real axis.
fn canonical_phase(v: &[Complex64]) -> Complex64 {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in v {
        if z.norm() > 1e-12 * scale && z.norm() > 0.0 {
            return z.conj() / z.norm();
        }
    }
    Complex64::new(1.0, 0.0)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in decreasing
/// order and canonical eigenvector phases.
pub fn hermitian_eigen_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let col: CVec = eig.eigenvectors.column(src).into_owned();
        let phase = canonical_phase(col.as_slice());
        vectors.set_column(dst, &(col * phase));
        values.push(eig.eigenvalues[src]);
    }
    (values, vectors)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entrywise deviation `max |A - A^H|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `log2 det(A)` for a Hermitian positive definite matrix. An empty matrix
/// has determinant one.
pub fn log2_det_hpd(m: &CMat) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let chol = hermitian_part(m)
        .cholesky()
        .ok_or(Error::DecompositionFailed("cholesky"))?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..m.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Copy of `m` with column `j` removed.
pub fn without_column(m: &CMat, j: usize) -> CMat {
    m.clone().remove_column(j)
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal `basis` (n × r), returned as n × (n − r).
///
/// Standard basis vectors are projected out of the current span twice
/// (classical Gram-Schmidt with reorthogonalization); the candidate with the
/// largest residual is accepted each round.
pub fn orthonormal_complement(basis: &CMat) -> CMat {
    let n = basis.nrows();
    let r = basis.ncols();
    let mut span: Vec<CVec> = (0..r).map(|c| basis.column(c).into_owned()).collect();
    let mut out = CMat::zeros(n, n.saturating_sub(r));
    for slot in 0..n.saturating_sub(r) {
        let mut best: Option<(f64, CVec)> = None;
        for t in 0..n {
            let mut cand = CVec::zeros(n);
            cand[t] = Complex64::new(1.0, 0.0);
            for _ in 0..2 {
                for q in &span {
                    let coef = q.dotc(&cand);
                    cand -= q * coef;
                }
            }
            let norm = cand.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, cand) = best.expect("n > 0 when complement is nonempty");
        let unit = cand / Complex64::new(norm, 0.0);
        out.set_column(slot, &unit);
        span.push(unit);
    }
    out
}

/// Hermitian positive semidefinite square-root factor `S` (n × k) with
/// `S S^H ≈ A`, keeping the `k` dominant eigen-directions. Negative
/// eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt_factor(m: &CMat, k: usize) -> CMat {
    let (values, vectors) = hermitian_eigen_desc(m);
    let k = k.min(values.len());
    let mut out = CMat::zeros(m.nrows(), k);
    for (c, v) in values.iter().take(k).enumerate() {
        let s = v.max(0.0).sqrt();
        out.set_column(c, &(vectors.column(c) * Complex64::new(s, 0.0)));
    }
    out
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Phase of `z` wrapped to `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}
