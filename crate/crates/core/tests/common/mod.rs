//! Reference computations shared by the integration tests. Everything here
//! is written from scratch on plain complex arithmetic so that it does not
//! reuse any library routine under test.
#![allow(dead_code)]

use num_complex::Complex64;
use proptest::test_runner::Config as ProptestConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use twinshift_core::CMat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) / 2f64.sqrt()
    })
}

fn to_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![Complex64::new(0.0, 0.0); m]; n];
    for i in 0..n {
        for t in 0..k {
            let x = a[i][t];
            for j in 0..m {
                out[i][j] += x * b[t][j];
            }
        }
    }
    out
}

fn adj(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].conj()).collect()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &CMat) -> Complex64 {
    let mut a = to_rows(m);
    let n = a.len();
    let mut d = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].norm().partial_cmp(&a[y][c].norm()).unwrap()).unwrap();
        if a[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot = a[c].clone();
            for (x, v) in a[r].iter_mut().zip(pivot).skip(c) {
                *x -= f * v;
            }
        }
    }
    d
}

/// `log2 |I + scale · F^H Hᴴ W Wᴴ H F|` evaluated from explicit products.
pub fn rate(h: &CMat, w: &CMat, f: &CMat, scale: f64) -> f64 {
    let (h, w, f) = (to_rows(h), to_rows(w), to_rows(f));
    let g = mul(&mul(&adj(&w), &h), &f);
    let gg = mul(&adj(&g), &g);
    let n = gg.len();
    let m = CMat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) + gg[i][j] * scale
    });
    det(&m).re.log2()
}

/// `log2 det(Wᴴ W + c·G Gᴴ) − log2 det(Wᴴ W)` with `G = Wᴴ H F_RF F_BB`.
pub fn rate_general(h: &CMat, f_rf: &CMat, f_bb: &CMat, w: &CMat, rho: f64, sigma2: f64) -> f64 {
    let f = f_rf * f_bb;
    let c = rho / (f_bb.ncols() as f64 * sigma2);
    let g = w.adjoint() * h * f;
    let noise = w.adjoint() * w;
    let total = &noise + &g * g.adjoint() * Complex64::new(c, 0.0);
    (det(&total).re / det(&noise).re).log2()
}

/// Dominant eigenvector and eigenvalue by power iteration with deflation of
/// the given orthonormal set.
pub fn top_eigenpairs(m: &CMat, count: usize) -> Vec<(f64, Vec<Complex64>)> {
    let n = m.nrows();
    let mut found: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for k in 0..count {
        let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (i * (k + 3)) as f64 * 0.37, 0.1 * i as f64)).collect();
        let mut lambda = 0.0;
        for _ in 0..5000 {
            for (_, u) in &found {
                let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    v[i] -= u[i] * dot;
                }
            }
            let mut next = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += m[(i, j)] * v[j];
                }
            }
            let norm = next.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            v = next.into_iter().map(|z| z / norm).collect();
        }
        found.push((lambda, v));
    }
    found
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn fro2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn no_persist(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}
