//! Exact rate gap between two precoders, accumulated one entry at a time.
//!
//! Starting from `F_first`, entries are swapped to their values in `F_last`
//! one per step. For the column `j` touched by a step, the rate splits as
//!
//! ```text
//! R(F) = log2|D_j| + log2(1 + e + f + g)
//! D_j  = I + s·F̄^H M F̄
//! Y_j  = s·M − s²·M F̄ D_j^{-1} F̄^H M
//! ```
//!
//! where `F̄` is `F` without column `j`, `s = ρ / (N_s σ²)`, and `e`, `f`, `g`
//! are the parts of `f_j^H Y_j f_j` that involve entry `i` zero, one and two
//! times. Neither `D_j` nor `e` depend on entry `(i, j)`, so each step's rate
//! change is `log2((1 + e + f' + g') / (1 + e + f + g))` and the steps
//! telescope to `R(F_last) − R(F_first)`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{identity, log2_det_hpd, without_column, CMat};
use crate::metrics::{combined_gram, rate_from_gram};

/// Order in which entries are replaced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ReplacementOrder {
    /// Walk rows within a column, columns ascending.
    #[default]
    ColumnMajor,
    RowMajor,
    /// Explicit `(row, col)` sequence; must visit every entry exactly once.
    Custom(Vec<(usize, usize)>),
}

impl ReplacementOrder {
    pub fn sequence(&self, rows: usize, cols: usize) -> Result<Vec<(usize, usize)>> {
        match self {
            ReplacementOrder::ColumnMajor => Ok((0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect()),
            ReplacementOrder::RowMajor => Ok((0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect()),
            ReplacementOrder::Custom(seq) => {
                let mut seen = vec![false; rows * cols];
                for &(i, j) in seq {
                    if i >= rows || j >= cols || std::mem::replace(&mut seen[i * cols + j], true) {
                        return Err(Error::InvalidArgument(format!(
                            "replacement order entry ({i}, {j}) is out of range or repeated"
                        )));
                    }
                }
                if seq.len() != rows * cols {
                    return Err(Error::InvalidArgument(format!(
                        "replacement order covers {} of {} entries",
                        seq.len(),
                        rows * cols
                    )));
                }
                Ok(seq.clone())
            }
        }
    }
}

/// One replacement step.
#[derive(Debug, Clone, Serialize)]
pub struct GapStep {
    /// 1-based step index.
    pub k: usize,
    pub row: usize,
    pub col: usize,
    /// Part of `f_j^H Y_j f_j` not involving entry `(i, j)`.
    pub e: f64,
    /// `e` recomputed after the replacement; equal to `e` up to rounding.
    pub e_after: f64,
    pub f_before: f64,
    pub f_after: f64,
    pub g_before: f64,
    pub g_after: f64,
    /// `Σ_{m≠i} conj(F(m, j)) · Y_j(m, i)`.
    pub b: Complex64,
    pub b_after: Complex64,
    /// Phase of `b`.
    pub psi: f64,
    pub y_diag: f64,
    /// `Y_j(i, i) / |F(i, j)|` before and after the step, `None` for a
    /// zero-magnitude entry. Reported alongside `g` for comparison only.
    pub g_reciprocal: Option<(f64, f64)>,
    pub log2_det_d: f64,
    /// `R(F^(k)) − R(F^(k−1))` from the element-wise terms.
    pub rate_change: f64,
    /// The same difference from two direct rate evaluations.
    pub direct_change: f64,
}

impl GapStep {
    /// Rate given up by this replacement.
    pub fn loss(&self) -> f64 {
        -self.rate_change
    }
}

/// Per-step trace of the gap `R(F_first) − R(F_last)`.
#[derive(Debug, Clone, Serialize)]
pub struct GapTrace {
    pub steps: Vec<GapStep>,
    /// Sum of per-step losses.
    pub total: f64,
    pub rate_first: f64,
    pub rate_last: f64,
}

impl GapTrace {
    /// `R(F_first) − R(F_last)` from direct evaluation.
    pub fn direct_gap(&self) -> f64 {
        self.rate_first - self.rate_last
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "i", "j", "R_delta", "cumulative"])?;
        let mut cumulative = 0.0;
        for s in &self.steps {
            cumulative += s.loss();
            w.write_record([
                s.k.to_string(),
                s.row.to_string(),
                s.col.to_string(),
                format!("{:e}", s.loss()),
                format!("{:e}", cumulative),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct ColumnTerms {
    y: CMat,
    log2_det_d: f64,
}

fn column_terms(m: &CMat, f: &CMat, j: usize, scale: f64) -> ColumnTerms {
    let s = Complex64::new(scale, 0.0);
    let rest = without_column(f, j);
    let d = identity(rest.ncols()) + rest.adjoint() * m * &rest * s;
    let log2_det_d = log2_det_hpd(&d).expect("I + PSD is positive definite");
    let mut y = m * s;
    if rest.ncols() > 0 {
        let d_inv = d.try_inverse().expect("I + PSD is invertible");
        let mf = m * &rest;
        y -= &mf * d_inv * mf.adjoint() * (s * s);
    }
    ColumnTerms { y, log2_det_d }
}

/// `(e, b)` for entry `i` of column `col`.
fn entry_terms(y: &CMat, col: &[Complex64], i: usize) -> (f64, Complex64) {
    let n = col.len();
    let mut b = Complex64::new(0.0, 0.0);
    let mut e = Complex64::new(0.0, 0.0);
    for m in (0..n).filter(|&m| m != i) {
        b += col[m].conj() * y[(m, i)];
        let mut row_sum = Complex64::new(0.0, 0.0);
        for nn in (0..n).filter(|&nn| nn != i) {
            row_sum += y[(m, nn)] * col[nn];
        }
        e += col[m].conj() * row_sum;
    }
    (e.re, b)
}

/// Trace the replacement walk from `first` to `last` under the rate
/// `log2|I + scale · F^H M F|`.
pub fn gap_trace_with_gram(
    m: &CMat,
    scale: f64,
    first: &CMat,
    last: &CMat,
    order: &ReplacementOrder,
) -> Result<GapTrace> {
    if first.shape() != last.shape() {
        return Err(shape_mismatch("gap_trace", first.shape(), last.shape()));
    }
    if m.nrows() != first.nrows() || m.ncols() != first.nrows() {
        return Err(shape_mismatch("gap_trace gram", (first.nrows(), first.nrows()), m.shape()));
    }
    let (rows, cols) = first.shape();
    let sequence = order.sequence(rows, cols)?;

    let mut f = first.clone();
    let rate_first = rate_from_gram(m, first, scale);
    let mut rate_prev = rate_first;
    let mut cached: Option<(usize, ColumnTerms)> = None;
    let mut steps = Vec::with_capacity(sequence.len());

    for (idx, &(i, j)) in sequence.iter().enumerate() {
        if cached.as_ref().is_none_or(|(c, _)| *c != j) {
            cached = Some((j, column_terms(m, &f, j, scale)));
        }
        let terms = &cached.as_ref().expect("just filled").1;
        let y_diag = terms.y[(i, i)].re;

        let col_before: Vec<Complex64> = f.column(j).iter().copied().collect();
        let (e, b) = entry_terms(&terms.y, &col_before, i);
        let old = f[(i, j)];
        let new = last[(i, j)];
        let f_before = 2.0 * (b * old).re;
        let g_before = old.norm_sqr() * y_diag;

        f[(i, j)] = new;
        let col_after: Vec<Complex64> = f.column(j).iter().copied().collect();
        let (e_after, b_after) = entry_terms(&terms.y, &col_after, i);
        let f_after = 2.0 * (b * new).re;
        let g_after = new.norm_sqr() * y_diag;

        let denom = 1.0 + e + f_before + g_before;
        let rate_change = (1.0 + ((f_after - f_before) + (g_after - g_before)) / denom).log2();

        let rate_now = rate_from_gram(m, &f, scale);
        let g_reciprocal = (old.norm() > 0.0 && new.norm() > 0.0).then(|| (y_diag / old.norm(), y_diag / new.norm()));

        steps.push(GapStep {
            k: idx + 1,
            row: i,
            col: j,
            e,
            e_after,
            f_before,
            f_after,
            g_before,
            g_after,
            b,
            b_after,
            psi: b.arg(),
            y_diag,
            g_reciprocal,
            log2_det_d: terms.log2_det_d,
            rate_change,
            direct_change: rate_now - rate_prev,
        });
        rate_prev = rate_now;
    }

    let total = steps.iter().map(GapStep::loss).sum();
    Ok(GapTrace {
        steps,
        total,
        rate_first,
        rate_last: rate_prev,
    })
}

/// Gap between the fully digital precoder `f_opt` and a hybrid precoder
/// `f_hybrid = F_RF F_BB`, both `N_BS × N_s`, seen through combiner `w`.
#[allow(clippy::too_many_arguments)]
pub fn gap_trace(
    h: &CMat,
    w: &CMat,
    f_opt: &CMat,
    f_hybrid: &CMat,
    rho: f64,
    sigma2: f64,
    order: &ReplacementOrder,
) -> Result<GapTrace> {
    if h.nrows() != w.nrows() || h.ncols() != f_opt.nrows() {
        return Err(shape_mismatch("gap_trace channel", (w.nrows(), f_opt.nrows()), h.shape()));
    }
    let scale = rho / (f_opt.ncols() as f64 * sigma2);
    gap_trace_with_gram(&combined_gram(h, w), scale, f_opt, f_hybrid, order)
}

/// Per-user gap traces of a multi-user design and their sum.
#[derive(Debug, Clone, Serialize)]
pub struct MuGapTrace {
    pub per_user: Vec<GapTrace>,
    pub total: f64,
}

/// Trace, for every user, the walk from its fully digital precoder
/// `F_opt,u` to `F_RF F_BB,u`, with rate scaling `ρ / (N_s σ²)` over the
/// total stream count. `F_opt,u` is scaled by `√(N_s / M_s)` so both ends
/// carry the per-user power `N_s` that the baseband normalization gives.
pub fn mu_gap_trace(
    scene: &crate::multiuser::MultiUserScene,
    precoders: &crate::multiuser::MuPrecoderSet,
    rho: f64,
    sigma2: f64,
) -> Result<MuGapTrace> {
    let scale = rho / (scene.total_streams() as f64 * sigma2);
    let power = Complex64::new((scene.total_streams() as f64 / scene.streams_per_user as f64).sqrt(), 0.0);
    let mut per_user = Vec::with_capacity(scene.users());
    for (u, ch) in scene.channels.iter().enumerate() {
        let fd = crate::design::optimal_fully_digital(&ch.matrix, scene.streams_per_user)?;
        let hybrid = &precoders.f_rf * &precoders.digital[u];
        let gram = combined_gram(&ch.matrix, &precoders.combiners[u]);
        per_user.push(gap_trace_with_gram(&gram, scale, &(fd.precoder * power), &hybrid, &ReplacementOrder::ColumnMajor)?);
    }
    let total = per_user.iter().map(|t| t.total).sum();
    Ok(MuGapTrace { per_user, total })
}
