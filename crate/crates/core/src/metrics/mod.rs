//! Bandwidth-efficiency evaluation, energy-efficiency models and the
//! replacement-based gap analysis.

mod energy;
mod gap;

pub use energy::{energy_efficiency, PowerModel};
pub use gap::{gap_trace, gap_trace_with_gram, mu_gap_trace, GapStep, GapTrace, MuGapTrace, ReplacementOrder};

use num_complex::Complex64;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{identity, log2_det_hpd, svd_sorted, CMat};

/// Achievable rate of a combined point-to-point link under Gaussian
/// signaling, with post-combining noise covariance `σ² W^H W`.
pub fn bandwidth_efficiency(
    h: &CMat,
    f_rf: &CMat,
    f_bb: &CMat,
    w: &CMat,
    rho: f64,
    sigma2: f64,
) -> Result<f64> {
    if f_rf.nrows() != h.ncols() || f_rf.ncols() != f_bb.nrows() {
        return Err(shape_mismatch("bandwidth_efficiency precoder", (h.ncols(), f_bb.nrows()), f_rf.shape()));
    }
    if w.nrows() != h.nrows() {
        return Err(shape_mismatch("bandwidth_efficiency combiner", (h.nrows(), f_bb.ncols()), w.shape()));
    }
    let n_s = f_bb.ncols();
    check_combiner(w)?;
    let noise = w.adjoint() * w;
    let g = w.adjoint() * h * f_rf * f_bb;
    let scale = Complex64::new(rho / (n_s as f64 * sigma2), 0.0);
    let signal = &g * g.adjoint() * scale;
    Ok(log2_det_hpd(&(&noise + signal))? - log2_det_hpd(&noise)?)
}

fn check_combiner(w: &CMat) -> Result<()> {
    if svd_sorted(w)?.rank() < w.ncols() {
        return Err(Error::RankDeficientCombiner);
    }
    Ok(())
}

/// `log2 |I + scale · F^H M F|` for a Hermitian PSD `M`.
pub fn rate_from_gram(m: &CMat, f: &CMat, scale: f64) -> f64 {
    let inner = f.adjoint() * m * f * Complex64::new(scale, 0.0);
    log2_det_hpd(&(identity(f.ncols()) + inner)).expect("I + PSD is positive definite")
}

/// `M = H^H W W^H H`.
pub fn combined_gram(h: &CMat, w: &CMat) -> CMat {
    let x = w.adjoint() * h;
    x.adjoint() * x
}

/// Sum rate of a multi-user downlink with the full interference-plus-noise
/// covariance at every user. `digital[u]` is user `u`'s `N_RF × M_s` block;
/// `total_streams` is the power-normalization stream count `N_s`.
pub fn mu_sum_rate_raw(
    channels: &[CMat],
    combiners: &[CMat],
    f_rf: &CMat,
    digital: &[CMat],
    rho: f64,
    sigma2: f64,
    total_streams: usize,
) -> Result<f64> {
    if channels.len() != combiners.len() || channels.len() != digital.len() {
        return Err(Error::InvalidArgument(format!(
            "{} channels, {} combiners, {} digital blocks",
            channels.len(),
            combiners.len(),
            digital.len()
        )));
    }
    let scale = Complex64::new(rho / total_streams as f64, 0.0);
    let mut total = 0.0;
    for (u, (h, w)) in channels.iter().zip(combiners).enumerate() {
        let compressed = w.adjoint() * h * f_rf;
        check_combiner(w)?;
        let mut noise = w.adjoint() * w * Complex64::new(sigma2, 0.0);
        for (i, f_bb) in digital.iter().enumerate() {
            if i != u {
                let g = &compressed * f_bb;
                noise += &g * g.adjoint() * scale;
            }
        }
        let g = &compressed * &digital[u];
        let signal = &g * g.adjoint() * scale;
        total += log2_det_hpd(&(&noise + signal))? - log2_det_hpd(&noise)?;
    }
    Ok(total)
}

/// Sum rate of a designed multi-user precoder set.
pub fn mu_sum_rate(
    scene: &crate::multiuser::MultiUserScene,
    precoders: &crate::multiuser::MuPrecoderSet,
    rho: f64,
    sigma2: f64,
) -> Result<f64> {
    let channels: Vec<CMat> = scene.channels.iter().map(|c| c.matrix.clone()).collect();
    mu_sum_rate_raw(
        &channels,
        &precoders.combiners,
        &precoders.f_rf,
        &precoders.digital,
        rho,
        sigma2,
        scene.total_streams(),
    )
}
