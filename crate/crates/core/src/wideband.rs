//! OFDM extension: one frequency-flat analog precoder designed against the
//! subcarrier-averaged covariance, with per-subcarrier baseband stages.

use num_complex::Complex64;
use rand::Rng;

use crate::design::{
    design_analog_for_kind, design_digital, optimal_fully_digital, AnalogPrecoder, Architecture, LinkSetup,
};
use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{hermitian_eigen_desc, hermitian_part, identity, log2_det_hpd, psd_sqrt_factor, CMat};
use crate::metrics::bandwidth_efficiency;

/// `R_WB = (1/P) Σ_p Ĥ[p]^H Ĥ[p]`.
pub fn average_covariance(targets: &[CMat]) -> Result<CMat> {
    let first = targets.first().ok_or(Error::EmptyInput("subcarrier targets"))?;
    let n = first.ncols();
    let mut acc = CMat::zeros(n, n);
    for t in targets {
        if t.shape() != first.shape() {
            return Err(shape_mismatch("subcarrier target", first.shape(), t.shape()));
        }
        acc += t.adjoint() * t;
    }
    Ok(hermitian_part(&(acc / Complex64::new(targets.len() as f64, 0.0))))
}

/// Per-subcarrier targets, their average covariance and its truncated
/// square-root factor.
#[derive(Debug, Clone)]
pub struct WidebandDesignInput {
    pub targets: Vec<CMat>,
    pub average: CMat,
    /// `N_BS × rank` factor `S` with `S S^H ≈ R_WB`.
    pub sqrt_factor: CMat,
}

impl WidebandDesignInput {
    pub fn new(targets: Vec<CMat>, rank: usize) -> Result<Self> {
        let average = average_covariance(&targets)?;
        if rank == 0 || rank > average.nrows() {
            return Err(Error::InvalidArgument(format!(
                "square-root rank {rank} outside 1..={}",
                average.nrows()
            )));
        }
        let sqrt_factor = psd_sqrt_factor(&average, rank);
        Ok(Self {
            targets,
            average,
            sqrt_factor,
        })
    }

    /// Design target `S^H`, shaped like a narrowband `Ĥ`.
    pub fn effective_target(&self) -> CMat {
        self.sqrt_factor.adjoint()
    }
}

/// Both sides of the concavity bound for precoder `f`:
/// `(1/P) Σ log2|I + s Ĥ[p] F F^H Ĥ[p]^H|` and `log2|I + s F^H R_WB F|`.
pub fn jensen_sides(input: &WidebandDesignInput, f: &CMat, scale: f64) -> Result<(f64, f64)> {
    let s = Complex64::new(scale, 0.0);
    let mut average = 0.0;
    for t in &input.targets {
        let g = t * f;
        average += log2_det_hpd(&(identity(g.nrows()) + &g * g.adjoint() * s))?;
    }
    average /= input.targets.len() as f64;
    let bound = log2_det_hpd(&(identity(f.ncols()) + f.adjoint() * &input.average * f * s))?;
    Ok((average, bound))
}

#[derive(Debug, Clone)]
pub struct WidebandDesign {
    pub architecture: Architecture,
    /// `None` for the fully digital reference.
    pub analog: Option<AnalogPrecoder>,
    /// Shared analog precoder; the identity for the fully digital reference.
    pub f_rf: CMat,
    pub digital: Vec<CMat>,
    pub combiners: Vec<CMat>,
    pub input: WidebandDesignInput,
}

impl WidebandDesign {
    pub fn subcarrier_rates(&self, channels: &[CMat], rho: f64, sigma2: f64) -> Result<Vec<f64>> {
        channels
            .iter()
            .zip(self.digital.iter().zip(&self.combiners))
            .map(|(h, (f_bb, w))| bandwidth_efficiency(h, &self.f_rf, f_bb, w, rho, sigma2))
            .collect()
    }

    pub fn average_rate(&self, channels: &[CMat], rho: f64, sigma2: f64) -> Result<f64> {
        let rates = self.subcarrier_rates(channels, rho, sigma2)?;
        Ok(rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

/// Design `arch` for the per-subcarrier channels `channels`. The analog stage
/// targets `(R_WB^{1/2})^H` truncated to `setup.streams` directions and starts
/// from the leading eigenvectors of `R_WB`.
pub fn design_wideband<R: Rng + ?Sized>(
    channels: &[CMat],
    arch: Architecture,
    setup: &LinkSetup,
    rng: &mut R,
) -> Result<WidebandDesign> {
    if channels.is_empty() {
        return Err(Error::EmptyInput("subcarrier channels"));
    }
    let fds = channels
        .iter()
        .map(|h| optimal_fully_digital(h, setup.streams))
        .collect::<Result<Vec<_>>>()?;
    let combiners: Vec<CMat> = fds.iter().map(|f| f.combiner.clone()).collect();
    let targets: Vec<CMat> = channels.iter().zip(&combiners).map(|(h, w)| w.adjoint() * h).collect();
    let input = WidebandDesignInput::new(targets, setup.streams)?;
    let n_bs = channels[0].ncols();

    let kind = match arch {
        Architecture::FullDigital => {
            return Ok(WidebandDesign {
                architecture: arch,
                analog: None,
                f_rf: identity(n_bs),
                digital: fds.into_iter().map(|f| f.precoder).collect(),
                combiners,
                input,
            })
        }
        Architecture::Hybrid(kind) => kind,
    };
    if setup.rf_chains < setup.streams || setup.rf_chains > n_bs {
        return Err(Error::InvalidArgument(format!(
            "{} RF chains for {} streams and {n_bs} antennas",
            setup.rf_chains, setup.streams
        )));
    }
    let (_, vectors) = hermitian_eigen_desc(&input.average);
    let init = vectors.columns(0, setup.rf_chains).into_owned();
    let analog = design_analog_for_kind(&input.effective_target(), &init, kind, setup, rng)?;
    let digital = channels
        .iter()
        .zip(&combiners)
        .map(|(h, w)| design_digital(h, w, &analog.matrix, setup.streams).map(|d| d.matrix))
        .collect::<Result<Vec<_>>>()?;
    Ok(WidebandDesign {
        architecture: arch,
        f_rf: analog.matrix.clone(),
        analog: Some(analog),
        digital,
        combiners,
        input,
    })
}
