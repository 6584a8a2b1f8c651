//! Multi-user downlink: per-user combiners, block-diagonalization baseband,
//! the ideal/loss rate split and per-user analog submatrix design.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelRealization;
use crate::design::{design_analog_for_kind, initial_analog, optimal_fully_digital, AnalogPrecoder, Architecture, DesignOptions, LinkSetup};
use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{frobenius_sq, identity, log2_det_hpd, orthonormal_complement, svd_sorted, CMat};
use crate::shifter::{HighHalf, PatternAssignment, ResolutionSet};

/// `U` users sharing one base station, each receiving `M_s` streams.
#[derive(Debug, Clone)]
pub struct MultiUserScene {
    pub channels: Vec<ChannelRealization>,
    pub streams_per_user: usize,
}

impl MultiUserScene {
    pub fn new(channels: Vec<ChannelRealization>, streams_per_user: usize) -> Result<Self> {
        let first = channels.first().ok_or(Error::EmptyInput("multi-user scene"))?;
        let shape = first.matrix.shape();
        if let Some(bad) = channels.iter().find(|c| c.matrix.shape() != shape) {
            return Err(shape_mismatch("multi-user channels", shape, bad.matrix.shape()));
        }
        if streams_per_user == 0 || streams_per_user > shape.0.min(shape.1) {
            return Err(Error::StreamCountExceedsRank {
                requested: streams_per_user,
                available: shape.0.min(shape.1),
            });
        }
        Ok(Self {
            channels,
            streams_per_user,
        })
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    /// `N_s = U · M_s`.
    pub fn total_streams(&self) -> usize {
        self.users() * self.streams_per_user
    }

    pub fn n_bs(&self) -> usize {
        self.channels[0].n_bs()
    }
}

/// Quantizers and RF-chain budget for a multi-user design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSetup {
    /// Total RF chains, split evenly across users.
    pub rf_chains: usize,
    pub resolutions: ResolutionSet,
    pub options: DesignOptions,
    pub placement: HighHalf,
}

impl MuSetup {
    pub fn new(rf_chains: usize) -> Self {
        Self {
            rf_chains,
            resolutions: ResolutionSet::default(),
            options: DesignOptions::default(),
            placement: HighHalf::default(),
        }
    }
}

/// Designed multi-user transmitter and receivers.
#[derive(Debug, Clone)]
pub struct MuPrecoderSet {
    /// `None` for the fully digital reference.
    pub analog: Option<AnalogPrecoder>,
    /// `F_RF`; the identity for the fully digital reference.
    pub f_rf: CMat,
    /// Normalized `F_BB,u`, each `N_RF × M_s`.
    pub digital: Vec<CMat>,
    /// `W_opt,u`, each `N_MS × M_s`.
    pub combiners: Vec<CMat>,
    /// `F̃_BB,u` before power normalization.
    pub unnormalized: Vec<CMat>,
    /// `γ_u = N_s / ‖F_RF F̃_BB,u‖_F²`.
    pub gammas: Vec<f64>,
}

impl MuPrecoderSet {
    pub fn effective_channels(&self, scene: &MultiUserScene) -> Vec<CMat> {
        scene
            .channels
            .iter()
            .zip(&self.combiners)
            .map(|(ch, w)| w.adjoint() * &ch.matrix * &self.f_rf)
            .collect()
    }

    /// `max_{u, i≠u} ‖H_eff,i F_BB,u‖_F`.
    pub fn max_leakage(&self, scene: &MultiUserScene) -> f64 {
        let eff = self.effective_channels(scene);
        let mut worst: f64 = 0.0;
        for (u, f) in self.digital.iter().enumerate() {
            for (i, h) in eff.iter().enumerate() {
                if i != u {
                    worst = worst.max(frobenius_sq(&(h * f)).sqrt());
                }
            }
        }
        worst
    }
}

pub fn per_user_combiner(h: &CMat, streams: usize) -> Result<CMat> {
    Ok(optimal_fully_digital(h, streams)?.combiner)
}

/// Block-diagonalizing baseband precoders, before power normalization.
/// Each is `N_RF × M_s` and lies in the null space of every other user's
/// effective channel.
pub fn block_diag_baseband(effective: &[CMat], streams: usize) -> Result<Vec<CMat>> {
    let first = effective.first().ok_or(Error::EmptyInput("effective channels"))?;
    let n_rf = first.ncols();
    if let Some(bad) = effective.iter().find(|h| h.shape() != (streams, n_rf)) {
        return Err(shape_mismatch("effective channel", (streams, n_rf), bad.shape()));
    }
    let users = effective.len();
    let required = (users - 1) * streams;
    let mut out = Vec::with_capacity(users);
    for u in 0..users {
        let null_basis = if users == 1 {
            identity(n_rf)
        } else {
            let mut stack = CMat::zeros(required, n_rf);
            let mut row = 0;
            for (_, h) in effective.iter().enumerate().filter(|&(i, _)| i != u) {
                stack.rows_mut(row, streams).copy_from(h);
                row += streams;
            }
            let svd = svd_sorted(&stack)?;
            let rank = svd.rank();
            if rank < required || n_rf < rank + streams {
                return Err(Error::InfeasibleBlockDiagonalization { user: u, rank, required });
            }
            orthonormal_complement(&svd.v.columns(0, rank).into_owned())
        };
        let projected = &effective[u] * &null_basis;
        let inner = svd_sorted(&projected)?;
        if inner.v.ncols() < streams {
            return Err(Error::InfeasibleBlockDiagonalization {
                user: u,
                rank: inner.rank(),
                required: streams,
            });
        }
        out.push(null_basis * inner.v.columns(0, streams));
    }
    Ok(out)
}

/// Design architecture `arch` for all users. Each user's analog block of
/// `N_RF / U` columns is designed against `W_opt,u^H H_u`, starting from
/// that user's leading right singular vectors; fixed patterns are laid out
/// per block.
pub fn design_mu<R: Rng + ?Sized>(
    scene: &MultiUserScene,
    arch: Architecture,
    setup: &MuSetup,
    rng: &mut R,
) -> Result<MuPrecoderSet> {
    let users = scene.users();
    let streams = scene.streams_per_user;
    let n_bs = scene.n_bs();
    let fds = scene
        .channels
        .iter()
        .map(|c| optimal_fully_digital(&c.matrix, streams))
        .collect::<Result<Vec<_>>>()?;
    let combiners: Vec<CMat> = fds.iter().map(|f| f.combiner.clone()).collect();

    let (analog, f_rf) = match arch {
        Architecture::FullDigital => (None, identity(n_bs)),
        Architecture::Hybrid(kind) => {
            if !setup.rf_chains.is_multiple_of(users) || setup.rf_chains / users < streams {
                return Err(Error::InvalidArgument(format!(
                    "{} RF chains cannot be split into {users} blocks of at least {streams}",
                    setup.rf_chains
                )));
            }
            let width = setup.rf_chains / users;
            let link = LinkSetup {
                streams,
                rf_chains: width,
                resolutions: setup.resolutions,
                options: setup.options,
                placement: setup.placement,
            };
            let mut blocks = Vec::with_capacity(users);
            for (ch, fd) in scene.channels.iter().zip(&fds) {
                let target = fd.combiner.adjoint() * &ch.matrix;
                let init = initial_analog(&ch.matrix, width)?;
                blocks.push(design_analog_for_kind(&target, &init, kind, &link, rng)?);
            }
            let mut matrix = CMat::zeros(n_bs, setup.rf_chains);
            for (u, b) in blocks.iter().enumerate() {
                matrix.columns_mut(u * width, width).copy_from(&b.matrix);
            }
            let pattern = PatternAssignment::from_fn(n_bs, setup.rf_chains, |i, j| {
                blocks[j / width].pattern.get(i, j % width)
            });
            let analog = AnalogPrecoder {
                matrix: matrix.clone(),
                pattern,
                high: blocks[0].high,
                low: blocks[0].low,
            };
            (Some(analog), matrix)
        }
    };

    let effective: Vec<CMat> = scene
        .channels
        .iter()
        .zip(&combiners)
        .map(|(ch, w)| w.adjoint() * &ch.matrix * &f_rf)
        .collect();
    if effective.iter().any(|h| frobenius_sq(h) == 0.0) {
        return Err(Error::ZeroEffectiveChannel);
    }
    let unnormalized = block_diag_baseband(&effective, streams)?;
    let total = scene.total_streams() as f64;
    let mut gammas = Vec::with_capacity(users);
    let mut digital = Vec::with_capacity(users);
    for f in &unnormalized {
        let power = frobenius_sq(&(&f_rf * f));
        if power == 0.0 {
            return Err(Error::ZeroEffectiveChannel);
        }
        let gamma = total / power;
        gammas.push(gamma);
        digital.push(f * Complex64::new(gamma.sqrt(), 0.0));
    }
    Ok(MuPrecoderSet {
        analog,
        f_rf,
        digital,
        combiners,
        unnormalized,
        gammas,
    })
}

/// Scalar in front of `H_eff,u H_eff,u^H` inside `T_u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TScaling {
    /// `ρ γ_u / (N_s σ²)`, matching the objective.
    #[default]
    Consistent,
    /// `ρ γ_u / σ²`. The split no longer sums to the objective.
    Prose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRateSplit {
    pub ideal: f64,
    pub loss: f64,
    pub direct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateDecomposition {
    pub ideal: f64,
    pub loss: f64,
    /// `Σ_u log2|I + ρ/(N_s σ²) H_eff,u F_BB,u F_BB,u^H H_eff,u^H|`.
    pub direct: f64,
    pub per_user: Vec<UserRateSplit>,
}

/// Split the block-diagonal objective into the interference-free part
/// `Σ log2|T_u|` and the loss `Σ log2|I − T_u^{-1} c γ_u H_eff,u P_u H_eff,u^H|`
/// with `P_u = I − F̃_u F̃_u^H`.
pub fn rate_decomposition(
    scene: &MultiUserScene,
    precoders: &MuPrecoderSet,
    rho: f64,
    sigma2: f64,
    scaling: TScaling,
) -> Result<RateDecomposition> {
    let total = scene.total_streams() as f64;
    let effective = precoders.effective_channels(scene);
    let mut per_user = Vec::with_capacity(scene.users());
    for (u, h) in effective.iter().enumerate() {
        let gamma = precoders.gammas[u];
        let f_tilde = &precoders.unnormalized[u];
        let c = rho * gamma / (total * sigma2);
        let t_scale = match scaling {
            TScaling::Consistent => c,
            TScaling::Prose => rho * gamma / sigma2,
        };
        let m = h.nrows();
        let hh = h * h.adjoint();
        let t = identity(m) + &hh * Complex64::new(t_scale, 0.0);
        let p = identity(h.ncols()) - f_tilde * f_tilde.adjoint();
        let leak = h * p * h.adjoint() * Complex64::new(c, 0.0);
        let t_inv = t.clone().try_inverse().ok_or(Error::DecompositionFailed("inverse"))?;
        let ideal = log2_det_hpd(&t)?;
        let remainder = identity(m) - &t_inv * &leak;
        let loss = log2_det_general(&remainder)?;
        let g = h * &precoders.digital[u];
        let direct = log2_det_hpd(&(identity(m) + &g * g.adjoint() * Complex64::new(rho / (total * sigma2), 0.0)))?;
        per_user.push(UserRateSplit { ideal, loss, direct });
    }
    Ok(RateDecomposition {
        ideal: per_user.iter().map(|s| s.ideal).sum(),
        loss: per_user.iter().map(|s| s.loss).sum(),
        direct: per_user.iter().map(|s| s.direct).sum(),
        per_user,
    })
}

/// `log2 |det A|` for a square matrix with a positive real determinant up to
/// rounding (`I − T^{-1} X` is similar to a Hermitian positive definite matrix).
fn log2_det_general(a: &CMat) -> Result<f64> {
    let lu = a.clone().lu();
    let det = lu.determinant();
    if det.norm().is_nan() || det.norm() == 0.0 {
        return Err(Error::DecompositionFailed("determinant"));
    }
    Ok(det.norm().log2())
}
