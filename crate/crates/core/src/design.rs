//! Point-to-point hybrid precoder design: the fully digital reference, the
//! greedy twin-resolution analog design (dynamic and fixed-pattern) and the
//! SVD baseband stage.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg::{frobenius_sq, hermitian_part, log2_det_hpd, orthonormal_complement, svd_sorted, without_column, CMat};
use crate::shifter::{
    build_fixed_pattern, quantize_phase, HighHalf, NetworkKind, PatternAssignment, QuantizerSpec, Resolution,
    ResolutionSet,
};

/// Unconstrained SVD precoder and combiner.
#[derive(Debug, Clone)]
pub struct FullyDigital {
    /// `N_BS × N_s`, top right singular vectors.
    pub precoder: CMat,
    /// `N_MS × N_s`, top left singular vectors.
    pub combiner: CMat,
    pub singular_values: Vec<f64>,
}

pub fn optimal_fully_digital(h: &CMat, n_s: usize) -> Result<FullyDigital> {
    let available = h.nrows().min(h.ncols());
    if n_s == 0 || n_s > available {
        return Err(Error::StreamCountExceedsRank {
            requested: n_s,
            available,
        });
    }
    let svd = svd_sorted(h)?;
    Ok(FullyDigital {
        precoder: svd.v.columns(0, n_s).into_owned(),
        combiner: svd.u.columns(0, n_s).into_owned(),
        singular_values: svd.singular_values,
    })
}

/// Tuning knobs of the greedy analog design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignOptions {
    /// `ξ = xi_rel · tr(C_j) / N_s + xi_floor`.
    pub xi_rel: f64,
    pub xi_floor: f64,
    /// Share of each column driven by low-resolution shifters.
    pub low_fraction: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            xi_rel: 1e-6,
            xi_floor: 1e-30,
            low_fraction: 0.5,
        }
    }
}

impl DesignOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi_rel >= 0.0 && self.xi_floor > 0.0 && self.xi_rel.is_finite() && self.xi_floor.is_finite()) {
            return Err(Error::InvalidArgument("regularizer must be positive and finite".into()));
        }
        if !(0.0..=1.0).contains(&self.low_fraction) {
            return Err(Error::InvalidArgument(format!(
                "low_fraction must lie in [0, 1], got {}",
                self.low_fraction
            )));
        }
        Ok(())
    }

    fn low_count(&self, n_bs: usize) -> Result<usize> {
        let exact = n_bs as f64 * self.low_fraction;
        let count = exact.round();
        if (exact - count).abs() > 1e-9 {
            return Err(if self.low_fraction == 0.5 {
                Error::OddAntennaCount(n_bs)
            } else {
                Error::InvalidArgument(format!("{n_bs} antennas cannot be split by fraction {}", self.low_fraction))
            });
        }
        Ok(count as usize)
    }
}

/// `C_j`, `G_j` and the regularizer used to build `G_j`.
#[derive(Debug, Clone)]
pub struct ColumnState {
    pub c: CMat,
    pub g: CMat,
    pub xi: f64,
}

/// Column state with the relative regularizer from `opts`.
pub fn compute_column_state(target: &CMat, f_rf: &CMat, j: usize, opts: &DesignOptions) -> Result<ColumnState> {
    let c = remaining_gram(target, f_rf, j)?;
    let xi = opts.xi_rel * c.trace().re / target.nrows() as f64 + opts.xi_floor;
    column_state_from_gram(target, c, xi)
}

/// Column state with an explicit regularizer `xi > 0`.
pub fn column_state_with_xi(target: &CMat, f_rf: &CMat, j: usize, xi: f64) -> Result<ColumnState> {
    if xi.is_nan() || xi <= 0.0 {
        return Err(Error::InvalidArgument(format!("regularizer must be positive, got {xi}")));
    }
    let c = remaining_gram(target, f_rf, j)?;
    column_state_from_gram(target, c, xi)
}

fn remaining_gram(target: &CMat, f_rf: &CMat, j: usize) -> Result<CMat> {
    if target.ncols() != f_rf.nrows() {
        return Err(shape_mismatch("column state", (target.ncols(), f_rf.ncols()), f_rf.shape()));
    }
    if j >= f_rf.ncols() {
        return Err(Error::InvalidArgument(format!("column {j} out of range for {} columns", f_rf.ncols())));
    }
    let x = target * without_column(f_rf, j);
    Ok(&x * x.adjoint())
}

fn column_state_from_gram(target: &CMat, c: CMat, xi: f64) -> Result<ColumnState> {
    let n = c.nrows();
    let shifted = &c + CMat::identity(n, n) * Complex64::new(xi, 0.0);
    let inv = hermitian_part(&shifted)
        .cholesky()
        .ok_or(Error::DecompositionFailed("cholesky"))?
        .inverse();
    let g = hermitian_part(&(target.adjoint() * inv * target));
    Ok(ColumnState { c, g, xi })
}

/// Unquantized phase of entry `i` maximizing `f^H G f` with the rest of the
/// column held fixed. Returns the current phase when the objective does not
/// depend on it.
pub fn phi_max(g: &CMat, column: &[Complex64], i: usize) -> f64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, &f) in column.iter().enumerate() {
        if m != i {
            sum += f * g[(i, m)];
        }
    }
    if sum.norm() == 0.0 {
        column[i].arg()
    } else {
        sum.arg()
    }
}

/// `log2 |Ĥ F F^H Ĥ^H|`, or `-inf` when the product is singular.
pub fn analog_objective(target: &CMat, f_rf: &CMat) -> f64 {
    let x = target * f_rf;
    log2_det_hpd(&(&x * x.adjoint())).unwrap_or(f64::NEG_INFINITY)
}

/// Quantized unit-modulus analog precoder with its resolution pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogPrecoder {
    pub matrix: CMat,
    pub pattern: PatternAssignment,
    pub high: QuantizerSpec,
    pub low: QuantizerSpec,
}

impl AnalogPrecoder {
    pub fn quantizer(&self, label: Resolution) -> QuantizerSpec {
        match label {
            Resolution::High => self.high,
            Resolution::Low => self.low,
        }
    }

    /// Largest deviation of an entry modulus from `1/√N_BS`.
    pub fn modulus_defect(&self) -> f64 {
        let target = 1.0 / (self.matrix.nrows() as f64).sqrt();
        self.matrix.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max)
    }

    /// Largest distance from an entry phase to its quantizer grid.
    pub fn grid_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.matrix.ncols() {
            for i in 0..self.matrix.nrows() {
                let q = self.quantizer(self.pattern.get(i, j));
                worst = worst.max(q.grid_distance(self.matrix[(i, j)].arg()));
            }
        }
        worst
    }
}

/// One greedy quantization decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyPick {
    pub row: usize,
    pub col: usize,
    pub resolution: Resolution,
    /// Phase that was quantized.
    pub target_phase: f64,
    pub level: f64,
    pub error: f64,
    /// Smallest error among the candidates left behind in this round.
    pub runner_up_error: f64,
}

/// Joint pattern and phase design with `low_fraction · N_BS` low-resolution
/// shifters per column. `init` is the `N_BS × N_K` starting matrix, normally
/// the leading right singular vectors of the channel.
pub fn design_analog_dynamic(
    target: &CMat,
    init: &CMat,
    high: QuantizerSpec,
    low: QuantizerSpec,
    opts: &DesignOptions,
) -> Result<AnalogPrecoder> {
    design_analog_dynamic_traced(target, init, high, low, opts).map(|(p, _)| p)
}

pub fn design_analog_dynamic_traced(
    target: &CMat,
    init: &CMat,
    high: QuantizerSpec,
    low: QuantizerSpec,
    opts: &DesignOptions,
) -> Result<(AnalogPrecoder, Vec<GreedyPick>)> {
    opts.validate()?;
    check_design_shapes(target, init)?;
    let low_count = opts.low_count(init.nrows())?;
    run_greedy(target, init, Eligibility::Dynamic(low_count), high, low, opts)
}

/// Phase design on a predetermined pattern.
pub fn design_analog_fixed(
    target: &CMat,
    init: &CMat,
    pattern: &PatternAssignment,
    high: QuantizerSpec,
    low: QuantizerSpec,
    opts: &DesignOptions,
) -> Result<AnalogPrecoder> {
    design_analog_fixed_traced(target, init, pattern, high, low, opts).map(|(p, _)| p)
}

pub fn design_analog_fixed_traced(
    target: &CMat,
    init: &CMat,
    pattern: &PatternAssignment,
    high: QuantizerSpec,
    low: QuantizerSpec,
    opts: &DesignOptions,
) -> Result<(AnalogPrecoder, Vec<GreedyPick>)> {
    opts.validate()?;
    check_design_shapes(target, init)?;
    if pattern.rows() != init.nrows() || pattern.cols() != init.ncols() {
        return Err(shape_mismatch("pattern", init.shape(), (pattern.rows(), pattern.cols())));
    }
    run_greedy(target, init, Eligibility::Fixed(pattern), high, low, opts)
}

fn check_design_shapes(target: &CMat, init: &CMat) -> Result<()> {
    if init.nrows() == 0 || init.ncols() == 0 || target.nrows() == 0 {
        return Err(Error::EmptyInput("analog design"));
    }
    if target.ncols() != init.nrows() {
        return Err(shape_mismatch("analog design target", (target.nrows(), init.nrows()), target.shape()));
    }
    Ok(())
}

enum Eligibility<'a> {
    Dynamic(usize),
    Fixed(&'a PatternAssignment),
}

fn run_greedy(
    target: &CMat,
    init: &CMat,
    eligibility: Eligibility<'_>,
    high: QuantizerSpec,
    low: QuantizerSpec,
    opts: &DesignOptions,
) -> Result<(AnalogPrecoder, Vec<GreedyPick>)> {
    let (n_bs, n_k) = init.shape();
    let amplitude = 1.0 / (n_bs as f64).sqrt();
    let mut f = init.clone();
    let mut quantized = vec![false; n_bs * n_k];
    let mut pattern = PatternAssignment::filled(n_bs, n_k, Resolution::High);
    let mut picks = Vec::with_capacity(n_bs * n_k);

    for j in 0..n_k {
        let (pool, count): (Vec<usize>, usize) = match &eligibility {
            Eligibility::Dynamic(c) => ((0..n_bs).collect(), *c),
            Eligibility::Fixed(p) => {
                let rows = p.rows_with(j, Resolution::Low);
                let c = rows.len();
                (rows, c)
            }
        };
        let state = compute_column_state(target, &f, j, opts)?;
        let chosen = column_pass(
            &mut f,
            &state.g,
            j,
            pool,
            count,
            low,
            Resolution::Low,
            false,
            amplitude,
            &mut picks,
        );
        for i in chosen {
            quantized[i * n_k + j] = true;
            pattern.set(i, j, Resolution::Low);
        }
    }

    for j in 0..n_k {
        let pool: Vec<usize> = (0..n_bs).filter(|&i| !quantized[i * n_k + j]).collect();
        let count = pool.len();
        let state = compute_column_state(target, &f, j, opts)?;
        column_pass(
            &mut f,
            &state.g,
            j,
            pool,
            count,
            high,
            Resolution::High,
            true,
            amplitude,
            &mut picks,
        );
    }

    Ok((
        AnalogPrecoder {
            matrix: f,
            pattern,
            high,
            low,
        },
        picks,
    ))
}

/// Greedily quantize `count` entries of column `j` drawn from `pool`, each
/// round taking the candidate closest to the grid. The first round of a low
/// pass ranks the entries' current phases; every other round ranks `φ^max`
/// recomputed from the latest column.
#[allow(clippy::too_many_arguments)]
fn column_pass(
    f: &mut CMat,
    g: &CMat,
    j: usize,
    mut pool: Vec<usize>,
    count: usize,
    q: QuantizerSpec,
    label: Resolution,
    refine_first: bool,
    amplitude: f64,
    picks: &mut Vec<GreedyPick>,
) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(count);
    for round in 0..count {
        let column: Vec<Complex64> = f.column(j).iter().copied().collect();
        let use_max = round > 0 || refine_first;
        let mut best: Option<(usize, f64, f64, f64)> = None;
        let mut errors = Vec::with_capacity(pool.len());
        for (slot, &i) in pool.iter().enumerate() {
            let phase = if use_max { phi_max(g, &column, i) } else { column[i].arg() };
            let qz = quantize_phase(phase, q);
            errors.push(qz.error);
            if best.is_none_or(|(_, _, _, e)| qz.error < e) {
                best = Some((slot, phase, qz.level, qz.error));
            }
        }
        let (slot, phase, level, error) = best.expect("pool holds at least count entries");
        let runner_up_error = errors
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != slot)
            .map(|(_, &e)| e)
            .fold(f64::INFINITY, f64::min);
        let i = pool.remove(slot);
        f[(i, j)] = Complex64::from_polar(amplitude, level);
        picks.push(GreedyPick {
            row: i,
            col: j,
            resolution: label,
            target_phase: phase,
            level,
            error,
            runner_up_error,
        });
        chosen.push(i);
    }
    chosen
}

/// Baseband precoder normalized so that `‖F_RF F_BB‖_F² = N_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalPrecoder {
    pub matrix: CMat,
}

pub fn design_digital(h: &CMat, w: &CMat, f_rf: &CMat, n_s: usize) -> Result<DigitalPrecoder> {
    if w.nrows() != h.nrows() || f_rf.nrows() != h.ncols() {
        return Err(shape_mismatch("design_digital", (w.nrows(), f_rf.nrows()), h.shape()));
    }
    let h_eff = w.adjoint() * h * f_rf;
    if frobenius_sq(&h_eff) == 0.0 {
        return Err(Error::ZeroEffectiveChannel);
    }
    let svd = svd_sorted(&h_eff)?;
    if n_s == 0 || n_s > svd.v.ncols() {
        return Err(Error::StreamCountExceedsRank {
            requested: n_s,
            available: svd.v.ncols(),
        });
    }
    let v = svd.v.columns(0, n_s).into_owned();
    let power = frobenius_sq(&(f_rf * &v));
    if power == 0.0 {
        return Err(Error::ZeroEffectiveChannel);
    }
    Ok(DigitalPrecoder {
        matrix: v * Complex64::new((n_s as f64 / power).sqrt(), 0.0),
    })
}

/// Leading `n_k` right singular vectors of `h`, completed with an orthonormal
/// complement when `n_k` exceeds the smaller channel dimension.
pub fn initial_analog(h: &CMat, n_k: usize) -> Result<CMat> {
    let n_bs = h.ncols();
    if n_k == 0 || n_k > n_bs {
        return Err(Error::InvalidArgument(format!("{n_k} RF chains for {n_bs} antennas")));
    }
    let v = svd_sorted(h)?.v;
    if n_k <= v.ncols() {
        return Ok(v.columns(0, n_k).into_owned());
    }
    let extra = orthonormal_complement(&v);
    let mut out = CMat::zeros(n_bs, n_k);
    out.columns_mut(0, v.ncols()).copy_from(&v);
    out.columns_mut(v.ncols(), n_k - v.ncols())
        .copy_from(&extra.columns(0, n_k - v.ncols()));
    Ok(out)
}

/// Transmitter architectures evaluated by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    FullDigital,
    Hybrid(NetworkKind),
}

impl Architecture {
    pub const ALL: [Architecture; 9] = [
        Architecture::FullDigital,
        Architecture::Hybrid(NetworkKind::Dynamic),
        Architecture::Hybrid(NetworkKind::Horizontal),
        Architecture::Hybrid(NetworkKind::Vertical),
        Architecture::Hybrid(NetworkKind::Interlaced),
        Architecture::Hybrid(NetworkKind::RandomFixed),
        Architecture::Hybrid(NetworkKind::UniformHigh),
        Architecture::Hybrid(NetworkKind::UniformModerate),
        Architecture::Hybrid(NetworkKind::UniformLow),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Architecture::FullDigital => "FullDigital",
            Architecture::Hybrid(kind) => kind.label(),
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == label)
    }
}

/// Dimensions and quantizers of a point-to-point design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSetup {
    pub streams: usize,
    pub rf_chains: usize,
    pub resolutions: ResolutionSet,
    pub options: DesignOptions,
    pub placement: HighHalf,
}

impl LinkSetup {
    pub fn new(streams: usize, rf_chains: usize) -> Self {
        Self {
            streams,
            rf_chains,
            resolutions: ResolutionSet::default(),
            options: DesignOptions::default(),
            placement: HighHalf::default(),
        }
    }
}

/// A complete transmit/receive design for one channel.
#[derive(Debug, Clone)]
pub struct LinkDesign {
    pub architecture: Architecture,
    /// `None` for the fully digital reference.
    pub analog: Option<AnalogPrecoder>,
    /// `F_RF`, or `F_opt` for the fully digital reference.
    pub f_rf: CMat,
    pub f_bb: CMat,
    pub combiner: CMat,
    /// Reference precoder `F_opt` used to build the design.
    pub f_opt: CMat,
}

impl LinkDesign {
    pub fn precoder(&self) -> CMat {
        &self.f_rf * &self.f_bb
    }

    pub fn rate(&self, h: &CMat, rho: f64, sigma2: f64) -> Result<f64> {
        crate::metrics::bandwidth_efficiency(h, &self.f_rf, &self.f_bb, &self.combiner, rho, sigma2)
    }
}

/// Design architecture `arch` for channel `h`. The RNG is only consumed by
/// the random fixed pattern.
pub fn design_link<R: Rng + ?Sized>(
    h: &CMat,
    arch: Architecture,
    setup: &LinkSetup,
    rng: &mut R,
) -> Result<LinkDesign> {
    let fd = optimal_fully_digital(h, setup.streams)?;
    let kind = match arch {
        Architecture::FullDigital => {
            return Ok(LinkDesign {
                architecture: arch,
                analog: None,
                f_rf: fd.precoder.clone(),
                f_bb: CMat::identity(setup.streams, setup.streams),
                combiner: fd.combiner,
                f_opt: fd.precoder,
            })
        }
        Architecture::Hybrid(kind) => kind,
    };
    if setup.rf_chains < setup.streams {
        return Err(Error::InvalidArgument(format!(
            "{} RF chains cannot carry {} streams",
            setup.rf_chains, setup.streams
        )));
    }
    let target = fd.combiner.adjoint() * h;
    let init = initial_analog(h, setup.rf_chains)?;
    let analog = design_analog_for_kind(&target, &init, kind, setup, rng)?;
    let digital = design_digital(h, &fd.combiner, &analog.matrix, setup.streams)?;
    Ok(LinkDesign {
        architecture: arch,
        f_rf: analog.matrix.clone(),
        analog: Some(analog),
        f_bb: digital.matrix,
        combiner: fd.combiner,
        f_opt: fd.precoder,
    })
}

/// Analog design for one network kind against a prepared target.
pub fn design_analog_for_kind<R: Rng + ?Sized>(
    target: &CMat,
    init: &CMat,
    kind: NetworkKind,
    setup: &LinkSetup,
    rng: &mut R,
) -> Result<AnalogPrecoder> {
    let q = kind.quantizers(&setup.resolutions);
    let (n_bs, n_k) = init.shape();
    match kind {
        NetworkKind::Dynamic => design_analog_dynamic(target, init, q.high(), q.low(), &setup.options),
        NetworkKind::UniformHigh | NetworkKind::UniformModerate | NetworkKind::UniformLow => {
            let all_high = PatternAssignment::filled(n_bs, n_k, Resolution::High);
            design_analog_fixed(target, init, &all_high, q.high(), q.low(), &setup.options)
        }
        fixed => {
            let pattern = build_fixed_pattern(fixed, n_bs, n_k, setup.placement, rng)?;
            design_analog_fixed(target, init, &pattern, q.high(), q.low(), &setup.options)
        }
    }
}
