//! Geometric multi-path mmWave channels over uniform planar arrays.
//!
//! Antennas of a `W × H` array are flattened with the vertical index varying
//! fastest: antenna `(m, n)` (horizontal `m`, vertical `n`) sits at position
//! `m · H + n` of every steering vector and channel dimension.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, CMat, CVec};

pub const DEFAULT_SPACING: f64 = 0.5;

/// Uniform planar array; spacing is measured in carrier wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
}

impl ArrayGeometry {
    pub fn new(width: usize, height: usize, spacing: f64) -> Result<Self> {
        let geom = Self {
            width,
            height,
            spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Half-wavelength array.
    pub fn half_wavelength(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, DEFAULT_SPACING)
    }

    /// Near-square half-wavelength array with exactly `n` antennas: the widest
    /// `width ≤ sqrt(n)` dividing `n` is chosen.
    pub fn square_ish(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGeometry("antenna count must be positive".into()));
        }
        let mut w = (n as f64).sqrt().floor() as usize;
        while !n.is_multiple_of(w) {
            w -= 1;
        }
        Self::half_wavelength(n / w, w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGeometry(format!(
                "array must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        Ok(())
    }

    pub fn antenna_count(&self) -> usize {
        self.width * self.height
    }
}

/// Steering vector of a UPA toward `(azimuth, elevation)`.
pub fn upa_response(geom: &ArrayGeometry, azimuth: f64, elevation: f64) -> CVec {
    let n_ant = geom.antenna_count();
    let amp = 1.0 / (n_ant as f64).sqrt();
    let k = 2.0 * PI * geom.spacing;
    let horiz = azimuth.sin() * elevation.sin();
    let vert = elevation.cos();
    CVec::from_iterator(
        n_ant,
        (0..geom.width).flat_map(|m| {
            (0..geom.height).map(move |n| {
                Complex64::from_polar(amp, k * (m as f64 * horiz + n as f64 * vert))
            })
        }),
    )
}

/// One propagation path: complex gain plus departure and arrival angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub gain: Complex64,
    pub azimuth_departure: f64,
    pub elevation_departure: f64,
    pub azimuth_arrival: f64,
    pub elevation_arrival: f64,
}

impl PathParams {
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let gain = Complex64::new(re, im) / 2f64.sqrt();
        Self {
            gain,
            azimuth_departure: rng.random_range(-PI..PI),
            elevation_departure: rng.random_range(-PI / 2.0..PI / 2.0),
            azimuth_arrival: rng.random_range(-PI..PI),
            elevation_arrival: rng.random_range(-PI / 2.0..PI / 2.0),
        }
    }

    fn angles_in_range(&self) -> bool {
        let az = |a: f64| (-PI..PI).contains(&a);
        let el = |a: f64| (-PI / 2.0..PI / 2.0).contains(&a);
        az(self.azimuth_departure)
            && el(self.elevation_departure)
            && az(self.azimuth_arrival)
            && el(self.elevation_arrival)
    }
}

/// `√(N_BS N_MS / L) · α · a_MS a_BS^H` for one path.
fn path_term(tx: &ArrayGeometry, rx: &ArrayGeometry, path: &PathParams, path_count: usize) -> CMat {
    let a_bs = upa_response(tx, path.azimuth_departure, path.elevation_departure);
    let a_ms = upa_response(rx, path.azimuth_arrival, path.elevation_arrival);
    let scale = ((tx.antenna_count() * rx.antenna_count()) as f64 / path_count as f64).sqrt();
    a_ms * a_bs.adjoint() * (path.gain * scale)
}

/// A narrowband channel realization `N_MS × N_BS` together with the paths
/// that generated it.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub matrix: CMat,
    pub paths: Vec<PathParams>,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub seed: Option<u64>,
}

impl ChannelRealization {
    pub fn from_paths(tx: ArrayGeometry, rx: ArrayGeometry, paths: Vec<PathParams>) -> Result<Self> {
        tx.validate()?;
        rx.validate()?;
        if paths.is_empty() {
            return Err(Error::EmptyInput("channel paths"));
        }
        let matrix = assemble(&tx, &rx, &paths);
        Ok(Self {
            matrix,
            paths,
            tx,
            rx,
            seed: None,
        })
    }

    /// Wrap an arbitrary channel matrix with no path description. Used for
    /// hand-built test channels; `reconstruction_error` is meaningless here.
    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        let tx = ArrayGeometry::half_wavelength(matrix.ncols(), 1)?;
        let rx = ArrayGeometry::half_wavelength(matrix.nrows(), 1)?;
        Ok(Self {
            matrix,
            paths: Vec::new(),
            tx,
            rx,
            seed: None,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n_bs(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_ms(&self) -> usize {
        self.matrix.nrows()
    }

    /// Relative Frobenius error between `matrix` and the sum rebuilt from `paths`.
    pub fn reconstruction_error(&self) -> f64 {
        let rebuilt = assemble(&self.tx, &self.rx, &self.paths);
        let denom = frobenius_sq(&self.matrix).sqrt().max(f64::MIN_POSITIVE);
        frobenius_sq(&(&rebuilt - &self.matrix)).sqrt() / denom
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            schema_version: CHANNEL_SCHEMA_VERSION,
            tx: self.tx,
            rx: self.rx,
            seed: self.seed,
            paths: self.paths.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: ChannelRecord = serde_json::from_str(text)?;
        record.into_realization()
    }
}

fn assemble(tx: &ArrayGeometry, rx: &ArrayGeometry, paths: &[PathParams]) -> CMat {
    let mut h = CMat::zeros(rx.antenna_count(), tx.antenna_count());
    for p in paths {
        h += path_term(tx, rx, p, paths.len());
    }
    h
}

pub const CHANNEL_SCHEMA_VERSION: u32 = 1;

/// JSON replay form of a channel: geometry, seed and paths. The matrix is
/// rebuilt from the paths on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub schema_version: u32,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub seed: Option<u64>,
    pub paths: Vec<PathParams>,
}

impl ChannelRecord {
    pub fn into_realization(self) -> Result<ChannelRealization> {
        if self.schema_version != CHANNEL_SCHEMA_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported channel schema version {}",
                self.schema_version
            )));
        }
        if let Some(bad) = self.paths.iter().position(|p| !p.angles_in_range()) {
            return Err(Error::Serialization(format!("path {bad} has out-of-range angles")));
        }
        let mut ch = ChannelRealization::from_paths(self.tx, self.rx, self.paths)?;
        ch.seed = self.seed;
        Ok(ch)
    }
}

/// Draw an `L`-path channel: standard complex Gaussian gains, azimuths uniform
/// on `[-π, π)` and elevations uniform on `[-π/2, π/2)` on both ends.
pub fn sample_channel<R: Rng + ?Sized>(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    path_count: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if path_count == 0 {
        return Err(Error::InvalidArgument("path count must be at least 1".into()));
    }
    let paths = (0..path_count).map(|_| PathParams::sample(rng)).collect();
    ChannelRealization::from_paths(*tx, *rx, paths)
}

/// Frequency-selective channel: one `N_MS × N_BS` matrix per subcarrier,
/// built from integer per-path tap delays.
#[derive(Debug, Clone)]
pub struct WidebandChannel {
    pub per_subcarrier: Vec<CMat>,
    pub tap_delays: Vec<usize>,
    pub paths: Vec<PathParams>,
    pub cp_length: usize,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl WidebandChannel {
    pub fn from_paths(
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        paths: Vec<PathParams>,
        tap_delays: Vec<usize>,
        subcarriers: usize,
        cp_length: usize,
    ) -> Result<Self> {
        if subcarriers == 0 {
            return Err(Error::InvalidArgument("subcarrier count must be at least 1".into()));
        }
        if cp_length == 0 {
            return Err(Error::InvalidArgument("cyclic prefix length must be at least 1".into()));
        }
        if paths.is_empty() {
            return Err(Error::EmptyInput("channel paths"));
        }
        if tap_delays.len() != paths.len() {
            return Err(Error::InvalidArgument(format!(
                "{} tap delays for {} paths",
                tap_delays.len(),
                paths.len()
            )));
        }
        if let Some(&d) = tap_delays.iter().find(|&&d| d > cp_length) {
            return Err(Error::InvalidArgument(format!(
                "tap delay {d} exceeds cyclic prefix {cp_length}"
            )));
        }
        tx.validate()?;
        rx.validate()?;
        let terms: Vec<CMat> = paths.iter().map(|p| path_term(&tx, &rx, p, paths.len())).collect();
        let per_subcarrier = (0..subcarriers)
            .map(|p| {
                let mut h = CMat::zeros(rx.antenna_count(), tx.antenna_count());
                for (term, &delay) in terms.iter().zip(&tap_delays) {
                    let ramp = Complex64::from_polar(
                        1.0,
                        -2.0 * PI * (p * delay) as f64 / subcarriers as f64,
                    );
                    h += term * ramp;
                }
                h
            })
            .collect();
        Ok(Self {
            per_subcarrier,
            tap_delays,
            paths,
            cp_length,
            tx,
            rx,
        })
    }

    pub fn subcarrier_count(&self) -> usize {
        self.per_subcarrier.len()
    }
}

/// Draw a wideband channel. Paths are drawn exactly as in [`sample_channel`]
/// (same RNG consumption), then each path gets a delay uniform on
/// `[0, cp_length)`.
pub fn sample_wideband_channel<R: Rng + ?Sized>(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    path_count: usize,
    subcarriers: usize,
    cp_length: usize,
    rng: &mut R,
) -> Result<WidebandChannel> {
    if cp_length == 0 {
        return Err(Error::InvalidArgument("cyclic prefix length must be at least 1".into()));
    }
    if path_count == 0 {
        return Err(Error::InvalidArgument("path count must be at least 1".into()));
    }
    let paths: Vec<PathParams> = (0..path_count).map(|_| PathParams::sample(rng)).collect();
    let delays = (0..path_count).map(|_| rng.random_range(0..cp_length)).collect();
    WidebandChannel::from_paths(*tx, *rx, paths, delays, subcarriers, cp_length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, svd_sorted};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn broadside_response_is_flat() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let a = upa_response(&g, 0.0, PI / 2.0);
        for z in a.iter() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn endfire_horizontal_pair() {
        let g = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let a = upa_response(&g, PI / 2.0, PI / 2.0);
        // independent scalar evaluation: phase 2π·0.5·(1·1·1 + 0) = π
        let s = 1.0 / 2f64.sqrt();
        assert!((a[0] - c(s, 0.0)).norm() < 1e-12);
        assert!((a[1] - c(-s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn vertical_index_varies_fastest() {
        let g = ArrayGeometry::half_wavelength(2, 3).unwrap();
        // azimuth 0 kills the horizontal term, so only n contributes.
        let theta = 1.0_f64;
        let a = upa_response(&g, 0.0, theta);
        let step = PI * theta.cos();
        for m in 0..2 {
            for n in 0..3 {
                let want = Complex64::from_polar(1.0 / 6f64.sqrt(), step * n as f64);
                assert!((a[m * 3 + n] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn geometry_rejects_degenerate() {
        assert!(ArrayGeometry::new(0, 2, 0.5).is_err());
        assert!(ArrayGeometry::new(2, 2, 0.0).is_err());
        assert_eq!(ArrayGeometry::square_ish(16).unwrap().antenna_count(), 16);
        assert_eq!(ArrayGeometry::square_ish(8).unwrap().antenna_count(), 8);
    }

    #[test]
    fn single_path_is_scaled_outer_product() {
        let tx = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let path = PathParams {
            gain: c(1.0, 0.0),
            azimuth_departure: 0.3,
            elevation_departure: -0.2,
            azimuth_arrival: 1.1,
            elevation_arrival: 0.4,
        };
        let ch = ChannelRealization::from_paths(tx, rx, vec![path]).unwrap();
        let a_bs = upa_response(&tx, 0.3, -0.2);
        let a_ms = upa_response(&rx, 1.1, 0.4);
        let want = a_ms * a_bs.adjoint() * c((8.0f64 * 4.0).sqrt(), 0.0);
        assert!(max_abs_diff(&ch.matrix, &want) < 1e-12);
    }

    #[test]
    fn identical_paths_give_rank_one() {
        let tx = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let p = PathParams {
            gain: c(0.7, -0.2),
            azimuth_departure: 0.5,
            elevation_departure: 0.1,
            azimuth_arrival: -1.0,
            elevation_arrival: 0.9,
        };
        let q = PathParams { gain: c(-0.3, 1.0), ..p };
        let ch = ChannelRealization::from_paths(tx, rx, vec![p, q]).unwrap();
        let svd = svd_sorted(&ch.matrix).unwrap();
        assert!(svd.singular_values[1] < 1e-10);
    }

    #[test]
    fn sampled_channel_reconstructs_and_replays() {
        let tx = ArrayGeometry::half_wavelength(4, 4).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ch = sample_channel(&tx, &rx, 4, &mut rng).unwrap();
        assert!(ch.reconstruction_error() < 1e-12);
        assert!(ch.paths.iter().all(PathParams::angles_in_range));
        let mut rng2 = ChaCha8Rng::seed_from_u64(7);
        let again = sample_channel(&tx, &rx, 4, &mut rng2).unwrap();
        assert_eq!(ch.paths, again.paths);
        let svd = svd_sorted(&ch.matrix).unwrap();
        assert!(svd.rank() <= 4);
    }

    #[test]
    fn sample_rejects_zero_paths() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_channel(&g, &g, 0, &mut rng).is_err());
    }

    #[test]
    fn json_round_trip_rebuilds_matrix() {
        let tx = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let ch = sample_channel(&tx, &rx, 3, &mut rng).unwrap().with_seed(99);
        let text = ch.to_json().unwrap();
        let back = ChannelRealization::from_json(&text).unwrap();
        assert_eq!(back.seed, Some(99));
        assert!(max_abs_diff(&back.matrix, &ch.matrix) < 1e-12);
    }

    #[test]
    fn wideband_single_subcarrier_matches_narrowband() {
        let tx = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        let wb = sample_wideband_channel(&tx, &rx, 3, 1, 4, &mut a).unwrap();
        let nb = sample_channel(&tx, &rx, 3, &mut b).unwrap();
        assert!(max_abs_diff(&wb.per_subcarrier[0], &nb.matrix) < 1e-12);
        assert!(wb.tap_delays.iter().all(|&d| d < 4));
    }

    #[test]
    fn zero_delays_give_flat_channel() {
        let tx = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let rx = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nb = sample_channel(&tx, &rx, 2, &mut rng).unwrap();
        let wb = WidebandChannel::from_paths(tx, rx, nb.paths.clone(), vec![0, 0], 8, 2).unwrap();
        for h in &wb.per_subcarrier {
            assert!(max_abs_diff(h, &nb.matrix) < 1e-12);
        }
    }

    #[test]
    fn unit_delay_rotates_by_quarter_turn() {
        let tx = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let rx = ArrayGeometry::half_wavelength(1, 1).unwrap();
        let path = PathParams {
            gain: c(1.0, 0.0),
            azimuth_departure: 0.2,
            elevation_departure: 0.3,
            azimuth_arrival: 0.0,
            elevation_arrival: 0.0,
        };
        let wb = WidebandChannel::from_paths(tx, rx, vec![path], vec![1], 4, 2).unwrap();
        // direct DFT evaluation: e^{-j2π·p·1/4}
        for p in 0..4 {
            let ramp = Complex64::from_polar(1.0, -PI * p as f64 / 2.0);
            let want = &wb.per_subcarrier[0] * ramp;
            assert!(max_abs_diff(&wb.per_subcarrier[p], &want) < 1e-12);
        }
    }

    #[test]
    fn wideband_rejects_zero_cp() {
        let g = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_wideband_channel(&g, &g, 2, 4, 0, &mut rng).is_err());
    }
}
