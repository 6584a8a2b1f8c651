//! Phase quantizers and phase-shifter array patterns.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::wrap_angle;

/// Uniform phase grid `{2πk / 2^B : k = 0..2^B}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct QuantizerSpec {
    bits: u32,
}

impl QuantizerSpec {
    pub const MAX_BITS: u32 = 16;

    pub fn new(bits: u32) -> Result<Self> {
        if !(1..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::InvalidArgument(format!(
                "quantizer bits must be in 1..={}, got {bits}",
                Self::MAX_BITS
            )));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn level_count(&self) -> usize {
        1usize << self.bits
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.level_count() as f64
    }

    pub fn level(&self, k: usize) -> f64 {
        self.step() * (k % self.level_count()) as f64
    }

    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.level_count()).map(|k| self.level(k))
    }

    /// Circular distance from `phase` to the nearest grid level.
    pub fn grid_distance(&self, phase: f64) -> f64 {
        quantize_phase(phase, *self).error
    }
}

impl TryFrom<u32> for QuantizerSpec {
    type Error = Error;
    fn try_from(bits: u32) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<QuantizerSpec> for u32 {
    fn from(q: QuantizerSpec) -> u32 {
        q.bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantized {
    /// Chosen level in `[0, 2π)`.
    pub level: f64,
    /// Circular distance between the input phase and `level`.
    pub error: f64,
}

/// Nearest grid level under the circular metric. A phase exactly halfway
/// between two levels goes to the smaller level value.
pub fn quantize_phase(phase: f64, q: QuantizerSpec) -> Quantized {
    let n = q.level_count();
    let step = q.step();
    let t = phase.rem_euclid(2.0 * PI) / step;
    let lower = (t.floor() as usize).min(n - 1);
    let frac = t - lower as f64;
    let k = if frac > 0.5 {
        (lower + 1) % n
    } else if frac == 0.5 && lower == n - 1 {
        // tie between the top level and 2π ≡ 0; zero is the smaller value
        0
    } else {
        lower
    };
    let level = q.level(k);
    Quantized {
        level,
        error: wrap_angle(phase - level).abs(),
    }
}

/// Resolution label of one phase shifter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    High,
    Low,
}

impl Resolution {
    fn as_char(self) -> char {
        match self {
            Resolution::High => 'H',
            Resolution::Low => 'L',
        }
    }
}

/// `N_BS × N_K` grid of shifter resolutions. Row `i`, column `j` is the
/// shifter joining antenna `i` to RF chain `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternAssignment {
    rows: usize,
    cols: usize,
    cells: Vec<Resolution>,
}

impl PatternAssignment {
    pub fn filled(rows: usize, cols: usize, label: Resolution) -> Self {
        Self {
            rows,
            cols,
            cells: vec![label; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Resolution) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                cells.push(f(i, j));
            }
        }
        Self { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Resolution {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: Resolution) {
        self.cells[row * self.cols + col] = label;
    }

    pub fn count(&self, label: Resolution) -> usize {
        self.cells.iter().filter(|&&c| c == label).count()
    }

    pub fn column_count(&self, col: usize, label: Resolution) -> usize {
        (0..self.rows).filter(|&i| self.get(i, col) == label).count()
    }

    /// Rows of column `col` carrying `label`, ascending.
    pub fn rows_with(&self, col: usize, label: Resolution) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.get(i, col) == label).collect()
    }

    /// Half the shifters are high resolution, half low.
    pub fn is_twin_balanced(&self) -> bool {
        let total = self.rows * self.cols;
        total.is_multiple_of(2) && self.count(Resolution::High) == total / 2
    }

    /// Every column holds exactly `N_BS / 2` low-resolution shifters.
    pub fn is_column_balanced(&self) -> bool {
        self.rows.is_multiple_of(2) && (0..self.cols).all(|j| self.column_count(j, Resolution::Low) == self.rows / 2)
    }

    /// One line per antenna, one `H`/`L` character per RF chain.
    pub fn to_text_grid(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self.get(i, j).as_char());
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for PatternAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text_grid())
    }
}

impl FromStr for PatternAssignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lines: Vec<&str> = s.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let cols = lines.first().map_or(0, |l| l.chars().count());
        let mut cells = Vec::with_capacity(lines.len() * cols);
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != cols {
                return Err(Error::Serialization(format!("pattern row {r} has ragged width")));
            }
            for ch in line.chars() {
                cells.push(match ch {
                    'H' => Resolution::High,
                    'L' => Resolution::Low,
                    other => {
                        return Err(Error::Serialization(format!(
                            "unexpected pattern character {other:?}"
                        )))
                    }
                });
            }
        }
        Ok(Self {
            rows: lines.len(),
            cols,
            cells,
        })
    }
}

/// Phase-shifter network architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetworkKind {
    Horizontal,
    Vertical,
    Interlaced,
    RandomFixed,
    Dynamic,
    UniformHigh,
    UniformModerate,
    UniformLow,
}

impl NetworkKind {
    pub const ALL: [NetworkKind; 8] = [
        NetworkKind::Dynamic,
        NetworkKind::Horizontal,
        NetworkKind::Vertical,
        NetworkKind::Interlaced,
        NetworkKind::RandomFixed,
        NetworkKind::UniformHigh,
        NetworkKind::UniformModerate,
        NetworkKind::UniformLow,
    ];

    pub fn is_fixed_twin(self) -> bool {
        matches!(
            self,
            NetworkKind::Horizontal | NetworkKind::Vertical | NetworkKind::Interlaced | NetworkKind::RandomFixed
        )
    }

    pub fn is_twin(self) -> bool {
        self.is_fixed_twin() || self == NetworkKind::Dynamic
    }

    pub fn quantizers(self, set: &ResolutionSet) -> Quantizers {
        match self {
            NetworkKind::UniformHigh => Quantizers::Uniform(set.high),
            NetworkKind::UniformModerate => Quantizers::Uniform(set.moderate),
            NetworkKind::UniformLow => Quantizers::Uniform(set.low),
            _ => Quantizers::Twin {
                high: set.high,
                low: set.low,
            },
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NetworkKind::Horizontal => "Fixed-Horizontal",
            NetworkKind::Vertical => "Fixed-Vertical",
            NetworkKind::Interlaced => "Fixed-Interlaced",
            NetworkKind::RandomFixed => "Fixed-Random",
            NetworkKind::Dynamic => "Dynamic-Twin",
            NetworkKind::UniformHigh => "UniformHigh",
            NetworkKind::UniformModerate => "UniformModerate",
            NetworkKind::UniformLow => "UniformLow",
        }
    }
}

/// Quantizer bits available to an experiment: `B_H`, `B_M`, `B_L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolutionSet {
    pub high: QuantizerSpec,
    pub moderate: QuantizerSpec,
    pub low: QuantizerSpec,
}

impl ResolutionSet {
    pub fn new(high: u32, moderate: u32, low: u32) -> Result<Self> {
        Ok(Self {
            high: QuantizerSpec::new(high)?,
            moderate: QuantizerSpec::new(moderate)?,
            low: QuantizerSpec::new(low)?,
        })
    }
}

impl Default for ResolutionSet {
    fn default() -> Self {
        Self::new(3, 2, 1).expect("static bits are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantizers {
    Twin { high: QuantizerSpec, low: QuantizerSpec },
    Uniform(QuantizerSpec),
}

impl Quantizers {
    pub fn high(&self) -> QuantizerSpec {
        match *self {
            Quantizers::Twin { high, .. } => high,
            Quantizers::Uniform(q) => q,
        }
    }

    pub fn low(&self) -> QuantizerSpec {
        match *self {
            Quantizers::Twin { low, .. } => low,
            Quantizers::Uniform(q) => q,
        }
    }
}

/// Which half of the rows (or columns) of a regular fixed pattern is high
/// resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HighHalf {
    #[default]
    Leading,
    Trailing,
}

/// Build one of the static twin patterns.
pub fn build_fixed_pattern<R: Rng + ?Sized>(
    kind: NetworkKind,
    n_bs: usize,
    n_k: usize,
    placement: HighHalf,
    rng: &mut R,
) -> Result<PatternAssignment> {
    if !n_bs.is_multiple_of(2) {
        return Err(Error::OddAntennaCount(n_bs));
    }
    let leading = placement == HighHalf::Leading;
    let pick = |first_half: bool| {
        if first_half == leading {
            Resolution::High
        } else {
            Resolution::Low
        }
    };
    match kind {
        NetworkKind::Horizontal => Ok(PatternAssignment::from_fn(n_bs, n_k, |i, _| pick(i < n_bs / 2))),
        NetworkKind::Vertical => {
            if !n_k.is_multiple_of(2) {
                return Err(Error::OddRfChainCount(n_k));
            }
            Ok(PatternAssignment::from_fn(n_bs, n_k, |_, j| pick(j < n_k / 2)))
        }
        NetworkKind::Interlaced => Ok(PatternAssignment::from_fn(n_bs, n_k, |i, j| {
            if (i + j) % 2 == 0 {
                Resolution::High
            } else {
                Resolution::Low
            }
        })),
        NetworkKind::RandomFixed => {
            let total = n_bs * n_k;
            let mut cells: Vec<Resolution> = (0..total)
                .map(|t| if t < total / 2 { Resolution::High } else { Resolution::Low })
                .collect();
            cells.shuffle(rng);
            Ok(PatternAssignment {
                rows: n_bs,
                cols: n_k,
                cells,
            })
        }
        other => Err(Error::InvalidArgument(format!(
            "{} is not a fixed twin pattern",
            other.label()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(bits: u32) -> QuantizerSpec {
        QuantizerSpec::new(bits).unwrap()
    }

    #[test]
    fn quantize_examples() {
        let r = quantize_phase(0.0, q(1));
        assert_eq!((r.level, r.error), (0.0, 0.0));

        let r = quantize_phase(3.0 * PI / 4.0, q(1));
        assert!((r.level - PI).abs() < 1e-15);
        assert!((r.error - PI / 4.0).abs() < 1e-15);

        let r = quantize_phase(2.0 * PI - 0.1, q(2));
        assert_eq!(r.level, 0.0);
        assert!((r.error - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smaller_level() {
        let r = quantize_phase(PI / 2.0, q(1));
        assert_eq!(r.level, 0.0);
        let r = quantize_phase(3.0 * PI / 2.0, q(1));
        assert_eq!(r.level, 0.0);
        let r = quantize_phase(PI / 4.0, q(2));
        assert_eq!(r.level, 0.0);
    }

    #[test]
    fn quantizer_bounds() {
        assert!(QuantizerSpec::new(0).is_err());
        assert!(QuantizerSpec::new(17).is_err());
        assert_eq!(q(3).levels().count(), 8);
    }

    #[test]
    fn horizontal_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = build_fixed_pattern(NetworkKind::Horizontal, 4, 2, HighHalf::Leading, &mut rng).unwrap();
        assert_eq!(p.to_text_grid(), "HH\nHH\nLL\nLL\n");
        assert_eq!(p.count(Resolution::High), 4);
        assert_eq!(p.count(Resolution::Low), 4);
        let t = build_fixed_pattern(NetworkKind::Horizontal, 4, 2, HighHalf::Trailing, &mut rng).unwrap();
        assert_eq!(t.to_text_grid(), "LL\nLL\nHH\nHH\n");
    }

    #[test]
    fn interlaced_checkerboard() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = build_fixed_pattern(NetworkKind::Interlaced, 2, 2, HighHalf::Leading, &mut rng).unwrap();
        assert_eq!(p.get(0, 0), Resolution::High);
        assert_eq!(p.get(1, 1), Resolution::High);
        assert_eq!(p.get(0, 1), Resolution::Low);
        assert_eq!(p.get(1, 0), Resolution::Low);
    }

    #[test]
    fn vertical_pattern_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = build_fixed_pattern(NetworkKind::Vertical, 4, 4, HighHalf::Leading, &mut rng).unwrap();
        assert_eq!(p.to_text_grid(), "HHLL\n".repeat(4));
        assert!(matches!(
            build_fixed_pattern(NetworkKind::Vertical, 4, 3, HighHalf::Leading, &mut rng),
            Err(Error::OddRfChainCount(3))
        ));
        assert!(matches!(
            build_fixed_pattern(NetworkKind::Horizontal, 5, 2, HighHalf::Leading, &mut rng),
            Err(Error::OddAntennaCount(5))
        ));
        assert!(build_fixed_pattern(NetworkKind::Dynamic, 4, 2, HighHalf::Leading, &mut rng).is_err());
    }

    #[test]
    fn random_pattern_is_globally_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = build_fixed_pattern(NetworkKind::RandomFixed, 64, 4, HighHalf::Leading, &mut rng).unwrap();
        assert_eq!(p.count(Resolution::High), 128);
        assert_eq!(p.count(Resolution::Low), 128);
        assert!(p.is_twin_balanced());
    }

    #[test]
    fn text_grid_rejects_garbage() {
        assert!("HX\nLL\n".parse::<PatternAssignment>().is_err());
        assert!("HHH\nLL\n".parse::<PatternAssignment>().is_err());
    }

    #[test]
    fn quantizers_by_kind() {
        let set = ResolutionSet::default();
        assert_eq!(NetworkKind::UniformModerate.quantizers(&set), Quantizers::Uniform(q(2)));
        assert_eq!(
            NetworkKind::Interlaced.quantizers(&set),
            Quantizers::Twin { high: q(3), low: q(1) }
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn error_bounded_by_half_step(phase in -20.0f64..20.0, bits in 1u32..=8) {
                let spec = q(bits);
                let r = quantize_phase(phase, spec);
                prop_assert!(r.error <= PI / spec.level_count() as f64 + 1e-12);
                prop_assert!((0.0..2.0 * PI).contains(&r.level));
            }

            #[test]
            fn quantization_is_idempotent(phase in -20.0f64..20.0, bits in 1u32..=8) {
                let spec = q(bits);
                let r = quantize_phase(phase, spec);
                let again = quantize_phase(r.level, spec);
                prop_assert_eq!(again.level, r.level);
                prop_assert!(again.error < 1e-12);
            }

            #[test]
            fn text_grid_round_trips(rows in 1usize..8, cols in 1usize..6, seed: u64) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = PatternAssignment::from_fn(rows, cols, |_, _| {
                    if rng.random::<bool>() { Resolution::High } else { Resolution::Low }
                });
                let back: PatternAssignment = p.to_text_grid().parse().unwrap();
                prop_assert_eq!(back, p);
            }
        }
    }
}
