//! Experiment configuration: a TOML file layered over desk or paper-scale
//! defaults.

use std::fmt;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use twinshift_core::{Architecture, HighHalf, LinkSetup, MuSetup, PowerModel, ResolutionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SuSweep,
    MuSweep,
    EeSweep,
    MuEeSweep,
    UsersSweep,
    WidebandSweep,
    GapVerify,
    PatternCompare,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::SuSweep,
        Scenario::MuSweep,
        Scenario::EeSweep,
        Scenario::MuEeSweep,
        Scenario::UsersSweep,
        Scenario::WidebandSweep,
        Scenario::GapVerify,
        Scenario::PatternCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SuSweep => "su-sweep",
            Scenario::MuSweep => "mu-sweep",
            Scenario::EeSweep => "ee-sweep",
            Scenario::MuEeSweep => "mu-ee-sweep",
            Scenario::UsersSweep => "users-sweep",
            Scenario::WidebandSweep => "wideband-sweep",
            Scenario::GapVerify => "gap-verify",
            Scenario::PatternCompare => "pattern-compare",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Array sizes and stream counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub n_bs: usize,
    pub n_ms: usize,
    pub rf_chains: usize,
    pub streams: usize,
    pub users: usize,
    pub streams_per_user: usize,
    pub mu_rf_chains: usize,
    pub paths: usize,
    pub subcarriers: usize,
    pub cp_length: usize,
}

impl Dims {
    pub fn desk() -> Self {
        Self {
            n_bs: 16,
            n_ms: 8,
            rf_chains: 4,
            streams: 4,
            users: 2,
            streams_per_user: 2,
            mu_rf_chains: 4,
            paths: 4,
            subcarriers: 16,
            cp_length: 4,
        }
    }

    pub fn paper() -> Self {
        Self {
            n_bs: 64,
            n_ms: 16,
            rf_chains: 4,
            streams: 4,
            users: 2,
            streams_per_user: 4,
            mu_rf_chains: 8,
            paths: 8,
            subcarriers: 128,
            cp_length: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bits {
    pub high: u32,
    pub moderate: u32,
    pub low: u32,
}

impl Default for Bits {
    fn default() -> Self {
        Self {
            high: 3,
            moderate: 2,
            low: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweeps {
    pub snr_db: Vec<f64>,
    pub rho_w: Vec<f64>,
    pub users: Vec<usize>,
    /// Per-user stream count of the user sweep.
    pub users_streams: usize,
    pub users_snr_db: f64,
    /// Transmit power at which the user sweep reports energy efficiency.
    pub users_rho_w: f64,
    pub pattern_snr_db: f64,
}

impl Default for Sweeps {
    fn default() -> Self {
        Self {
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            rho_w: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            users: vec![2, 3, 4, 5, 6],
            users_streams: 2,
            users_snr_db: 20.0,
            users_rho_w: 1.0,
            pattern_snr_db: 10.0,
        }
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub dims: Dims,
    pub bits: Bits,
    pub sweeps: Sweeps,
    pub power: PowerModel,
    pub placement: HighHalf,
    pub architectures: Vec<Architecture>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 100;

impl ExperimentConfig {
    pub fn desk() -> Self {
        Self::with_dims(Dims::desk())
    }

    pub fn paper() -> Self {
        Self::with_dims(Dims::paper())
    }

    fn with_dims(dims: Dims) -> Self {
        Self {
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            dims,
            bits: Bits::default(),
            sweeps: Sweeps::default(),
            power: PowerModel::default(),
            placement: HighHalf::default(),
            architectures: Architecture::ALL.to_vec(),
        }
    }

    pub fn resolutions(&self) -> Result<ResolutionSet> {
        ResolutionSet::new(self.bits.high, self.bits.moderate, self.bits.low).context("invalid [bits]")
    }

    pub fn link_setup(&self) -> Result<LinkSetup> {
        let mut s = LinkSetup::new(self.dims.streams, self.dims.rf_chains);
        s.resolutions = self.resolutions()?;
        s.placement = self.placement;
        Ok(s)
    }

    pub fn mu_setup(&self, rf_chains: usize) -> Result<MuSetup> {
        let mut s = MuSetup::new(rf_chains);
        s.resolutions = self.resolutions()?;
        s.placement = self.placement;
        Ok(s)
    }

    pub fn sigma2(&self) -> f64 {
        self.power.noise
    }

    /// `ρ = σ² · 10^(snr/10)`.
    pub fn rho_for_snr(&self, snr_db: f64) -> f64 {
        self.sigma2() * 10f64.powf(snr_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        for (name, v) in [
            ("n_bs", d.n_bs),
            ("n_ms", d.n_ms),
            ("rf_chains", d.rf_chains),
            ("streams", d.streams),
            ("users", d.users),
            ("streams_per_user", d.streams_per_user),
            ("mu_rf_chains", d.mu_rf_chains),
            ("paths", d.paths),
            ("subcarriers", d.subcarriers),
            ("cp_length", d.cp_length),
        ] {
            ensure!(v > 0, "dims.{name} must be positive (got {v})");
        }
        ensure!(self.trials >= 1, "trials must be at least 1");
        ensure!(d.n_bs.is_multiple_of(2), "dims.n_bs must be even so shifters split into two halves (got {})", d.n_bs);
        ensure!(
            d.streams <= d.rf_chains && d.rf_chains <= d.n_bs,
            "need streams <= rf_chains <= n_bs (got {} <= {} <= {})",
            d.streams,
            d.rf_chains,
            d.n_bs
        );
        ensure!(d.streams <= d.n_ms, "dims.streams ({}) exceeds dims.n_ms ({})", d.streams, d.n_ms);
        ensure!(
            d.mu_rf_chains.is_multiple_of(d.users) && d.mu_rf_chains / d.users >= d.streams_per_user,
            "dims.mu_rf_chains ({}) must split into dims.users ({}) blocks of at least streams_per_user ({}) chains",
            d.mu_rf_chains,
            d.users,
            d.streams_per_user
        );
        ensure!(
            d.mu_rf_chains <= d.n_bs && d.users * d.streams_per_user <= d.mu_rf_chains,
            "need users * streams_per_user <= mu_rf_chains <= n_bs (got {} <= {} <= {})",
            d.users * d.streams_per_user,
            d.mu_rf_chains,
            d.n_bs
        );
        ensure!(
            d.streams_per_user <= d.n_ms,
            "dims.streams_per_user ({}) exceeds dims.n_ms ({})",
            d.streams_per_user,
            d.n_ms
        );
        self.resolutions()?;
        self.power.validate().context("invalid [power]")?;
        ensure!(self.power.noise > 0.0, "power.noise must be positive");
        let s = &self.sweeps;
        ensure!(!s.snr_db.is_empty(), "sweeps.snr_db must not be empty");
        ensure!(!s.rho_w.is_empty(), "sweeps.rho_w must not be empty");
        ensure!(!s.users.is_empty(), "sweeps.users must not be empty");
        for v in s.snr_db.iter().chain([&s.users_snr_db, &s.pattern_snr_db]) {
            ensure!(v.is_finite(), "SNR values must be finite (got {v})");
        }
        for v in s.rho_w.iter().chain([&s.users_rho_w]) {
            ensure!(v.is_finite() && *v > 0.0, "transmit powers must be positive (got {v})");
        }
        ensure!(s.users_streams > 0, "sweeps.users_streams must be positive");
        for &u in &s.users {
            ensure!(
                u > 0 && u * s.users_streams <= d.n_bs,
                "sweeps.users entry {u} needs {} RF chains but n_bs is {}",
                u * s.users_streams,
                d.n_bs
            );
        }
        ensure!(s.users_streams <= d.n_ms, "sweeps.users_streams exceeds dims.n_ms");
        ensure!(!self.architectures.is_empty(), "architectures must not be empty");
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    trials: Option<usize>,
    #[serde(default)]
    dims: RawDims,
    bits: Option<Bits>,
    #[serde(default)]
    sweeps: RawSweeps,
    power: Option<PowerModel>,
    placement: Option<HighHalf>,
    architectures: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    n_bs: Option<usize>,
    n_ms: Option<usize>,
    rf_chains: Option<usize>,
    streams: Option<usize>,
    users: Option<usize>,
    streams_per_user: Option<usize>,
    mu_rf_chains: Option<usize>,
    paths: Option<usize>,
    subcarriers: Option<usize>,
    cp_length: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweeps {
    snr_db: Option<Vec<f64>>,
    rho_w: Option<Vec<f64>>,
    users: Option<Vec<usize>>,
    users_streams: Option<usize>,
    users_snr_db: Option<f64>,
    users_rho_w: Option<f64>,
    pattern_snr_db: Option<f64>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($field:ident),+) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

/// Parse TOML text over the desk or paper-scale defaults.
pub fn parse_config(text: &str, paper_scale: bool) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text)?;
    let mut cfg = if paper_scale {
        ExperimentConfig::paper()
    } else {
        ExperimentConfig::desk()
    };
    overlay!(cfg, raw, seed, trials, bits, power, placement);
    overlay!(
        cfg.dims,
        raw.dims,
        n_bs,
        n_ms,
        rf_chains,
        streams,
        users,
        streams_per_user,
        mu_rf_chains,
        paths,
        subcarriers,
        cp_length
    );
    overlay!(
        cfg.sweeps,
        raw.sweeps,
        snr_db,
        rho_w,
        users,
        users_streams,
        users_snr_db,
        users_rho_w,
        pattern_snr_db
    );
    if let Some(labels) = raw.architectures {
        cfg.architectures = labels
            .iter()
            .map(|l| match Architecture::from_label(l) {
                Some(a) => Ok(a),
                None => bail!(
                    "unknown architecture {l:?}; expected one of {}",
                    Architecture::ALL.map(|a| a.label()).join(", ")
                ),
            })
            .collect::<Result<_>>()?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, paper_scale: bool) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text, paper_scale).with_context(|| format!("parsing config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use twinshift_core::NetworkKind;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("", false).unwrap(), ExperimentConfig::desk());
        assert_eq!(parse_config("", true).unwrap(), ExperimentConfig::paper());
        ExperimentConfig::desk().validate().unwrap();
        ExperimentConfig::paper().validate().unwrap();
    }

    #[test]
    fn file_values_override_defaults() {
        let cfg = parse_config(
            r#"
seed = 9
trials = 3
architectures = ["Dynamic-Twin", "FullDigital"]
[dims]
n_bs = 32
[sweeps]
snr_db = [0.0]
[power]
switch = 0.002
"#,
            true,
        )
        .unwrap();
        assert_eq!((cfg.seed, cfg.trials, cfg.dims.n_bs, cfg.dims.n_ms), (9, 3, 32, 16));
        assert_eq!(cfg.sweeps.snr_db, vec![0.0]);
        assert_eq!(cfg.power.switch, 0.002);
        assert_eq!(cfg.power.high_shifter, 0.015);
        assert_eq!(
            cfg.architectures,
            vec![Architecture::Hybrid(NetworkKind::Dynamic), Architecture::FullDigital]
        );
    }

    #[test]
    fn unknown_keys_and_labels_rejected() {
        assert!(parse_config("sed = 1", false).is_err());
        assert!(parse_config("[dims]\nnbs = 1", false).is_err());
        let err = parse_config("architectures = [\"Dynamic\"]", false).unwrap_err();
        assert!(format!("{err:#}").contains("Dynamic-Twin"));
    }

    #[test]
    fn validation_messages_name_the_field() {
        let mut cfg = ExperimentConfig::desk();
        cfg.dims.n_bs = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("dims.n_bs"));
        let mut cfg = ExperimentConfig::desk();
        cfg.dims.rf_chains = 2;
        assert!(cfg.validate().unwrap_err().to_string().contains("rf_chains"));
        let mut cfg = ExperimentConfig::desk();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk();
        cfg.sweeps.users = vec![9];
        assert!(cfg.validate().unwrap_err().to_string().contains("sweeps.users"));
        let mut cfg = ExperimentConfig::desk();
        cfg.bits.high = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snr_maps_to_transmit_power() {
        let cfg = ExperimentConfig::desk();
        assert!((cfg.rho_for_snr(10.0) - 10.0).abs() < 1e-12);
        assert!((cfg.rho_for_snr(0.0) - 1.0).abs() < 1e-12);
    }
}
