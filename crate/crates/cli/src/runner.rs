//! Monte-Carlo scenario execution.

use std::time::Instant;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use twinshift_core::{
    bandwidth_efficiency, design_link, design_mu, design_wideband, energy_efficiency, gap_trace, mu_gap_trace,
    mu_sum_rate, sample_channel, sample_wideband_channel, Architecture, ArrayGeometry, CMat, ChannelRealization,
    MultiUserScene, NetworkKind, ReplacementOrder,
};

use crate::config::{ExperimentConfig, Scenario};
use crate::output::{MetricRecord, SCHEMA_VERSION};

const CHANNEL_STREAM: u64 = 0;
const PATTERN_STREAM: u64 = 1;

/// Independent RNG stream for one purpose of one trial.
pub fn trial_rng(master: u64, trial: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((trial as u64) << 1) | purpose);
    rng
}

/// Run every trial of `scenario` in parallel and return the rows ordered by
/// trial, then architecture, then sweep point.
pub fn run_experiment(scenario: Scenario, cfg: &ExperimentConfig, timing: bool) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut t = Trial::new(scenario, cfg, trial, timing);
            t.run().with_context(|| format!("{scenario} trial {trial}"))?;
            Ok(t.rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<MetricRecord> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| r.trial);
    Ok(rows)
}

struct Trial<'a> {
    scenario: Scenario,
    cfg: &'a ExperimentConfig,
    trial: usize,
    timing: bool,
    rows: Vec<MetricRecord>,
}

struct Row<'s> {
    arch: &'s str,
    sweep_name: &'s str,
    sweep_value: f64,
    rate: f64,
    ee: Option<f64>,
    gap: Option<f64>,
    wall_ms: Option<f64>,
}

impl<'a> Trial<'a> {
    fn new(scenario: Scenario, cfg: &'a ExperimentConfig, trial: usize, timing: bool) -> Self {
        Self {
            scenario,
            cfg,
            trial,
            timing,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Row<'_>) {
        self.rows.push(MetricRecord {
            scenario: self.scenario.name().to_string(),
            seed: self.cfg.seed,
            trial: self.trial,
            arch: row.arch.to_string(),
            sweep_name: row.sweep_name.to_string(),
            sweep_value: row.sweep_value,
            rate_bps_hz: row.rate,
            ee_bits_hz_j: row.ee,
            gap_bits: row.gap,
            wall_ms: row.wall_ms,
            schema_version: SCHEMA_VERSION,
        });
    }

    fn channel_rng(&self) -> ChaCha8Rng {
        trial_rng(self.cfg.seed, self.trial, CHANNEL_STREAM)
    }

    fn pattern_rng(&self) -> ChaCha8Rng {
        trial_rng(self.cfg.seed, self.trial, PATTERN_STREAM)
    }

    fn elapsed(&self, start: Instant) -> Option<f64> {
        self.timing.then(|| start.elapsed().as_secs_f64() * 1e3)
    }

    /// `(sweep_name, [(sweep_value, ρ)])`.
    fn points(&self) -> (&'static str, Vec<(f64, f64)>) {
        let cfg = self.cfg;
        match self.scenario {
            Scenario::EeSweep | Scenario::MuEeSweep => ("rho_w", cfg.sweeps.rho_w.iter().map(|&r| (r, r)).collect()),
            Scenario::PatternCompare => {
                let s = cfg.sweeps.pattern_snr_db;
                ("snr_db", vec![(s, cfg.rho_for_snr(s))])
            }
            _ => ("snr_db", cfg.sweeps.snr_db.iter().map(|&s| (s, cfg.rho_for_snr(s))).collect()),
        }
    }

    fn ee(&self, arch: Architecture, rate: f64, rho: f64, rf_chains: usize) -> Result<Option<f64>> {
        match arch {
            Architecture::FullDigital => Ok(None),
            Architecture::Hybrid(kind) => Ok(Some(energy_efficiency(
                rate,
                &self.cfg.power.with_transmit(rho),
                kind,
                self.cfg.dims.n_bs,
                rf_chains,
            )?)),
        }
    }

    fn run(&mut self) -> Result<()> {
        match self.scenario {
            Scenario::SuSweep | Scenario::EeSweep | Scenario::PatternCompare => self.point_to_point(),
            Scenario::MuSweep | Scenario::MuEeSweep => self.multi_user(),
            Scenario::UsersSweep => self.users(),
            Scenario::WidebandSweep => self.wideband(),
            Scenario::GapVerify => self.gap(),
        }
    }

    fn geometries(&self) -> Result<(ArrayGeometry, ArrayGeometry)> {
        Ok((
            ArrayGeometry::square_ish(self.cfg.dims.n_bs)?,
            ArrayGeometry::square_ish(self.cfg.dims.n_ms)?,
        ))
    }

    fn draw_channel(&self) -> Result<CMat> {
        let (tx, rx) = self.geometries()?;
        Ok(sample_channel(&tx, &rx, self.cfg.dims.paths, &mut self.channel_rng())?.matrix)
    }

    fn draw_users(&self, users: usize) -> Result<Vec<ChannelRealization>> {
        let (tx, rx) = self.geometries()?;
        let mut rng = self.channel_rng();
        (0..users)
            .map(|_| Ok(sample_channel(&tx, &rx, self.cfg.dims.paths, &mut rng)?))
            .collect()
    }

    fn point_to_point(&mut self) -> Result<()> {
        let h = self.draw_channel()?;
        let setup = self.cfg.link_setup()?;
        let sigma2 = self.cfg.sigma2();
        let (name, points) = self.points();
        let compare = self.scenario == Scenario::PatternCompare;
        for arch in self.cfg.architectures.clone() {
            let start = Instant::now();
            let link = design_link(&h, arch, &setup, &mut self.pattern_rng())?;
            let wall_ms = self.elapsed(start);
            for &(value, rho) in &points {
                let rate = link.rate(&h, rho, sigma2)?;
                let gap = if compare {
                    let eye = CMat::identity(setup.streams, setup.streams);
                    Some(bandwidth_efficiency(&h, &link.f_opt, &eye, &link.combiner, rho, sigma2)? - rate)
                } else {
                    None
                };
                let ee = self.ee(arch, rate, rho, setup.rf_chains)?;
                self.push(Row {
                    arch: arch.label(),
                    sweep_name: name,
                    sweep_value: value,
                    rate,
                    ee,
                    gap,
                    wall_ms,
                });
            }
        }
        Ok(())
    }

    fn multi_user(&mut self) -> Result<()> {
        let d = self.cfg.dims;
        let scene = MultiUserScene::new(self.draw_users(d.users)?, d.streams_per_user)?;
        let setup = self.cfg.mu_setup(d.mu_rf_chains)?;
        let sigma2 = self.cfg.sigma2();
        let (name, points) = self.points();
        for arch in self.cfg.architectures.clone() {
            let start = Instant::now();
            let p = design_mu(&scene, arch, &setup, &mut self.pattern_rng())?;
            let wall_ms = self.elapsed(start);
            for &(value, rho) in &points {
                let rate = mu_sum_rate(&scene, &p, rho, sigma2)?;
                let ee = self.ee(arch, rate, rho, d.mu_rf_chains)?;
                self.push(Row {
                    arch: arch.label(),
                    sweep_name: name,
                    sweep_value: value,
                    rate,
                    ee,
                    gap: None,
                    wall_ms,
                });
            }
        }
        Ok(())
    }

    fn users(&mut self) -> Result<()> {
        let sweeps = self.cfg.sweeps.clone();
        let max_users = sweeps.users.iter().copied().max().unwrap_or(1);
        let all = self.draw_users(max_users)?;
        let sigma2 = self.cfg.sigma2();
        let rho_rate = self.cfg.rho_for_snr(sweeps.users_snr_db);
        for &u in &sweeps.users {
            let scene = MultiUserScene::new(all[..u].to_vec(), sweeps.users_streams)?;
            let rf_chains = u * sweeps.users_streams;
            let setup = self.cfg.mu_setup(rf_chains)?;
            for arch in self.cfg.architectures.clone() {
                let start = Instant::now();
                let p = design_mu(&scene, arch, &setup, &mut self.pattern_rng())?;
                let wall_ms = self.elapsed(start);
                let rate = mu_sum_rate(&scene, &p, rho_rate, sigma2)?;
                let ee_rate = mu_sum_rate(&scene, &p, sweeps.users_rho_w, sigma2)?;
                let ee = self.ee(arch, ee_rate, sweeps.users_rho_w, rf_chains)?;
                self.push(Row {
                    arch: arch.label(),
                    sweep_name: "users",
                    sweep_value: u as f64,
                    rate,
                    ee,
                    gap: None,
                    wall_ms,
                });
            }
        }
        Ok(())
    }

    fn wideband(&mut self) -> Result<()> {
        let d = self.cfg.dims;
        let (tx, rx) = self.geometries()?;
        let channels =
            sample_wideband_channel(&tx, &rx, d.paths, d.subcarriers, d.cp_length, &mut self.channel_rng())?
                .per_subcarrier;
        let setup = self.cfg.link_setup()?;
        let sigma2 = self.cfg.sigma2();
        let (name, points) = self.points();
        for arch in self.cfg.architectures.clone() {
            let start = Instant::now();
            let design = design_wideband(&channels, arch, &setup, &mut self.pattern_rng())?;
            let wall_ms = self.elapsed(start);
            for &(value, rho) in &points {
                let rate = design.average_rate(&channels, rho, sigma2)?;
                let ee = self.ee(arch, rate, rho, setup.rf_chains)?;
                self.push(Row {
                    arch: arch.label(),
                    sweep_name: name,
                    sweep_value: value,
                    rate,
                    ee,
                    gap: None,
                    wall_ms,
                });
            }
        }
        Ok(())
    }

    fn gap(&mut self) -> Result<()> {
        let arch = Architecture::Hybrid(NetworkKind::Dynamic);
        let sigma2 = self.cfg.sigma2();
        let (name, points) = self.points();

        let h = self.draw_channel()?;
        let setup = self.cfg.link_setup()?;
        let start = Instant::now();
        let link = design_link(&h, arch, &setup, &mut self.pattern_rng())?;
        let wall_ms = self.elapsed(start);
        let eye = CMat::identity(setup.streams, setup.streams);
        for &(value, rho) in &points {
            let rate = link.rate(&h, rho, sigma2)?;
            let ideal = bandwidth_efficiency(&h, &link.f_opt, &eye, &link.combiner, rho, sigma2)?;
            let trace = gap_trace(
                &h,
                &link.combiner,
                &link.f_opt,
                &link.precoder(),
                rho,
                sigma2,
                &ReplacementOrder::ColumnMajor,
            )?;
            for (label, gap) in [("Gap-Simulation", ideal - rate), ("Gap-Theory", trace.total)] {
                self.push(Row {
                    arch: label,
                    sweep_name: name,
                    sweep_value: value,
                    rate,
                    ee: None,
                    gap: Some(gap),
                    wall_ms,
                });
            }
        }

        let d = self.cfg.dims;
        let scene = MultiUserScene::new(self.draw_users(d.users)?, d.streams_per_user)?;
        let start = Instant::now();
        let p = design_mu(&scene, arch, &self.cfg.mu_setup(d.mu_rf_chains)?, &mut self.pattern_rng())?;
        let wall_ms = self.elapsed(start);
        for &(value, rho) in &points {
            let rate = mu_sum_rate(&scene, &p, rho, sigma2)?;
            let trace = mu_gap_trace(&scene, &p, rho, sigma2)?;
            let simulated: f64 = trace.per_user.iter().map(|t| t.direct_gap()).sum();
            for (label, gap) in [("MU-Gap-Simulation", simulated), ("MU-Gap-Theory", trace.total)] {
                self.push(Row {
                    arch: label,
                    sweep_name: name,
                    sweep_value: value,
                    rate,
                    ee: None,
                    gap: Some(gap),
                    wall_ms,
                });
            }
        }
        Ok(())
    }
}
