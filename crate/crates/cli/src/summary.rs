//! Per sweep point means with bootstrap confidence intervals.

use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::MetricRecord;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean of `values` with a percentile bootstrap 95% interval.
pub fn bootstrap_mean(values: &[f64], resamples: usize, rng: &mut impl Rng) -> Option<Interval> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (means.len() - 1) as f64).round() as usize).min(means.len() - 1)];
    Some(Interval {
        mean,
        lower: at(0.025),
        upper: at(0.975),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub arch: String,
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub rate: Interval,
    pub ee: Option<Interval>,
    pub gap: Option<Interval>,
}

/// Group rows by (scenario, arch, sweep point) in first-seen order of
/// architecture and ascending sweep value.
pub fn summarize(records: &[MetricRecord], seed: u64) -> Vec<SummaryRow> {
    let mut arch_order: Vec<&str> = Vec::new();
    for r in records {
        if !arch_order.contains(&r.arch.as_str()) {
            arch_order.push(&r.arch);
        }
    }
    let mut groups: BTreeMap<(usize, u64, &str, &str), Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        let a = arch_order.iter().position(|x| *x == r.arch).unwrap_or(usize::MAX);
        groups
            .entry((a, ordered_bits(r.sweep_value), &r.scenario, &r.sweep_name))
            .or_default()
            .push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let rate: Vec<f64> = rows.iter().map(|r| r.rate_bps_hz).collect();
            let ee: Vec<f64> = rows.iter().filter_map(|r| r.ee_bits_hz_j).collect();
            let gap: Vec<f64> = rows.iter().filter_map(|r| r.gap_bits).collect();
            SummaryRow {
                scenario: first.scenario.clone(),
                arch: first.arch.clone(),
                sweep_name: first.sweep_name.clone(),
                sweep_value: first.sweep_value,
                trials: rows.len(),
                rate: bootstrap_mean(&rate, BOOTSTRAP_RESAMPLES, &mut rng).expect("group is non-empty"),
                ee: bootstrap_mean(&ee, BOOTSTRAP_RESAMPLES, &mut rng),
                gap: bootstrap_mean(&gap, BOOTSTRAP_RESAMPLES, &mut rng),
            }
        })
        .collect()
}

/// Total order on finite floats as sortable integers.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "arch",
        "sweep_name",
        "sweep_value",
        "trials",
        "rate_mean",
        "rate_lo",
        "rate_hi",
        "ee_mean",
        "ee_lo",
        "ee_hi",
        "gap_mean",
        "gap_lo",
        "gap_hi",
    ])?;
    let cells = |i: Option<Interval>| match i {
        Some(i) => [i.mean.to_string(), i.lower.to_string(), i.upper.to_string()],
        None => Default::default(),
    };
    for r in rows {
        let mut rec = vec![
            r.scenario.clone(),
            r.arch.clone(),
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.trials.to_string(),
        ];
        rec.extend(cells(Some(r.rate)));
        rec.extend(cells(r.ee));
        rec.extend(cells(r.gap));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable table.
pub fn write_table<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "{:<18} {:>12} {:>6} {:>28} {:>28}",
        "arch", "sweep", "n", "rate [95% CI]", "ee [95% CI]"
    )?;
    let fmt = |i: Option<Interval>| match i {
        Some(i) => format!("{:.4} [{:.4}, {:.4}]", i.mean, i.lower, i.upper),
        None => "-".to_string(),
    };
    for r in rows {
        writeln!(
            out,
            "{:<18} {:>12} {:>6} {:>28} {:>28}",
            r.arch,
            format!("{}={}", r.sweep_name, r.sweep_value),
            r.trials,
            fmt(Some(r.rate)),
            fmt(r.ee)
        )?;
    }
    Ok(())
}
