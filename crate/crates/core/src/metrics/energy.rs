use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shifter::NetworkKind;

/// Component power draws in watts, plus transmit and noise power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerModel {
    pub high_shifter: f64,
    pub moderate_shifter: f64,
    pub low_shifter: f64,
    pub switch: f64,
    pub baseband: f64,
    pub rf_chain: f64,
    pub transmit: f64,
    pub noise: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            high_shifter: 0.015,
            moderate_shifter: 0.014,
            low_shifter: 0.010,
            switch: 0.001,
            baseband: 0.250,
            rf_chain: 0.300,
            transmit: 1.0,
            noise: 1.0,
        }
    }
}

impl PowerModel {
    pub fn with_transmit(mut self, rho: f64) -> Self {
        self.transmit = rho;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.high_shifter,
            self.moderate_shifter,
            self.low_shifter,
            self.switch,
            self.baseband,
            self.rf_chain,
            self.transmit,
            self.noise,
        ];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("power model entries must be nonnegative".into()));
        }
        Ok(())
    }

    /// Total consumed power of a hybrid transmitter with `rf_chains` chains,
    /// each driving `n_bs` shifters.
    ///
    /// Twin networks split the shifters evenly between high and low
    /// resolution; only the dynamic network pays for its `n_bs · rf_chains`
    /// active mapper switches.
    pub fn consumption(&self, kind: NetworkKind, n_bs: usize, rf_chains: usize) -> f64 {
        let shifters = (n_bs * rf_chains) as f64;
        let common = self.transmit + self.baseband + rf_chains as f64 * self.rf_chain;
        let network = match kind {
            NetworkKind::UniformHigh => shifters * self.high_shifter,
            NetworkKind::UniformModerate => shifters * self.moderate_shifter,
            NetworkKind::UniformLow => shifters * self.low_shifter,
            NetworkKind::Dynamic => {
                shifters / 2.0 * (self.high_shifter + self.low_shifter) + shifters * self.switch
            }
            _ => shifters / 2.0 * (self.high_shifter + self.low_shifter),
        };
        common + network
    }
}

/// Bits/Hz/J for a rate achieved by architecture `kind`. For multi-user
/// systems pass `rf_chains = U · M_s`.
pub fn energy_efficiency(
    rate: f64,
    model: &PowerModel,
    kind: NetworkKind,
    n_bs: usize,
    rf_chains: usize,
) -> Result<f64> {
    if rate.is_nan() || rate < 0.0 {
        return Err(Error::InvalidArgument(format!("rate must be nonnegative, got {rate}")));
    }
    model.validate()?;
    let power = model.consumption(kind, n_bs, rf_chains);
    if power <= 0.0 {
        return Err(Error::InvalidArgument("total consumed power is zero".into()));
    }
    Ok(rate / power)
}
