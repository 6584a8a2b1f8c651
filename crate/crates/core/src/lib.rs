//! Hybrid precoding over twin-resolution phase-shifter networks for mmWave
//! MIMO links.
//!
//! The crate covers geometric channel generation, phase quantization and
//! shifter patterns, the greedy dynamic and fixed-pattern analog designs,
//! multi-user block diagonalization, the OFDM extension, and the
//! rate/energy/gap metrics used to compare architectures.
//!
//! ```
//! use rand::SeedableRng;
//! use twinshift_core::{design_link, sample_channel, ArrayGeometry, Architecture, LinkSetup, NetworkKind};
//!
//! let mut rng = rand::rngs::StdRng::seed_from_u64(7);
//! let tx = ArrayGeometry::half_wavelength(4, 4).unwrap();
//! let rx = ArrayGeometry::half_wavelength(4, 2).unwrap();
//! let channel = sample_channel(&tx, &rx, 4, &mut rng).unwrap();
//! let link = design_link(&channel.matrix, Architecture::Hybrid(NetworkKind::Dynamic), &LinkSetup::new(2, 2), &mut rng).unwrap();
//! let rate = link.rate(&channel.matrix, 10.0, 1.0).unwrap();
//! assert!(rate > 0.0);
//! ```

pub mod channel;
pub mod design;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod multiuser;
pub mod serial;
pub mod shifter;
pub mod wideband;

pub use channel::{
    sample_channel, sample_wideband_channel, upa_response, ArrayGeometry, ChannelRealization, ChannelRecord,
    PathParams, WidebandChannel,
};
pub use design::{
    analog_objective, compute_column_state, design_analog_dynamic, design_analog_fixed, design_digital, design_link,
    optimal_fully_digital, phi_max, AnalogPrecoder, Architecture, ColumnState, DesignOptions, DigitalPrecoder,
    FullyDigital, LinkDesign, LinkSetup,
};
pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use metrics::{
    bandwidth_efficiency, energy_efficiency, gap_trace, mu_gap_trace, mu_sum_rate, GapStep, GapTrace, MuGapTrace,
    PowerModel, ReplacementOrder,
};
pub use multiuser::{design_mu, rate_decomposition, MuPrecoderSet, MuSetup, MultiUserScene, RateDecomposition, TScaling};
pub use shifter::{
    build_fixed_pattern, quantize_phase, HighHalf, NetworkKind, PatternAssignment, QuantizerSpec, Resolution,
    ResolutionSet,
};
pub use wideband::{average_covariance, design_wideband, jensen_sides, WidebandDesign, WidebandDesignInput};
