//! Achievable sum rates and degrees of freedom of the K-user interference
//! channel assisted by a single M-antenna decode-and-forward relay.
//!
//! * [`channel`]: network instances and the standard-form normalization.
//! * [`ratecore`]: log-det MAC capacities, capped polymatroid sum rates,
//!   broadcast sum capacity, SINR rates and the sum-DoF bound.
//! * [`beamform`]: relay zero-forcing beamformers with a fixed power budget.
//! * [`schemes`]: two-hop, block-Markov, half-duplex and relay-free baselines.
//! * [`dofest`]: SNR sweeps, slope estimation and Monte Carlo aggregation.

pub mod beamform;
pub mod channel;
pub mod dofest;
mod linalg;
pub mod ratecore;
pub mod schemes;

/// Complex baseband sample type used for all channel gains.
pub type C64 = nalgebra::Complex<f64>;

pub use beamform::{verify_beamformers, zf_beamformers, BeamformError, BeamformerSet, VerificationReport};
pub use channel::{
    generate_channels, paper_example_channels, standard_form, ChannelError, ChannelRealization, NetworkConfig,
    StandardForm,
};
pub use dofest::{estimate_dof, monte_carlo, snr_sweep, DofError, DofEstimate, MonteCarloResult, SweepCurve, SweepPoint};
pub use ratecore::{
    bc_sum_capacity, dof_upper_bound, mac_max_sum_with_caps, mac_subset_capacity, max_sum_with_caps, sinr_rate,
    MacRegion, RateAllocation, RateError,
};
pub use schemes::{
    block_markov_rates, cooperative_bc_sum_rate, eval_policy, half_duplex_rates, no_relay_tdm, no_relay_tin,
    two_hop_sum_rate, Combining, GainMode, PowerPolicy, PowerSplit, RateResult, Scheme, SchemeError, SchemeId,
};
