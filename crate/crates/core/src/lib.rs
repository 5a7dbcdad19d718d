//! Outage thresholds for non-central chi-squared gains.
//!
//! Given `beta = sum_{k<K} alpha_k^2` with `alpha_k ~ N(mu_k, sigma^2)` and a
//! target outage probability `epsilon`, this crate computes
//!
//! * the exact threshold `beta_T` with `P(beta < beta_T) = epsilon`, by
//!   inverting the Marcum-Q-based CDF ([`ncx2`]);
//! * guaranteed lower bounds of `beta_T`: the Chernoff bound found by line
//!   search and the closed-form polynomial bound ([`bounds`]);
//! * the classical Gaussianizing approximations (Abdel-Aty first/closer,
//!   Sankaran z1/z2) for comparison ([`approx`]);
//! * the application: matched-filter beamforming-gain prediction under a
//!   first-order Markov time-varying MIMO channel, with power adaptation
//!   and a Monte-Carlo outage harness ([`mimo`]).
//!
//! Everything is deterministic given explicit seeds; the simulation
//! parallelizes across trials without changing results.

pub mod approx;
pub mod bounds;
pub mod error;
pub mod mimo;
pub mod ncx2;
pub mod special;

pub use approx::{approx_threshold, gaussian_q, gaussian_q_inv, hybrid_threshold, ApproxKind};
pub use bounds::{
    cher_lb, cher_lb_central, chernoff_inf_log, chernoff_s_log, nu_star, poly_lb, DeltaBeta,
    Method, ThresholdFlag, ThresholdResult,
};
pub use error::{Error, Result};
pub use mimo::{
    adapt_energy, doppler_rho, evolve_channel, gain_model, mf_beamformer, mrc_baseline_params,
    predict_gain_lb, run_outage_experiment, ChannelMatrix, ExperimentResult, GainModel,
    MarkovChannelConfig, OutageEstimate, SimConfig, SimMethod,
};
pub use ncx2::{marcum_q, NCX2Params, StandardizedParams};
