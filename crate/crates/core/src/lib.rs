//! Dual-engine analysis of a device-to-device underlay in an uplink cellular
//! network with lognormal shadowing.
//!
//! The crate computes coverage probability and area spectral efficiency two
//! independent ways and cross-validates them:
//!
//! * **analytic** — closed-form mode/ distance laws plus characteristic-function
//!   inversion of the conditional 1/SINR law ([`equivalence`], [`coverage`]);
//! * **empirical** — a seeded Monte Carlo stochastic-geometry simulator that
//!   realizes the full network, applies mode selection, scheduling, pairing and
//!   power control, and measures SINR at typical receivers ([`sim`]).
//!
//! [`metrics`] turns coverage curves from either engine into ASE figures,
//! [`experiments`] drives the CSV-producing CLI experiments, and
//! [`validation`] runs the built-in cross-engine acceptance criteria.

pub mod coverage;
pub mod equivalence;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod oscint;
pub mod quad;
pub mod sim;
pub mod special;
pub mod validation;

pub use coverage::{
    cellular_charfn, coverage_cellular, coverage_curve_cellular, coverage_curve_d2d, coverage_d2d,
    d2d_charfn, invert_ccdf, CharacteristicFn, QuadratureSpec,
};
pub use equivalence::{
    cellular_overlap_prob, cu_mean_tx_power, d2d_distance_law, intensity_measure,
    mode_probability, serving_distance_law, DistanceLaw, ModeSplit,
};
pub use metrics::{ase_from_coverage, link_density, AseResult, CoverageCurve, Method};
pub use model::{
    cu_tx_power_mw, db_to_linear, dbm_to_mw, linear_to_db, mw_to_dbm, pathloss_db, rx_power_mw,
    sigma_natural, LinkBudget, LinkKind, Mode, NetworkConfig,
};
pub use sim::{
    assign_modes, measure_sinr, run_campaign, sample_deployment, schedule_and_pair, CampaignResult,
    Deployment, SinrSample,
};

/// Error type shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureConvergence { requested: f64, achieved: f64 },
    #[error("probability left [0,1] by {excursion:e} before clamping ({context})")]
    ProbabilityExcursion { excursion: f64, context: String },
    #[error("characteristic-function truncation bound insufficient: tail estimate {tail:e} above {budget:e}")]
    Truncation { tail: f64, budget: f64 },
    #[error("distribution law inconsistent: {0}")]
    Law(String),
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
