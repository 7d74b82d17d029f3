//! Full-duplex NOMA links assisted by a simultaneously transmitting and
//! reflecting surface under the energy-splitting protocol.
//!
//! The crate covers cell geometry and expected path loss, channel sampling,
//! Monte Carlo and closed-form ergodic rates, and surface/power design.
// negated comparisons deliberately send NaN down the rejection branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]


pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod rates_cf;
pub mod rates_mc;
pub mod specfun;

pub use channel::{Direction, GeometryAngles, LosVectors, Side, StarRisState};
pub use config::{
    NoisePowers, PowerConfig, RicianFactors, Scenario, SelfInterference, Simplifications, SystemConfig, TargetRates,
    Weights,
};
pub use error::{Error, Result};
pub use geometry::{CellGeometry, Region, UserPosition};
pub use optimize::{
    aligned_state, pgam, power_allocation_closed_form, target_split_allocation, validate_constraints, ConstraintReport,
    LineSearch, OptimizationResult, PgamOptions, Termination,
};
pub use rates_cf::{CfModel, CfTerms, MomentSet};
pub use rates_mc::{ergodic_rate_mc, Estimator, FlowRates, RateReport, UserRates};
