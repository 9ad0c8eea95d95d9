//! Online Granger-causal edge discovery.

pub(crate) mod linalg;
mod granger;
mod schedule;
mod tracker;

pub use granger::{
    granger_f_batch, granger_f_batch_ridge, GrangerState, DEFAULT_LAGS, DEFAULT_RIDGE,
    DEFAULT_WINDOW, F_SENTINEL,
};
pub use schedule::{h0_for_alpha, ThresholdSchedule};
pub use tracker::{CausalTracker, EdgeProposal, TrackerConfig, CAUSAL_HORIZON};
