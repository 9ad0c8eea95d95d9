//! Accountability engine for networked multi-agent simulations.
//!
//! Agents' actions are committed to a hash-linked audit ledger, causal edges
//! between ledger events are discovered online, responsibility for each event
//! is attributed along discounted causal paths, norm drift is detected with
//! adaptive CUSUM detectors under a shared alert budget, and alarms are
//! answered with graded, reversible interventions.

pub mod attribution;
pub mod causal;
pub mod detection;
pub mod environment;
pub mod error;
pub mod harness;
pub mod hash;
pub mod intervention;
pub mod ledger;

pub use error::{Error, Result};
pub use hash::HashAlgorithm;
