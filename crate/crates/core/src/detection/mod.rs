//! Norm statistics, adaptive CUSUM detectors and alert arbitration.

mod allocator;
mod cusum;
mod stats;

pub use allocator::{Allocation, BudgetAllocator, DEFAULT_BUMP, DEFAULT_GLOBAL_BUDGET};
pub use cusum::{
    cusum_step, lorden_delay_bound, DetectorState, NormKind, NormSpec, TraceRecord,
    DEFAULT_GAIN_EXPONENT, DEFAULT_INITIAL_THRESHOLD, DEFAULT_NORM_ALPHA, DELAY_INFINITE, H_MIN,
};
pub use stats::{
    bin_of, collusion_pulse, gini, load_statistic, mutual_information, CollusionMonitor,
    DEFAULT_MI_BINS, DEFAULT_MI_WINDOW,
};
