//! Graded corrective actions, escalation, failsafe and bounds.

mod bounds;
mod failsafe;
mod manager;
mod playbook;
mod throttle;

pub use bounds::{cost_bound, eta_star, lambda_min, DEFAULT_PATCH_COST, DEFAULT_THROTTLE_COST};
pub use failsafe::{CompromiseLedger, Failsafe, DEFAULT_MA_WINDOW, FAILSAFE_REGIONS, FAILSAFE_WINDOW};
pub use manager::{audit_event, CostTally, Supervisor, SupervisorConfig, TierCounts};
pub use playbook::{
    apply_policy_patch, apply_reward_shaping, plan_intervention, throttle_factor, Alarm, EscalationState,
    Intervention, InterventionKind, PlaybookParams, DEFAULT_TARGETS, DEFAULT_WINDOW, RECALCITRANCE_COUNT,
    RECALCITRANCE_WINDOW,
};
pub use throttle::ThrottleBook;
