//! The resource-sharing game.

mod allocation;
mod channel;
mod graph;
mod observe;
mod policy;
mod world;

pub use allocation::{allocate, is_greedy, reward, DEFAULT_R_MAX, DEFAULT_SOCIAL_WEIGHT, GREED_FRACTION};
pub use channel::{Channel, DelayModel, MAX_DELAY, MAX_LOSS};
pub use graph::Graph;
pub use observe::{observe, Observation};
pub use policy::{
    AgentPolicy, Learner, LearningMode, PolicyKind, FAILSAFE_CLIP, GRID_LEVELS, MIN_EXPLORATION,
    STATE_BUCKETS,
};
pub use world::{Script, StepControls, StepOutcome, World, WorldConfig};
