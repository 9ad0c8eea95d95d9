use std::fmt;

use serde::{Deserialize, Serialize};

use crate::hash::HashAlgorithm;

/// Size of the canonical event encoding in bytes.
pub const EVENT_BYTES: usize = 40;

/// Fixed-point scale of the reward field (1/256 reward units per LSB).
pub const REWARD_SCALE: f64 = 256.0;

/// 64-bit event identifier: a truncation of the configured hash over the
/// canonical 40-byte encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventId(pub u64);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// One audit record.
///
/// Layout (little-endian): `[step:4][agent:2][obs:16][act:16][reward:2]`.
/// The reward is stored as saturating signed fixed point with 8 fractional
/// bits, so the in-memory value is exactly what the encoding carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub step: u32,
    pub agent: u16,
    pub obs_digest: [u8; 16],
    pub act_digest: [u8; 16],
    reward_fp: i16,
}

impl Event {
    /// Builds an event by digesting the raw payloads. Payloads of any length
    /// (including empty) are accepted.
    pub fn new(
        alg: HashAlgorithm,
        step: u32,
        agent: u16,
        obs_payload: &[u8],
        act_payload: &[u8],
        reward: f64,
    ) -> Self {
        Self::from_digests(
            step,
            agent,
            alg.digest16(obs_payload),
            alg.digest16(act_payload),
            reward,
        )
    }

    pub fn from_digests(
        step: u32,
        agent: u16,
        obs_digest: [u8; 16],
        act_digest: [u8; 16],
        reward: f64,
    ) -> Self {
        Event {
            step,
            agent,
            obs_digest,
            act_digest,
            reward_fp: encode_reward(reward),
        }
    }

    pub fn reward(&self) -> f64 {
        f64::from(self.reward_fp) / REWARD_SCALE
    }

    pub fn to_bytes(&self) -> [u8; EVENT_BYTES] {
        let mut out = [0u8; EVENT_BYTES];
        out[0..4].copy_from_slice(&self.step.to_le_bytes());
        out[4..6].copy_from_slice(&self.agent.to_le_bytes());
        out[6..22].copy_from_slice(&self.obs_digest);
        out[22..38].copy_from_slice(&self.act_digest);
        out[38..40].copy_from_slice(&self.reward_fp.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; EVENT_BYTES]) -> Self {
        let mut obs_digest = [0u8; 16];
        let mut act_digest = [0u8; 16];
        obs_digest.copy_from_slice(&bytes[6..22]);
        act_digest.copy_from_slice(&bytes[22..38]);
        Event {
            step: u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            agent: u16::from_le_bytes([bytes[4], bytes[5]]),
            obs_digest,
            act_digest,
            reward_fp: i16::from_le_bytes([bytes[38], bytes[39]]),
        }
    }

    pub fn id(&self, alg: HashAlgorithm) -> EventId {
        EventId(alg.digest64(&self.to_bytes()))
    }

    /// 16-byte digest committed as a Merkle leaf.
    pub fn digest(&self, alg: HashAlgorithm) -> [u8; 16] {
        alg.digest16(&self.to_bytes())
    }
}

fn encode_reward(reward: f64) -> i16 {
    if reward.is_nan() {
        return 0;
    }
    let scaled = (reward * REWARD_SCALE).round();
    scaled.clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}
