//! Probabilistic throttling: the bid stays fixed and the participation
//! probability tracks the spend target.

use crate::error::{invalid, Result};

pub const DEFAULT_ADJUST_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrottleState {
    pub p: f64,
    pub rate: f64,
}

impl ThrottleState {
    pub fn new(p: f64, rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid("participation probability must lie in [0,1]");
        }
        if !(rate > 0.0 && rate < 1.0) {
            return invalid("adjustment rate must lie in (0,1)");
        }
        Ok(ThrottleState { p, rate })
    }
}

/// Raise `p` by the adjustment rate when spend is at or under target, lower it otherwise.
pub fn throttle_update(state: &mut ThrottleState, spent: f64, target: f64) {
    state.p = if spent <= target {
        (state.p * (1.0 + state.rate)).min(1.0)
    } else {
        (state.p * (1.0 - state.rate)).max(0.0)
    };
}

/// Participate iff the uniform draw is at most `p`.
pub fn throttle_decide(state: &ThrottleState, u: f64) -> bool {
    u <= state.p
}

/// Probability of skipping a request as period spend nears its cap: 0 below
/// `trigger * limit`, linear up to 1 at the limit.
pub fn safeguard_probability(spent: f64, limit: f64, trigger: f64) -> f64 {
    if !(limit > 0.0) {
        return 1.0;
    }
    let start = trigger.clamp(0.0, 1.0) * limit;
    if spent >= limit {
        1.0
    } else if spent <= start {
        0.0
    } else {
        (spent - start) / (limit - start)
    }
}
