//! Deep-funnel bidding: the three-multiplier PID controller, the deep
//! adjustment variant, predicted cost-per-result estimates, and GSP replay
//! curves for bid-to-cost and bid-to-conversion prediction.

use crate::auctions::SlotConfig;
use crate::error::{invalid, Result};
use crate::mpc::BidGrid;
use crate::pid::{pid_control, PidChannel, PidGains};

/// Delivery multiplier `alpha` and cost multipliers `beta_1` (shallow) and
/// `beta_2` (deep), each driven by its own PID loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepPidState {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gains: [PidGains; 3],
    pub channels: [PidChannel; 3],
}

impl DeepPidState {
    pub fn new(alpha: f64, beta1: f64, beta2: f64, gains: PidGains) -> Result<Self> {
        if !(alpha > 0.0 && beta1 > 0.0 && beta2 > 0.0) {
            return invalid("multipliers must be positive");
        }
        Ok(DeepPidState { alpha, beta1, beta2, gains: [gains; 3], channels: [PidChannel::default(); 3] })
    }
}

/// `alpha (beta_1 C r + beta_2 D d r)`.
pub fn deep_bid(state: &DeepPidState, cap: f64, deep_cap: f64, r: f64, d: f64) -> f64 {
    state.alpha * (state.beta1 * cap * r + state.beta2 * deep_cap * d * r)
}

/// Observations for one update. A `None` cost estimate freezes that loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepObservation {
    pub spend: f64,
    pub cost_per_result: Option<f64>,
    pub cost_per_deep: Option<f64>,
}

/// Targets: interval spend `B/T N`, cost cap `C` and deep cap `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepTargets {
    pub spend: f64,
    pub cap: f64,
    pub deep_cap: f64,
}

/// One update with errors `1 - S/target`, `1 - C_obs/C`, `1 - D_obs/D`;
/// each multiplier is scaled by `exp(u)`.
pub fn deep_pid_update(state: &mut DeepPidState, obs: &DeepObservation, targets: &DeepTargets) -> Result<()> {
    if !(targets.spend > 0.0 && targets.cap > 0.0 && targets.deep_cap > 0.0) {
        return invalid("targets must be positive");
    }
    let errors = [
        Some(1.0 - obs.spend / targets.spend),
        obs.cost_per_result.map(|c| 1.0 - c / targets.cap),
        obs.cost_per_deep.map(|d| 1.0 - d / targets.deep_cap),
    ];
    let mut factors = [1.0; 3];
    for (i, e) in errors.iter().enumerate() {
        if let Some(e) = e {
            factors[i] = pid_control(&state.gains[i], &mut state.channels[i], *e, 1.0).exp();
        }
    }
    state.alpha *= factors[0];
    state.beta1 *= factors[1];
    state.beta2 *= factors[2];
    Ok(())
}

/// `alpha beta_1 C r max(0, 1 + beta_2 (d / (C/D) - 1))`.
pub fn variant_bid(state: &DeepPidState, cap: f64, deep_cap: f64, r: f64, d: f64, beta2: f64) -> Result<f64> {
    if !(cap > 0.0 && deep_cap > 0.0) {
        return invalid("caps must be positive");
    }
    let target_rate = cap / deep_cap;
    let factor = (1.0 + beta2 * (d / target_rate - 1.0)).max(0.0);
    Ok(state.alpha * state.beta1 * cap * r * factor)
}

/// Smoothed cost per result `sum c / sum r` and per deep result
/// `sum c / sum r d` over won auctions `(c, r, d)`. `None` when a denominator
/// is zero.
pub fn predicted_cpx(won: &[(f64, f64, f64)]) -> (Option<f64>, Option<f64>) {
    let (mut c, mut r, mut rd) = (0.0, 0.0, 0.0);
    for &(ct, rt, dt) in won {
        c += ct;
        r += rt;
        rd += rt * dt;
    }
    let ratio = |den: f64| if den > 0.0 { Some(c / den) } else { None };
    (ratio(r), ratio(rd))
}

/// One logged GSP auction: the campaign's pCTR and the competitors'
/// first-slot eCPMs, non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct GspLogEntry {
    pub pctr: f64,
    pub ladder: Vec<f64>,
}

impl GspLogEntry {
    pub fn new(pctr: f64, ladder: Vec<f64>) -> Result<Self> {
        if ladder.is_empty() {
            return invalid("ladder must not be empty");
        }
        if ladder.windows(2).any(|w| w[0] < w[1]) {
            return invalid("ladder must be sorted non-increasing");
        }
        Ok(GspLogEntry { pctr, ladder })
    }

    /// 0-based slot won with eCPM `e`, if any. Ties with the last rung win.
    pub fn slot(&self, ecpm: f64) -> Option<usize> {
        let last = *self.ladder.last()?;
        if ecpm >= last {
            Some(self.ladder.iter().take_while(|&&l| l > ecpm).count())
        } else {
            None
        }
    }
}

fn replay_curve(log: &[GspLogEntry], slots: &SlotConfig, grid: &BidGrid, cost: bool) -> Result<Vec<(f64, f64)>> {
    for e in log {
        if e.ladder.windows(2).any(|w| w[0] < w[1]) {
            return invalid("ladder must be sorted non-increasing");
        }
    }
    Ok(grid
        .points()
        .into_iter()
        .map(|b| {
            let total = log
                .iter()
                .filter_map(|e| {
                    let j = e.slot(b * e.pctr)?;
                    let a = slots.alpha(j);
                    Some(if cost { e.ladder[j] * a } else { e.pctr * a })
                })
                .sum();
            (b, total)
        })
        .collect())
}

/// Replayed spend `f(b)` at each grid bid.
pub fn bid_cost_curve(log: &[GspLogEntry], slots: &SlotConfig, grid: &BidGrid) -> Result<Vec<(f64, f64)>> {
    replay_curve(log, slots, grid, true)
}

/// Replayed position-adjusted conversions `g(b)` at each grid bid.
pub fn bid_conversion_curve(log: &[GspLogEntry], slots: &SlotConfig, grid: &BidGrid) -> Result<Vec<(f64, f64)>> {
    replay_curve(log, slots, grid, false)
}
