//! PID pacing: max-delivery bid modulation, the Cost-Min upper bound, the
//! dynamic bid cap and the dual-PID cost-cap controller.

use crate::common::SpendLedger;
use crate::error::{invalid, Result};

pub const DEFAULT_U_MAX: f64 = 0.5;
pub const DUAL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Saturation bound on the control signal.
    pub u_max: f64,
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64) -> Self {
        PidGains { kp, ki, kd, u_max: DEFAULT_U_MAX }
    }

    pub fn with_u_max(mut self, u_max: f64) -> Result<Self> {
        if !(u_max > 0.0) {
            return invalid("u_max must be positive");
        }
        self.u_max = u_max;
        Ok(self)
    }
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains::new(0.5, 0.05, 0.0)
    }
}

/// Running integral and last error of one control loop.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidChannel {
    pub cumulative_error: f64,
    pub previous_error: f64,
}

/// Discrete PID: `u = Kp e + Ki CE' + Kd (e - PE) / dt`, with `CE' = CE + e dt`.
/// The integral is held within `±10 u_max` and `u` within `±u_max`.
pub fn pid_control(gains: &PidGains, channel: &mut PidChannel, e: f64, dt: f64) -> f64 {
    let dt = if dt > 0.0 { dt } else { 1.0 };
    let bound = 10.0 * gains.u_max;
    channel.cumulative_error = (channel.cumulative_error + e * dt).clamp(-bound, bound);
    let derivative = (e - channel.previous_error) / dt;
    channel.previous_error = e;
    let u = gains.kp * e + gains.ki * channel.cumulative_error + gains.kd * derivative;
    u.clamp(-gains.u_max, gains.u_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidMdState {
    pub gains: PidGains,
    pub channel: PidChannel,
}

impl PidMdState {
    pub fn new(gains: PidGains) -> Self {
        PidMdState { gains, channel: PidChannel::default() }
    }
}

/// Max-delivery PID step on the normalized error `1 - r/s`; the bid moves by `exp(u)`.
pub fn pid_md_step(state: &mut PidMdState, observed: f64, target: f64, bid: f64, dt: f64) -> Result<f64> {
    if !(target > 0.0) {
        return invalid("interval spend target must be positive");
    }
    let e = 1.0 - observed / target;
    let u = pid_control(&state.gains, &mut state.channel, e, dt);
    Ok(bid * u.exp())
}

/// Cost-Min bid upper bound `(B - S) / ((B/C - N) * sigma)`. Infinite once the
/// conversion allowance `B/C` is used up.
pub fn cost_min_bound(budget: f64, cap: f64, ledger: &SpendLedger, second_price_ratio: f64) -> Result<f64> {
    if !(cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    if !(second_price_ratio > 0.0 && second_price_ratio <= 1.0) {
        return invalid("second price ratio must lie in (0,1]");
    }
    let remaining_conversions = budget / cap - ledger.conversions();
    if remaining_conversions <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((budget - ledger.spend()).max(0.0) / (remaining_conversions * second_price_ratio))
}

/// `u <- max(0, u - eps (CPA - C))`.
pub fn dynamic_cap_update(cap_u: f64, observed_cpa: f64, cap: f64, gain: f64) -> f64 {
    (cap_u - gain * (observed_cpa - cap)).max(0.0)
}

/// Bid per click for cost-cap duals: `(1 + mu C) / (lambda + mu)`.
pub fn cost_cap_bid_per_click(lambda: f64, mu: f64, cap: f64) -> f64 {
    (1.0 + mu * cap) / (lambda + mu).max(DUAL_FLOOR)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPidState {
    pub lambda: f64,
    pub mu: f64,
    pub gains_lambda: PidGains,
    pub gains_mu: PidGains,
    pub channel_lambda: PidChannel,
    pub channel_mu: PidChannel,
}

impl DualPidState {
    pub fn new(lambda: f64, mu: f64, gains_lambda: PidGains, gains_mu: PidGains) -> Result<Self> {
        if !(lambda > 0.0 && mu >= 0.0) {
            return invalid("duals need lambda > 0 and mu >= 0");
        }
        Ok(DualPidState {
            lambda,
            mu,
            gains_lambda,
            gains_mu,
            channel_lambda: PidChannel::default(),
            channel_mu: PidChannel::default(),
        })
    }

    pub fn bid_per_click(&self, cap: f64) -> f64 {
        cost_cap_bid_per_click(self.lambda, self.mu, cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPidInput {
    /// Spend observed in the interval.
    pub spend: f64,
    /// Conversions observed in the interval.
    pub conversions: f64,
    pub target: f64,
    pub cap: f64,
    pub dt: f64,
}

/// One dual-PID interval. `e_lambda = r - s`, `e_mu = C - r/n`; both duals move
/// by `exp(u)`. The mu loop is skipped when no conversions arrived. Returns the
/// new bid per click.
pub fn dual_pid_step(state: &mut DualPidState, input: &DualPidInput) -> f64 {
    let e_lambda = input.spend - input.target;
    let u = pid_control(&state.gains_lambda, &mut state.channel_lambda, e_lambda, input.dt);
    state.lambda = (state.lambda * u.exp()).max(DUAL_FLOOR);
    if input.conversions > 0.0 {
        let e_mu = input.cap - input.spend / input.conversions;
        let u = pid_control(&state.gains_mu, &mut state.channel_mu, e_mu, input.dt);
        state.mu = (state.mu.max(DUAL_FLOOR) * u.exp()).max(DUAL_FLOOR);
    }
    state.bid_per_click(input.cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pid_examples() {
        let mut ch = PidChannel::default();
        assert!((pid_control(&PidGains::new(1.0, 0.0, 0.0), &mut ch, 0.2, 1.0) - 0.2).abs() < 1e-15);

        let g = PidGains::new(0.0, 1.0, 0.0);
        let mut ch = PidChannel::default();
        pid_control(&g, &mut ch, 0.1, 1.0);
        assert!((pid_control(&g, &mut ch, 0.1, 1.0) - 0.2).abs() < 1e-15);

        let g = PidGains::new(1.0, 0.0, 0.0).with_u_max(1.0).unwrap();
        assert_eq!(pid_control(&g, &mut PidChannel::default(), 1e9, 1.0), 1.0);
    }

    #[test]
    fn md_step_error_sign() {
        let mut s = PidMdState::new(PidGains::new(1.0, 0.0, 0.0));
        assert_eq!(pid_md_step(&mut s, 10.0, 10.0, 2.0, 1.0).unwrap(), 2.0);
        let mut s = PidMdState::new(PidGains::new(1.0, 0.0, 0.0));
        let b = pid_md_step(&mut s, 12.0, 10.0, 2.0, 1.0).unwrap();
        assert!((b - 2.0 * (-0.2f64).exp()).abs() < 1e-12);
        let mut s = PidMdState::new(PidGains::new(1.0, 0.0, 0.0));
        assert!(pid_md_step(&mut s, 0.0, 10.0, 2.0, 1.0).unwrap() > 2.0);
        assert!(pid_md_step(&mut s, 0.0, 0.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn cost_min_examples() {
        let mut l = SpendLedger::new();
        l.record(40.0, 25.0, 0, 0).unwrap();
        assert!((cost_min_bound(100.0, 2.0, &l, 1.0).unwrap() - 2.4).abs() < 1e-12);
        assert!((cost_min_bound(100.0, 2.0, &l, 0.8).unwrap() - 3.0).abs() < 1e-12);
        let fresh = SpendLedger::new();
        assert!((cost_min_bound(100.0, 2.0, &fresh, 0.8).unwrap() - 2.5).abs() < 1e-12);
        let mut done = SpendLedger::new();
        done.record(90.0, 50.0, 0, 0).unwrap();
        assert!(cost_min_bound(100.0, 2.0, &done, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn dynamic_cap_examples() {
        assert_eq!(dynamic_cap_update(1.0, 2.0, 2.0, 0.1), 1.0);
        assert!((dynamic_cap_update(1.0, 2.5, 2.0, 0.1) - 0.95).abs() < 1e-12);
        assert_eq!(dynamic_cap_update(0.01, 10.0, 2.0, 0.1), 0.0);
    }

    #[test]
    fn dual_pid_examples() {
        let s = DualPidState::new(1.0, 0.5, PidGains::default(), PidGains::default()).unwrap();
        assert!((s.bid_per_click(2.0) * 0.1 - 0.1333333333333).abs() < 1e-12);

        let mut s = DualPidState::new(1.0, 0.5, PidGains::new(1.0, 0.0, 0.0), PidGains::new(1.0, 0.0, 0.0)).unwrap();
        dual_pid_step(&mut s, &DualPidInput { spend: 10.0, conversions: 5.0, target: 10.0, cap: 2.0, dt: 1.0 });
        assert_eq!((s.lambda, s.mu), (1.0, 0.5));

        dual_pid_step(&mut s, &DualPidInput { spend: 12.0, conversions: 0.0, target: 10.0, cap: 2.0, dt: 1.0 });
        assert_eq!(s.mu, 0.5);
        assert!(s.lambda > 1.0);
    }
}
