//! Even pacing with intra-period spend limits: per-period duals on top of
//! the max-delivery dual, and the MPC effective-budget rule.

use crate::common::AuctionOpportunity;
use crate::dogd::{DualState, StepOutcome};
use crate::error::{invalid, Result};

/// Max-delivery dual plus one dual per period. Periods are given by their
/// start times; the first starts at 0 and the last runs to the end of day.
#[derive(Debug, Clone, PartialEq)]
pub struct IntraPeriodState {
    pub dual: DualState,
    pub period_lambdas: Vec<f64>,
    starts: Vec<f64>,
    /// Each period may spend at most `sigma B`.
    pub sigma: f64,
}

impl IntraPeriodState {
    pub fn new(dual: DualState, starts: Vec<f64>, sigma: f64) -> Result<Self> {
        if starts.first() != Some(&0.0) {
            return invalid("the first period must start at 0");
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("period starts must be strictly increasing");
        }
        if !(sigma > 0.0 && sigma <= 1.0) {
            return invalid("cap fraction must lie in (0,1]");
        }
        let n = starts.len();
        Ok(IntraPeriodState { dual, period_lambdas: vec![0.0; n], starts, sigma })
    }

    /// `n` equal periods over `[0, end_of_day)`.
    pub fn uniform(dual: DualState, periods: usize, end_of_day: f64, sigma: f64) -> Result<Self> {
        if periods == 0 || !(end_of_day > 0.0) {
            return invalid("need at least one period over a positive day");
        }
        let len = end_of_day / periods as f64;
        Self::new(dual, (0..periods).map(|i| i as f64 * len).collect(), sigma)
    }

    pub fn periods(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    /// Period containing `time`; times before 0 map to the first period.
    pub fn period_of(&self, time: f64) -> usize {
        self.starts.partition_point(|&s| s <= time).saturating_sub(1)
    }
}

/// `r / (lambda + lambda_i)`.
pub fn even_dogd_bid(state: &IntraPeriodState, period: usize, pctr: f64) -> f64 {
    pctr / (state.dual.lambda + state.period_lambdas[period])
}

/// Dual updates after an auction in `period` with spend `cost` (0 on a loss):
/// `lambda` takes the max-delivery step and
/// `lambda_i <- max(0, lambda_i - eps (sigma B/T - cost))`.
/// With `sigma = 1` the period limit is implied by the budget and the period
/// duals stay at zero.
pub fn even_dogd_update(state: &mut IntraPeriodState, period: usize, cost: f64, budget: f64, horizon: f64) -> Result<()> {
    if !(budget > 0.0 && horizon > 0.0) {
        return invalid("budget and horizon must be positive");
    }
    if period >= state.periods() {
        return invalid("unknown period");
    }
    let scale = state.dual.scale(budget, horizon);
    let eps = state.dual.next_eps();
    state.dual.descend_lambda(eps, (budget / horizon - cost) * scale);
    if state.sigma < 1.0 {
        let li = &mut state.period_lambdas[period];
        *li = (*li - eps * (state.sigma * budget / horizon - cost) * scale).max(0.0);
    }
    Ok(())
}

/// Bid, settle against the competing eCPM at second price, update.
pub fn even_dogd_step(state: &mut IntraPeriodState, opp: &AuctionOpportunity, budget: f64, horizon: f64) -> Result<StepOutcome> {
    let period = state.period_of(opp.time);
    let denom = state.dual.lambda + state.period_lambdas[period];
    let bid = opp.pctr / denom;
    let won = opp.pctr > denom * opp.competing_ecpm;
    let cost = if won { opp.competing_ecpm } else { 0.0 };
    even_dogd_update(state, period, cost, budget, horizon)?;
    Ok(StepOutcome { bid, won, cost })
}

/// Effective budget for the current period:
/// `min(weight B_rem, sigma B - spent_in_period)`, floored at 0. `weight` is
/// the period's share of the remaining lifetime.
pub fn even_mpc_budget(remaining_budget: f64, weight: f64, period_cap: f64, spent_in_period: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&weight) {
        return invalid("weight must lie in [0,1]");
    }
    if !(spent_in_period >= 0.0) || !(remaining_budget >= 0.0) || !(period_cap >= 0.0) {
        return invalid("budgets and spend must be non-negative");
    }
    Ok((weight * remaining_budget).min(period_cap - spent_in_period).max(0.0))
}
