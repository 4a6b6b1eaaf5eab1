//! Dual online gradient descent for max delivery and cost cap, per auction and
//! per mini-batch.

use crate::common::{AuctionOpportunity, StepSizeSchedule};
use crate::error::{invalid, Result};
use crate::pid::cost_cap_bid_per_click;

pub const LAMBDA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualState {
    pub lambda: f64,
    pub mu: f64,
    pub schedule: StepSizeSchedule,
    pub lambda_floor: f64,
    /// Divide gradients by B/T so one step size fits any budget scale.
    pub normalize: bool,
    /// Number of steps taken; the next step uses `schedule.value(step + 1)`.
    pub step: u64,
}

impl DualState {
    pub fn new(lambda: f64, schedule: StepSizeSchedule) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid("lambda must be positive and finite");
        }
        Ok(DualState { lambda, mu: 0.0, schedule, lambda_floor: LAMBDA_FLOOR, normalize: false, step: 0 })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return invalid("mu must be non-negative");
        }
        self.mu = mu;
        Ok(self)
    }

    pub fn normalized(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    pub(crate) fn next_eps(&mut self) -> f64 {
        self.step += 1;
        self.schedule.value(self.step)
    }

    pub(crate) fn scale(&self, budget: f64, horizon: f64) -> f64 {
        if self.normalize && budget > 0.0 {
            horizon / budget
        } else {
            1.0
        }
    }

    pub(crate) fn descend_lambda(&mut self, eps: f64, grad: f64) {
        self.lambda = (self.lambda - eps * grad).max(self.lambda_floor);
    }

    pub fn md_bid(&self, pctr: f64) -> f64 {
        pctr / self.lambda
    }

    pub fn costcap_bid_per_click(&self, cap: f64) -> f64 {
        cost_cap_bid_per_click(self.lambda, self.mu, cap)
    }
}

/// Outcome of one per-auction step. `bid` is the bid placed, computed with
/// the duals before the update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub bid: f64,
    pub won: bool,
    pub cost: f64,
}

fn check_scale(budget: f64, horizon: f64) -> Result<()> {
    if !(budget > 0.0 && horizon > 0.0) {
        return invalid("budget and horizon must be positive");
    }
    Ok(())
}

/// Per-auction max delivery: bid `r/lambda` into a second-price auction,
/// then `lambda <- max(floor, lambda - eps (B/T - 1{win} c))`.
pub fn dogd_md_step(state: &mut DualState, opp: &AuctionOpportunity, budget: f64, horizon: f64) -> Result<StepOutcome> {
    check_scale(budget, horizon)?;
    let bid = state.md_bid(opp.pctr);
    let won = opp.pctr > state.lambda * opp.competing_ecpm;
    let cost = if won { opp.competing_ecpm } else { 0.0 };
    dogd_md_observe(state, cost, budget, horizon)?;
    Ok(StepOutcome { bid, won, cost })
}

/// The lambda half of a max-delivery step, for callers that settle the
/// auction themselves. `cost` is 0 on a loss.
pub fn dogd_md_observe(state: &mut DualState, cost: f64, budget: f64, horizon: f64) -> Result<()> {
    check_scale(budget, horizon)?;
    let grad = (budget / horizon - cost) * state.scale(budget, horizon);
    let eps = state.next_eps();
    state.descend_lambda(eps, grad);
    Ok(())
}

/// Mini-batch max delivery: `lambda <- lambda - eps (R/T B - S)`; returns the new bid per click.
pub fn dogd_md_batch(state: &mut DualState, requests: f64, spend: f64, budget: f64, horizon: f64) -> Result<f64> {
    check_scale(budget, horizon)?;
    if !(requests >= 0.0 && spend >= 0.0) {
        return invalid("batch aggregates must be non-negative");
    }
    let grad = (requests / horizon * budget - spend) * state.scale(budget, horizon);
    let eps = state.next_eps();
    state.descend_lambda(eps, grad);
    Ok(1.0 / state.lambda)
}

/// Per-auction cost cap. Wins iff `r - lambda c - mu c + mu C r > 0`, i.e. the
/// bid `(1 + mu C)/(lambda + mu) r` beats `c`. Both duals take a projected step.
pub fn dogd_costcap_step(
    state: &mut DualState,
    opp: &AuctionOpportunity,
    budget: f64,
    horizon: f64,
    cap: f64,
) -> Result<StepOutcome> {
    check_scale(budget, horizon)?;
    if !(cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    let (r, c) = (opp.pctr, opp.competing_ecpm);
    let bid = state.costcap_bid_per_click(cap) * r;
    let won = r - state.lambda * c - state.mu * c + state.mu * cap * r > 0.0;
    let cost = if won { c } else { 0.0 };
    dogd_costcap_observe(state, won, r, cost, budget, horizon, cap)?;
    Ok(StepOutcome { bid, won, cost })
}

/// The dual half of a cost-cap step given a settled outcome.
pub fn dogd_costcap_observe(
    state: &mut DualState,
    won: bool,
    pctr: f64,
    cost: f64,
    budget: f64,
    horizon: f64,
    cap: f64,
) -> Result<()> {
    check_scale(budget, horizon)?;
    if !(cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    let scale = state.scale(budget, horizon);
    let grad_lambda = (budget / horizon - cost) * scale;
    let grad_mu = if won { (cap * pctr - cost) * scale } else { 0.0 };
    let eps = state.next_eps();
    state.descend_lambda(eps, grad_lambda);
    state.mu = (state.mu - eps * grad_mu).max(0.0);
    Ok(())
}

/// Mini-batch cost cap: `lambda <- lambda - eps (R/T B - S)`,
/// `mu <- max(0, mu - eps (C N - S))`. Returns the new bid per click.
pub fn dogd_costcap_batch(
    state: &mut DualState,
    requests: f64,
    spend: f64,
    conversions: f64,
    budget: f64,
    horizon: f64,
    cap: f64,
) -> Result<f64> {
    check_scale(budget, horizon)?;
    if !(cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    if !(requests >= 0.0 && spend >= 0.0 && conversions >= 0.0) {
        return invalid("batch aggregates must be non-negative");
    }
    let scale = state.scale(budget, horizon);
    let grad_lambda = (requests / horizon * budget - spend) * scale;
    let grad_mu = (cap * conversions - spend) * scale;
    let eps = state.next_eps();
    state.descend_lambda(eps, grad_lambda);
    state.mu = (state.mu - eps * grad_mu).max(0.0);
    Ok(state.costcap_bid_per_click(cap))
}

/// Spend and value from bidding `r/lambda` on every `(r, c)` of a frozen log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayTotals {
    pub spend: f64,
    pub value: f64,
    pub wins: usize,
}

/// The dual threshold rule `x = 1{r > lambda c}` applied to a frozen log.
pub fn threshold_replay(items: &[(f64, f64)], lambda: f64) -> ReplayTotals {
    let mut t = ReplayTotals { spend: 0.0, value: 0.0, wins: 0 };
    for &(r, c) in items {
        if r > lambda * c {
            t.spend += c;
            t.value += r;
            t.wins += 1;
        }
    }
    t
}
