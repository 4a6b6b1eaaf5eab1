//! Campaign groups sharing one budget, and multi-channel delivery across
//! onsite second-price and offsite first-price auctions.

use crate::common::AuctionOpportunity;
use crate::dogd::{dogd_md_batch, DualState, StepOutcome};
use crate::error::{invalid, Result};
use crate::mpc::{cost_feasible, BidGrid, MonotoneCurve};
use crate::shading::{solve_margin_bid, SolveOptions, WinProbModel};

/// Shared budget dual plus per-campaign duals for the group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupState {
    pub dual: DualState,
    pub mus: Vec<f64>,
    pub gammas: Vec<f64>,
    /// Forecast auction opportunities per campaign.
    pub forecasts: Vec<f64>,
    /// Minimum spend shares; sum at most 1.
    pub shares: Vec<f64>,
}

impl GroupState {
    pub fn new(dual: DualState, forecasts: Vec<f64>, shares: Vec<f64>) -> Result<Self> {
        if forecasts.is_empty() || forecasts.len() != shares.len() {
            return invalid("need one forecast and one share per campaign");
        }
        if forecasts.iter().any(|t| !(*t > 0.0)) {
            return invalid("forecasts must be positive");
        }
        if shares.iter().any(|s| !(*s >= 0.0)) {
            return invalid("shares must be non-negative");
        }
        if shares.iter().sum::<f64>() > 1.0 + 1e-12 {
            return invalid("minimum shares sum above 1");
        }
        let n = forecasts.len();
        Ok(GroupState { dual, mus: vec![0.0; n], gammas: vec![0.0; n], forecasts, shares })
    }

    pub fn len(&self) -> usize {
        self.forecasts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forecasts.is_empty()
    }

    pub fn total_forecast(&self) -> f64 {
        self.forecasts.iter().sum()
    }
}

/// Shared-lambda bid `r/lambda` for campaign `i`.
pub fn group_md_bid(state: &GroupState, campaign: usize, pctr: f64) -> Result<f64> {
    if campaign >= state.len() {
        return invalid("unknown campaign");
    }
    Ok(state.dual.md_bid(pctr))
}

/// Mini-batch update of the shared lambda from group-level aggregates.
pub fn group_md_update(state: &mut GroupState, requests: f64, spend: f64, budget: f64) -> Result<f64> {
    let horizon = state.total_forecast();
    dogd_md_batch(&mut state.dual, requests, spend, budget, horizon)
}

/// One campaign's fitted curves and progress inside a group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMember {
    pub spend_curve: MonotoneCurve,
    pub conversion_curve: MonotoneCurve,
    pub forecast: f64,
    pub cap: f64,
    pub spent: f64,
    pub conversions: f64,
}

/// Group cost-cap MPC. Each campaign's budget is its forecast share of `B`;
/// its horizon cap is `B_i,rem / (B_i / C_i - NC_i)`. Returns the largest grid
/// bid where the summed spend fits the group horizon budget
/// `horizon_requests / remaining_requests * B_rem` and every campaign meets
/// its cap; falls back to the lowest bid.
pub fn group_costcap_mpc(
    members: &[GroupMember],
    budget: f64,
    remaining_budget: f64,
    horizon_requests: f64,
    remaining_requests: f64,
    grid: &BidGrid,
) -> Result<f64> {
    if members.is_empty() {
        return invalid("empty group");
    }
    if members.iter().any(|m| !(m.cap > 0.0) || !(m.forecast > 0.0)) {
        return invalid("members need positive caps and forecasts");
    }
    let total: f64 = members.iter().map(|m| m.forecast).sum();
    let caps: Vec<f64> = members
        .iter()
        .map(|m| {
            let b_i = m.forecast / total * budget;
            let left = b_i / m.cap - m.conversions;
            if left > 0.0 {
                (b_i - m.spent) / left
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let group_h = if remaining_requests > 0.0 {
        horizon_requests / remaining_requests * remaining_budget
    } else {
        remaining_budget
    };
    let mut best = grid.lo;
    for b in grid.points() {
        let mut total_spend = 0.0;
        let mut ok = true;
        for (m, &cap) in members.iter().zip(&caps) {
            let (s, n) = (m.spend_curve.eval(b), m.conversion_curve.eval(b));
            total_spend += s;
            ok &= cost_feasible(s, n, cap);
        }
        if ok && total_spend <= group_h {
            best = b;
        }
    }
    Ok(best)
}

/// Minimum-delivery step for campaign `i`: bid `r / max(floor, lambda - gamma_i)`
/// into a second-price auction, then
/// `lambda <- lambda - eps (B/T - x c)` and
/// `gamma_i <- max(0, gamma_i - eps (x c - s_i B / T_i))`,
/// with `T` the group forecast.
pub fn group_min_delivery_step(
    state: &mut GroupState,
    campaign: usize,
    opp: &AuctionOpportunity,
    budget: f64,
) -> Result<StepOutcome> {
    if campaign >= state.len() {
        return invalid("unknown campaign");
    }
    if !(budget > 0.0) {
        return invalid("budget must be positive");
    }
    let denom = (state.dual.lambda - state.gammas[campaign]).max(state.dual.lambda_floor);
    let bid = opp.pctr / denom;
    let won = bid > opp.competing_ecpm;
    let cost = if won { opp.competing_ecpm } else { 0.0 };
    let horizon = state.total_forecast();
    let eps = state.dual.next_eps();
    state.dual.descend_lambda(eps, budget / horizon - cost);
    let floor_rate = state.shares[campaign] * budget / state.forecasts[campaign];
    state.gammas[campaign] = (state.gammas[campaign] - eps * (cost - floor_rate)).max(0.0);
    Ok(StepOutcome { bid, won, cost })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    /// Second-price onsite traffic, no markup.
    Onsite,
    /// First-price offsite exchange with a markup and a win model.
    Offsite { markup: f64, model: WinProbModel, features: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub id: u32,
    pub kind: ChannelKind,
}

impl ChannelSpec {
    pub fn onsite(id: u32) -> Self {
        ChannelSpec { id, kind: ChannelKind::Onsite }
    }

    pub fn offsite(id: u32, markup: f64, model: WinProbModel, features: Vec<f64>) -> Result<Self> {
        if !(markup >= 0.0) {
            return invalid("markup must be non-negative");
        }
        Ok(ChannelSpec { id, kind: ChannelKind::Offsite { markup, model, features } })
    }
}

/// Multi-channel step on one shared lambda. Onsite bids `r/lambda` and pays
/// the second price on a win; offsite solves `b + P/P' = r/(lambda (1+m))` and
/// books the expected cost `P(b) b (1+m)`. Then
/// `lambda <- max(floor, lambda - eps (B/T - cost))`.
pub fn multichannel_step(
    state: &mut DualState,
    budget: f64,
    horizon: f64,
    opp: &AuctionOpportunity,
    channel: &ChannelSpec,
    opts: &SolveOptions,
) -> Result<StepOutcome> {
    if !(budget > 0.0 && horizon > 0.0) {
        return invalid("budget and horizon must be positive");
    }
    let (bid, won, cost) = match &channel.kind {
        ChannelKind::Onsite => {
            let bid = state.md_bid(opp.pctr);
            let won = bid > opp.competing_ecpm;
            (bid, won, if won { opp.competing_ecpm } else { 0.0 })
        }
        ChannelKind::Offsite { markup, model, features } => {
            if !(opp.pctr > 0.0) {
                (0.0, false, 0.0)
            } else {
                // r/(lambda (1+m)) = 1/(lambda' (1+m)) with lambda' = lambda / r.
                let bid = solve_margin_bid(model, features, state.lambda / opp.pctr, *markup, opts)?;
                let (p, _) = model.eval(features, bid)?;
                (bid, opp.competing_ecpm < bid, p * bid * (1.0 + markup))
            }
        }
    };
    let eps = state.next_eps();
    state.descend_lambda(eps, (budget / horizon - cost) * state.scale(budget, horizon));
    Ok(StepOutcome { bid, won, cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::StepSizeSchedule;

    fn dual(lambda: f64) -> DualState {
        DualState::new(lambda, StepSizeSchedule::Constant { eps0: 0.1 }).unwrap()
    }

    #[test]
    fn md_bids_share_lambda() {
        let g = GroupState::new(dual(2.0), vec![10.0, 10.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(group_md_bid(&g, 0, 0.1).unwrap(), 0.05);
        assert_eq!(group_md_bid(&g, 1, 0.2).unwrap(), 0.1);
        let mut g = g;
        group_md_update(&mut g, 10.0, 5.0, 10.0).unwrap();
        assert_eq!(g.dual.lambda, 2.0);
    }

    #[test]
    fn shares_guard() {
        assert!(GroupState::new(dual(1.0), vec![1.0, 1.0], vec![0.6, 0.5]).is_err());
        assert!(GroupState::new(dual(1.0), vec![1.0, 1.0], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn min_delivery_bid() {
        let mut g = GroupState::new(dual(1.0), vec![100.0], vec![0.5]).unwrap();
        g.gammas[0] = 0.2;
        let out = group_min_delivery_step(&mut g, 0, &AuctionOpportunity::new(0, 0.0, 0.1, 1.0), 10.0).unwrap();
        assert!((out.bid - 0.125).abs() < 1e-12);

        let mut g = GroupState::new(dual(1.0), vec![100.0], vec![0.5]).unwrap();
        let out = group_min_delivery_step(&mut g, 0, &AuctionOpportunity::new(0, 0.0, 0.1, 0.01), 10.0).unwrap();
        assert_eq!(out.bid, 0.1);
        // Spent 0.01 against a floor rate of 0.5 * 10 / 100 = 0.05: gamma rises.
        assert!((g.gammas[0] - 0.1 * 0.04).abs() < 1e-12);

        let mut g = GroupState::new(dual(1.0), vec![100.0], vec![0.5]).unwrap();
        g.gammas[0] = 0.3;
        group_min_delivery_step(&mut g, 0, &AuctionOpportunity::new(0, 0.0, 0.1, 0.05), 10.0).unwrap();
        assert_eq!(g.gammas[0], 0.3);
    }

    #[test]
    fn multichannel_bids() {
        let mut s = dual(2.0);
        let opts = SolveOptions::default();
        let out = multichannel_step(&mut s, 1.0, 10.0, &AuctionOpportunity::new(0, 0.0, 0.1, 1.0), &ChannelSpec::onsite(1), &opts).unwrap();
        assert_eq!(out.bid, 0.05);

        // r / (lambda (1+m)) = 0.5 / (0.125 * 2) = 2.
        let model = WinProbModel::new(0.0, vec![], 1.0).unwrap();
        let ch = ChannelSpec::offsite(2, 1.0, model, vec![]).unwrap();
        let mut s = dual(0.125);
        let out = multichannel_step(&mut s, 1.0, 10.0, &AuctionOpportunity::new(0, 0.0, 0.5, 1.0), &ch, &opts).unwrap();
        assert!((out.bid - (3f64.sqrt() - 1.0)).abs() < 1e-6);
    }
}
