//! Deterministic marketplace simulator: seeded request streams and the loop
//! that bids, settles, and feeds interval aggregates back to a controller.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;

use crate::allocation::{allocate_targets, interval_target, SupplyForecast};
use crate::brand::{gd_observe, GdState};
use crate::common::{AuctionOpportunity, CampaignConfig, IntervalStats, Objective, PacingClock, SpendLedger, StepSizeSchedule};
use crate::dogd::{dogd_costcap_observe, dogd_md_batch, dogd_md_observe, DualState};
use crate::error::{invalid, Error, Result};
use crate::evenpacing::even_mpc_budget;
use crate::mpc::{curve_from_pairs, stabilize_bid, BidGrid, CurveMethod, DEFAULT_STABILITY_BAND};
use crate::pid::{dual_pid_step, pid_md_step, DualPidInput, DualPidState, PidGains, PidMdState};
use crate::throttle::{throttle_decide, throttle_update, ThrottleState};

/// Lognormal pCTR and competing-eCPM streams over a bucketed supply curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub pctr_mu: f64,
    pub pctr_sigma: f64,
    pub ecpm_mu: f64,
    pub ecpm_sigma: f64,
    /// Relative request volume per bucket.
    pub supply: Vec<f64>,
    /// Day length in seconds.
    pub end_of_day: f64,
    /// Competitors per GSP ladder; 0 for single-slot auctions.
    pub ladder_depth: usize,
    pub seed: u64,
}

/// Hourly diurnal pattern peaking mid-afternoon.
pub fn diurnal_supply() -> Vec<f64> {
    (0..24)
        .map(|h| 1.0 + 0.6 * (2.0 * std::f64::consts::PI * (h as f64 - 15.0) / 24.0).cos())
        .collect()
}

impl Default for MarketSpec {
    fn default() -> Self {
        MarketSpec {
            pctr_mu: 0.02f64.ln(),
            pctr_sigma: 0.5,
            ecpm_mu: 0.02f64.ln(),
            ecpm_sigma: 0.6,
            supply: diurnal_supply(),
            end_of_day: 86_400.0,
            ladder_depth: 0,
            seed: 7,
        }
    }
}

impl MarketSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.pctr_mu, self.pctr_sigma, self.ecpm_mu, self.ecpm_sigma].iter().all(|v| v.is_finite());
        if !finite || self.pctr_sigma < 0.0 || self.ecpm_sigma < 0.0 {
            return invalid("market distributions need finite parameters and sigma >= 0");
        }
        if !(self.end_of_day > 0.0) {
            return invalid("end of day must be positive");
        }
        SupplyForecast::new(self.supply.clone()).map(|_| ())
    }

    pub fn forecast(&self) -> Result<SupplyForecast> {
        SupplyForecast::new(self.supply.clone())
    }
}

fn lognormal(mu: f64, sigma: f64) -> Result<LogNormal<f64>> {
    LogNormal::new(mu, sigma).map_err(|e| Error::InvalidInput(format!("lognormal: {e}")))
}

/// `horizon` requests ordered by time. Each request picks a bucket in
/// proportion to supply and a uniform time inside it.
pub fn generate_stream(spec: &MarketSpec, horizon: u64) -> Result<Vec<AuctionOpportunity>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let buckets = WeightedIndex::new(&spec.supply).map_err(|e| Error::InvalidInput(format!("supply: {e}")))?;
    let pctr = lognormal(spec.pctr_mu, spec.pctr_sigma)?;
    let ecpm = lognormal(spec.ecpm_mu, spec.ecpm_sigma)?;
    let width = spec.end_of_day / spec.supply.len() as f64;
    let mut out = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        let b = buckets.sample(&mut rng);
        let time = (b as f64 + rng.random::<f64>()) * width;
        let r = pctr.sample(&mut rng).min(1.0);
        let mut opp = AuctionOpportunity::new(0, time.min(spec.end_of_day), r, 0.0);
        if spec.ladder_depth > 0 {
            let mut ladder: Vec<f64> = (0..spec.ladder_depth).map(|_| ecpm.sample(&mut rng)).collect();
            ladder.sort_by(|a, b| b.total_cmp(a));
            opp.competing_ecpm = ladder[0];
            opp.ecpm_ladder = Some(ladder);
        } else {
            opp.competing_ecpm = ecpm.sample(&mut rng);
        }
        out.push(opp);
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time));
    for (i, o) in out.iter_mut().enumerate() {
        o.index = i;
    }
    Ok(out)
}

/// Which controller drives the campaign, with its starting state.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    FixedBid { bid_per_click: f64 },
    Throttle { bid_per_click: f64, p0: f64, rate: f64 },
    PidMd { bid_per_click: f64, gains: PidGains },
    DogdMd { lambda0: f64, schedule: StepSizeSchedule, normalize: bool },
    DogdBatch { lambda0: f64, schedule: StepSizeSchedule, normalize: bool },
    DogdCostCap { lambda0: f64, mu0: f64, schedule: StepSizeSchedule, normalize: bool },
    DualPid { lambda0: f64, mu0: f64, gains_lambda: PidGains, gains_mu: PidGains },
    /// Refits a bid-to-spend-per-request curve each interval and inverts it.
    MpcMd { bid_per_click: f64, grid: BidGrid },
    /// Max-delivery dual steered by the per-period effective budget, with a
    /// hard stop once a period has spent `sigma B`.
    EvenMpc { lambda0: f64, schedule: StepSizeSchedule, periods: usize, sigma: f64 },
    GuaranteedDelivery { lambda0: f64, schedule: StepSizeSchedule },
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::FixedBid { .. } => "fixed",
            ControllerSpec::Throttle { .. } => "throttle",
            ControllerSpec::PidMd { .. } => "pid",
            ControllerSpec::DogdMd { .. } => "dogd",
            ControllerSpec::DogdBatch { .. } => "dogd-batch",
            ControllerSpec::DogdCostCap { .. } => "dogd-costcap",
            ControllerSpec::DualPid { .. } => "dual-pid",
            ControllerSpec::MpcMd { .. } => "mpc",
            ControllerSpec::EvenMpc { .. } => "even-mpc",
            ControllerSpec::GuaranteedDelivery { .. } => "gd",
        }
    }

    /// Rejects controller/objective pairs that do not fit.
    pub fn check_objective(&self, objective: &Objective) -> Result<()> {
        let ok = match self {
            ControllerSpec::DogdCostCap { .. } | ControllerSpec::DualPid { .. } => {
                matches!(objective, Objective::CostCap { .. } | Objective::TargetCpa { .. })
            }
            ControllerSpec::GuaranteedDelivery { .. } => matches!(objective, Objective::GuaranteedDelivery { .. }),
            _ => matches!(objective, Objective::MaxDelivery),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("controller {} does not support objective {objective:?}", self.name())))
        }
    }
}

/// One campaign in a run: settings, controller, and a multiplier on every bid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub campaign: CampaignConfig,
    pub controller: ControllerSpec,
    pub bid_multiplier: f64,
}

impl ArmSpec {
    pub fn new(campaign: CampaignConfig, controller: ControllerSpec) -> Self {
        ArmSpec { campaign, controller, bid_multiplier: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub arm: ArmSpec,
    pub market: MarketSpec,
    /// Bid update interval, seconds.
    pub dt: f64,
    /// Target bucket interval, seconds; one supply bucket each.
    pub dtau: f64,
}

impl SimConfig {
    pub fn clock(&self) -> Result<PacingClock> {
        let clock = PacingClock::new(self.dt, self.dtau, self.market.end_of_day)?;
        if clock.buckets() as usize != self.market.supply.len() {
            return Err(Error::Config(format!(
                "supply has {} buckets but the clock has {}",
                self.market.supply.len(),
                clock.buckets()
            )));
        }
        Ok(clock)
    }
}

/// One row per pacing interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub interval: u64,
    pub requests: u64,
    pub spend: f64,
    pub target_spend: f64,
    /// Bid per click in effect during the interval.
    pub bid_per_click: f64,
    pub lambda: f64,
    pub mu: f64,
    pub impressions: u64,
    pub conversions: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub budget: f64,
    pub spend: f64,
    pub utilization: f64,
    pub conversions: f64,
    pub impressions: u64,
    pub requests: u64,
    /// Spend per conversion; NaN without conversions.
    pub cost_per_conversion: f64,
    /// Most expensive single auction won.
    pub max_auction_cost: f64,
    pub final_bid_per_click: f64,
    pub final_lambda: f64,
    pub final_mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

enum Controller {
    Fixed { bid: f64 },
    Throttle { bid: f64, state: ThrottleState, rng: Box<ChaCha8Rng> },
    Pid { bid: f64, state: PidMdState },
    Dogd { state: DualState },
    DogdBatch { state: DualState },
    CostCap { state: DualState, cap: f64 },
    DualPid { state: DualPidState, cap: f64 },
    Mpc { bid: f64, grid: BidGrid, pairs: Vec<(f64, f64)> },
    Even { state: DualState, starts: Vec<f64>, sigma: f64, period_spend: Vec<f64>, target: f64 },
    Gd { state: GdState },
}

/// Per-arm constants the loop and controllers share.
struct Plan {
    budget: f64,
    horizon: f64,
    targets: Vec<f64>,
    /// Forecast requests per interval.
    supply: Vec<f64>,
    dt: f64,
}

impl Plan {
    fn remaining_supply(&self, from: usize, to: usize) -> f64 {
        self.supply[from.min(to)..to].iter().sum()
    }
}

fn period_index(starts: &[f64], time: f64) -> usize {
    starts.partition_point(|&s| s <= time).saturating_sub(1)
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{what} must be positive")))
    }
}

impl Controller {
    fn build(spec: &ControllerSpec, campaign: &CampaignConfig, clock: &PacingClock, seed: u64) -> Result<Self> {
        spec.check_objective(&campaign.objective)?;
        let cap = campaign.cap().unwrap_or(f64::INFINITY);
        Ok(match spec {
            ControllerSpec::FixedBid { bid_per_click } => Controller::Fixed { bid: *bid_per_click },
            ControllerSpec::Throttle { bid_per_click, p0, rate } => Controller::Throttle {
                bid: *bid_per_click,
                state: ThrottleState::new(*p0, *rate)?,
                rng: Box::new(ChaCha8Rng::seed_from_u64(seed)),
            },
            ControllerSpec::PidMd { bid_per_click, gains } => {
                Controller::Pid { bid: positive(*bid_per_click, "initial bid")?, state: PidMdState::new(*gains) }
            }
            ControllerSpec::DogdMd { lambda0, schedule, normalize } => {
                Controller::Dogd { state: DualState::new(*lambda0, *schedule)?.normalized(*normalize) }
            }
            ControllerSpec::DogdBatch { lambda0, schedule, normalize } => {
                Controller::DogdBatch { state: DualState::new(*lambda0, *schedule)?.normalized(*normalize) }
            }
            ControllerSpec::DogdCostCap { lambda0, mu0, schedule, normalize } => Controller::CostCap {
                state: DualState::new(*lambda0, *schedule)?.with_mu(*mu0)?.normalized(*normalize),
                cap,
            },
            ControllerSpec::DualPid { lambda0, mu0, gains_lambda, gains_mu } => {
                Controller::DualPid { state: DualPidState::new(*lambda0, *mu0, *gains_lambda, *gains_mu)?, cap }
            }
            ControllerSpec::MpcMd { bid_per_click, grid } => Controller::Mpc {
                bid: bid_per_click.clamp(grid.lo, grid.hi),
                grid: *grid,
                pairs: Vec::new(),
            },
            ControllerSpec::EvenMpc { lambda0, schedule, periods, sigma } => {
                if *periods == 0 || !(*sigma > 0.0 && *sigma <= 1.0) {
                    return Err(Error::Config("even pacing needs periods >= 1 and sigma in (0,1]".into()));
                }
                let len = clock.end_of_day() / *periods as f64;
                Controller::Even {
                    state: DualState::new(*lambda0, *schedule)?,
                    starts: (0..*periods).map(|i| i as f64 * len).collect(),
                    sigma: *sigma,
                    period_spend: vec![0.0; *periods],
                    target: 0.0,
                }
            }
            ControllerSpec::GuaranteedDelivery { lambda0, schedule } => {
                let goal = match campaign.objective {
                    Objective::GuaranteedDelivery { goal } => goal,
                    _ => unreachable!("checked above"),
                };
                Controller::Gd { state: GdState::new(*lambda0, goal, campaign.horizon as f64, *schedule)? }
            }
        })
    }

    fn bid_per_click(&self) -> f64 {
        match self {
            Controller::Fixed { bid } | Controller::Throttle { bid, .. } | Controller::Pid { bid, .. } | Controller::Mpc { bid, .. } => *bid,
            Controller::Dogd { state } | Controller::DogdBatch { state } | Controller::Even { state, .. } => 1.0 / state.lambda,
            Controller::CostCap { state, cap } => state.costcap_bid_per_click(*cap),
            Controller::DualPid { state, cap } => state.bid_per_click(*cap),
            Controller::Gd { state } => state.bid(),
        }
    }

    fn duals(&self) -> (f64, f64) {
        match self {
            Controller::Dogd { state } | Controller::DogdBatch { state } | Controller::CostCap { state, .. } | Controller::Even { state, .. } => {
                (state.lambda, state.mu)
            }
            Controller::DualPid { state, .. } => (state.lambda, state.mu),
            Controller::Gd { state } => (state.lambda, 0.0),
            _ => (0.0, 0.0),
        }
    }

    /// Bid per impression, or `None` to sit the auction out.
    fn impression_bid(&mut self, opp: &AuctionOpportunity) -> Option<f64> {
        match self {
            Controller::Throttle { bid, state, rng } => {
                let u: f64 = rng.random();
                throttle_decide(state, u).then_some(*bid * opp.pctr)
            }
            Controller::Even { state, .. } => Some(opp.pctr / state.lambda),
            Controller::Gd { state } => Some(state.bid()),
            other => Some(other.bid_per_click() * opp.pctr),
        }
    }

    fn after_auction(&mut self, opp: &AuctionOpportunity, won: bool, cost: f64, plan: &Plan) -> Result<()> {
        match self {
            Controller::Dogd { state } => dogd_md_observe(state, cost, plan.budget, plan.horizon),
            Controller::CostCap { state, cap } => {
                dogd_costcap_observe(state, won, opp.pctr, cost, plan.budget, plan.horizon, *cap)
            }
            Controller::Gd { state } => {
                gd_observe(state, won);
                Ok(())
            }
            Controller::Even { starts, period_spend, .. } => {
                period_spend[period_index(starts, opp.time)] += cost;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn after_interval(&mut self, k: usize, stats: &IntervalStats, spent: f64, plan: &Plan) -> Result<()> {
        let target = plan.targets[k];
        let n = plan.supply.len();
        match self {
            Controller::Throttle { state, .. } => throttle_update(state, stats.spend, target),
            Controller::Pid { bid, state } => {
                if target > 0.0 {
                    *bid = pid_md_step(state, stats.spend, target, *bid, 1.0)?;
                }
            }
            Controller::DogdBatch { state } => {
                dogd_md_batch(state, stats.requests as f64, stats.spend, plan.budget, plan.horizon)?;
            }
            Controller::DualPid { state, cap } => {
                let input = DualPidInput { spend: stats.spend, conversions: stats.conversions, target, cap: *cap, dt: 1.0 };
                dual_pid_step(state, &input);
            }
            Controller::Mpc { bid, grid, pairs } => {
                if stats.requests > 0 {
                    pairs.push((*bid, stats.spend / stats.requests as f64));
                }
                let ahead = plan.remaining_supply(k + 1, n);
                if ahead > 0.0 {
                    let desired = (plan.budget - spent).max(0.0) / ahead;
                    let distinct = pairs.iter().any(|p| p.0 != pairs[0].0);
                    let proposal = match (distinct, curve_from_pairs(pairs, CurveMethod::Pava)) {
                        (true, Ok(curve)) => curve.invert(desired),
                        _ => {
                            let last = pairs.last().map_or(0.0, |p| p.1);
                            *bid * if last < desired { 1.25 } else { 0.8 }
                        }
                    };
                    let proposal = if proposal.is_finite() { proposal } else { grid.hi };
                    *bid = stabilize_bid(*bid, proposal, DEFAULT_STABILITY_BAND).clamp(grid.lo, grid.hi);
                }
            }
            Controller::Even { state, starts, sigma, period_spend, target: pending } => {
                // Dual step on the interval's miss against its effective target,
                // scaled by the even per-interval budget.
                let unit = plan.budget / n as f64;
                let eps = state.next_eps();
                state.descend_lambda(eps, (*pending - stats.spend) / unit);
                *pending = even_target(k + 1, starts, *sigma, period_spend, spent, plan)?;
            }
            _ => {}
        }
        Ok(())
    }
}

/// Effective spend target for interval `k` under the period limits.
fn even_target(k: usize, starts: &[f64], sigma: f64, period_spend: &[f64], spent: f64, plan: &Plan) -> Result<f64> {
    let n = plan.supply.len();
    if k >= n {
        return Ok(0.0);
    }
    let p = period_index(starts, k as f64 * plan.dt);
    let period_end = (k..n).find(|&j| period_index(starts, j as f64 * plan.dt) != p).unwrap_or(n);
    let in_period = plan.remaining_supply(k, period_end);
    let overall = plan.remaining_supply(k, n);
    if !(in_period > 0.0 && overall > 0.0) {
        return Ok(0.0);
    }
    let weight = (in_period / overall).min(1.0);
    let remaining = (plan.budget - spent).max(0.0);
    let effective = even_mpc_budget(remaining, weight, sigma * plan.budget, period_spend[p])?;
    Ok(effective * plan.supply[k] / in_period)
}

struct ArmRun {
    controller: Controller,
    ledger: SpendLedger,
    plan: Plan,
    rows: Vec<TraceRow>,
    max_cost: f64,
    multiplier: f64,
}

impl ArmRun {
    fn close(&mut self, k: u64) -> Result<()> {
        let stats = self.ledger.close_interval();
        let (lambda, mu) = self.controller.duals();
        self.rows.push(TraceRow {
            interval: k,
            requests: stats.requests,
            spend: stats.spend,
            target_spend: self.plan.targets[k as usize],
            bid_per_click: self.controller.bid_per_click(),
            lambda,
            mu,
            impressions: stats.impressions,
            conversions: stats.conversions,
        });
        let spent = self.ledger.spend();
        self.controller.after_interval(k as usize, &stats, spent, &self.plan)
    }

    fn period_blocked(&self, opp: &AuctionOpportunity) -> bool {
        match &self.controller {
            Controller::Even { starts, sigma, period_spend, .. } => {
                period_spend[period_index(starts, opp.time)] >= *sigma * self.plan.budget
            }
            _ => false,
        }
    }

    fn report(self) -> RunReport {
        let rows = self.rows;
        let spend: f64 = rows.iter().map(|r| r.spend).sum();
        let conversions: f64 = rows.iter().map(|r| r.conversions).sum();
        let (lambda, mu) = self.controller.duals();
        let budget = self.plan.budget;
        let summary = RunSummary {
            budget,
            spend,
            utilization: if budget > 0.0 { spend / budget } else { 0.0 },
            conversions,
            impressions: rows.iter().map(|r| r.impressions).sum(),
            requests: rows.iter().map(|r| r.requests).sum(),
            cost_per_conversion: if conversions > 0.0 { spend / conversions } else { f64::NAN },
            max_auction_cost: self.max_cost,
            final_bid_per_click: self.controller.bid_per_click(),
            final_lambda: lambda,
            final_mu: mu,
        };
        RunReport { rows, summary }
    }
}

/// Runs several campaigns against one stream. Each auction goes to the
/// highest bid strictly above the competing eCPM (earlier arms win ties
/// between arms) at the second-highest price. A campaign stops bidding once
/// its spend reaches its budget, checked before each auction.
pub fn run_shared(arms: &[ArmSpec], stream: &[AuctionOpportunity], market: &MarketSpec, dt: f64, dtau: f64) -> Result<Vec<RunReport>> {
    let clock = PacingClock::new(dt, dtau, market.end_of_day)?;
    if clock.buckets() as usize != market.supply.len() {
        return Err(Error::Config(format!(
            "supply has {} buckets but the clock has {}",
            market.supply.len(),
            clock.buckets()
        )));
    }
    let forecast = market.forecast()?;
    let total_nr: f64 = forecast.values().iter().sum();
    let n_int = clock.intervals();
    let mut runs = Vec::with_capacity(arms.len());
    for (i, arm) in arms.iter().enumerate() {
        arm.campaign.validate()?;
        if !(arm.bid_multiplier > 0.0) {
            return Err(Error::Config("bid multiplier must be positive".into()));
        }
        let plan_targets = allocate_targets(arm.campaign.budget, &forecast)?;
        let targets = (0..n_int).map(|k| interval_target(&plan_targets, &clock, k)).collect::<Result<Vec<_>>>()?;
        let horizon = arm.campaign.horizon as f64;
        let supply = (0..n_int)
            .map(|k| {
                let b = clock.bucket_of_interval(k).unwrap_or(0) as usize;
                horizon * forecast.values()[b] / total_nr / clock.intervals_per_bucket() as f64
            })
            .collect();
        let plan = Plan { budget: arm.campaign.budget, horizon, targets, supply, dt };
        let seed = market.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1));
        let mut controller = Controller::build(&arm.controller, &arm.campaign, &clock, seed)?;
        if let Controller::Even { starts, sigma, period_spend, target, .. } = &mut controller {
            *target = even_target(0, starts, *sigma, period_spend, 0.0, &plan)?;
        }
        runs.push(ArmRun { controller, ledger: SpendLedger::new(), plan, rows: Vec::new(), max_cost: 0.0, multiplier: arm.bid_multiplier });
    }

    let mut current = 0u64;
    let mut bids: Vec<Option<f64>> = vec![None; runs.len()];
    for opp in stream {
        opp.validate()?;
        let k = clock.interval_of_time(opp.time);
        while current < k {
            for run in runs.iter_mut() {
                run.close(current)?;
            }
            current += 1;
        }
        for (run, bid) in runs.iter_mut().zip(bids.iter_mut()) {
            run.ledger.record(0.0, 0.0, 0, 1)?;
            *bid = if run.ledger.spend() >= run.plan.budget || run.period_blocked(opp) {
                None
            } else {
                run.controller.impression_bid(opp).map(|b| b * run.multiplier)
            };
        }
        let mut winner: Option<usize> = None;
        for (i, b) in bids.iter().enumerate() {
            if let Some(b) = b {
                if *b > opp.competing_ecpm && winner.is_none_or(|w| *b > bids[w].unwrap_or(0.0)) {
                    winner = Some(i);
                }
            }
        }
        let price = winner.map(|w| {
            bids.iter()
                .enumerate()
                .filter(|&(i, _)| i != w)
                .filter_map(|(_, b)| *b)
                .fold(opp.competing_ecpm, f64::max)
        });
        for (i, run) in runs.iter_mut().enumerate() {
            if bids[i].is_none() {
                continue;
            }
            let won = winner == Some(i);
            let cost = if won { price.unwrap_or(0.0) } else { 0.0 };
            if won {
                run.ledger.record(cost, opp.pctr, 1, 0)?;
                run.max_cost = run.max_cost.max(cost);
            }
            run.controller.after_auction(opp, won, cost, &run.plan)?;
        }
    }
    while current < n_int {
        for run in runs.iter_mut() {
            run.close(current)?;
        }
        current += 1;
    }
    Ok(runs.into_iter().map(ArmRun::report).collect())
}

/// One campaign on a given stream.
pub fn run_on_stream(config: &SimConfig, stream: &[AuctionOpportunity]) -> Result<RunReport> {
    config.clock()?;
    let mut reports = run_shared(std::slice::from_ref(&config.arm), stream, &config.market, config.dt, config.dtau)?;
    Ok(reports.remove(0))
}

/// Generates the market stream for the campaign horizon and runs it.
pub fn run_campaign(config: &SimConfig) -> Result<RunReport> {
    config.clock()?;
    let stream = generate_stream(&config.market, config.arm.campaign.horizon)?;
    run_on_stream(config, &stream)
}
