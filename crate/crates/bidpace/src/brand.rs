//! Brand objectives: reach and frequency with per-user duals, the fixed
//! frequency special case, and guaranteed delivery.

use crate::common::StepSizeSchedule;
use crate::error::{invalid, Result};

pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Per-user frequency duals and bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserDuals {
    /// Upper-frequency dual.
    pub mu: f64,
    /// Lower-frequency dual.
    pub gamma: f64,
    /// Forecast requests from this user over the horizon.
    pub forecast: f64,
    /// Impressions delivered so far.
    pub impressions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnfState {
    pub lambda: f64,
    pub users: Vec<UserDuals>,
    pub f_lower: f64,
    pub f_upper: f64,
    pub schedule: StepSizeSchedule,
    pub step: u64,
}

impl RnfState {
    pub fn new(lambda: f64, forecasts: &[f64], f_lower: f64, f_upper: f64, schedule: StepSizeSchedule) -> Result<Self> {
        if !(lambda > 0.0) {
            return invalid("lambda must be positive");
        }
        if !(f_lower >= 0.0 && f_lower <= f_upper) {
            return invalid("frequency bounds need 0 <= F_l <= F_u");
        }
        if forecasts.iter().any(|t| !(*t > 0.0)) {
            return invalid("user forecasts must be positive");
        }
        let users = forecasts
            .iter()
            .map(|&forecast| UserDuals { mu: 0.0, gamma: 0.0, forecast, impressions: 0 })
            .collect();
        Ok(RnfState { lambda, users, f_lower, f_upper, schedule, step: 0 })
    }

    fn user(&self, m: usize) -> Result<&UserDuals> {
        self.users.get(m).map_or_else(|| invalid("unknown user"), Ok)
    }

    fn next_eps(&mut self) -> f64 {
        self.step += 1;
        self.schedule.value(self.step)
    }
}

/// `max(0, 1 - mu_m + gamma_m) / lambda`; zero once the user has reached `F_u`
/// impressions.
pub fn rnf_bid(state: &RnfState, m: usize) -> Result<f64> {
    let u = state.user(m)?;
    if u.impressions as f64 >= state.f_upper {
        return Ok(0.0);
    }
    Ok((1.0 - u.mu + u.gamma).max(0.0) / state.lambda)
}

/// One auction for user `m` with outcome `x` and cost `c` (paid only on a win):
///
/// - `lambda <- max(floor, lambda - eps (B/T - x c))`
/// - `mu_m <- max(0, mu_m - eps (F_u/T_m - x))`
/// - `gamma_m <- max(0, gamma_m - eps (x - F_l/T_m))`
///
/// Returns the user's next bid.
pub fn rnf_step(state: &mut RnfState, m: usize, cost: f64, won: bool, budget: f64, horizon: f64) -> Result<f64> {
    if !(budget >= 0.0 && horizon > 0.0) {
        return invalid("need budget >= 0 and horizon > 0");
    }
    if !(cost >= 0.0) {
        return invalid("cost must be non-negative");
    }
    state.user(m)?;
    let x = if won { 1.0 } else { 0.0 };
    let eps = state.next_eps();
    state.lambda = (state.lambda - eps * (budget / horizon - x * cost)).max(LAMBDA_FLOOR);
    let (fl, fu) = (state.f_lower, state.f_upper);
    let u = &mut state.users[m];
    u.mu = (u.mu - eps * (fu / u.forecast - x)).max(0.0);
    u.gamma = (u.gamma - eps * (x - fl / u.forecast)).max(0.0);
    if won {
        u.impressions += 1;
    }
    rnf_bid(state, m)
}

/// Per-user mini-batch aggregates: requests `R_m` and impressions `I_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserBatch {
    pub user: usize,
    pub requests: f64,
    pub impressions: f64,
}

/// Mini-batch update from group requests `R`, spend `S` and per-user aggregates.
pub fn rnf_batch(
    state: &mut RnfState,
    per_user: &[UserBatch],
    requests: f64,
    spend: f64,
    budget: f64,
    horizon: f64,
) -> Result<()> {
    if !(budget >= 0.0 && horizon > 0.0) {
        return invalid("need budget >= 0 and horizon > 0");
    }
    if !(requests >= 0.0 && spend >= 0.0) || per_user.iter().any(|b| !(b.requests >= 0.0 && b.impressions >= 0.0)) {
        return invalid("batch aggregates must be non-negative");
    }
    for b in per_user {
        state.user(b.user)?;
    }
    let eps = state.next_eps();
    state.lambda = (state.lambda - eps * (requests / horizon * budget - spend)).max(LAMBDA_FLOOR);
    let (fl, fu) = (state.f_lower, state.f_upper);
    for b in per_user {
        let u = &mut state.users[b.user];
        u.mu = (u.mu - eps * (b.requests / u.forecast * fu - b.impressions)).max(0.0);
        u.gamma = (u.gamma - eps * (b.impressions - b.requests / u.forecast * fl)).max(0.0);
        u.impressions += b.impressions.round() as u64;
    }
    Ok(())
}

/// Exact frequency target `F`: one unprojected dual per user.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedFreqState {
    pub lambda: f64,
    pub mus: Vec<f64>,
    pub forecasts: Vec<f64>,
    pub frequency: f64,
    pub schedule: StepSizeSchedule,
    pub step: u64,
}

impl FixedFreqState {
    pub fn new(lambda: f64, forecasts: &[f64], frequency: f64, schedule: StepSizeSchedule) -> Result<Self> {
        if !(lambda > 0.0) {
            return invalid("lambda must be positive");
        }
        if !(frequency >= 0.0) {
            return invalid("frequency must be non-negative");
        }
        if forecasts.iter().any(|t| !(*t > 0.0)) {
            return invalid("user forecasts must be positive");
        }
        Ok(FixedFreqState {
            lambda,
            mus: vec![0.0; forecasts.len()],
            forecasts: forecasts.to_vec(),
            frequency,
            schedule,
            step: 0,
        })
    }
}

/// `max(0, 1 - mu_m) / lambda`.
pub fn fixed_freq_bid(state: &FixedFreqState, m: usize) -> Result<f64> {
    match state.mus.get(m) {
        Some(mu) => Ok((1.0 - mu).max(0.0) / state.lambda),
        None => invalid("unknown user"),
    }
}

/// `mu_m <- mu_m - eps (F/T_m - x)` plus the usual lambda step; returns the next bid.
pub fn fixed_freq_step(state: &mut FixedFreqState, m: usize, cost: f64, won: bool, budget: f64, horizon: f64) -> Result<f64> {
    if m >= state.mus.len() {
        return invalid("unknown user");
    }
    if !(budget >= 0.0 && horizon > 0.0) {
        return invalid("need budget >= 0 and horizon > 0");
    }
    let x = if won { 1.0 } else { 0.0 };
    state.step += 1;
    let eps = state.schedule.value(state.step);
    state.lambda = (state.lambda - eps * (budget / horizon - x * cost)).max(LAMBDA_FLOOR);
    state.mus[m] -= eps * (state.frequency / state.forecasts[m] - x);
    fixed_freq_bid(state, m)
}

/// Guaranteed delivery: win at least `G` of `T` impressions at least cost.
/// `lambda` is both the dual price and the bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdState {
    pub lambda: f64,
    pub goal: f64,
    pub inventory: f64,
    pub schedule: StepSizeSchedule,
    pub step: u64,
}

impl GdState {
    pub fn new(lambda: f64, goal: f64, inventory: f64, schedule: StepSizeSchedule) -> Result<Self> {
        if !(lambda >= 0.0) {
            return invalid("lambda must be non-negative");
        }
        if !(inventory > 0.0 && goal >= 0.0 && goal <= inventory) {
            return invalid("need 0 <= G <= T with T > 0");
        }
        Ok(GdState { lambda, goal, inventory, schedule, step: 0 })
    }

    pub fn bid(&self) -> f64 {
        self.lambda
    }
}

/// Per-auction ascent: bid `lambda`, win iff `c < lambda`, then
/// `lambda <- max(0, lambda + eps (G/T - 1{c < lambda}))`. Returns whether it won.
pub fn gd_step(state: &mut GdState, competing: f64) -> bool {
    let won = competing < state.lambda;
    gd_observe(state, won);
    won
}

/// The ascent step alone, for callers that settle the auction themselves.
pub fn gd_observe(state: &mut GdState, won: bool) {
    state.step += 1;
    let eps = state.schedule.value(state.step);
    let x = if won { 1.0 } else { 0.0 };
    state.lambda = (state.lambda + eps * (state.goal / state.inventory - x)).max(0.0);
}

/// Batch ascent over `N` opportunities with `W` wins:
/// `lambda <- max(0, lambda + eps (G/T N - W))`.
pub fn gd_batch(state: &mut GdState, opportunities: f64, wins: f64) -> Result<f64> {
    if !(opportunities >= 0.0 && wins >= 0.0) {
        return invalid("batch aggregates must be non-negative");
    }
    state.step += 1;
    let eps = state.schedule.value(state.step);
    state.lambda = (state.lambda + eps * (state.goal / state.inventory * opportunities - wins)).max(0.0);
    Ok(state.lambda)
}
