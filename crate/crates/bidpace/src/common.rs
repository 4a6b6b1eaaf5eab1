//! Domain types shared by every controller: campaign settings, auction
//! requests, spend accounting, step sizes and the pacing clock.

use crate::error::{invalid, Result};

/// Campaign goal and the caps that come with it.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    MaxDelivery,
    CostCap { cap: f64 },
    TargetCpa { cap: f64, tolerance: f64 },
    ReachFrequency { f_lower: f64, f_upper: f64 },
    GuaranteedDelivery { goal: f64 },
    DeepRetention { cap: f64, deep_cap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Charging {
    /// Charged per impression, optimized for a downstream result.
    Ocpm,
    PerResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub id: String,
    pub budget: f64,
    /// Forecast number of auction opportunities.
    pub horizon: u64,
    pub objective: Objective,
    pub charging: Charging,
    /// Offsite margin.
    pub markup: f64,
}

impl CampaignConfig {
    pub fn new(id: impl Into<String>, budget: f64, horizon: u64, objective: Objective) -> Result<Self> {
        let cfg = CampaignConfig {
            id: id.into(),
            budget,
            horizon,
            objective,
            charging: Charging::Ocpm,
            markup: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget >= 0.0) || !self.budget.is_finite() {
            return invalid("budget must be finite and non-negative");
        }
        if self.horizon < 1 {
            return invalid("horizon must be at least 1");
        }
        if !(self.markup >= 0.0) {
            return invalid("markup must be non-negative");
        }
        match self.objective {
            Objective::MaxDelivery => {}
            Objective::CostCap { cap } => {
                if !(cap > 0.0) {
                    return invalid("cost cap must be positive");
                }
            }
            Objective::TargetCpa { cap, tolerance } => {
                if !(cap > 0.0) || !(0.0..=1.0).contains(&tolerance) {
                    return invalid("target CPA needs cap > 0 and tolerance in [0,1]");
                }
            }
            Objective::ReachFrequency { f_lower, f_upper } => {
                if !(0.0 <= f_lower && f_lower <= f_upper) {
                    return invalid("frequency bounds need 0 <= F_l <= F_u");
                }
            }
            Objective::GuaranteedDelivery { goal } => {
                if !(goal >= 0.0) || goal > self.horizon as f64 {
                    return invalid("delivery goal must lie in [0, horizon]");
                }
            }
            Objective::DeepRetention { cap, deep_cap } => {
                if !(cap > 0.0 && deep_cap > 0.0) {
                    return invalid("deep retention caps must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn cap(&self) -> Option<f64> {
        match self.objective {
            Objective::CostCap { cap }
            | Objective::TargetCpa { cap, .. }
            | Objective::DeepRetention { cap, .. } => Some(cap),
            _ => None,
        }
    }
}

/// One auction request as seen by a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOpportunity {
    pub index: usize,
    /// Seconds since campaign start.
    pub time: f64,
    pub pctr: f64,
    pub deep_rate: Option<f64>,
    /// Highest competing eCPM (per impression).
    pub competing_ecpm: f64,
    /// Top-k competing first-slot eCPMs, non-increasing.
    pub ecpm_ladder: Option<Vec<f64>>,
    /// 1 is onsite.
    pub channel: u32,
}

impl AuctionOpportunity {
    pub fn new(index: usize, time: f64, pctr: f64, competing_ecpm: f64) -> Self {
        AuctionOpportunity {
            index,
            time,
            pctr,
            deep_rate: None,
            competing_ecpm,
            ecpm_ladder: None,
            channel: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pctr) {
            return invalid("pctr must lie in [0,1]");
        }
        if let Some(d) = self.deep_rate {
            if !(0.0..=1.0).contains(&d) {
                return invalid("deep rate must lie in [0,1]");
            }
        }
        if !(self.competing_ecpm >= 0.0) {
            return invalid("competing eCPM must be non-negative");
        }
        if let Some(ladder) = &self.ecpm_ladder {
            if ladder.windows(2).any(|w| w[0] < w[1]) {
                return invalid("eCPM ladder must be non-increasing");
            }
        }
        Ok(())
    }
}

/// Aggregates for one pacing interval.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntervalStats {
    pub requests: u64,
    pub spend: f64,
    pub conversions: f64,
    pub impressions: u64,
}

/// Cumulative and per-interval spend accounting.
///
/// Cumulative spend is kept as the running sum of closed interval totals plus
/// the open interval, so summing the intervals in order reproduces it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpendLedger {
    closed: Vec<IntervalStats>,
    current: IntervalStats,
    closed_spend: f64,
    closed_conversions: f64,
    closed_impressions: u64,
    closed_requests: u64,
}

impl Default for SpendLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl SpendLedger {
    pub fn new() -> Self {
        SpendLedger {
            closed: Vec::new(),
            current: IntervalStats::default(),
            closed_spend: 0.0,
            closed_conversions: 0.0,
            closed_impressions: 0,
            closed_requests: 0,
        }
    }

    pub fn record(&mut self, spend: f64, conversions: f64, impressions: u64, requests: u64) -> Result<()> {
        if !(spend >= 0.0) || !(conversions >= 0.0) {
            return invalid("ledger deltas must be non-negative");
        }
        self.current.spend += spend;
        self.current.conversions += conversions;
        self.current.impressions += impressions;
        self.current.requests += requests;
        Ok(())
    }

    /// Closes the open interval and starts a new one; returns the closed stats.
    pub fn close_interval(&mut self) -> IntervalStats {
        let done = std::mem::take(&mut self.current);
        self.closed_spend += done.spend;
        self.closed_conversions += done.conversions;
        self.closed_impressions += done.impressions;
        self.closed_requests += done.requests;
        self.closed.push(done);
        done
    }

    pub fn spend(&self) -> f64 {
        self.closed_spend + self.current.spend
    }

    pub fn conversions(&self) -> f64 {
        self.closed_conversions + self.current.conversions
    }

    pub fn impressions(&self) -> u64 {
        self.closed_impressions + self.current.impressions
    }

    pub fn requests(&self) -> u64 {
        self.closed_requests + self.current.requests
    }

    pub fn current(&self) -> &IntervalStats {
        &self.current
    }

    pub fn closed_intervals(&self) -> &[IntervalStats] {
        &self.closed
    }

    /// Closed intervals followed by the open one.
    pub fn intervals(&self) -> Vec<IntervalStats> {
        let mut all = self.closed.clone();
        all.push(self.current);
        all
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizeSchedule {
    Constant { eps0: f64 },
    Harmonic { eps0: f64 },
}

impl StepSizeSchedule {
    pub fn new_constant(eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0) {
            return invalid("step size must be positive");
        }
        Ok(StepSizeSchedule::Constant { eps0 })
    }

    pub fn new_harmonic(eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0) {
            return invalid("step size must be positive");
        }
        Ok(StepSizeSchedule::Harmonic { eps0 })
    }

    /// Step size at ordinal `t` (1-based; 0 is read as 1).
    pub fn value(&self, t: u64) -> f64 {
        schedule_value(self, t)
    }
}

pub fn schedule_value(schedule: &StepSizeSchedule, t: u64) -> f64 {
    match *schedule {
        StepSizeSchedule::Constant { eps0 } => eps0,
        StepSizeSchedule::Harmonic { eps0 } => eps0 / t.max(1) as f64,
    }
}

/// Bid update interval `dt`, target bucket `dtau`, day length, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacingClock {
    dt: f64,
    dtau: f64,
    end_of_day: f64,
    per_bucket: u64,
    buckets: u64,
}

fn whole_ratio(num: f64, den: f64) -> Option<u64> {
    let q = num / den;
    let r = q.round();
    if r >= 1.0 && (q - r).abs() <= 1e-9 * r {
        Some(r as u64)
    } else {
        None
    }
}

impl PacingClock {
    pub fn new(dt: f64, dtau: f64, end_of_day: f64) -> Result<Self> {
        if !(dt > 0.0 && dtau > 0.0 && end_of_day > 0.0) {
            return invalid("clock intervals must be positive");
        }
        if dt > dtau {
            return invalid("update interval must not exceed the bucket interval");
        }
        let per_bucket = whole_ratio(dtau, dt).ok_or_else(|| {
            crate::Error::InvalidInput("update interval must divide the bucket interval".into())
        })?;
        let buckets = whole_ratio(end_of_day, dtau).ok_or_else(|| {
            crate::Error::InvalidInput("bucket interval must divide the day".into())
        })?;
        Ok(PacingClock { dt, dtau, end_of_day, per_bucket, buckets })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn end_of_day(&self) -> f64 {
        self.end_of_day
    }

    pub fn buckets(&self) -> u64 {
        self.buckets
    }

    pub fn intervals_per_bucket(&self) -> u64 {
        self.per_bucket
    }

    pub fn intervals(&self) -> u64 {
        self.per_bucket * self.buckets
    }

    pub fn bucket_of_interval(&self, k: u64) -> Option<u64> {
        (k < self.intervals()).then(|| k / self.per_bucket)
    }

    /// Update interval containing `time`; times at or past the end map to the last one.
    pub fn interval_of_time(&self, time: f64) -> u64 {
        let k = (time / self.dt).floor();
        if k < 0.0 {
            0
        } else {
            (k as u64).min(self.intervals() - 1)
        }
    }
}
