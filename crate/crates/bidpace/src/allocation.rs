//! Supply-proportional spend targets per bucket and their per-update slices.

use crate::common::PacingClock;
use crate::error::{invalid, Result};

/// Expected eligible requests per bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyForecast {
    nr: Vec<f64>,
}

impl SupplyForecast {
    pub fn new(nr: Vec<f64>) -> Result<Self> {
        if nr.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return invalid("supply forecast must be finite and non-negative");
        }
        if !(nr.iter().sum::<f64>() > 0.0) {
            return invalid("supply forecast sums to zero");
        }
        Ok(SupplyForecast { nr })
    }

    pub fn values(&self) -> &[f64] {
        &self.nr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpendPlan {
    pub targets: Vec<f64>,
}

/// `TS(t) = NR(t) / sum NR * B`.
pub fn allocate_targets(budget: f64, forecast: &SupplyForecast) -> Result<TargetSpendPlan> {
    if !(budget >= 0.0) {
        return invalid("budget must be non-negative");
    }
    let total: f64 = forecast.nr.iter().sum();
    if !(total > 0.0) {
        return invalid("supply forecast sums to zero");
    }
    Ok(TargetSpendPlan { targets: forecast.nr.iter().map(|n| n / total * budget).collect() })
}

/// Spend target for update interval `k`: `dt / dtau * TS(bucket of k)`.
pub fn interval_target(plan: &TargetSpendPlan, clock: &PacingClock, k: u64) -> Result<f64> {
    let bucket = match clock.bucket_of_interval(k) {
        Some(b) => b as usize,
        None => return invalid(format!("update interval {k} is past the end of day")),
    };
    match plan.targets.get(bucket) {
        Some(ts) => Ok(ts / clock.intervals_per_bucket() as f64),
        None => invalid(format!("no target for bucket {bucket}")),
    }
}
