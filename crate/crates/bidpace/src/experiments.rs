//! A/B statistics and the two experiment designs: budget split (each arm gets
//! half the budget and a random half of the requests) and campaign split
//! (arms share every auction and compete with each other).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::sim::{generate_stream, run_shared, ArmSpec, ControllerSpec, RunSummary, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation, `n - 1` denominator.
    pub sd: f64,
}

impl SampleSummary {
    pub fn new(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if n < 2 {
            return invalid("need at least two observations");
        }
        if !(sd >= 0.0) || !mean.is_finite() {
            return invalid("summary needs a finite mean and sd >= 0");
        }
        Ok(SampleSummary { n, mean, sd })
    }

    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return invalid("need at least two observations");
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        Self::new(xs.len(), mean, (ss / (n - 1.0)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub dof: f64,
}

/// Pooled two-sample t-statistic with `n_A + n_B - 2` degrees of freedom.
pub fn pooled_t(a: &SampleSummary, b: &SampleSummary) -> Result<TTest> {
    let (na, nb) = (a.n as f64, b.n as f64);
    let dof = na + nb - 2.0;
    let pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / dof;
    if !(pooled > 0.0) {
        return Err(Error::InvalidInput("pooled variance is zero".into()));
    }
    let se = pooled.sqrt() * (1.0 / na + 1.0 / nb).sqrt();
    Ok(TTest { t: (a.mean - b.mean) / se, dof })
}

fn students_t(dof: f64) -> Result<StudentsT> {
    if !(dof >= 1.0) {
        return invalid("degrees of freedom must be at least 1");
    }
    StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::InvalidInput(format!("t distribution: {e}")))
}

/// Two-sided critical value `t_{1 - alpha/2}`; infinite at `alpha = 0`.
/// Found by bisection on the CDF, since the library's inverse stalls for
/// large degrees of freedom.
pub fn critical_value(dof: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return invalid("alpha must lie in [0,1]");
    }
    let dist = students_t(dof)?;
    if alpha == 0.0 {
        return Ok(f64::INFINITY);
    }
    let tail = alpha / 2.0;
    let mut hi = 1.0;
    while dist.cdf(-hi) > tail {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist.cdf(-mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub p_value: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Reject the null iff `|t|` exceeds the two-sided critical value.
pub fn decide(t: f64, dof: f64, alpha: f64) -> Result<Decision> {
    let critical = critical_value(dof, alpha)?;
    let p_value = 2.0 * students_t(dof)?.cdf(-t.abs());
    Ok(Decision { p_value, critical, reject: t.abs() > critical })
}

/// One experiment arm: a controller and a multiplier on its bids.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub controller: ControllerSpec,
    pub bid_multiplier: f64,
}

impl Strategy {
    pub fn new(controller: ControllerSpec) -> Self {
        Strategy { controller, bid_multiplier: 1.0 }
    }

    pub fn scaled(controller: ControllerSpec, bid_multiplier: f64) -> Self {
        Strategy { controller, bid_multiplier }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub arm: String,
    pub replica: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<MetricRow>,
}

pub const METRICS: [&str; 5] = ["spend", "utilization", "conversions", "impressions", "cost_per_conversion"];

impl ExperimentResult {
    fn push_summary(&mut self, arm: &str, replica: usize, s: &RunSummary) {
        let values = [s.spend, s.utilization, s.conversions, s.impressions as f64, s.cost_per_conversion];
        for (metric, value) in METRICS.iter().zip(values) {
            self.rows.push(MetricRow { arm: arm.to_string(), replica, metric: metric.to_string(), value });
        }
    }

    /// Values of `metric` for `arm`, in replica order.
    pub fn samples(&self, arm: &str, metric: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.arm == arm && r.metric == metric).map(|r| r.value).collect()
    }

    /// Pooled t-test of arm A against arm B on one metric.
    pub fn t_test(&self, metric: &str) -> Result<TTest> {
        let a = SampleSummary::from_samples(&self.samples("A", metric))?;
        let b = SampleSummary::from_samples(&self.samples("B", metric))?;
        pooled_t(&a, &b)
    }
}

fn replica_seeds(seed: u64, replicas: usize) -> Result<Vec<(u64, u64)>> {
    if replicas < 2 {
        return invalid("need at least two replicas");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..replicas).map(|_| (rng.random(), rng.random())).collect())
}

fn arm(base: &SimConfig, s: &Strategy, budget: f64, horizon: u64) -> ArmSpec {
    let mut campaign = base.arm.campaign.clone();
    campaign.budget = budget;
    campaign.horizon = horizon.max(1);
    ArmSpec { campaign, controller: s.controller.clone(), bid_multiplier: s.bid_multiplier }
}

/// Budget split: per replica, a fresh market stream is routed request by
/// request to A or B with equal probability; each arm runs alone on its half
/// with half the budget.
pub fn budget_split_run(base: &SimConfig, a: &Strategy, b: &Strategy, replicas: usize, seed: u64) -> Result<ExperimentResult> {
    let horizon = base.arm.campaign.horizon;
    let half_budget = base.arm.campaign.budget / 2.0;
    let half_horizon = horizon.div_ceil(2);
    let mut out = ExperimentResult::default();
    for (replica, (market_seed, route_seed)) in replica_seeds(seed, replicas)?.into_iter().enumerate() {
        let mut market = base.market.clone();
        market.seed = market_seed;
        let stream = generate_stream(&market, horizon)?;
        let mut router = ChaCha8Rng::seed_from_u64(route_seed);
        let (mut sa, mut sb) = (Vec::new(), Vec::new());
        for opp in stream {
            if router.random::<f64>() < 0.5 {
                sa.push(opp);
            } else {
                sb.push(opp);
            }
        }
        let ra = run_shared(&[arm(base, a, half_budget, half_horizon)], &sa, &market, base.dt, base.dtau)?;
        let rb = run_shared(&[arm(base, b, half_budget, half_horizon)], &sb, &market, base.dt, base.dtau)?;
        out.push_summary("A", replica, &ra[0].summary);
        out.push_summary("B", replica, &rb[0].summary);
    }
    Ok(out)
}

/// Campaign split: both arms, each with half the budget, bid into every
/// auction of the same stream, so one arm's wins are the other's losses.
pub fn campaign_split_run(base: &SimConfig, a: &Strategy, b: &Strategy, replicas: usize, seed: u64) -> Result<ExperimentResult> {
    let horizon = base.arm.campaign.horizon;
    let half_budget = base.arm.campaign.budget / 2.0;
    let mut out = ExperimentResult::default();
    for (replica, (market_seed, order_seed)) in replica_seeds(seed, replicas)?.into_iter().enumerate() {
        let mut market = base.market.clone();
        market.seed = market_seed;
        let stream = generate_stream(&market, horizon)?;
        let arms = [arm(base, a, half_budget, horizon), arm(base, b, half_budget, horizon)];
        // Alternate which arm wins exact ties so neither is favoured.
        let swap = order_seed & 1 == 1;
        let ordered = if swap { [arms[1].clone(), arms[0].clone()] } else { arms };
        let reports = run_shared(&ordered, &stream, &market, base.dt, base.dtau)?;
        let (ra, rb) = if swap { (&reports[1], &reports[0]) } else { (&reports[0], &reports[1]) };
        out.push_summary("A", replica, &ra.summary);
        out.push_summary("B", replica, &rb.summary);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case() {
        let a = SampleSummary::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        let b = SampleSummary::from_samples(&[2.0, 3.0, 4.0]).unwrap();
        let t = pooled_t(&a, &b).unwrap();
        assert!((t.t + 1.224744871).abs() < 1e-8);
        assert_eq!(t.dof, 4.0);
        assert_eq!(pooled_t(&a, &a).unwrap().t, 0.0);
        let c = SampleSummary::from_samples(&[1.0, 1.0]).unwrap();
        assert!(pooled_t(&c, &c).is_err());
    }

    #[test]
    fn decisions() {
        assert!(!decide(0.0, 10.0, 0.5).unwrap().reject);
        assert!(decide(-2.98, 2e5 - 2.0, 0.05).unwrap().reject);
        assert!(!decide(100.0, 10.0, 0.0).unwrap().reject);
        assert!((critical_value(1e6, 0.05).unwrap() - 1.959964).abs() < 1e-4);
        assert!((critical_value(4.0, 0.05).unwrap() - 2.776445).abs() < 1e-5);
        let d = decide(2.776445, 4.0, 0.05).unwrap();
        assert!((d.p_value - 0.05).abs() < 1e-5);
    }
}
