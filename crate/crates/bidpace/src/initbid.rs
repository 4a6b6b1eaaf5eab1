//! Initial bids: the double-lognormal closed form, cost-cap capping, auction
//! replay, and averaging a converged stretch of past bids.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};

/// Clearing price `Z ~ LN(mu, sigma)`, conversion factor `R ~ LN(mu_p, sigma_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma: f64,
    pub mu_p: f64,
    pub sigma_p: f64,
}

impl LognormalParams {
    pub fn new(mu: f64, sigma: f64, mu_p: f64, sigma_p: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma_p >= 0.0) || ![mu, sigma, mu_p, sigma_p].iter().all(|v| v.is_finite()) {
            return invalid("lognormal parameters need finite values and sigma >= 0");
        }
        Ok(LognormalParams { mu, sigma, mu_p, sigma_p })
    }

    /// `E[Z] = exp(mu + sigma^2 / 2)`.
    pub fn mean_price(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }
}

pub fn std_normal_inverse_cdf(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Bid per conversion whose expected second-price cost per auction is `B/T`:
/// `ln b* = mu - mu' + sigma^2 + sqrt(sigma'^2 + sigma^2) Phi^{-1}(B / (T E[Z]))`.
pub fn init_bid_parametric(params: &LognormalParams, budget: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return invalid("horizon must be positive");
    }
    let rhs = budget / (horizon * params.mean_price());
    if !(rhs > 0.0 && rhs < 1.0) {
        return Err(Error::Infeasible(format!(
            "budget share {rhs} of the expected market cost is outside (0,1)"
        )));
    }
    let (s, sp) = (params.sigma, params.sigma_p);
    let spread = (sp * sp + s * s).sqrt();
    let z = std_normal_inverse_cdf(rhs);
    Ok((params.mu - params.mu_p + s * s + spread * z).exp())
}

/// `min(b*, C / sigma)` where sigma is the typical second-to-first price ratio.
pub fn init_bid_costcap(bid: f64, cap: f64, price_ratio: f64) -> Result<f64> {
    if !(cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    if !(price_ratio > 0.0 && price_ratio <= 1.0) {
        return invalid("price ratio must lie in (0,1]");
    }
    Ok(bid.min(cap / price_ratio))
}

/// One logged auction: competing eCPM and predicted rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayRecord {
    pub competing_ecpm: f64,
    pub pctr: f64,
}

/// Second-price spend of bidding `b` per conversion on every logged auction.
pub fn replay_spend(log: &[ReplayRecord], bid: f64) -> f64 {
    log.iter()
        .filter(|a| bid * a.pctr > a.competing_ecpm)
        .map(|a| a.competing_ecpm)
        .sum()
}

/// Bisection on replayed spend: raise the bid while spend is under budget.
/// The final midpoint is returned if its spend fits the budget; otherwise the
/// largest probed bid that did.
pub fn auction_replay_bid(log: &[ReplayRecord], budget: f64, lo: f64, hi: f64, eps: f64) -> Result<f64> {
    if log.is_empty() {
        return invalid("empty auction log");
    }
    if !(budget >= 0.0) {
        return invalid("budget must be non-negative");
    }
    if !(lo >= 0.0 && lo < hi) || !(eps > 0.0) {
        return invalid("search needs 0 <= lo < hi and eps > 0");
    }
    let (mut bl, mut bu) = (lo, hi);
    let mut best_safe = lo;
    while bu - bl > eps {
        let b = 0.5 * (bl + bu);
        let spend = replay_spend(log, b);
        if spend <= budget {
            best_safe = best_safe.max(b);
        }
        if spend < budget {
            bl = b;
        } else {
            bu = b;
        }
    }
    let b = 0.5 * (bl + bu);
    if replay_spend(log, b) <= budget {
        Ok(b)
    } else {
        Ok(best_safe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidWindow {
    /// 0-based inclusive start.
    pub start: usize,
    /// 0-based inclusive end.
    pub end: usize,
    pub mean: f64,
}

impl BidWindow {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Two-pointer scan over prefix sums for a long stretch of at least `min_len`
/// bids with variance at most `delta`. For each right end the left pointer
/// only moves forward and the inner loop stops at the first success, so
/// longer windows can be missed; the result is valid, not always longest.
pub fn converged_bid_window(bids: &[f64], delta: f64, min_len: usize) -> Result<Option<BidWindow>> {
    if min_len < 2 {
        return invalid("minimum window length must be at least 2");
    }
    if min_len > bids.len() {
        return invalid("minimum window length exceeds the number of bids");
    }
    let mut s = vec![0.0; bids.len() + 1];
    let mut q = vec![0.0; bids.len() + 1];
    for (i, &b) in bids.iter().enumerate() {
        s[i + 1] = s[i] + b;
        q[i + 1] = q[i] + b * b;
    }
    let mut best: Option<BidWindow> = None;
    let mut left = 0usize;
    for right in 0..bids.len() {
        while right + 1 - left >= min_len {
            let n = (right + 1 - left) as f64;
            let mean = (s[right + 1] - s[left]) / n;
            let var = (q[right + 1] - q[left]) / n - mean * mean;
            if var <= delta {
                if best.is_none_or(|w| right + 1 - left > w.len()) {
                    best = Some(BidWindow { start: left, end: right, mean });
                }
                break;
            }
            left += 1;
        }
    }
    Ok(best)
}
