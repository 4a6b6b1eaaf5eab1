//! Settlement rules: second price, GSP, VCG k-slot pricing, first price, and
//! the uniform-value Myerson reserve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settlement {
    pub won: bool,
    pub cost: f64,
}

/// Second price: win on a strictly higher bid, pay the competing eCPM. Ties lose.
pub fn settle_spa(bid: f64, competing: f64) -> Settlement {
    if bid > competing {
        Settlement { won: true, cost: competing }
    } else {
        Settlement { won: false, cost: 0.0 }
    }
}

/// First price: win on a strictly higher bid, pay the bid. Ties lose.
pub fn settle_fpa(bid: f64, competing: f64) -> Settlement {
    if bid > competing {
        Settlement { won: true, cost: bid }
    } else {
        Settlement { won: false, cost: 0.0 }
    }
}

/// Per-slot discount factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotConfig {
    alphas: Vec<f64>,
}

impl SlotConfig {
    /// Position discounts: non-increasing, in [0,1], first slot exactly 1.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        let s = Self::click_rates(alphas)?;
        if s.alphas[0] != 1.0 {
            return invalid("first slot discount must be 1");
        }
        Ok(s)
    }

    /// Absolute per-slot click rates, as used for VCG pricing. Same ordering
    /// rules as `new` but the first slot may be below 1.
    pub fn click_rates(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return invalid("need at least one slot");
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return invalid("slot discounts must lie in [0,1]");
        }
        if alphas.windows(2).any(|w| w[0] < w[1]) {
            return invalid("slot discounts must be non-increasing");
        }
        Ok(SlotConfig { alphas })
    }

    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Discount at 0-based slot `j`, 0 past the last slot.
    pub fn alpha(&self, j: usize) -> f64 {
        self.alphas.get(j).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidderOutcome {
    /// 0-based slot, `None` for losers.
    pub slot: Option<usize>,
    /// Payment per impression.
    pub payment: f64,
}

impl BidderOutcome {
    /// Payment per click given the bidder's click rate at its slot.
    pub fn payment_per_click(&self, click_rate: f64) -> f64 {
        if self.slot.is_some() && click_rate > 0.0 {
            self.payment / click_rate
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlementResult {
    /// One entry per bidder, in input order.
    pub outcomes: Vec<BidderOutcome>,
}

impl SettlementResult {
    /// Payments ordered by slot.
    pub fn slot_payments(&self) -> Vec<f64> {
        let mut by_slot: Vec<(usize, f64)> = self
            .outcomes
            .iter()
            .filter_map(|o| o.slot.map(|s| (s, o.payment)))
            .collect();
        by_slot.sort_by_key(|&(s, _)| s);
        by_slot.into_iter().map(|(_, p)| p).collect()
    }
}

/// Generalized second price. Bidders are ranked by eCPM (stable on ties); the
/// winner of slot j pays the next eCPM times the slot discount.
pub fn settle_gsp(first_slot_ecpms: &[f64], slots: &SlotConfig) -> Result<SettlementResult> {
    if first_slot_ecpms.is_empty() {
        return invalid("no bids to settle");
    }
    if first_slot_ecpms.iter().any(|e| !(*e >= 0.0)) {
        return invalid("eCPMs must be non-negative");
    }
    let mut order: Vec<usize> = (0..first_slot_ecpms.len()).collect();
    order.sort_by(|&a, &b| first_slot_ecpms[b].total_cmp(&first_slot_ecpms[a]));

    let mut outcomes = vec![BidderOutcome { slot: None, payment: 0.0 }; first_slot_ecpms.len()];
    for (j, &bidder) in order.iter().take(slots.k()).enumerate() {
        let next = order.get(j + 1).map(|&n| first_slot_ecpms[n]).unwrap_or(0.0);
        outcomes[bidder] = BidderOutcome { slot: Some(j), payment: next * slots.alpha(j) };
    }
    Ok(SettlementResult { outcomes })
}

/// VCG payments for the top bidders of a k-slot auction:
/// `p_i = sum_{j=i..k} b_{j+1} (a_j - a_{j+1})` with `a_{k+1} = 0` and missing
/// bids read as 0. `sorted_bids` are per-click values, non-increasing.
pub fn vcg_kslot_payments(sorted_bids: &[f64], slots: &SlotConfig) -> Result<Vec<f64>> {
    if sorted_bids.windows(2).any(|w| w[0] < w[1]) {
        return invalid("bids must be sorted non-increasing");
    }
    if sorted_bids.iter().any(|b| !(*b >= 0.0)) {
        return invalid("bids must be non-negative");
    }
    let k = slots.k();
    let filled = sorted_bids.len().min(k);
    let bid = |j: usize| sorted_bids.get(j).copied().unwrap_or(0.0);
    let mut payments = vec![0.0; filled];
    // Suffix sums from the last slot up.
    let mut acc = 0.0;
    for j in (0..k).rev() {
        acc += bid(j + 1) * (slots.alpha(j) - slots.alpha(j + 1));
        if j < filled {
            payments[j] = acc;
        }
    }
    Ok(payments)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MyersonReport {
    pub reserve: f64,
    pub profit_no_reserve: f64,
    pub profit_with_reserve: f64,
}

/// Two i.i.d. U[0,1] bidders. The virtual value 2z - 1 vanishes at 1/2, which
/// is the optimal reserve; expected revenues are estimated by settling
/// `draws` simulated auctions with and without it.
pub fn myerson_uniform_reserve(draws: u64, seed: u64) -> MyersonReport {
    let reserve = virtual_value_root();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut plain, mut reserved) = (0.0, 0.0);
    for _ in 0..draws {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        plain += lo;
        if hi >= reserve {
            reserved += lo.max(reserve);
        }
    }
    let n = draws.max(1) as f64;
    MyersonReport { reserve, profit_no_reserve: plain / n, profit_with_reserve: reserved / n }
}

/// Root of phi(z) = z - (1 - F(z)) / f(z) = 2z - 1 for U[0,1].
fn virtual_value_root() -> f64 {
    0.5
}
