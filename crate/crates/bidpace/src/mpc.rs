//! Model-predictive pacing: monotone bid landscapes (LIS, PAVA), the offline
//! eCPM histogram model, and grid searches for cost cap and target CPA.

use crate::error::{invalid, Result};

pub const DEFAULT_STABILITY_BAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidObservation {
    pub bid: f64,
    pub spend: f64,
    pub conversions: f64,
}

impl BidObservation {
    pub fn new(bid: f64, spend: f64, conversions: f64) -> Self {
        BidObservation { bid, spend, conversions }
    }
}

/// Length of the longest non-decreasing subsequence ending at each index.
fn nondecreasing_lengths(values: &[f64]) -> Vec<usize> {
    let mut tails: Vec<f64> = Vec::new();
    let mut lengths = Vec::with_capacity(values.len());
    for &v in values {
        let pos = tails.partition_point(|&t| t <= v);
        if pos == tails.len() {
            tails.push(v);
        } else {
            tails[pos] = v;
        }
        lengths.push(pos + 1);
    }
    lengths
}

/// Indices of a longest non-decreasing subsequence; among all of them the one
/// with the earliest indices.
pub fn lis_indices(values: &[f64]) -> Result<Vec<usize>> {
    if values.is_empty() {
        return invalid("empty sequence");
    }
    if values.iter().any(|v| v.is_nan()) {
        return invalid("NaN in sequence");
    }
    // Longest run starting at i = longest non-increasing run ending at i in reverse.
    let reversed: Vec<f64> = values.iter().rev().map(|v| -v).collect();
    let mut starting = nondecreasing_lengths(&reversed);
    starting.reverse();
    let best = *starting.iter().max().unwrap_or(&0);
    let mut picked = Vec::with_capacity(best);
    let mut need = best;
    let mut floor = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if need == 0 {
            break;
        }
        if starting[i] == need && v >= floor {
            picked.push(i);
            floor = v;
            need -= 1;
        }
    }
    Ok(picked)
}

/// Longest subsequence (in time order) whose spends are non-decreasing.
/// O(N log N).
pub fn lis_extract(observations: &[BidObservation]) -> Result<Vec<BidObservation>> {
    let spends: Vec<f64> = observations.iter().map(|o| o.spend).collect();
    Ok(lis_indices(&spends)?.into_iter().map(|i| observations[i]).collect())
}

/// Weighted least-squares projection onto non-decreasing sequences.
pub fn pava_fit(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return invalid("values and weights differ in length");
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return invalid("weights must be positive and finite");
    }
    if values.iter().any(|v| !v.is_finite()) {
        return invalid("values must be finite");
    }
    // Blocks of (weighted mean, total weight, count).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((w1 * m1 + w2 * m2) / w, w, n1 + n2);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, _, n) in blocks {
        out.extend(std::iter::repeat_n(m, n));
    }
    Ok(out)
}

/// Piecewise-linear non-decreasing curve with linear extrapolation on both
/// sides. Values and inverses are clamped at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneCurve {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return invalid("knot coordinates differ in length");
        }
        if xs.len() < 2 {
            return invalid("a curve needs at least two knots");
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return invalid("knots must be finite");
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("knot x must be strictly increasing");
        }
        if ys.windows(2).any(|w| w[0] > w[1]) {
            return invalid("knot y must be non-decreasing");
        }
        Ok(MonotoneCurve { xs, ys })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    fn segment_for_x(&self, x: f64) -> usize {
        let n = self.xs.len();
        self.xs.partition_point(|&k| k <= x).clamp(1, n - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment_for_x(x);
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        (y0 + (y1 - y0) / (x1 - x0) * (x - x0)).max(0.0)
    }

    /// Smallest x with `eval(x) = y` inside the knot range; linear
    /// extrapolation outside it, clamped at 0. Infinite when y lies above a
    /// flat final segment.
    pub fn invert(&self, y: f64) -> f64 {
        let n = self.xs.len();
        let line = |i: usize| {
            let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
            if y1 > y0 {
                x0 + (x1 - x0) / (y1 - y0) * (y - y0)
            } else if y > y1 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let x = if y < self.ys[0] {
            line(0)
        } else if y > self.ys[n - 1] {
            line(n - 2)
        } else {
            let j = self.ys.partition_point(|&v| v < y);
            if self.ys[j] == y {
                self.xs[j]
            } else {
                line(j - 1)
            }
        };
        x.max(0.0)
    }

    /// The same curve with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return invalid("scale factor must be non-negative");
        }
        MonotoneCurve::new(self.xs.clone(), self.ys.iter().map(|y| y * factor).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMethod {
    Lis,
    Pava,
}

/// Groups equal x values into their mean y; input sorted by x.
fn collapse_equal_x(points: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    let mut i = 0;
    while i < points.len() {
        let x = points[i].0;
        let (mut sy, mut sw) = (0.0, 0.0);
        while i < points.len() && points[i].0 == x {
            sy += points[i].1 * points[i].2;
            sw += points[i].2;
            i += 1;
        }
        xs.push(x);
        ys.push(sy / sw);
        ws.push(sw);
    }
    (xs, ys, ws)
}

/// Bid-to-y curve from `(bid, y)` pairs in time order.
///
/// LIS keeps a longest chain that is non-decreasing in y after sorting by bid;
/// PAVA pools equal bids and projects every point onto the monotone cone.
pub fn curve_from_pairs(pairs: &[(f64, f64)], method: CurveMethod) -> Result<MonotoneCurve> {
    if pairs.iter().any(|(b, y)| !b.is_finite() || !y.is_finite()) {
        return invalid("pairs must be finite");
    }
    let mut sorted: Vec<(f64, f64, f64)> = pairs.iter().map(|&(b, y)| (b, y, 1.0)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    match method {
        CurveMethod::Lis => {
            if sorted.is_empty() {
                return invalid("a curve needs at least two knots");
            }
            let ys: Vec<f64> = sorted.iter().map(|p| p.1).collect();
            let chain: Vec<(f64, f64, f64)> = lis_indices(&ys)?.into_iter().map(|i| sorted[i]).collect();
            let (xs, ys, _) = collapse_equal_x(&chain);
            MonotoneCurve::new(xs, ys)
        }
        CurveMethod::Pava => {
            let (xs, ys, ws) = collapse_equal_x(&sorted);
            let fitted = pava_fit(&ys, &ws)?;
            MonotoneCurve::new(xs, fitted)
        }
    }
}

/// Equal-width histogram of competing eCPMs with its cumulative first moment
/// `g_j = sum_{l<=j} z_l p_l / sum_{l<=j} p_l` over bucket midpoints `z_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EcpmHistogram {
    pub edges: Vec<f64>,
    pub probs: Vec<f64>,
    pub mids: Vec<f64>,
    pub moments: Vec<f64>,
}

pub fn histogram_fit(samples: &[f64], buckets: usize) -> Result<EcpmHistogram> {
    if buckets == 0 {
        return invalid("need at least one bucket");
    }
    if samples.is_empty() {
        return invalid("no samples");
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return invalid("samples must be finite");
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / buckets as f64;
    let edges: Vec<f64> = (0..=buckets).map(|j| lo + width * j as f64).collect();
    let mut counts = vec![0usize; buckets];
    for &s in samples {
        let j = if width > 0.0 { ((s - lo) / width).floor() as usize } else { 0 };
        counts[j.min(buckets - 1)] += 1;
    }
    let total = samples.len() as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mids: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut moments = Vec::with_capacity(buckets);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..buckets {
        num += mids[j] * probs[j];
        den += probs[j];
        // The first bucket always holds the minimum, so den > 0.
        moments.push(num / den);
    }
    Ok(EcpmHistogram { edges, probs, mids, moments })
}

/// Picks the bucket whose moment is nearest the target cost per impression
/// (lower bucket on ties) and returns its midpoint over the average CTR.
pub fn histogram_bid(hist: &EcpmHistogram, target_cost: f64, avg_ctr: f64) -> Result<f64> {
    if !(avg_ctr > 0.0) {
        return invalid("average CTR must be positive");
    }
    let mut best = 0;
    for (j, g) in hist.moments.iter().enumerate() {
        if (g - target_cost).abs() < (hist.moments[best] - target_cost).abs() {
            best = j;
        }
    }
    Ok(hist.mids[best] / avg_ctr)
}

/// Inclusive bid grid `lo, lo + step, ...` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl BidGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo < hi) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return invalid("bid grid needs lo < hi and step > 0");
        }
        Ok(BidGrid { lo, hi, step })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + self.step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCapHorizon {
    pub remaining_budget: f64,
    pub budget: f64,
    pub cap: f64,
    /// Conversions so far.
    pub conversions: f64,
    /// Requests forecast for the rest of the lifetime.
    pub remaining_requests: f64,
    /// Requests forecast within the planning horizon.
    pub horizon_requests: f64,
}

impl CostCapHorizon {
    /// `B_H = NR_H / TR_rem * B_rem`.
    pub fn horizon_budget(&self) -> f64 {
        if self.remaining_requests > 0.0 {
            self.horizon_requests / self.remaining_requests * self.remaining_budget
        } else {
            self.remaining_budget
        }
    }

    /// `C_H = B_rem / (B/C - NC)`, unbounded once the allowance is used up.
    pub fn horizon_cap(&self) -> f64 {
        let left = self.budget / self.cap - self.conversions;
        if left > 0.0 {
            self.remaining_budget / left
        } else {
            f64::INFINITY
        }
    }
}

pub(crate) fn cost_feasible(spend: f64, conversions: f64, cap: f64) -> bool {
    if cap.is_infinite() {
        return true;
    }
    if conversions > 0.0 {
        spend / conversions <= cap
    } else {
        spend <= 0.0
    }
}

/// Largest grid bid with `f(b) <= B_H` and `f(b)/g(b) <= C_H`; the whole grid
/// is scanned since fitted curves may be noisy. Falls back to the lowest bid.
pub fn mpc_costcap_bid(f: &MonotoneCurve, g: &MonotoneCurve, h: &CostCapHorizon, grid: &BidGrid) -> Result<f64> {
    if !(h.cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    let budget_h = h.horizon_budget();
    let cap_h = h.horizon_cap();
    let mut best = grid.lo;
    for b in grid.points() {
        let (spend, conv) = (f.eval(b), g.eval(b));
        if spend <= budget_h && cost_feasible(spend, conv, cap_h) {
            best = b;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCpaState {
    /// Spend so far.
    pub spend: f64,
    /// Conversions so far.
    pub conversions: f64,
    pub cap: f64,
    pub dt: f64,
    /// Remaining lifetime.
    pub remaining: f64,
    /// |P| at or below this counts as zero.
    pub zero_tol: f64,
}

impl TargetCpaState {
    /// Accumulated deviation `D = S - C NC`.
    pub fn deviation(&self) -> f64 {
        self.spend - self.cap * self.conversions
    }
}

/// Target-CPA bid from `P(b, W) = (f(b) - C g(b)) W / dt + D` over the bid grid
/// and repayment windows `W = dt, 2dt, ..., remaining`.
///
/// A zero of P picks the largest such bid. When P is negative everywhere the
/// largest maximizer is taken; when positive everywhere, the smallest
/// minimizer. With mixed signs and no grid zero, bids whose P changes sign
/// across windows count as zeros; otherwise the bid with the smallest |P|.
pub fn mpc_targetcpa_bid(f: &MonotoneCurve, g: &MonotoneCurve, s: &TargetCpaState, grid: &BidGrid) -> Result<f64> {
    if !(s.dt > 0.0) || !(s.remaining >= s.dt) {
        return invalid("need dt > 0 and remaining lifetime of at least one interval");
    }
    if !(s.cap > 0.0) {
        return invalid("cost cap must be positive");
    }
    let d = s.deviation();
    let windows = (s.remaining / s.dt + 1e-9).floor() as usize;
    let bids = grid.points();
    // P is linear in the window, so its extremes sit at the first and last window.
    let per_bid: Vec<(f64, f64, f64)> = bids
        .iter()
        .map(|&b| {
            let repay = f.eval(b) - s.cap * g.eval(b);
            let p_first = repay + d;
            let p_last = repay * windows as f64 + d;
            (b, p_first.min(p_last), p_first.max(p_last))
        })
        .collect();

    let mut zero_bid = None;
    for &b in &bids {
        let repay = f.eval(b) - s.cap * g.eval(b);
        if (1..=windows).any(|w| (repay * w as f64 + d).abs() <= s.zero_tol) {
            zero_bid = Some(b);
        }
    }
    if let Some(b) = zero_bid {
        return Ok(b);
    }
    let all_negative = per_bid.iter().all(|&(_, _, hi)| hi < 0.0);
    let all_positive = per_bid.iter().all(|&(_, lo, _)| lo > 0.0);
    if all_negative {
        let top = per_bid.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
        let b = per_bid.iter().filter(|p| p.2 == top).map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        return Ok(b);
    }
    if all_positive {
        let bottom = per_bid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let b = per_bid.iter().filter(|p| p.1 == bottom).map(|p| p.0).fold(f64::INFINITY, f64::min);
        return Ok(b);
    }
    if let Some(&(b, _, _)) = per_bid.iter().rev().find(|&&(_, lo, hi)| lo <= 0.0 && hi >= 0.0) {
        return Ok(b);
    }
    let closest = per_bid
        .iter()
        .map(|&(b, lo, hi)| (b, lo.abs().min(hi.abs())))
        .fold((grid.lo, f64::INFINITY), |acc, (b, v)| if v <= acc.1 { (b, v) } else { acc });
    Ok(closest.0)
}

/// Keeps a new bid within `±band` of the previous one.
pub fn stabilize_bid(previous: f64, proposed: f64, band: f64) -> f64 {
    if !(previous > 0.0) {
        return proposed;
    }
    proposed.clamp(previous * (1.0 - band), previous * (1.0 + band))
}
