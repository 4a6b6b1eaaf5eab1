//! First-price bid shading on a sigmoid win-probability model.
//!
//! Every solver finds the root of `b + P(b)/P'(b) = RHS` by bisection; the
//! left side is strictly increasing whenever P is log-concave, which holds
//! for the sigmoid model exactly when its log-bid coefficient is positive.

use crate::common::StepSizeSchedule;
use crate::dogd::LAMBDA_FLOOR;
use crate::error::{invalid, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// `P(b) = sigmoid(w0 + w.x + beta ln b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WinProbModel {
    w0: f64,
    weights: Vec<f64>,
    beta: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl WinProbModel {
    pub fn new(w0: f64, weights: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return invalid("beta must be positive");
        }
        if !w0.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return invalid("weights must be finite");
        }
        Ok(WinProbModel { w0, weights, beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn logit(&self, features: &[f64], b: f64) -> f64 {
        let dot: f64 = self.weights.iter().zip(features).map(|(w, x)| w * x).sum();
        self.w0 + dot + self.beta * b.ln()
    }

    fn check(&self, features: &[f64], b: f64) -> Result<()> {
        if features.len() != self.weights.len() {
            return invalid("feature vector length does not match the model");
        }
        if !(b > 0.0) {
            return invalid("bid must be positive");
        }
        Ok(())
    }

    /// `(P, P')` with `P' = P (1 - P) beta / b`.
    pub fn eval(&self, features: &[f64], b: f64) -> Result<(f64, f64)> {
        self.check(features, b)?;
        let z = self.logit(features, b);
        let p = sigmoid(z);
        Ok((p, p * sigmoid(-z) * self.beta / b))
    }

    /// `P/P' = b / (beta (1 - P))`, computed without the cancellation in `1 - P`.
    pub fn ratio(&self, features: &[f64], b: f64) -> Result<f64> {
        self.check(features, b)?;
        Ok(b / (self.beta * sigmoid(-self.logit(features, b))))
    }

    /// `b + P/P'`.
    pub fn residual_lhs(&self, features: &[f64], b: f64) -> Result<f64> {
        Ok(b + self.ratio(features, b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi) || !hi.is_finite() {
            return invalid("bracket needs 0 < lo < hi");
        }
        Ok(Bracket { lo, hi })
    }

    /// `[1e-4, 1e4 * RHS]`, widened so it never collapses.
    pub fn default_for(rhs: f64) -> Self {
        let lo = 1e-4;
        Bracket { lo, hi: (1e4 * rhs).max(2.0 * lo) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub bracket: Option<Bracket>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { bracket: None, tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// Bisection for `phi(b) = target` with phi non-decreasing. Returns an end of
/// the bracket when the target lies outside phi's range over it.
fn bisect(mut phi: impl FnMut(f64) -> f64, target: f64, bracket: Bracket, tol: f64, max_iter: usize) -> f64 {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    if phi(lo) >= target {
        return lo;
    }
    if phi(hi) <= target {
        return hi;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter.max(1) {
        mid = 0.5 * (lo + hi);
        let r = phi(mid) - target;
        if r.abs() < tol {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    mid
}

fn solve_rhs(model: &WinProbModel, features: &[f64], rhs: f64, opts: &SolveOptions) -> Result<f64> {
    if features.len() != model.weights.len() {
        return invalid("feature vector length does not match the model");
    }
    if !rhs.is_finite() || !(rhs >= 0.0) {
        return invalid("right-hand side must be finite and non-negative");
    }
    let bracket = opts.bracket.unwrap_or_else(|| Bracket::default_for(rhs));
    Bracket::new(bracket.lo, bracket.hi)?;
    let phi = |b: f64| b + b / (model.beta * sigmoid(-model.logit(features, b)));
    Ok(bisect(phi, rhs, bracket, opts.tol, opts.max_iter))
}

/// Welfare maximization: `b + P/P' = 1/lambda`.
pub fn solve_welfare_bid(model: &WinProbModel, features: &[f64], lambda: f64, opts: &SolveOptions) -> Result<f64> {
    if !(lambda > 0.0) {
        return invalid("lambda must be positive");
    }
    solve_rhs(model, features, 1.0 / lambda, opts)
}

/// Utility maximization: `b + P/P' = v/(1 + lambda)`.
pub fn solve_utility_bid(model: &WinProbModel, features: &[f64], value: f64, lambda: f64, opts: &SolveOptions) -> Result<f64> {
    if !(value > 0.0) || !(lambda >= 0.0) {
        return invalid("need value > 0 and lambda >= 0");
    }
    solve_rhs(model, features, value / (1.0 + lambda), opts)
}

/// Welfare under a markup: `b + P/P' = 1/(lambda (1 + m))`.
pub fn solve_margin_bid(model: &WinProbModel, features: &[f64], lambda: f64, markup: f64, opts: &SolveOptions) -> Result<f64> {
    if !(lambda > 0.0) || !(markup >= 0.0) {
        return invalid("need lambda > 0 and markup >= 0");
    }
    solve_rhs(model, features, 1.0 / (lambda * (1.0 + markup)), opts)
}

/// Win probability `G`, expected cost `H` and their derivatives for some auction.
pub trait AuctionResponse {
    fn win_prob(&self, b: f64) -> f64;
    fn expected_cost(&self, b: f64) -> f64;
    fn win_prob_slope(&self, b: f64) -> f64;
    fn cost_slope(&self, b: f64) -> f64;

    /// `h(b)/g(b)`.
    fn ratio(&self, b: f64) -> f64 {
        self.cost_slope(b) / self.win_prob_slope(b)
    }

    /// Closed-form inverse of `h/g` when one is known.
    fn ratio_inverse(&self, _target: f64) -> Option<f64> {
        None
    }
}

/// First price on a sigmoid model: `G = P`, `H = P b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpaResponse {
    pub model: WinProbModel,
    pub features: Vec<f64>,
}

impl FpaResponse {
    fn pp(&self, b: f64) -> (f64, f64) {
        self.model.eval(&self.features, b).unwrap_or((0.0, 0.0))
    }
}

impl AuctionResponse for FpaResponse {
    fn win_prob(&self, b: f64) -> f64 {
        self.pp(b).0
    }
    fn expected_cost(&self, b: f64) -> f64 {
        self.pp(b).0 * b
    }
    fn win_prob_slope(&self, b: f64) -> f64 {
        self.pp(b).1
    }
    fn cost_slope(&self, b: f64) -> f64 {
        let (p, dp) = self.pp(b);
        dp * b + p
    }
    fn ratio(&self, b: f64) -> f64 {
        self.model.residual_lhs(&self.features, b).unwrap_or(f64::NAN)
    }
}

/// Any truthful auction over the same win curve. By Myerson's lemma
/// `H(b) = b G(b) - int_0^b G`, so `h = b g` and `h/g` is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DsicResponse {
    pub model: WinProbModel,
    pub features: Vec<f64>,
}

impl AuctionResponse for DsicResponse {
    fn win_prob(&self, b: f64) -> f64 {
        self.model.eval(&self.features, b).map(|v| v.0).unwrap_or(0.0)
    }
    fn expected_cost(&self, b: f64) -> f64 {
        if !(b > 0.0) {
            return 0.0;
        }
        // Simpson's rule for the integral of G on [0, b].
        let n = 256;
        let h = b / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let z = i as f64 * h;
            acc += w * if z > 0.0 { self.win_prob(z) } else { 0.0 };
        }
        b * self.win_prob(b) - acc * h / 3.0
    }
    fn win_prob_slope(&self, b: f64) -> f64 {
        self.model.eval(&self.features, b).map(|v| v.1).unwrap_or(0.0)
    }
    fn cost_slope(&self, b: f64) -> f64 {
        b * self.win_prob_slope(b)
    }
    fn ratio(&self, b: f64) -> f64 {
        b
    }
    fn ratio_inverse(&self, target: f64) -> Option<f64> {
        Some(target)
    }
}

/// `b* = (h/g)^{-1}(r/lambda)`, clamped to the bracket.
pub fn solve_general_bid<A: AuctionResponse + ?Sized>(
    response: &A,
    r: f64,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    if !(r > 0.0 && lambda > 0.0) {
        return invalid("need r > 0 and lambda > 0");
    }
    let target = r / lambda;
    let bracket = opts.bracket.unwrap_or_else(|| Bracket::default_for(target));
    Bracket::new(bracket.lo, bracket.hi)?;
    if let Some(b) = response.ratio_inverse(target) {
        return Ok(b.clamp(bracket.lo, bracket.hi));
    }
    Ok(bisect(|b| response.ratio(b), target, bracket, opts.tol, opts.max_iter))
}

/// `lambda <- max(floor, lambda - eps (B/T - H))` with `eps = schedule(t)`.
pub fn fpa_lambda_step(lambda: f64, schedule: &StepSizeSchedule, t: u64, budget: f64, horizon: f64, cost: f64) -> Result<f64> {
    if !(budget > 0.0 && horizon > 0.0) {
        return invalid("budget and horizon must be positive");
    }
    Ok((lambda - schedule.value(t) * (budget / horizon - cost)).max(LAMBDA_FLOOR))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> WinProbModel {
        WinProbModel::new(0.0, vec![], 1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = unit();
        assert_eq!(m.eval(&[], 1.0).unwrap().0, 0.5);
        let (p, dp) = m.eval(&[], 3.0).unwrap();
        assert!((p - 0.75).abs() < 1e-15 && (dp - 1.0 / 16.0).abs() < 1e-15);
        assert!(WinProbModel::new(0.0, vec![], 0.0).is_err());
        assert!(m.eval(&[], 0.0).is_err());
    }

    #[test]
    fn closed_form_roots() {
        let o = SolveOptions::default();
        let m = unit();
        assert!((solve_welfare_bid(&m, &[], 0.5, &o).unwrap() - (3f64.sqrt() - 1.0)).abs() < 1e-6);
        assert!((solve_utility_bid(&m, &[], 3.0, 0.0, &o).unwrap() - 1.0).abs() < 1e-6);
        assert!((solve_margin_bid(&m, &[], 0.5, 1.0, &o).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-6);
        assert_eq!(
            solve_margin_bid(&m, &[], 0.5, 0.0, &o).unwrap(),
            solve_welfare_bid(&m, &[], 0.5, &o).unwrap()
        );
    }

    #[test]
    fn clamps_to_bracket() {
        let m = unit();
        let o = SolveOptions { bracket: Some(Bracket::new(1.0, 10.0).unwrap()), ..Default::default() };
        assert_eq!(solve_welfare_bid(&m, &[], 1.0, &o).unwrap(), 1.0);
        let o = SolveOptions::default();
        assert_eq!(solve_utility_bid(&m, &[], 3.0, 1e12, &o).unwrap(), 1e-4);
    }

    #[test]
    fn general_solver() {
        let o = SolveOptions::default();
        let dsic = DsicResponse { model: unit(), features: vec![] };
        assert_eq!(solve_general_bid(&dsic, 0.3, 0.7, &o).unwrap(), 0.3 / 0.7);
        let fpa = FpaResponse { model: unit(), features: vec![] };
        let b = solve_general_bid(&fpa, 1.0, 0.5, &o).unwrap();
        assert!((b - solve_welfare_bid(&unit(), &[], 0.5, &o).unwrap()).abs() < 2e-8);
    }

    #[test]
    fn lambda_step() {
        let s = StepSizeSchedule::Constant { eps0: 0.1 };
        assert_eq!(fpa_lambda_step(1.0, &s, 1, 1.0, 10.0, 0.1).unwrap(), 1.0);
        assert!(fpa_lambda_step(1.0, &s, 1, 1.0, 10.0, 0.5).unwrap() > 1.0);
        let b = 3f64.sqrt() - 1.0;
        let (p, _) = unit().eval(&[], b).unwrap();
        assert!((p - 0.4226).abs() < 1e-4 && (p * b - 0.3094).abs() < 1e-4);
        assert!((fpa_lambda_step(0.5, &s, 1, p * b, 1.0, p * b).unwrap() - 0.5).abs() < 1e-15);
    }
}
