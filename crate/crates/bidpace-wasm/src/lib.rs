//! Browser bindings for the demo page in `www/`. Each export returns a flat
//! `Float64Array`; the plain functions underneath are what the tests call.

use wasm_bindgen::prelude::*;

use bidpace::common::{CampaignConfig, Objective, StepSizeSchedule};
use bidpace::error::Result;
use bidpace::mpc::pava_fit;
use bidpace::shading::{solve_welfare_bid, SolveOptions, WinProbModel};
use bidpace::sim::{run_campaign, ArmSpec, ControllerSpec, MarketSpec, SimConfig};

/// Welfare bids for `points` lambdas spaced geometrically over `[lo, hi]`,
/// as triples `(lambda, bid, win probability)`.
pub fn shading_curve(w0: f64, beta: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    let model = WinProbModel::new(w0, Vec::new(), beta)?;
    let opts = SolveOptions::default();
    let n = points.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let lambda = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
        let b = solve_welfare_bid(&model, &[], lambda, &opts)?;
        let (p, _) = model.eval(&[], b)?;
        out.extend([lambda, b, p]);
    }
    Ok(out)
}

/// One simulated day of max-delivery pacing, as per-interval triples
/// `(cumulative spend, cumulative target, bid per click)`.
pub fn pacing_trace(budget: f64, horizon: u32, eps0: f64, seed: u32) -> Result<Vec<f64>> {
    let campaign = CampaignConfig::new("demo", budget, horizon as u64, Objective::MaxDelivery)?;
    let controller = ControllerSpec::DogdMd {
        lambda0: 1.0,
        schedule: StepSizeSchedule::new_harmonic(eps0)?,
        normalize: true,
    };
    let config = SimConfig {
        arm: ArmSpec::new(campaign, controller),
        market: MarketSpec { seed: seed as u64, ..MarketSpec::default() },
        dt: 900.0,
        dtau: 3600.0,
    };
    let report = run_campaign(&config)?;
    let (mut spend, mut target) = (0.0, 0.0);
    let mut out = Vec::with_capacity(3 * report.rows.len());
    for r in &report.rows {
        spend += r.spend;
        target += r.target_spend;
        out.extend([spend, target, r.bid_per_click]);
    }
    Ok(out)
}

/// Unit-weight isotonic fit.
pub fn isotonic_fit(values: &[f64]) -> Result<Vec<f64>> {
    pava_fit(values, &vec![1.0; values.len()])
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = shadingCurve)]
pub fn shading_curve_js(w0: f64, beta: f64, lo: f64, hi: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(shading_curve(w0, beta, lo, hi, points))
}

#[wasm_bindgen(js_name = pacingTrace)]
pub fn pacing_trace_js(budget: f64, horizon: u32, eps0: f64, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(pacing_trace(budget, horizon, eps0, seed))
}

#[wasm_bindgen(js_name = isotonicFit)]
pub fn isotonic_fit_js(values: &[f64]) -> std::result::Result<Vec<f64>, JsError> {
    js(isotonic_fit(values))
}
