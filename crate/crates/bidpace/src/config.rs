//! Run configuration: a TOML file with flat `[market]`, `[campaign]`,
//! `[controller]` and `[experiment]` sections. Unknown keys are rejected.
//!
//! ```toml
//! [market]
//! seed = 7
//! ecpm_mu = -3.9
//!
//! [campaign]
//! budget = 40.0
//! horizon = 100000
//! objective = "max_delivery"
//!
//! [controller]
//! kind = "dogd"
//! eps0 = 0.05
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::common::{CampaignConfig, Objective, StepSizeSchedule};
use crate::error::{Error, Result};
use crate::mpc::BidGrid;
use crate::pid::{PidGains, DEFAULT_U_MAX};
use crate::sim::{diurnal_supply, ArmSpec, ControllerSpec, MarketSpec, SimConfig};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub seed: Option<u64>,
    pub pctr_mu: Option<f64>,
    pub pctr_sigma: Option<f64>,
    pub ecpm_mu: Option<f64>,
    pub ecpm_sigma: Option<f64>,
    /// Relative volume per bucket; hourly diurnal curve when absent.
    pub supply: Option<Vec<f64>>,
    pub end_of_day: Option<f64>,
    pub ladder_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub id: Option<String>,
    pub budget: f64,
    pub horizon: u64,
    /// `max_delivery`, `cost_cap`, `target_cpa`, `reach_frequency`,
    /// `guaranteed_delivery` or `deep_retention`.
    pub objective: Option<String>,
    pub cap: Option<f64>,
    pub tolerance: Option<f64>,
    pub f_lower: Option<f64>,
    pub f_upper: Option<f64>,
    pub goal: Option<f64>,
    pub deep_cap: Option<f64>,
    pub markup: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    /// `fixed`, `throttle`, `pid`, `dogd`, `dogd-batch`, `dogd-costcap`,
    /// `dual-pid`, `mpc`, `even-mpc` or `gd`.
    pub kind: String,
    pub dt: Option<f64>,
    pub dtau: Option<f64>,
    pub bid_per_click: Option<f64>,
    pub bid_multiplier: Option<f64>,
    pub lambda0: Option<f64>,
    pub mu0: Option<f64>,
    /// `harmonic` or `constant`.
    pub schedule: Option<String>,
    pub eps0: Option<f64>,
    pub normalize: Option<bool>,
    pub p0: Option<f64>,
    pub rate: Option<f64>,
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    pub u_max: Option<f64>,
    pub kp_mu: Option<f64>,
    pub ki_mu: Option<f64>,
    pub kd_mu: Option<f64>,
    pub grid_lo: Option<f64>,
    pub grid_hi: Option<f64>,
    pub grid_step: Option<f64>,
    pub periods: Option<usize>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// `budget-split` or `campaign-split`.
    pub design: Option<String>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    /// Bid multiplier for arm B; arm A bids as configured.
    pub treatment_multiplier: Option<f64>,
    pub metric: Option<String>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub market: MarketSection,
    pub campaign: CampaignSection,
    pub controller: ControllerSection,
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    BudgetSplit,
    CampaignSplit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub design: Design,
    pub replicas: usize,
    pub seed: u64,
    pub treatment_multiplier: f64,
    pub metric: String,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub experiment: Option<ExperimentConfig>,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn need(v: Option<f64>, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn into_run(self) -> Result<RunConfig> {
        let m = &self.market;
        let defaults = MarketSpec::default();
        let market = MarketSpec {
            pctr_mu: m.pctr_mu.unwrap_or(defaults.pctr_mu),
            pctr_sigma: m.pctr_sigma.unwrap_or(defaults.pctr_sigma),
            ecpm_mu: m.ecpm_mu.unwrap_or(defaults.ecpm_mu),
            ecpm_sigma: m.ecpm_sigma.unwrap_or(defaults.ecpm_sigma),
            supply: m.supply.clone().unwrap_or_else(diurnal_supply),
            end_of_day: m.end_of_day.unwrap_or(defaults.end_of_day),
            ladder_depth: m.ladder_depth.unwrap_or(0),
            seed: m.seed.unwrap_or(defaults.seed),
        };
        market.validate().map_err(|e| Error::Config(e.to_string()))?;

        let c = &self.campaign;
        let objective = match c.objective.as_deref().unwrap_or("max_delivery") {
            "max_delivery" => Objective::MaxDelivery,
            "cost_cap" => Objective::CostCap { cap: need(c.cap, "cap")? },
            "target_cpa" => Objective::TargetCpa { cap: need(c.cap, "cap")?, tolerance: c.tolerance.unwrap_or(0.1) },
            "reach_frequency" => Objective::ReachFrequency { f_lower: c.f_lower.unwrap_or(0.0), f_upper: need(c.f_upper, "f_upper")? },
            "guaranteed_delivery" => Objective::GuaranteedDelivery { goal: need(c.goal, "goal")? },
            "deep_retention" => Objective::DeepRetention { cap: need(c.cap, "cap")?, deep_cap: need(c.deep_cap, "deep_cap")? },
            other => return cfg_err(format!("unknown objective `{other}`")),
        };
        let mut campaign = CampaignConfig::new(c.id.clone().unwrap_or_else(|| "campaign".into()), c.budget, c.horizon, objective)
            .map_err(|e| Error::Config(e.to_string()))?;
        campaign.markup = c.markup.unwrap_or(0.0);
        campaign.validate().map_err(|e| Error::Config(e.to_string()))?;

        let k = &self.controller;
        let eps0 = k.eps0.unwrap_or(0.05);
        let schedule = match k.schedule.as_deref().unwrap_or("harmonic") {
            "harmonic" => StepSizeSchedule::new_harmonic(eps0),
            "constant" => StepSizeSchedule::new_constant(eps0),
            other => return cfg_err(format!("unknown schedule `{other}`")),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        let d = PidGains::default();
        let gains = PidGains::new(k.kp.unwrap_or(d.kp), k.ki.unwrap_or(d.ki), k.kd.unwrap_or(d.kd))
            .with_u_max(k.u_max.unwrap_or(DEFAULT_U_MAX))
            .map_err(|e| Error::Config(e.to_string()))?;
        let gains_mu = PidGains::new(k.kp_mu.unwrap_or(d.kp), k.ki_mu.unwrap_or(d.ki), k.kd_mu.unwrap_or(d.kd))
            .with_u_max(k.u_max.unwrap_or(DEFAULT_U_MAX))
            .map_err(|e| Error::Config(e.to_string()))?;
        let lambda0 = k.lambda0.unwrap_or(1.0);
        let bid = k.bid_per_click.unwrap_or(1.0);
        let normalize = k.normalize.unwrap_or(true);
        let controller = match k.kind.as_str() {
            "fixed" => ControllerSpec::FixedBid { bid_per_click: bid },
            "throttle" => ControllerSpec::Throttle { bid_per_click: bid, p0: k.p0.unwrap_or(0.5), rate: k.rate.unwrap_or(0.1) },
            "pid" => ControllerSpec::PidMd { bid_per_click: bid, gains },
            "dogd" => ControllerSpec::DogdMd { lambda0, schedule, normalize },
            "dogd-batch" => ControllerSpec::DogdBatch { lambda0, schedule, normalize },
            "dogd-costcap" => ControllerSpec::DogdCostCap { lambda0, mu0: k.mu0.unwrap_or(0.0), schedule, normalize },
            "dual-pid" => ControllerSpec::DualPid { lambda0, mu0: k.mu0.unwrap_or(0.1), gains_lambda: gains, gains_mu },
            "mpc" => {
                let grid = BidGrid::new(k.grid_lo.unwrap_or(0.01), k.grid_hi.unwrap_or(100.0), k.grid_step.unwrap_or(0.01))
                    .map_err(|e| Error::Config(e.to_string()))?;
                ControllerSpec::MpcMd { bid_per_click: bid, grid }
            }
            "even-mpc" => ControllerSpec::EvenMpc { lambda0, schedule, periods: k.periods.unwrap_or(4), sigma: k.sigma.unwrap_or(0.3) },
            "gd" => ControllerSpec::GuaranteedDelivery { lambda0, schedule },
            other => return cfg_err(format!("unknown controller kind `{other}`")),
        };
        controller.check_objective(&campaign.objective)?;

        let arm = ArmSpec { campaign, controller, bid_multiplier: k.bid_multiplier.unwrap_or(1.0) };
        let sim = SimConfig { arm, market, dt: k.dt.unwrap_or(900.0), dtau: k.dtau.unwrap_or(3600.0) };
        sim.clock().map_err(|e| Error::Config(e.to_string()))?;

        let experiment = match &self.experiment {
            None => None,
            Some(x) => Some(ExperimentConfig {
                design: match x.design.as_deref().unwrap_or("budget-split") {
                    "budget-split" => Design::BudgetSplit,
                    "campaign-split" => Design::CampaignSplit,
                    other => return cfg_err(format!("unknown design `{other}`")),
                },
                replicas: x.replicas.unwrap_or(20),
                seed: x.seed.unwrap_or(1),
                treatment_multiplier: x.treatment_multiplier.unwrap_or(1.0),
                metric: x.metric.clone().unwrap_or_else(|| "spend".into()),
                alpha: x.alpha.unwrap_or(0.05),
            }),
        };
        Ok(RunConfig { sim, experiment })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    ConfigFile::parse(text)?.into_run()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
