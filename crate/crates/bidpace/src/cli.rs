//! Command-line front end: `simulate`, `replay`, `init-bid`, `shade` and `experiment`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{load_config, Design, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{budget_split_run, campaign_split_run, decide, ExperimentResult, Strategy};
use crate::initbid::{auction_replay_bid, init_bid_costcap, init_bid_parametric, replay_spend, LognormalParams};
use crate::io::{read_auction_log, read_results, replay_records, write_results, write_trace};
use crate::shading::{solve_margin_bid, solve_utility_bid, solve_welfare_bid, SolveOptions, WinProbModel};
use crate::sim::{run_campaign, run_on_stream, RunReport};

#[derive(Debug, Parser)]
#[command(name = "bidpace", version, about = "Budget pacing and bidding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one campaign on a generated market and write its interval trace.
    Simulate(SimulateArgs),
    /// Run one campaign on a logged auction stream.
    Replay(ReplayArgs),
    /// Estimate a starting bid per conversion.
    InitBid(InitBidArgs),
    /// Solve for a shaded first-price bid.
    Shade(ShadeArgs),
    /// Run or analyse an A/B experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Trace CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the market seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    config: PathBuf,
    /// Auction log CSV `t,competing_ecpm,pctr`.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InitBidArgs {
    /// Auction log for the replay search.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    /// Upper end of the search; defaults above every log threshold.
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Lognormal clearing-price location, for the closed form.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu_p: Option<f64>,
    #[arg(long)]
    sigma_p: Option<f64>,
    /// Forecast auction count, for the closed form.
    #[arg(long)]
    horizon: Option<f64>,
    /// Cost cap applied to the estimate.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    price_ratio: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShadeMode {
    Welfare,
    Utility,
    Margin,
}

#[derive(Debug, Args)]
struct ShadeArgs {
    #[arg(long, value_enum, default_value = "welfare")]
    mode: ShadeMode,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    w0: f64,
    /// Comma-separated feature weights.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Vec<f64>,
    /// Comma-separated features, one per weight.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    features: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    value: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    markup: f64,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Config with an `[experiment]` section to simulate.
    #[arg(long, conflicts_with_all = ["a", "b"])]
    config: Option<PathBuf>,
    /// Results CSV for arm A.
    #[arg(long, requires = "b")]
    a: Option<PathBuf>,
    /// Results CSV for arm B.
    #[arg(long, requires = "a")]
    b: Option<PathBuf>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Where to write the simulated results CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn print_summary(report: &RunReport) {
    let s = &report.summary;
    println!("budget: {}", s.budget);
    println!("spend: {}", s.spend);
    println!("utilization: {:.6}", s.utilization);
    println!("impressions: {}", s.impressions);
    println!("conversions: {:.6}", s.conversions);
    println!("cost_per_conversion: {:.6}", s.cost_per_conversion);
    println!("requests: {}", s.requests);
    println!("final_bid_per_click: {:.6}", s.final_bid_per_click);
}

fn emit_run(report: &RunReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            write_trace(&report.rows, open_out(Some(p))?)?;
            print_summary(report);
        }
        None => {
            // Trace goes to stdout; keep the summary on stderr so the CSV stays clean.
            write_trace(&report.rows, std::io::stdout().lock())?;
            let s = &report.summary;
            eprintln!("spend: {} utilization: {:.6} conversions: {:.6}", s.spend, s.utilization, s.conversions);
        }
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut run: RunConfig = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        run.sim.market.seed = seed;
    }
    let report = run_campaign(&run.sim)?;
    emit_run(&report, args.out.as_deref())
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let run = load_config(&args.config)?;
    let log = read_auction_log(File::open(&args.log)?)?;
    let report = run_on_stream(&run.sim, &log)?;
    emit_run(&report, args.out.as_deref())
}

fn init_bid(args: &InitBidArgs) -> Result<()> {
    let bid = match (&args.log, args.mu) {
        (Some(path), _) => {
            let log = replay_records(&read_auction_log(File::open(path)?)?);
            let hi = args.hi.unwrap_or_else(|| {
                let top = log
                    .iter()
                    .filter(|a| a.pctr > 0.0)
                    .map(|a| a.competing_ecpm / a.pctr)
                    .fold(0.0, f64::max);
                top * 1.01 + 1.0
            });
            let b = auction_replay_bid(&log, args.budget, args.lo, hi, args.eps)?;
            println!("replay_spend: {}", replay_spend(&log, b));
            b
        }
        (None, Some(mu)) => {
            let missing = |k: &str| Error::Config(format!("closed form needs --{k}"));
            let params = LognormalParams::new(
                mu,
                args.sigma.ok_or_else(|| missing("sigma"))?,
                args.mu_p.ok_or_else(|| missing("mu-p"))?,
                args.sigma_p.ok_or_else(|| missing("sigma-p"))?,
            )?;
            init_bid_parametric(&params, args.budget, args.horizon.ok_or_else(|| missing("horizon"))?)?
        }
        (None, None) => return Err(Error::Config("init-bid needs --log or the lognormal parameters".into())),
    };
    let bid = match args.cap {
        Some(cap) => init_bid_costcap(bid, cap, args.price_ratio)?,
        None => bid,
    };
    println!("bid: {bid}");
    Ok(())
}

fn shade(args: &ShadeArgs) -> Result<()> {
    if args.weights.len() != args.features.len() {
        return Err(Error::Config("--weights and --features need the same length".into()));
    }
    let model = WinProbModel::new(args.w0, args.weights.clone(), args.beta)?;
    let opts = SolveOptions::default();
    let bid = match args.mode {
        ShadeMode::Welfare => solve_welfare_bid(&model, &args.features, args.lambda, &opts)?,
        ShadeMode::Utility => {
            let v = args.value.ok_or_else(|| Error::Config("utility mode needs --value".into()))?;
            solve_utility_bid(&model, &args.features, v, args.lambda, &opts)?
        }
        ShadeMode::Margin => solve_margin_bid(&model, &args.features, args.lambda, args.markup, &opts)?,
    };
    let (p, _) = model.eval(&args.features, bid)?;
    println!("bid: {bid}");
    println!("win_probability: {p}");
    Ok(())
}

fn report_test(result: &ExperimentResult, metric: &str, alpha: f64) -> Result<()> {
    let t = result.t_test(metric)?;
    let d = decide(t.t, t.dof, alpha)?;
    println!("metric: {metric}");
    println!("t: {:.6}", t.t);
    println!("dof: {}", t.dof);
    println!("p_value: {:.6}", d.p_value);
    println!("critical: {:.6}", d.critical);
    println!("reject: {}", d.reject);
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    if let (Some(a), Some(b)) = (&args.a, &args.b) {
        let mut rows = read_results(File::open(a)?)?.rows;
        rows.iter_mut().for_each(|r| r.arm = "A".into());
        let mut rb = read_results(File::open(b)?)?.rows;
        rb.iter_mut().for_each(|r| r.arm = "B".into());
        rows.extend(rb);
        let result = ExperimentResult { rows };
        return report_test(&result, args.metric.as_deref().unwrap_or("spend"), args.alpha.unwrap_or(0.05));
    }
    let path = args.config.as_ref().ok_or_else(|| Error::Config("experiment needs --config or --a/--b".into()))?;
    let run = load_config(path)?;
    let x = run.experiment.ok_or_else(|| Error::Config("config has no [experiment] section".into()))?;
    let control = Strategy::scaled(run.sim.arm.controller.clone(), run.sim.arm.bid_multiplier);
    let treatment = Strategy::scaled(run.sim.arm.controller.clone(), run.sim.arm.bid_multiplier * x.treatment_multiplier);
    let result = match x.design {
        Design::BudgetSplit => budget_split_run(&run.sim, &control, &treatment, x.replicas, x.seed)?,
        Design::CampaignSplit => campaign_split_run(&run.sim, &control, &treatment, x.replicas, x.seed)?,
    };
    if let Some(out) = &args.out {
        write_results(&result, open_out(Some(out))?)?;
    }
    report_test(&result, args.metric.as_deref().unwrap_or(&x.metric), args.alpha.unwrap_or(x.alpha))
}

/// Runs the CLI on `argv` (program name first). Exit codes: 0 success,
/// 2 usage or config error, 1 any other failure.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Replay(a) => replay(a),
        Command::InitBid(a) => init_bid(a),
        Command::Shade(a) => shade(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}
