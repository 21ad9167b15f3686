use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use portfolio_core::backtest::{self, ContributionRule, NaiveMode, StrategyConfig};
use portfolio_core::config::RunConfig;
use portfolio_core::io::{self, Locale};
use portfolio_core::stats::{self, Normalization};
use portfolio_core::{frontier, report, series, Allocation, Error, PriceSeries, Result};

#[derive(Parser, Debug)]
#[command(
    name = "portfolio",
    version,
    about = "Mean-variance portfolio analysis and contribution backtests"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Input CSV (prices, or quota flows for `quota`)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Directory for report files
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Decimals in reports; full precision when omitted
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// Number format of input files: dot or comma
    #[arg(long, global = true)]
    locale: Option<String>,
    /// key = value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated subset of asset columns to use, in order
    #[arg(long, global = true)]
    assets: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Return statistics, covariance and correlation
    Stats {
        /// Portfolio weights (comma-separated, summing to 1)
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, value_enum)]
        normalization: Option<NormArg>,
    },
    /// Efficient frontier samples and constants
    Frontier {
        #[arg(long, value_enum)]
        normalization: Option<NormArg>,
    },
    /// Minimum-risk portfolio
    MinRisk {
        #[arg(long, value_enum)]
        normalization: Option<NormArg>,
    },
    /// Monthly-contribution backtest
    Backtest {
        /// Contribution rule (required, here or in the config file)
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        /// CSV of `date,ps_<asset>,...` target percentages
        #[arg(long)]
        injected_targets: Option<PathBuf>,
        /// How the naive rule picks an asset (default below-half)
        #[arg(long, value_enum)]
        naive_mode: Option<NaiveModeArg>,
        /// Opening purchase (default 1000)
        #[arg(long)]
        initial_contribution: Option<f64>,
        /// Amount invested each following month (default 400)
        #[arg(long)]
        monthly_contribution: Option<f64>,
        /// Trailing months of returns behind each Markowitz decision (default 12)
        #[arg(long)]
        warmup_months: Option<u32>,
        /// First month of the simulation (YYYY-MM-DD); defaults to the first month with a full warmup window
        #[arg(long)]
        start_date: Option<String>,
        /// Last day simulated (YYYY-MM-DD); defaults to the end of the data
        #[arg(long)]
        end_date: Option<String>,
    },
    /// Quota ledger from `date,return,flow` or `date,<price>,flow` rows
    Quota,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormArg {
    Population,
    Sample,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RuleArg {
    Naive,
    Markowitz,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NaiveModeArg {
    BelowHalf,
    LowestClose,
}

impl std::fmt::Display for NormArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormArg::Population => "population",
            NormArg::Sample => "sample",
        })
    }
}

impl std::fmt::Display for RuleArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RuleArg::Naive => "naive",
            RuleArg::Markowitz => "markowitz",
        })
    }
}

impl std::fmt::Display for NaiveModeArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NaiveModeArg::BelowHalf => "below-half",
            NaiveModeArg::LowestClose => "lowest-close",
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let g = &cli.global;
    cfg.set("input", g.input.as_ref().map(|p| p.display()));
    cfg.set("out_dir", g.out_dir.as_ref().map(|p| p.display()));
    cfg.set("precision", g.precision);
    cfg.set("locale", g.locale.as_ref());
    cfg.set("assets", g.assets.as_ref());

    let precision: Option<usize> = cfg.get_parsed("precision")?;
    let locale: Locale = cfg.get_parsed("locale")?.unwrap_or_default();
    let out_dir = cfg.path("out_dir").unwrap_or_else(|| PathBuf::from("."));
    let input = cfg
        .path("input")
        .ok_or_else(|| Error::Validation("no input file given (--input)".into()))?;

    match cli.command {
        Command::Quota => {
            let ledger = io::load_quota_input(&input, locale)?;
            let path = out_dir.join("quota.csv");
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(e.to_string()))?;
            report::write_quota_report(create(&path)?, &ledger, precision)?;
            let f = |v: f64| report::format_number(v, precision);
            println!("quota_return = {}", f(ledger.quota_return()?));
            match ledger.capital_return() {
                Ok(v) => println!("capital_return = {}", f(v)),
                Err(e) => println!("capital_return = n/a ({e})"),
            }
            if ledger.len() > 1 {
                println!("risk = {}", f(ledger.risk()?));
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Stats { weights, normalization } => {
            cfg.set("weights", weights);
            cfg.set("normalization", normalization);
            let prices = load_prices(&input, locale, &cfg)?;
            let r = series::simple_returns(&prices)?;
            let cov = stats::covariance_matrix_with(&r, normalization_of(&cfg)?)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(e.to_string()))?;
            let path = out_dir.join("stats.csv");
            report::write_stats(create(&path)?, &r, &cov, precision)?;
            println!("wrote {}", path.display());
            if let Some(w) = cfg.list("weights") {
                let w = w
                    .iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::Validation(format!("bad weight `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let x = Allocation::new(r.assets().to_vec(), w)?;
                let p = frontier::portfolio_return_series(&r, &x)?;
                let path = out_dir.join("portfolio_returns.csv");
                report::write_portfolio_returns(create(&path)?, &r, &p, precision)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Frontier { normalization } => {
            cfg.set("normalization", normalization);
            let prices = load_prices(&input, locale, &cfg)?;
            let r = series::simple_returns(&prices)?;
            let cov = stats::covariance_matrix_with(&r, normalization_of(&cfg)?)?;
            let f = frontier::frontier_constants(r.means().as_slice(), &cov)?;
            let grid = frontier::report_grid(&f);
            for p in report::emit_frontier_report(&out_dir, &f, &grid, precision)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::MinRisk { normalization } => {
            cfg.set("normalization", normalization);
            let prices = load_prices(&input, locale, &cfg)?;
            let r = series::simple_returns(&prices)?;
            let cov = stats::covariance_matrix_with(&r, normalization_of(&cfg)?)?;
            let f = frontier::frontier_constants(r.means().as_slice(), &cov)?;
            let mr = frontier::min_risk_portfolio(&f)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io(e.to_string()))?;
            let path = out_dir.join("min_risk.csv");
            report::write_min_risk(create(&path)?, &mr, precision)?;
            report::write_min_risk(std::io::stdout().lock(), &mr, precision)?;
            Ok(())
        }
        Command::Backtest {
            rule,
            injected_targets,
            naive_mode,
            initial_contribution,
            monthly_contribution,
            warmup_months,
            start_date,
            end_date,
        } => {
            cfg.set("rule", rule);
            cfg.set("injected_targets", injected_targets.as_ref().map(|p| p.display()));
            cfg.set("naive_mode", naive_mode);
            cfg.set("initial_contribution", initial_contribution);
            cfg.set("monthly_contribution", monthly_contribution);
            cfg.set("warmup_months", warmup_months);
            cfg.set("start_date", start_date);
            cfg.set("end_date", end_date);
            backtest_command(&cfg, &input, locale, &out_dir, precision)
        }
    }
}

fn backtest_command(
    cfg: &RunConfig,
    input: &Path,
    locale: Locale,
    out_dir: &Path,
    precision: Option<usize>,
) -> Result<()> {
    let prices = load_prices(input, locale, cfg)?;
    let assets: Vec<String> = prices.iter().map(|s| s.asset_id().to_string()).collect();
    let injected = match cfg.path("injected_targets") {
        Some(p) => Some(io::load_injected_targets(&p, &assets, locale)?),
        None => None,
    };
    let rule = match (cfg.get("rule"), injected.is_some()) {
        (Some("naive"), _) => ContributionRule::Naive,
        (Some("markowitz"), false) => ContributionRule::Markowitz,
        (Some("markowitz"), true) => ContributionRule::MarkowitzWithInjectedTargets,
        (Some(other), _) => return Err(Error::Validation(format!("unknown rule `{other}`"))),
        (None, _) => return Err(Error::Validation("backtest needs --rule".into())),
    };
    if injected.is_some() && rule == ContributionRule::Naive {
        return Err(Error::Validation(
            "injected targets only apply to the markowitz rule".into(),
        ));
    }
    let first = prices
        .iter()
        .map(|s| s.first_date())
        .min()
        .expect("at least one series");
    let mut sc = StrategyConfig::new(rule, first);
    if let Some(v) = cfg.get_parsed("initial_contribution")? {
        sc.initial_contribution = v;
    }
    if let Some(v) = cfg.get_parsed("monthly_contribution")? {
        sc.monthly_contribution = v;
    }
    if let Some(v) = cfg.get_parsed("warmup_months")? {
        sc.warmup_months = v;
    }
    sc.start_date = match cfg.get("start_date") {
        Some(s) => parse_date(s)?,
        None => default_start(first, rule, sc.warmup_months),
    };
    sc.end_date = cfg.get("end_date").map(parse_date).transpose()?;
    sc.naive_mode = match cfg.get("naive_mode") {
        None | Some("below-half") => NaiveMode::BelowHalf,
        Some("lowest-close") => NaiveMode::LowestClose,
        Some(other) => return Err(Error::Validation(format!("unknown naive mode `{other}`"))),
    };
    let state = backtest::run_backtest(&prices, &sc, injected.as_deref())?;
    let prefix = match rule {
        ContributionRule::Naive => "naive_",
        _ => "markowitz_",
    };
    for p in report::emit_backtest_report(out_dir, prefix, &state, precision)? {
        println!("wrote {}", p.display());
    }
    for m in state.ledger.iter().filter(|m| m.warning.is_some()) {
        eprintln!("warning: {}: {}", m.date, m.warning.as_deref().unwrap_or_default());
    }
    Ok(())
}

/// Without an explicit start, the Markowitz rule waits for a full warmup window.
/// Markowitz runs start on the first month with a full warmup window behind it.
fn default_start(first: NaiveDate, rule: ContributionRule, warmup_months: u32) -> NaiveDate {
    match rule {
        ContributionRule::Markowitz => first
            .checked_add_months(chrono::Months::new(warmup_months))
            .and_then(|d| chrono::Datelike::with_day(&d, 1))
            .unwrap_or(first),
        _ => first,
    }
}

fn parse_date(s: &str) -> Result<NaiveDate> {
    io::parse_date(s).ok_or_else(|| Error::Validation(format!("bad date `{s}`")))
}

fn normalization_of(cfg: &RunConfig) -> Result<Normalization> {
    match cfg.get("normalization") {
        None | Some("population") => Ok(Normalization::Population),
        Some("sample") => Ok(Normalization::Sample),
        Some(other) => Err(Error::Validation(format!("unknown normalization `{other}`"))),
    }
}

fn load_prices(path: &Path, locale: Locale, cfg: &RunConfig) -> Result<Vec<PriceSeries>> {
    let all = io::ingest_prices(path, locale)?;
    match cfg.list("assets") {
        None => Ok(all),
        Some(wanted) => wanted
            .iter()
            .map(|a| {
                all.iter()
                    .find(|s| s.asset_id() == a)
                    .cloned()
                    .ok_or_else(|| Error::Validation(format!("asset `{a}` not found in {}", path.display())))
            })
            .collect(),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
