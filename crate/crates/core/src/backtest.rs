//! Periodic-contribution backtest.
//!
//! An initial contribution is split across the assets on the first trading day
//! of the start month. On the first trading day of every later month a fixed
//! contribution buys a single asset, picked either by the naive rule (the asset
//! furthest below an equal split) or by the Markowitz rule (the asset furthest
//! below the minimum-risk allocation estimated on a trailing window). Shares are
//! fractional, so no cash is ever left over.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Months, NaiveDate};
use log::warn;

use crate::error::{Error, Result};
use crate::frontier::{self, Allocation};
use crate::quota::{BalanceObservation, QuotaLedger};
use crate::series::{self, PriceSeries, ReturnMatrix};
use crate::stats;

/// A price older than this many trading days is a data gap, not a holiday.
pub const MAX_GAP_TRADING_DAYS: usize = 10;

/// Percent vectors must sum to 100 within this tolerance.
pub const PERCENT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionRule {
    Naive,
    Markowitz,
    /// Markowitz decisions against externally supplied target percentages.
    MarkowitzWithInjectedTargets,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NaiveMode {
    /// Buy the asset whose share of the portfolio is furthest below an equal split.
    #[default]
    BelowHalf,
    /// Buy the asset with the lowest previous month-end close.
    LowestClose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub rule: ContributionRule,
    pub naive_mode: NaiveMode,
    pub initial_contribution: f64,
    pub monthly_contribution: f64,
    /// Length of the trailing estimation window, in calendar months.
    pub warmup_months: u32,
    pub start_date: NaiveDate,
    pub end_date: Option<NaiveDate>,
}

impl StrategyConfig {
    /// R$ 1.000 up front, R$ 400 a month, twelve-month window.
    pub fn new(rule: ContributionRule, start_date: NaiveDate) -> Self {
        StrategyConfig {
            rule,
            naive_mode: NaiveMode::BelowHalf,
            initial_contribution: 1000.0,
            monthly_contribution: 400.0,
            warmup_months: 12,
            start_date,
            end_date: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_contribution.is_finite() && self.initial_contribution > 0.0) {
            return Err(Error::validation("initial contribution must be positive"));
        }
        if !(self.monthly_contribution.is_finite() && self.monthly_contribution >= 0.0) {
            return Err(Error::validation("monthly contribution must be non-negative"));
        }
        if self.warmup_months == 0 {
            return Err(Error::validation("warmup must be at least one month"));
        }
        if let Some(end) = self.end_date {
            if end < self.start_date {
                return Err(Error::validation("end date precedes start date"));
            }
        }
        Ok(())
    }
}

/// Target percentages for the month containing `date`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedTarget {
    pub date: NaiveDate,
    pub percentages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonthRecord {
    /// Trade date: first trading day of the month.
    pub date: NaiveDate,
    /// Last trading day of the month.
    pub month_end: NaiveDate,
    pub chosen_asset: Option<String>,
    pub contribution: f64,
    /// Portfolio percentages at decision time (P).
    pub current_shares: Vec<f64>,
    /// Target percentages (PS). Empty when no target could be computed.
    pub suggested_shares: Vec<f64>,
    /// `current − suggested` (DP).
    pub percent_gaps: Vec<f64>,
    pub trade_closes: Vec<f64>,
    pub month_end_closes: Vec<f64>,
    pub holdings_after: Vec<f64>,
    /// Patrimony at the month-end closes.
    pub patrimony_after: f64,
    pub warning: Option<String>,
}

/// Daily mark-to-market, used to build the strategy's quota ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyValuation {
    pub date: NaiveDate,
    pub patrimony_before_flow: f64,
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestState {
    pub assets: Vec<String>,
    /// Share counts, aligned with `assets`.
    pub holdings: Vec<f64>,
    /// Always zero: fractional shares absorb every contribution.
    pub cash: f64,
    pub ledger: Vec<MonthRecord>,
    pub daily: Vec<DailyValuation>,
    pub contributed: f64,
}

impl BacktestState {
    pub fn empty(assets: Vec<String>) -> Self {
        let n = assets.len();
        BacktestState {
            assets,
            holdings: vec![0.0; n],
            cash: 0.0,
            ledger: Vec::new(),
            daily: Vec::new(),
            contributed: 0.0,
        }
    }

    pub fn holding(&self, asset: &str) -> Option<f64> {
        self.assets.iter().position(|a| a == asset).map(|j| self.holdings[j])
    }

    pub fn value_at(&self, closes: &[f64]) -> f64 {
        self.holdings.iter().zip(closes).map(|(h, c)| h * c).sum()
    }

    pub fn final_patrimony(&self) -> f64 {
        self.ledger.last().map_or(0.0, |r| r.patrimony_after)
    }

    /// Quota ledger of the strategy, with contributions as flows.
    pub fn quota_ledger(&self) -> Result<QuotaLedger> {
        let obs: Vec<BalanceObservation> = self
            .daily
            .iter()
            .map(|d| BalanceObservation {
                date: d.date,
                balance: d.patrimony_before_flow,
                flow: d.flow,
            })
            .collect();
        QuotaLedger::from_balances(&obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContributionSplit {
    pub contributed: f64,
    pub growth: f64,
    pub percent_contributed: f64,
    pub percent_growth: f64,
}

impl ContributionSplit {
    pub fn from_totals(contributed: f64, final_patrimony: f64) -> Self {
        let growth = final_patrimony - contributed;
        let (pc, pg) = if final_patrimony > 0.0 {
            (100.0 * contributed / final_patrimony, 100.0 * growth / final_patrimony)
        } else {
            (0.0, 0.0)
        };
        ContributionSplit {
            contributed,
            growth,
            percent_contributed: pc,
            percent_growth: pg,
        }
    }
}

pub fn contribution_vs_interest_split(state: &BacktestState) -> ContributionSplit {
    ContributionSplit::from_totals(state.contributed, state.final_patrimony())
}

/// Minimum-risk allocation estimated on a window of daily returns.
pub fn suggested_allocation(window: &ReturnMatrix) -> Result<Allocation> {
    let cov = stats::covariance_matrix(window)?;
    frontier::min_variance_allocation(&cov)
}

fn check_percentages(v: &[f64], what: &str) -> Result<()> {
    let sum: f64 = v.iter().sum();
    if (sum - 100.0).abs() > PERCENT_SUM_TOL * 100.0 {
        return Err(Error::validation(format!(
            "{what} percentages sum to {sum}, expected 100"
        )));
    }
    Ok(())
}

/// Index of the asset furthest below its target (most negative `current − suggested`).
/// Ties go to the lowest index.
pub fn choose_asset_markowitz(current: &[f64], suggested: &[f64]) -> Result<usize> {
    if current.len() != suggested.len() || current.is_empty() {
        return Err(Error::domain("percent vectors must be non-empty and of equal length"));
    }
    check_percentages(current, "current")?;
    check_percentages(suggested, "suggested")?;
    Ok(argmin(current.iter().zip(suggested).map(|(c, s)| c - s)))
}

/// Index of the asset to buy under the naive rule, given the previous month-end closes.
pub fn choose_asset_naive(state: &BacktestState, prev_month_close: &[f64], mode: NaiveMode) -> usize {
    match mode {
        NaiveMode::LowestClose => argmin(prev_month_close.iter().copied()),
        NaiveMode::BelowHalf => {
            // Furthest below an equal split is the smallest position by value.
            argmin(state.holdings.iter().zip(prev_month_close).map(|(h, c)| h * c))
        }
    }
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn percentages_of(values: &[f64]) -> Vec<f64> {
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        values.iter().map(|v| 100.0 * v / total).collect()
    } else {
        vec![100.0 / values.len() as f64; values.len()]
    }
}

/// Union trading calendar with stale-price detection.
struct PriceTable<'a> {
    series: &'a [PriceSeries],
    calendar: Vec<NaiveDate>,
}

impl<'a> PriceTable<'a> {
    fn new(series: &'a [PriceSeries]) -> Self {
        let calendar: BTreeSet<NaiveDate> = series
            .iter()
            .flat_map(|s| s.observations().iter().map(|(d, _)| *d))
            .collect();
        PriceTable {
            series,
            calendar: calendar.into_iter().collect(),
        }
    }

    fn close(&self, asset: usize, idx: usize) -> Result<f64> {
        let date = self.calendar[idx];
        let s = &self.series[asset];
        let (seen, close) = s
            .close_at_or_before(date)
            .ok_or_else(|| Error::validation(format!("no price for `{}` on or before {date}", s.asset_id())))?;
        let pos = self.calendar.partition_point(|d| *d < seen);
        let gap = idx - pos;
        if gap > MAX_GAP_TRADING_DAYS {
            return Err(Error::DataGap {
                asset: s.asset_id().to_string(),
                date,
                trading_days: gap,
            });
        }
        Ok(close)
    }

    fn closes(&self, idx: usize) -> Result<Vec<f64>> {
        (0..self.series.len()).map(|j| self.close(j, idx)).collect()
    }

    /// Daily returns of every asset over `[from, until)`.
    fn window(&self, from: NaiveDate, until: NaiveDate) -> Result<ReturnMatrix> {
        let sliced = self
            .series
            .iter()
            .map(|s| PriceSeries::new(s.asset_id(), s.slice(from, until)))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::validation(format!("no price history between {from} and {until}")))?;
        series::simple_returns(&sliced)
    }
}

fn month_start(d: NaiveDate) -> NaiveDate {
    d.with_day(1).expect("day 1 exists")
}

fn month_key(d: NaiveDate) -> (i32, u32) {
    (d.year(), d.month())
}

fn injected_map(targets: Option<&[InjectedTarget]>, n: usize) -> Result<BTreeMap<(i32, u32), Vec<f64>>> {
    let mut map = BTreeMap::new();
    for t in targets.unwrap_or_default() {
        if t.percentages.len() != n {
            return Err(Error::validation(format!(
                "injected target for {} has {} entries, expected {n}",
                t.date,
                t.percentages.len()
            )));
        }
        check_percentages(&t.percentages, "injected")?;
        if map.insert(month_key(t.date), t.percentages.clone()).is_some() {
            return Err(Error::validation(format!(
                "more than one injected target for {}-{:02}",
                t.date.year(),
                t.date.month()
            )));
        }
    }
    Ok(map)
}

/// Run the strategy over every month from `config.start_date` to the end of the data
/// (or `config.end_date`).
pub fn run_backtest(
    prices: &[PriceSeries],
    config: &StrategyConfig,
    injected_targets: Option<&[InjectedTarget]>,
) -> Result<BacktestState> {
    config.validate()?;
    if prices.is_empty() {
        return Err(Error::validation("no price series given"));
    }
    let assets: Vec<String> = prices.iter().map(|s| s.asset_id().to_string()).collect();
    if assets.iter().collect::<BTreeSet<_>>().len() != assets.len() {
        return Err(Error::validation("duplicate asset ids"));
    }
    let n = assets.len();
    let injected = injected_map(injected_targets, n)?;
    if config.rule == ContributionRule::MarkowitzWithInjectedTargets && injected.is_empty() {
        return Err(Error::validation("rule needs injected targets but none were given"));
    }

    let table = PriceTable::new(prices);
    let end = config.end_date.unwrap_or(NaiveDate::MAX);
    let sim: Vec<usize> = (0..table.calendar.len())
        .filter(|&i| table.calendar[i] >= config.start_date && table.calendar[i] <= end)
        .collect();
    if sim.is_empty() {
        return Err(Error::validation(format!(
            "no trading days between {} and the end of the data",
            config.start_date
        )));
    }
    let mut months: Vec<Vec<usize>> = Vec::new();
    for &i in &sim {
        match months.last_mut() {
            Some(m) if month_key(table.calendar[m[0]]) == month_key(table.calendar[i]) => m.push(i),
            _ => months.push(vec![i]),
        }
    }

    let target_for = |trade_date: NaiveDate| -> Result<Vec<f64>> {
        match config.rule {
            ContributionRule::Naive => Ok(vec![100.0 / n as f64; n]),
            ContributionRule::MarkowitzWithInjectedTargets => {
                injected.get(&month_key(trade_date)).cloned().ok_or_else(|| {
                    Error::validation(format!(
                        "no injected target for {}-{:02}",
                        trade_date.year(),
                        trade_date.month()
                    ))
                })
            }
            ContributionRule::Markowitz => {
                let until = month_start(trade_date);
                let from = until
                    .checked_sub_months(Months::new(config.warmup_months))
                    .ok_or_else(|| Error::validation("warmup window before the calendar start"))?;
                let window = table.window(from, until)?;
                if window.n_periods() < 2 {
                    return Err(Error::validation(format!(
                        "trailing window before {trade_date} has fewer than 2 returns"
                    )));
                }
                Ok(suggested_allocation(&window)?.percentages())
            }
        }
    };

    let mut state = BacktestState::empty(assets.clone());
    let mut prev_month_end_closes: Option<Vec<f64>> = None;

    for days in &months {
        let trade_idx = days[0];
        let trade_date = table.calendar[trade_idx];
        let trade_closes = table.closes(trade_idx)?;
        let mut warning = None;
        let mut chosen = None;
        let mut contribution = 0.0;
        let mut buys = vec![0.0; n];
        let current_shares;
        let mut suggested_shares = Vec::new();

        match &prev_month_end_closes {
            None => {
                // Opening month: split the initial contribution across all assets.
                let target = target_for(trade_date)?;
                let mut split: Vec<f64> = target.iter().map(|p| p.max(0.0)).collect();
                let total: f64 = split.iter().sum();
                if total <= 0.0 {
                    split = vec![1.0; n];
                }
                if split.iter().zip(&target).any(|(s, t)| s != t) {
                    warn!("{trade_date}: short positions in the opening target were dropped");
                }
                let total: f64 = split.iter().sum();
                for j in 0..n {
                    buys[j] = config.initial_contribution * split[j] / total / trade_closes[j];
                }
                contribution = config.initial_contribution;
                current_shares = percentages_of(&split);
                suggested_shares = target;
            }
            Some(prev) => {
                let values: Vec<f64> = state.holdings.iter().zip(prev).map(|(h, c)| h * c).collect();
                current_shares = percentages_of(&values);
                match target_for(trade_date) {
                    Ok(target) => {
                        let j = match config.rule {
                            ContributionRule::Naive => choose_asset_naive(&state, prev, config.naive_mode),
                            _ => choose_asset_markowitz(&current_shares, &target)?,
                        };
                        suggested_shares = target;
                        buys[j] = config.monthly_contribution / trade_closes[j];
                        contribution = config.monthly_contribution;
                        chosen = Some(assets[j].clone());
                    }
                    Err(e) if e.kind() == crate::error::ErrorKind::Numerical => {
                        warn!("{trade_date}: skipping contribution: {e}");
                        warning = Some(e.to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
        }

        for &idx in days {
            let closes = if idx == trade_idx {
                trade_closes.clone()
            } else {
                table.closes(idx)?
            };
            let before = state.value_at(&closes);
            let flow = if idx == trade_idx { contribution } else { 0.0 };
            if idx == trade_idx {
                for (h, b) in state.holdings.iter_mut().zip(&buys) {
                    *h += b;
                }
                state.contributed += contribution;
            }
            state.daily.push(DailyValuation {
                date: table.calendar[idx],
                patrimony_before_flow: before,
                flow,
            });
        }

        let end_idx = *days.last().expect("month has days");
        let month_end_closes = table.closes(end_idx)?;
        let percent_gaps = if suggested_shares.is_empty() {
            Vec::new()
        } else {
            current_shares
                .iter()
                .zip(&suggested_shares)
                .map(|(c, s)| c - s)
                .collect()
        };
        state.ledger.push(MonthRecord {
            date: trade_date,
            month_end: table.calendar[end_idx],
            chosen_asset: chosen,
            contribution,
            current_shares,
            suggested_shares,
            percent_gaps,
            trade_closes,
            patrimony_after: state.value_at(&month_end_closes),
            month_end_closes: month_end_closes.clone(),
            holdings_after: state.holdings.clone(),
            warning,
        });
        prev_month_end_closes = Some(month_end_closes);
    }
    Ok(state)
}
