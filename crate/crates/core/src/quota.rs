//! Unitization of a portfolio.
//!
//! The quota value compounds the portfolio's returns and starts at 1. Deposits
//! and withdrawals buy or redeem quotas at the current quota value, so they
//! change the quota count but never the quota value.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::frontier;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotaEntry {
    pub date: NaiveDate,
    /// Return applied on this date (zero for the opening entry).
    pub portfolio_return: f64,
    /// Deposit (positive) or withdrawal (negative), applied after the return.
    pub flow: f64,
    pub quota_value: f64,
    pub quota_count: f64,
    pub capital: f64,
}

/// One observed balance for reconstructing a ledger from cash-flow data alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceObservation {
    pub date: NaiveDate,
    /// Capital at the end of the period, before this date's flow.
    pub balance: f64,
    pub flow: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuotaLedger {
    entries: Vec<QuotaEntry>,
}

impl QuotaLedger {
    /// Start a ledger with quota value 1 and `initial_deposit` quotas.
    pub fn open(date: NaiveDate, initial_deposit: f64) -> Result<Self> {
        if !(initial_deposit.is_finite() && initial_deposit > 0.0) {
            return Err(Error::domain(format!(
                "initial deposit must be positive, got {initial_deposit}"
            )));
        }
        Ok(QuotaLedger {
            entries: vec![QuotaEntry {
                date,
                portfolio_return: 0.0,
                flow: initial_deposit,
                quota_value: 1.0,
                quota_count: initial_deposit,
                capital: initial_deposit,
            }],
        })
    }

    /// Apply one period: the return moves the quota value, then the flow moves the count.
    ///
    /// On error the ledger is left untouched.
    pub fn apply_day(&mut self, date: NaiveDate, portfolio_return: f64, flow: f64) -> Result<&QuotaEntry> {
        let last = *self
            .entries
            .last()
            .ok_or_else(|| Error::domain("ledger has not been opened"))?;
        if date <= last.date {
            return Err(Error::validation(format!(
                "ledger dates must increase: {date} after {}",
                last.date
            )));
        }
        if !(portfolio_return.is_finite() && portfolio_return > -1.0) {
            return Err(Error::domain(format!(
                "return {portfolio_return} would wipe out the quota"
            )));
        }
        if !flow.is_finite() {
            return Err(Error::domain("flow must be finite"));
        }
        let quota_value = last.quota_value * (1.0 + portfolio_return);
        let capital_before = last.quota_count * quota_value;
        let mut quota_count = last.quota_count;
        if flow != 0.0 {
            if flow < 0.0 && -flow > capital_before * (1.0 + 1e-12) {
                return Err(Error::InsufficientCapital {
                    requested: -flow,
                    available: capital_before,
                });
            }
            quota_count = (quota_count + flow / quota_value).max(0.0);
        }
        self.entries.push(QuotaEntry {
            date,
            portfolio_return,
            flow,
            quota_value,
            quota_count,
            capital: quota_count * quota_value,
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    /// Rebuild a ledger when only period-end balances and flows are known.
    ///
    /// The first observation opens the ledger with its flow; each later return is
    /// `balance_t / (balance_{t-1} + flow_{t-1}) − 1`.
    pub fn from_balances(observations: &[BalanceObservation]) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::domain("no balance observations"))?;
        let mut ledger = QuotaLedger::open(first.date, first.balance + first.flow)?;
        let mut invested = first.balance + first.flow;
        for obs in &observations[1..] {
            if !(invested > 0.0) {
                return Err(Error::domain(format!(
                    "no capital invested before {}; return undefined",
                    obs.date
                )));
            }
            let r = obs.balance / invested - 1.0;
            ledger.apply_day(obs.date, r, obs.flow)?;
            invested = obs.balance + obs.flow;
        }
        Ok(ledger)
    }

    pub fn entries(&self) -> &[QuotaEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&QuotaEntry> {
        self.entries.last()
    }

    pub fn quota_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.quota_value).collect()
    }

    /// Returns applied after the opening entry.
    pub fn period_returns(&self) -> Vec<f64> {
        self.entries.iter().skip(1).map(|e| e.portfolio_return).collect()
    }

    /// Net amount deposited, withdrawals included.
    pub fn net_deposits(&self) -> f64 {
        self.entries.iter().map(|e| e.flow).sum()
    }

    /// `final quota value / initial quota value − 1`
    pub fn quota_return(&self) -> Result<f64> {
        match (self.entries.first(), self.entries.last()) {
            (Some(first), Some(last)) => Ok(last.quota_value / first.quota_value - 1.0),
            _ => Err(Error::domain("quota return of an empty ledger")),
        }
    }

    /// `final capital / net deposits − 1`
    pub fn capital_return(&self) -> Result<f64> {
        let last = self
            .entries
            .last()
            .ok_or_else(|| Error::domain("capital return of an empty ledger"))?;
        let deposited = self.net_deposits();
        if !(deposited > 0.0) {
            return Err(Error::domain(format!(
                "net deposits are {deposited}; capital return undefined"
            )));
        }
        Ok(last.capital / deposited - 1.0)
    }

    /// Population standard deviation of the per-period quota returns.
    pub fn risk(&self) -> Result<f64> {
        stats::stddev_population(&self.period_returns())
    }

    /// Quota return over per-period risk.
    pub fn performance_quotient(&self) -> Result<f64> {
        frontier::performance_quotient(self.quota_return()?, self.risk()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 2, day).unwrap()
    }

    fn worked_example() -> QuotaLedger {
        let mut l = QuotaLedger::open(d(1), 1000.0).unwrap();
        l.apply_day(d(2), 0.10, 300.0).unwrap();
        l.apply_day(d(3), -0.05, 0.0).unwrap();
        l
    }

    #[test]
    fn worked_example_values() {
        let l = worked_example();
        let last = l.last().unwrap();
        assert!((last.quota_value - 1.045).abs() < 1e-12);
        assert!((last.capital - 1330.0).abs() < 1e-9);
        assert!((l.quota_return().unwrap() - 0.045).abs() < 1e-12);
        assert_eq!(format!("{:.3}", l.capital_return().unwrap()), "0.023");
    }

    #[test]
    fn zero_return_zero_flow_keeps_state() {
        let mut l = QuotaLedger::open(d(1), 500.0).unwrap();
        let e = *l.apply_day(d(2), 0.0, 0.0).unwrap();
        assert_eq!((e.quota_value, e.quota_count, e.capital), (1.0, 500.0, 500.0));
        assert_eq!(l.quota_return().unwrap(), 0.0);
        assert_eq!(l.capital_return().unwrap(), 0.0);
    }

    #[test]
    fn overdraft_and_wipeout_are_rejected() {
        let mut l = QuotaLedger::open(d(1), 100.0).unwrap();
        assert!(matches!(
            l.apply_day(d(2), 0.0, -100.01),
            Err(Error::InsufficientCapital { .. })
        ));
        assert!(matches!(l.apply_day(d(2), -1.0, 0.0), Err(Error::Domain(_))));
        assert_eq!(l.len(), 1);
        let e = *l.apply_day(d(2), 0.0, -100.0).unwrap();
        assert_eq!(e.quota_count, 0.0);
    }

    #[test]
    fn dates_must_increase() {
        let mut l = QuotaLedger::open(d(2), 100.0).unwrap();
        assert!(l.apply_day(d(2), 0.01, 0.0).is_err());
        assert!(l.apply_day(d(1), 0.01, 0.0).is_err());
    }

    #[test]
    fn empty_ledger_errors() {
        let mut l = QuotaLedger::default();
        assert!(l.quota_return().is_err());
        assert!(l.capital_return().is_err());
        assert!(l.apply_day(d(1), 0.0, 1.0).is_err());
        assert!(QuotaLedger::open(d(1), 0.0).is_err());
    }

    #[test]
    fn capital_return_needs_positive_deposits() {
        let mut l = QuotaLedger::open(d(1), 100.0).unwrap();
        l.apply_day(d(2), 0.5, -100.0).unwrap();
        assert!(l.capital_return().is_err());
    }

    #[test]
    fn quota_and_capital_returns_diverge_with_midstream_flows() {
        // Two periods: +20%, deposit, then −10%.
        let mut l = QuotaLedger::open(d(1), 100.0).unwrap();
        l.apply_day(d(2), 0.2, 100.0).unwrap();
        l.apply_day(d(3), -0.1, 0.0).unwrap();
        // quota 1.2 * 0.9 = 1.08; capital (120 + 100) * 0.9 = 198 on 200 deposited.
        assert!((l.quota_return().unwrap() - 0.08).abs() < 1e-12);
        assert!((l.capital_return().unwrap() + 0.01).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_from_balances() {
        // Deposit 1000, balance 1100, deposit 300, balance 1330.
        let obs = [
            BalanceObservation {
                date: d(1),
                balance: 0.0,
                flow: 1000.0,
            },
            BalanceObservation {
                date: d(2),
                balance: 1100.0,
                flow: 300.0,
            },
            BalanceObservation {
                date: d(3),
                balance: 1330.0,
                flow: 0.0,
            },
        ];
        let rebuilt = QuotaLedger::from_balances(&obs).unwrap();
        let direct = worked_example();
        for (a, b) in rebuilt.entries().iter().zip(direct.entries()) {
            assert!((a.quota_value - b.quota_value).abs() <= 1e-10 * b.quota_value);
            assert!((a.capital - b.capital).abs() <= 1e-10 * b.capital);
        }
        assert!((rebuilt.entries()[2].portfolio_return + 0.05).abs() < 1e-12);
    }
}
