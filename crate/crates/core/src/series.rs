//! Dated price series and the aligned matrix of simple returns built from them.

use std::collections::BTreeSet;

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stats;

/// Adjusted closing prices of one asset, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset_id: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let asset_id = asset_id.into();
        if asset_id.trim().is_empty() {
            return Err(Error::validation("asset id must not be empty"));
        }
        if observations.is_empty() {
            return Err(Error::validation(format!("series `{asset_id}` has no observations")));
        }
        for w in observations.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::validation(format!(
                    "series `{asset_id}`: dates not strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((date, close)) = observations.iter().find(|(_, c)| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::validation(format!(
                "series `{asset_id}`: close {close} on {date} is not a positive number"
            )));
        }
        Ok(PriceSeries { asset_id, observations })
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.observations[0].0
    }

    pub fn last_date(&self) -> NaiveDate {
        self.observations[self.observations.len() - 1].0
    }

    pub fn close_on(&self, date: NaiveDate) -> Option<f64> {
        self.observations
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.observations[i].1)
    }

    /// Most recent observation dated on or before `date`.
    pub fn close_at_or_before(&self, date: NaiveDate) -> Option<(NaiveDate, f64)> {
        let idx = self.observations.partition_point(|(d, _)| *d <= date);
        idx.checked_sub(1).map(|i| self.observations[i])
    }

    /// Observations with `from <= date < until`.
    pub fn slice(&self, from: NaiveDate, until: NaiveDate) -> Vec<(NaiveDate, f64)> {
        self.observations
            .iter()
            .copied()
            .filter(|(d, _)| *d >= from && *d < until)
            .collect()
    }
}

/// `m x n` simple returns (rows are periods, columns are assets) with per-asset means.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    assets: Vec<String>,
    dates: Vec<NaiveDate>,
    returns: DMatrix<f64>,
    means: DVector<f64>,
}

impl ReturnMatrix {
    pub fn new(assets: Vec<String>, dates: Vec<NaiveDate>, returns: DMatrix<f64>) -> Result<Self> {
        let (m, n) = returns.shape();
        if n == 0 || assets.len() != n {
            return Err(Error::domain(format!(
                "return matrix has {n} columns but {} asset ids",
                assets.len()
            )));
        }
        if m == 0 || dates.len() != m {
            return Err(Error::domain(format!(
                "return matrix has {m} rows but {} dates",
                dates.len()
            )));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("return dates must be strictly increasing"));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::domain("returns must be finite"));
        }
        let means = DVector::from_iterator(
            n,
            (0..n).map(|j| stats::mean(returns.column(j).as_slice()).expect("non-empty column")),
        );
        Ok(ReturnMatrix {
            assets,
            dates,
            returns,
            means,
        })
    }

    /// Build from per-asset columns, dating rows on consecutive placeholder days.
    ///
    /// Useful for synthetic universes where only the numbers matter.
    pub fn from_columns(assets: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::domain("return columns have different lengths"));
        }
        let returns = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
        let epoch = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..m as u64)
            .map(|i| epoch.checked_add_days(Days::new(i)).expect("date in range"))
            .collect();
        ReturnMatrix::new(assets, dates, returns)
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    pub fn means(&self) -> &DVector<f64> {
        &self.means
    }

    pub fn n_periods(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let m = self.returns.nrows();
        &self.returns.as_slice()[j * m..(j + 1) * m]
    }

    pub fn asset_index(&self, asset: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == asset)
    }
}

/// Dates shared by every series, or an alignment error naming the first series
/// at which fewer than two common dates remain.
pub fn common_dates(prices: &[PriceSeries]) -> Result<Vec<NaiveDate>> {
    let first = prices.first().ok_or_else(|| Error::domain("no price series given"))?;
    let mut common: BTreeSet<NaiveDate> = first.observations.iter().map(|(d, _)| *d).collect();
    if common.len() < 2 {
        return Err(Error::Alignment {
            series: first.asset_id.clone(),
        });
    }
    for series in &prices[1..] {
        let dates: BTreeSet<NaiveDate> = series.observations.iter().map(|(d, _)| *d).collect();
        common = common.intersection(&dates).copied().collect();
        if common.len() < 2 {
            return Err(Error::Alignment {
                series: series.asset_id.clone(),
            });
        }
    }
    Ok(common.into_iter().collect())
}

/// Simple returns `(p_i - p_{i-1}) / p_{i-1}` on the inner join of all series' dates.
///
/// The first aligned date is consumed as the base, so `k` aligned prices give `k - 1` rows.
pub fn simple_returns(prices: &[PriceSeries]) -> Result<ReturnMatrix> {
    let dates = common_dates(prices)?;
    let mut seen = BTreeSet::new();
    for s in prices {
        if !seen.insert(s.asset_id.as_str()) {
            return Err(Error::validation(format!("duplicate asset id `{}`", s.asset_id)));
        }
    }
    let aligned: Vec<Vec<f64>> = prices
        .iter()
        .map(|s| {
            dates
                .iter()
                .map(|d| s.close_on(*d).expect("date is common to all series"))
                .collect()
        })
        .collect();
    let m = dates.len() - 1;
    let returns = DMatrix::from_fn(m, prices.len(), |i, j| {
        let prev = aligned[j][i];
        (aligned[j][i + 1] - prev) / prev
    });
    ReturnMatrix::new(
        prices.iter().map(|s| s.asset_id.clone()).collect(),
        dates[1..].to_vec(),
        returns,
    )
}
