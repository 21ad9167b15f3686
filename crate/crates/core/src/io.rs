//! CSV ingestion and serialization.
//!
//! Price files are wide: a `date` column followed by one close column per asset.
//! An empty cell means the asset did not trade that day. The comma locale reads
//! files shaped like Brazilian spreadsheets: `;` separators, `,` decimals, `.`
//! thousands separators and optional `R$` prefixes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::backtest::InjectedTarget;
use crate::error::{Error, Result};
use crate::quota::QuotaLedger;
use crate::report::format_number;
use crate::series::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Locale {
    /// `,` separated, `.` decimal.
    #[default]
    Dot,
    /// `;` separated, `,` decimal, `.` thousands.
    Comma,
}

impl Locale {
    pub fn delimiter(self) -> u8 {
        match self {
            Locale::Dot => b',',
            Locale::Comma => b';',
        }
    }

    pub fn parse_number(self, raw: &str) -> Option<f64> {
        let mut s = raw.trim().replace("R$", "");
        s.retain(|c| !c.is_whitespace());
        if let Locale::Comma = self {
            s = s.replace('.', "").replace(',', ".");
        }
        if s.is_empty() {
            return None;
        }
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    pub fn format_number(self, v: f64, precision: Option<usize>) -> String {
        let s = format_number(v, precision);
        match self {
            Locale::Dot => s,
            Locale::Comma => s.replace('.', ","),
        }
    }
}

impl std::str::FromStr for Locale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" | "en" | "c" => Ok(Locale::Dot),
            "comma" | "pt" | "pt-br" | "br" => Ok(Locale::Comma),
            other => Err(Error::validation(format!(
                "unknown locale `{other}` (use dot or comma)"
            ))),
        }
    }
}

/// ISO `yyyy-mm-dd`, or `dd/mm/yyyy` with two-digit years read as 20yy.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    let mut parts = s.split('/');
    let (d, m, y) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let mut year: i32 = y.parse().ok()?;
    if y.len() <= 2 {
        year += 2000;
    }
    NaiveDate::from_ymd_opt(year, m.parse().ok()?, d.parse().ok()?)
}

fn reader<R: Read>(input: R, locale: Locale) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(locale.delimiter())
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    let h = rdr.headers()?;
    if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
        return Err(Error::validation("empty file"));
    }
    Ok(h.iter().map(str::to_string).collect())
}

fn row_date(record: &csv::StringRecord, prev: Option<NaiveDate>) -> Result<NaiveDate> {
    let line = line_of(record);
    let date = parse_date(&record[0]).ok_or_else(|| parse_error(line, format!("unparseable date `{}`", &record[0])))?;
    if let Some(p) = prev {
        if date <= p {
            return Err(Error::validation(format!(
                "line {line}: dates must be strictly increasing ({date} after {p})"
            )));
        }
    }
    Ok(date)
}

/// Parse a wide price table into one series per asset column.
pub fn read_prices<R: Read>(input: R, locale: Locale) -> Result<Vec<PriceSeries>> {
    let mut rdr = reader(input, locale);
    let header = headers(&mut rdr)?;
    if header.len() < 2 {
        return Err(Error::validation(
            "price file needs a date column and at least one asset",
        ));
    }
    let assets = &header[1..];
    let mut seen = std::collections::BTreeSet::new();
    for a in assets {
        if a.is_empty() || !seen.insert(a.as_str()) {
            return Err(Error::validation(format!("empty or duplicate asset column `{a}`")));
        }
    }
    let mut columns: Vec<Vec<(NaiveDate, f64)>> = vec![Vec::new(); assets.len()];
    let mut prev = None;
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date = row_date(&record, prev)?;
        prev = Some(date);
        for (j, cell) in record.iter().skip(1).enumerate() {
            if cell.is_empty() {
                continue;
            }
            let v = locale
                .parse_number(cell)
                .ok_or_else(|| parse_error(line, format!("unparseable price `{cell}` for {}", assets[j])))?;
            if !(v > 0.0) {
                return Err(parse_error(
                    line,
                    format!("price for {} must be positive, got {v}", assets[j]),
                ));
            }
            columns[j].push((date, v));
        }
    }
    if prev.is_none() {
        return Err(Error::validation("price file has no data rows"));
    }
    assets
        .iter()
        .zip(columns)
        .map(|(a, obs)| PriceSeries::new(a.clone(), obs))
        .collect()
}

pub fn ingest_prices(path: &Path, locale: Locale) -> Result<Vec<PriceSeries>> {
    read_prices(open(path)?, locale)
}

fn writer<W: Write>(out: W, locale: Locale) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(locale.delimiter()).from_writer(out)
}

/// Write series in the wide layout read by [`read_prices`]. Full precision round-trips.
pub fn write_prices<W: Write>(out: W, series: &[PriceSeries], locale: Locale) -> Result<()> {
    let mut w = writer(out, locale);
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.asset_id().to_string()));
    w.write_record(&header)?;
    let mut rows: BTreeMap<NaiveDate, Vec<String>> = BTreeMap::new();
    for (j, s) in series.iter().enumerate() {
        for (d, v) in s.observations() {
            rows.entry(*d).or_insert_with(|| vec![String::new(); series.len()])[j] = locale.format_number(*v, None);
        }
    }
    for (d, cells) in rows {
        let mut rec = vec![d.to_string()];
        rec.extend(cells);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn strip_target_prefix(h: &str) -> &str {
    for p in ["ps_", "PS_", "ps-", "PS-", "Ps-", "Ps_"] {
        if let Some(rest) = h.strip_prefix(p) {
            return rest;
        }
    }
    h
}

/// Parse `date,ps_<asset>,...` rows of target percentages, reordered to `assets`.
pub fn read_injected_targets<R: Read>(input: R, assets: &[String], locale: Locale) -> Result<Vec<InjectedTarget>> {
    let mut rdr = reader(input, locale);
    let header = headers(&mut rdr)?;
    let names: Vec<&str> = header.iter().skip(1).map(|h| strip_target_prefix(h)).collect();
    let order = assets
        .iter()
        .map(|a| {
            names
                .iter()
                .position(|n| n == a)
                .ok_or_else(|| Error::validation(format!("injected targets have no column for `{a}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    let mut prev = None;
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date = row_date(&record, prev)?;
        prev = Some(date);
        let percentages = order
            .iter()
            .map(|&k| {
                let cell = &record[k + 1];
                locale
                    .parse_number(cell.trim_end_matches('%'))
                    .ok_or_else(|| parse_error(line, format!("unparseable percentage `{cell}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(InjectedTarget { date, percentages });
    }
    if out.is_empty() {
        return Err(Error::validation("injected targets file has no data rows"));
    }
    Ok(out)
}

pub fn load_injected_targets(path: &Path, assets: &[String], locale: Locale) -> Result<Vec<InjectedTarget>> {
    read_injected_targets(open(path)?, assets, locale)
}

/// Build a quota ledger from `date,return,flow` or `date,<price>,flow` rows.
///
/// The first row opens the ledger with its flow. With a price column, each return
/// is the change in price since the previous row. Empty flow cells mean no flow.
pub fn read_quota_input<R: Read>(input: R, locale: Locale) -> Result<QuotaLedger> {
    let mut rdr = reader(input, locale);
    let header = headers(&mut rdr)?;
    if header.len() != 3 {
        return Err(Error::validation(
            "quota input needs exactly three columns: date, return or price, flow",
        ));
    }
    let by_return = header[1].eq_ignore_ascii_case("return");
    let mut ledger: Option<QuotaLedger> = None;
    let mut prev_date = None;
    let mut prev_price = None;
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date = row_date(&record, prev_date)?;
        prev_date = Some(date);
        let flow = if record[2].is_empty() {
            0.0
        } else {
            locale
                .parse_number(&record[2])
                .ok_or_else(|| parse_error(line, format!("unparseable flow `{}`", &record[2])))?
        };
        let value = if record[1].is_empty() {
            None
        } else {
            Some(
                locale
                    .parse_number(&record[1])
                    .ok_or_else(|| parse_error(line, format!("unparseable value `{}`", &record[1])))?,
            )
        };
        let at_line = |e: Error| parse_error(line, e.to_string());
        match ledger.as_mut() {
            None => {
                ledger = Some(QuotaLedger::open(date, flow).map_err(at_line)?);
                if !by_return {
                    prev_price = Some(value.ok_or_else(|| parse_error(line, "missing price"))?);
                }
            }
            Some(l) => {
                let r = if by_return {
                    value.unwrap_or(0.0)
                } else {
                    let p = value.ok_or_else(|| parse_error(line, "missing price"))?;
                    let r = p / prev_price.expect("set on the opening row") - 1.0;
                    prev_price = Some(p);
                    r
                };
                l.apply_day(date, r, flow).map_err(at_line)?;
            }
        }
    }
    ledger.ok_or_else(|| Error::validation("quota input has no data rows"))
}

pub fn load_quota_input(path: &Path, locale: Locale) -> Result<QuotaLedger> {
    read_quota_input(open(path)?, locale)
}

pub fn write_quota_ledger<W: Write>(
    out: W,
    ledger: &QuotaLedger,
    precision: Option<usize>,
    locale: Locale,
) -> Result<()> {
    let mut w = writer(out, locale);
    w.write_record(["date", "return", "flow", "quota_value", "quota_count", "capital"])?;
    let f = |v: f64| locale.format_number(v, precision);
    for e in ledger.entries() {
        w.write_record([
            e.date.to_string(),
            f(e.portfolio_return),
            f(e.flow),
            f(e.quota_value),
            f(e.quota_count),
            f(e.capital),
        ])?;
    }
    w.flush()?;
    Ok(())
}
