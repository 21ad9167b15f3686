mod common;

use chrono::Days;
use common::*;
use proptest::prelude::*;

use portfolio_core::io::{self, Locale};
use portfolio_core::quota::QuotaLedger;
use portfolio_core::{Error, PriceSeries};

#[test]
fn april_fixture_shape() {
    let s = io::ingest_prices(&data_path("prices_april_2021.csv"), Locale::Dot).unwrap();
    assert_eq!(s.len(), 3);
    assert!(s.iter().all(|x| x.len() == 6));
    assert_eq!(
        s.iter().map(|x| x.asset_id()).collect::<Vec<_>>(),
        ["IVVB11", "BOVA11", "BBAS3"]
    );
}

#[test]
fn comma_fixture_parses_like_dot_fixture() {
    let dot = io::ingest_prices(&data_path("prices_april_2021.csv"), Locale::Dot).unwrap();
    let comma = io::ingest_prices(&data_path("prices_april_2021_comma.csv"), Locale::Comma).unwrap();
    assert_eq!(dot, comma);
}

#[test]
fn missing_file_is_an_io_error() {
    let e = io::ingest_prices(&data_path("nope.csv"), Locale::Dot).unwrap_err();
    assert!(matches!(e, Error::Io(_)));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn quota_ledger_csv_layout() {
    let mut l = QuotaLedger::open(date(2022, 2, 1), 1000.0).unwrap();
    l.apply_day(date(2022, 2, 2), 0.1, 300.0).unwrap();
    let mut out = Vec::new();
    io::write_quota_ledger(&mut out, &l, Some(2), Locale::Dot).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "date,return,flow,quota_value,quota_count,capital\n\
         2022-02-01,0.00,1000.00,1.00,1000.00,1000.00\n\
         2022-02-02,0.10,300.00,1.10,1272.73,1400.00\n"
    );
}

fn arb_series() -> impl Strategy<Value = Vec<PriceSeries>> {
    (1usize..4, 2usize..30).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(prop::option::weighted(0.85, 1e-3f64..1e5), m), n).prop_map(
            move |cols| {
                cols.into_iter()
                    .enumerate()
                    .map(|(j, col)| {
                        let mut obs: Vec<_> = col
                            .into_iter()
                            .enumerate()
                            .filter_map(|(i, v)| v.map(|v| (date(2020, 1, 1) + Days::new(i as u64), v)))
                            .collect();
                        if obs.is_empty() {
                            obs.push((date(2020, 1, 1), 1.0));
                        }
                        PriceSeries::new(format!("S{j}"), obs).unwrap()
                    })
                    .collect()
            },
        )
    })
}

proptest! {
    #[test]
    fn write_then_read_is_identity(series in arb_series(), comma in any::<bool>()) {
        let locale = if comma { Locale::Comma } else { Locale::Dot };
        let mut buf = Vec::new();
        io::write_prices(&mut buf, &series, locale).unwrap();
        let back = io::read_prices(buf.as_slice(), locale).unwrap();
        prop_assert_eq!(back, series);
    }
}
