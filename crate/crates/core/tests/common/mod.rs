//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use portfolio_core::backtest::{BacktestState, ContributionRule, StrategyConfig};
use portfolio_core::frontier;
use portfolio_core::quota::QuotaLedger;
use portfolio_core::stats::{self, CovarianceModel};
use portfolio_core::PriceSeries;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("A{}", i + 1)).collect()
}

/// `BᵀB + ridge·I` with uniform entries in B.
pub fn random_spd(rng: &mut impl Rng, n: usize, ridge: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let m = b.transpose() * &b + DMatrix::identity(n, n) * ridge;
    (&m + m.transpose()) * 0.5
}

/// Means and covariance that define a valid frontier.
pub fn random_universe(rng: &mut impl Rng, n: usize) -> (Vec<f64>, CovarianceModel) {
    loop {
        let v = random_spd(rng, n, 0.2);
        let means: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - means.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread < 0.1 {
            continue;
        }
        let cov = CovarianceModel::from_matrix(names(n), v).unwrap();
        if frontier::frontier_constants(&means, &cov).is_ok() {
            return (means, cov);
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))?;
        if m[(p, k)].abs() < 1e-300 {
            return None;
        }
        m.swap_rows(k, p);
        x.swap_rows(k, p);
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    Some(x)
}

/// Projected gradient descent on `{x : Ax = b}`, started from the least-norm feasible point.
pub fn projected_gradient_qp(q: &DMatrix<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = q.nrows();
    let aat = a * a.transpose();
    let x0 = a.transpose() * gauss_solve(&aat, b).expect("A has full row rank");
    // P = I − Aᵀ(AAᵀ)⁻¹A, built column by column.
    let mut proj = DMatrix::<f64>::identity(n, n);
    for k in 0..n {
        let y = gauss_solve(&aat, &a.column(k).into_owned()).unwrap();
        let col = a.transpose() * y;
        for i in 0..n {
            proj[(i, k)] -= col[i];
        }
    }
    // Step 1/L with L bounded by the Frobenius norm of Q.
    let step = 1.0 / q.norm();
    let mut x = x0;
    for _ in 0..200_000 {
        let g: DVector<f64> = &proj * (q * &x);
        if g.amax() < 1e-14 {
            break;
        }
        x -= g * step;
    }
    x
}

/// Brute-force minimum-variance weight `w` on asset 1 (`1 − w` on asset 2) over [−2, 3].
pub fn grid_min_variance_2(v: &DMatrix<f64>) -> (f64, f64) {
    let steps = 500_000;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=steps {
        let w = -2.0 + 5.0 * k as f64 / steps as f64;
        let var = w * w * v[(0, 0)] + 2.0 * w * (1.0 - w) * v[(0, 1)] + (1.0 - w) * (1.0 - w) * v[(1, 1)];
        if var < best.1 {
            best = (w, var);
        }
    }
    (best.0, best.1.sqrt())
}

pub fn business_days(from: NaiveDate, until: NaiveDate) -> Vec<NaiveDate> {
    let mut out = Vec::new();
    let mut d = from;
    while d < until {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Geometric random walks on business days; each asset skips a few scattered days.
pub fn random_prices(rng: &mut impl Rng, n: usize, from: NaiveDate, until: NaiveDate) -> Vec<PriceSeries> {
    let days = business_days(from, until);
    (0..n)
        .map(|j| {
            let mut p = rng.gen_range(10.0..200.0);
            let vol = rng.gen_range(0.005..0.03);
            let drift = rng.gen_range(-0.001..0.002);
            let mut obs = Vec::with_capacity(days.len());
            for (i, d) in days.iter().enumerate() {
                p *= 1.0 + drift + vol * rng.gen_range(-1.0..1.0);
                // Keep the first day so every asset has an opening price.
                if i > 0 && rng.gen_bool(0.02) {
                    continue;
                }
                obs.push((*d, p));
            }
            PriceSeries::new(format!("A{}", j + 1), obs).unwrap()
        })
        .collect()
}

/// A random strategy over generated prices: three months of warmup, six simulated months.
pub fn random_backtest_case(rng: &mut impl Rng) -> (Vec<PriceSeries>, StrategyConfig) {
    let n = if rng.gen_bool(0.7) { 2 } else { 3 };
    let prices = random_prices(rng, n, date(2017, 1, 2), date(2017, 10, 1));
    let rule = if rng.gen_bool(0.5) {
        ContributionRule::Naive
    } else {
        ContributionRule::Markowitz
    };
    let mut cfg = StrategyConfig::new(rule, date(2017, 4, 1));
    cfg.warmup_months = 3;
    cfg.initial_contribution = rng.gen_range(100.0..5000.0);
    cfg.monthly_contribution = if rng.gen_bool(0.1) {
        0.0
    } else {
        rng.gen_range(10.0..1000.0)
    };
    (prices, cfg)
}

/// Cash conservation, monotone holdings, patrimony identity and gap antisymmetry.
pub fn check_backtest_invariants(prices: &[PriceSeries], state: &BacktestState) -> Result<(), String> {
    if state.cash != 0.0 {
        return Err(format!("cash {} left after contributions", state.cash));
    }
    let mut prev = vec![0.0; state.assets.len()];
    let mut bought_value = 0.0;
    for m in &state.ledger {
        for (j, (&h, &p)) in m.holdings_after.iter().zip(&prev).enumerate() {
            if h < p || h < 0.0 {
                return Err(format!("{}: holding of asset {j} fell from {p} to {h}", m.date));
            }
        }
        // Everything contributed became shares at the trade closes.
        let spent: f64 = m
            .holdings_after
            .iter()
            .zip(&prev)
            .zip(&m.trade_closes)
            .map(|((h, p), c)| (h - p) * c)
            .sum();
        if (spent - m.contribution).abs() > 1e-9 * m.contribution.max(1.0) {
            return Err(format!(
                "{}: spent {spent} of a {} contribution",
                m.date, m.contribution
            ));
        }
        bought_value += spent;
        let patrimony: f64 = prices
            .iter()
            .zip(&m.holdings_after)
            .map(|(s, h)| h * s.close_at_or_before(m.month_end).unwrap().1)
            .sum();
        if (patrimony - m.patrimony_after).abs() > 0.01 {
            return Err(format!(
                "{}: patrimony {} vs recomputed {patrimony}",
                m.date, m.patrimony_after
            ));
        }
        if !m.percent_gaps.is_empty() {
            let sum: f64 = m.percent_gaps.iter().sum();
            if sum.abs() > 1e-9 {
                return Err(format!("{}: gaps sum to {sum}", m.date));
            }
            if m.percent_gaps.len() == 2 && m.percent_gaps[0] != -m.percent_gaps[1] {
                let d = (m.percent_gaps[0] + m.percent_gaps[1]).abs();
                if d > 1e-9 {
                    return Err(format!("{}: gaps {:?} not antisymmetric", m.date, m.percent_gaps));
                }
            }
        }
        prev = m.holdings_after.clone();
    }
    if (bought_value - state.contributed).abs() > 1e-9 * state.contributed.max(1.0) {
        return Err(format!("bought {bought_value} but contributed {}", state.contributed));
    }
    Ok(())
}

/// The quota series with flows equals the one without, bit for bit.
pub fn check_quota_flow_invariance(rng: &mut impl Rng) -> Result<(), String> {
    let days = rng.gen_range(2..60);
    let start = date(2022, 1, 3);
    let deposit = rng.gen_range(10.0..10_000.0);
    let mut with = QuotaLedger::open(start, deposit).unwrap();
    let mut without = QuotaLedger::open(start, deposit).unwrap();
    for k in 1..days {
        let d = start + Days::new(k);
        let r = rng.gen_range(-0.1..0.1);
        let capital = with.last().unwrap().capital * (1.0 + r);
        let flow = match rng.gen_range(0..4) {
            0 => rng.gen_range(0.0..1000.0),
            1 => -rng.gen_range(0.0..0.9) * capital,
            _ => 0.0,
        };
        with.apply_day(d, r, flow).map_err(|e| e.to_string())?;
        without.apply_day(d, r, 0.0).map_err(|e| e.to_string())?;
    }
    if with.quota_values() != without.quota_values() {
        return Err("quota values depend on flows".into());
    }
    for e in with.entries() {
        if (e.capital - e.quota_count * e.quota_value).abs() > 0.01 {
            return Err(format!("{}: capital {} != count × value", e.date, e.capital));
        }
    }
    Ok(())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || a == b
}

pub fn random_vector(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let shift = rng.gen_range(-0.05..0.05);
    (0..m).map(|_| shift + rng.gen_range(-0.03..0.03)).collect()
}

/// Covariance identities (i)–(iii) and the correlation bound for one generated pair.
pub fn check_covariance_identities(rng: &mut impl Rng) -> Result<(), String> {
    let m = rng.gen_range(2..50);
    let v = random_vector(rng, m);
    let u = random_vector(rng, m);
    let alpha = rng.gen_range(-5.0..5.0);
    let mean = |x: &[f64]| stats::mean(x).unwrap();
    let var = |x: &[f64]| stats::variance_population(x).unwrap();
    let cov = stats::covariance(&v, &u).unwrap();
    let vu: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a * b).collect();
    let rhs = mean(&vu) - mean(&v) * mean(&u);
    // The identity cancels E[vu] against E[v]E[u]; measure error against those magnitudes.
    let scale = mean(&vu).abs().max((mean(&v) * mean(&u)).abs());
    if (cov - rhs).abs() > 1e-12 * scale.max(cov.abs()) {
        return Err(format!("(i): {cov} vs {rhs}"));
    }
    let sum: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a + b).collect();
    let lhs = var(&sum);
    let rhs = var(&v) + var(&u) + 2.0 * cov;
    if (lhs - rhs).abs() > 1e-12 * (var(&v) + var(&u) + 2.0 * cov.abs()) {
        return Err(format!("(ii): {lhs} vs {rhs}"));
    }
    let scaled: Vec<f64> = v.iter().map(|x| alpha * x).collect();
    if !rel_close(var(&scaled), alpha * alpha * var(&v), 1e-12) {
        return Err(format!("(iii): {} vs {}", var(&scaled), alpha * alpha * var(&v)));
    }
    let rho = stats::correlation(&v, &u).map_err(|e| e.to_string())?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(format!("correlation {rho} out of bounds"));
    }
    Ok(())
}

/// One row of the 2018–2021 monthly tables.
#[derive(Debug, Clone)]
pub struct MonthlyRow {
    pub month: String,
    pub closes: [f64; 2],
    pub naive_shares: [f64; 2],
    pub naive_patrimony: f64,
    pub markowitz_shares: [f64; 2],
    pub markowitz_patrimony: f64,
}

pub fn monthly_rows() -> Vec<MonthlyRow> {
    let mut rdr = csv::Reader::from_path(data_path("monthly_2018_2021.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            MonthlyRow {
                month: r[0].to_string(),
                closes: [f(1), f(2)],
                naive_shares: [f(3), f(4)],
                naive_patrimony: f(5),
                markowitz_shares: [f(6), f(7)],
                markowitz_patrimony: f(8),
            }
        })
        .collect()
}
