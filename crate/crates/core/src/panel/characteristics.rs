//! Size, book-to-market and momentum from monthly stock files, following
//! the Fama-French timing conventions.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRecord {
    pub symbol: String,
    pub year: i32,
    pub month: u32,
    /// Month-end price.
    pub price: f64,
    pub shares: f64,
    /// Total return over the month; price change when absent.
    pub ret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookEquity {
    pub symbol: String,
    /// Calendar year in which the fiscal year ends.
    pub fiscal_year: i32,
    pub book_equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicValues {
    pub symbol: String,
    pub date: NaiveDate,
    pub size: Option<f64>,
    pub beme: Option<f64>,
    pub momentum: Option<f64>,
}

fn month_index(year: i32, month: u32) -> i64 {
    year as i64 * 12 + month as i64 - 1
}

/// Characteristics for each requested `(symbol, date)`, evaluated at the
/// end of the month before the date:
///
/// - size: log market equity at the prior month-end;
/// - momentum: compounded return over months t-12 to t-2;
/// - beme: book equity of the fiscal year ending in year y-1 over market
///   equity at December y-1, where y is the year of the last June.
///
/// Anything lacking history is `None`.
pub fn characteristics(
    monthly: &[MonthlyRecord],
    book: &[BookEquity],
    requests: &[(String, NaiveDate)],
) -> Vec<CharacteristicValues> {
    let mut by_stock: BTreeMap<&str, BTreeMap<i64, &MonthlyRecord>> = BTreeMap::new();
    for m in monthly {
        by_stock.entry(&m.symbol).or_default().insert(month_index(m.year, m.month), m);
    }
    let be: BTreeMap<(&str, i32), f64> =
        book.iter().map(|b| ((b.symbol.as_str(), b.fiscal_year), b.book_equity)).collect();

    requests
        .iter()
        .map(|(symbol, date)| {
            let months = by_stock.get(symbol.as_str());
            let at = |i: i64| months.and_then(|m| m.get(&i)).copied();
            let me = |i: i64| at(i).map(|r| r.price.abs() * r.shares).filter(|v| *v > 0.0);
            let ret = |i: i64| {
                let r = at(i)?;
                r.ret.or_else(|| at(i - 1).map(|p| r.price / p.price - 1.0))
            };
            let t = month_index(date.year(), date.month());
            let momentum =
                (t - 12..=t - 2).map(ret).try_fold(1.0, |acc, r| r.map(|r| acc * (1.0 + r))).map(|g| g - 1.0);
            let y = if date.month() >= 7 { date.year() } else { date.year() - 1 };
            let beme = be
                .get(&(symbol.as_str(), y - 1))
                .filter(|b| **b > 0.0)
                .and_then(|b| me(month_index(y - 1, 12)).map(|m| b / m));
            CharacteristicValues { symbol: symbol.clone(), date: *date, size: me(t - 1).map(f64::ln), beme, momentum }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(symbol: &str, year: i32, month: u32, price: f64, shares: f64, ret: Option<f64>) -> MonthlyRecord {
        MonthlyRecord { symbol: symbol.into(), year, month, price, shares, ret }
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn flat_price_size() {
        let m = vec![rec("A", 2023, 12, 10.0, 100.0, None)];
        let c = characteristics(&m, &[], &[("A".into(), date(2024, 1, 15))]);
        assert!((c[0].size.unwrap() - 1000f64.ln()).abs() < 1e-12);
        assert_eq!(c[0].momentum, None);
    }

    #[test]
    fn momentum_skips_the_last_month() {
        // returns of 1% in Feb..Dec 2023, then a large January return that must be skipped
        let mut m: Vec<MonthlyRecord> = (2..=12).map(|mo| rec("A", 2023, mo, 10.0, 1.0, Some(0.01))).collect();
        m.push(rec("A", 2024, 1, 10.0, 1.0, Some(0.5)));
        let c = characteristics(&m, &[], &[("A".into(), date(2024, 2, 10))]);
        // t = Feb 2024: months Feb 2023 .. Dec 2023
        let want = 1.01f64.powi(11) - 1.0;
        assert!((c[0].momentum.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn three_stock_fixture() {
        let mut m = Vec::new();
        for (s, p0, growth, shares) in [("A", 10.0, 1.02, 1e6), ("B", 50.0, 0.99, 2e5), ("C", 5.0, 1.0, 4e6)] {
            let mut p: f64 = p0;
            for i in 0..30 {
                let (y, mo) = (2021 + (i / 12), (i % 12) as u32 + 1);
                m.push(rec(s, y, mo, p, shares, None));
                p *= growth;
            }
        }
        let be = vec![
            BookEquity { symbol: "A".into(), fiscal_year: 2021, book_equity: 4e6 },
            BookEquity { symbol: "B".into(), fiscal_year: 2021, book_equity: 1e7 },
            BookEquity { symbol: "C".into(), fiscal_year: 2021, book_equity: -1.0 },
        ];
        let req: Vec<(String, NaiveDate)> =
            ["A", "B", "C"].iter().map(|s| (s.to_string(), date(2022, 9, 20))).collect();
        let c = characteristics(&m, &be, &req);
        // A: Aug 2022 is month index 19 from Jan 2021
        let price = |p0: f64, g: f64, i: i32| p0 * g.powi(i);
        assert!((c[0].size.unwrap() - (price(10.0, 1.02, 19) * 1e6).ln()).abs() < 1e-10);
        assert!((c[0].momentum.unwrap() - (1.02f64.powi(11) - 1.0)).abs() < 1e-10);
        assert!((c[0].beme.unwrap() - 4e6 / (price(10.0, 1.02, 11) * 1e6)).abs() < 1e-12);
        assert!((c[1].beme.unwrap() - 1e7 / (price(50.0, 0.99, 11) * 2e5)).abs() < 1e-12);
        assert!((c[1].momentum.unwrap() - (0.99f64.powi(11) - 1.0)).abs() < 1e-10);
        assert_eq!(c[2].beme, None);
        assert!(c[2].momentum.unwrap().abs() < 1e-15);
        // before July the previous year's book equity applies
        let early = characteristics(&m, &be, &[("A".into(), date(2022, 6, 1))]);
        assert_eq!(early[0].beme, None);
    }
}
