//! CSV ingestion of trades, quotes and prior closes.
//!
//! Trades: `symbol,date,timestamp_ns,price,size[,side]`.
//! Quotes: `symbol,date,timestamp_ns,bid,ask`.
//! Closes: `symbol,date,p_prev_close`.
//!
//! Malformed rows (unparsable fields, violated invariants, timestamps going
//! backwards within a stock-day) are skipped and counted.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::bars::BarSeries;
use super::events::{QuoteEvent, Side, SignedTrade, TickEvent};
use crate::error::Result;

pub type StockDay = (String, NaiveDate);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadStats {
    pub rows: usize,
    pub malformed: usize,
}

impl ReadStats {
    pub fn accepted(&self) -> usize {
        self.rows - self.malformed
    }
}

#[derive(Debug, Clone, Default)]
pub struct DayTrades {
    pub ticks: Vec<TickEvent>,
    /// Present only when every accepted row carried a side.
    pub sides: Option<Vec<Side>>,
}

#[derive(Debug, Deserialize)]
struct RawTrade {
    symbol: String,
    date: String,
    timestamp_ns: String,
    price: String,
    size: String,
    #[serde(default)]
    side: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawQuote {
    symbol: String,
    date: String,
    timestamp_ns: String,
    bid: String,
    ask: String,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Header written explicitly so empty outputs still carry one.
fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(r)
}

/// Reads a trades file, grouped by stock-day in key order.
pub fn read_trades<R: Read>(r: R) -> Result<(BTreeMap<StockDay, DayTrades>, ReadStats)> {
    let mut rdr = reader(r);
    let mut out: BTreeMap<StockDay, (Vec<TickEvent>, Vec<Option<Side>>)> = BTreeMap::new();
    let mut stats = ReadStats::default();
    for rec in rdr.deserialize::<RawTrade>() {
        stats.rows += 1;
        let parsed = rec.ok().and_then(|raw| {
            let date = parse_date(&raw.date)?;
            let ts = raw.timestamp_ns.parse::<i64>().ok()?;
            let price = raw.price.parse::<f64>().ok()?;
            let size = raw.size.parse::<f64>().ok()?;
            let tick = TickEvent::new(ts, price, size).ok()?;
            let side = match raw.side.as_deref().map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(s.parse::<Side>().ok()?),
            };
            Some(((raw.symbol, date), tick, side))
        });
        let Some((key, tick, side)) = parsed else {
            stats.malformed += 1;
            continue;
        };
        let entry = out.entry(key).or_default();
        if entry.0.last().is_some_and(|p| p.timestamp_ns > tick.timestamp_ns) {
            stats.malformed += 1;
            continue;
        }
        entry.0.push(tick);
        entry.1.push(side);
    }
    let grouped = out
        .into_iter()
        .map(|(k, (ticks, sides))| {
            let sides = sides.into_iter().collect::<Option<Vec<_>>>();
            (k, DayTrades { ticks, sides })
        })
        .collect();
    Ok((grouped, stats))
}

pub fn read_quotes<R: Read>(r: R) -> Result<(BTreeMap<StockDay, Vec<QuoteEvent>>, ReadStats)> {
    let mut rdr = reader(r);
    let mut out: BTreeMap<StockDay, Vec<QuoteEvent>> = BTreeMap::new();
    let mut stats = ReadStats::default();
    for rec in rdr.deserialize::<RawQuote>() {
        stats.rows += 1;
        let parsed = rec.ok().and_then(|raw| {
            let date = parse_date(&raw.date)?;
            let ts = raw.timestamp_ns.parse::<i64>().ok()?;
            let q = QuoteEvent::new(ts, raw.bid.parse().ok()?, raw.ask.parse().ok()?).ok()?;
            Some(((raw.symbol, date), q))
        });
        let Some((key, q)) = parsed else {
            stats.malformed += 1;
            continue;
        };
        let entry = out.entry(key).or_default();
        if entry.last().is_some_and(|p| p.timestamp_ns > q.timestamp_ns) {
            stats.malformed += 1;
            continue;
        }
        entry.push(q);
    }
    Ok((out, stats))
}

#[derive(Debug, Deserialize)]
struct RawClose {
    symbol: String,
    date: String,
    p_prev_close: String,
}

/// Prior-day closes keyed by stock-day.
pub fn read_closes<R: Read>(r: R) -> Result<(BTreeMap<StockDay, f64>, ReadStats)> {
    let mut rdr = reader(r);
    let mut out = BTreeMap::new();
    let mut stats = ReadStats::default();
    for rec in rdr.deserialize::<RawClose>() {
        stats.rows += 1;
        let parsed = rec.ok().and_then(|raw| {
            let p = raw.p_prev_close.parse::<f64>().ok().filter(|p| p.is_finite() && *p > 0.0)?;
            Some(((raw.symbol, parse_date(&raw.date)?), p))
        });
        match parsed {
            Some((k, p)) => {
                out.insert(k, p);
            }
            None => stats.malformed += 1,
        }
    }
    Ok((out, stats))
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
struct TradeOut<'a> {
    symbol: &'a str,
    date: NaiveDate,
    timestamp_ns: i64,
    price: f64,
    size: f64,
    side: i8,
}

#[derive(Serialize)]
struct QuoteOut<'a> {
    symbol: &'a str,
    date: NaiveDate,
    timestamp_ns: i64,
    bid: f64,
    ask: f64,
}

/// Signed trades of several stock-days under one header.
pub fn write_signed_trades<W: Write>(w: W, days: &[(&str, NaiveDate, &[SignedTrade])]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["symbol", "date", "timestamp_ns", "price", "size", "side"])?;
    for (symbol, date, trades) in days {
        for t in *trades {
            wtr.serialize(TradeOut {
                symbol,
                date: *date,
                timestamp_ns: t.timestamp_ns,
                price: t.price,
                size: t.size,
                side: t.side.as_i8(),
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_quotes<W: Write>(w: W, days: &[(&str, NaiveDate, &[QuoteEvent])]) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["symbol", "date", "timestamp_ns", "bid", "ask"])?;
    for (symbol, date, quotes) in days {
        for q in *quotes {
            wtr.serialize(QuoteOut { symbol, date: *date, timestamp_ns: q.timestamp_ns, bid: q.bid, ask: q.ask })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Prior closes: `symbol,date,p_prev_close`.
pub fn write_closes<W: Write>(w: W, closes: &[(&str, NaiveDate, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["symbol", "date", "p_prev_close"])?;
    for (symbol, date, p) in closes {
        wtr.write_record([symbol.to_string(), date.to_string(), p.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Long-format bars: `symbol,date,bar,dP,dY,close`.
pub fn write_bars<W: Write>(w: W, series: &[BarSeries]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["symbol", "date", "bar", "dP", "dY", "close"])?;
    for s in series {
        let date = s.date.to_string();
        for i in 0..s.n_bars() {
            wtr.write_record([
                s.symbol.as_str(),
                date.as_str(),
                &(i + 1).to_string(),
                &s.dp[i].to_string(),
                &s.dy[i].to_string(),
                &s.close[i].to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
