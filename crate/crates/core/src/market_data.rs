//! OHLC candle series: CSV ingestion, validation and elapsed-time views.
//!
//! Timestamps are bar open times in UTC epoch seconds. Inputs for the two
//! markets of a pair must already share one time convention; nothing here
//! converts exchange-local stamps.

use std::io::{Read, Write};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One OHLC bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candle {
    pub time: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: Option<f64>,
}

impl Candle {
    pub fn new(time: i64, open: f64, high: f64, low: f64, close: f64) -> Self {
        Candle {
            time,
            open,
            high,
            low,
            close,
            volume: None,
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        let vals = [self.open, self.high, self.low, self.close];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite price".into());
        }
        if self.low > self.high {
            return Err(format!("low {} > high {}", self.low, self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above open/close", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below open/close", self.high));
        }
        if let Some(v) = self.volume {
            if !(v >= 0.0) {
                return Err(format!("negative volume {v}"));
            }
        }
        Ok(())
    }
}

/// How elapsed time between two candles is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// Candle count times bar duration; exchange closures are ignored.
    Candles,
    /// Wall clock difference of the bar open times.
    Seconds,
}

impl TimeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TimeMode::Candles => "candles",
            TimeMode::Seconds => "seconds",
        }
    }
}

/// Validated, immutable candle series of one market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandleSeries {
    symbol: String,
    bar_duration: i64,
    candles: Vec<Candle>,
}

impl CandleSeries {
    pub fn new(symbol: impl Into<String>, bar_duration: i64, candles: Vec<Candle>) -> Result<Self> {
        if bar_duration <= 0 {
            return Err(Error::invalid(format!("bar duration must be positive, got {bar_duration}")));
        }
        if candles.is_empty() {
            return Err(Error::EmptyInput("candle series"));
        }
        for (i, c) in candles.iter().enumerate() {
            c.check().map_err(|reason| Error::OhlcInvariant { row: i + 1, reason })?;
        }
        for (i, w) in candles.windows(2).enumerate() {
            if w[1].time <= w[0].time {
                return Err(Error::NonIncreasingTimestamps {
                    row: i + 2,
                    prev: w[0].time,
                    next: w[1].time,
                });
            }
            let gap = w[1].time - w[0].time;
            if gap < bar_duration {
                return Err(Error::OverlappingCandles {
                    index: i + 1,
                    gap,
                    bar_duration,
                });
            }
        }
        Ok(CandleSeries {
            symbol: symbol.into(),
            bar_duration,
            candles,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bar_duration(&self) -> i64 {
        self.bar_duration
    }

    pub fn candles(&self) -> &[Candle] {
        &self.candles
    }

    pub fn len(&self) -> usize {
        self.candles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candles.is_empty()
    }

    pub fn time(&self, i: usize) -> i64 {
        self.candles[i].time
    }

    pub fn first_time(&self) -> i64 {
        self.candles[0].time
    }

    pub fn last_time(&self) -> i64 {
        self.candles[self.candles.len() - 1].time
    }

    pub fn closes(&self) -> Vec<f64> {
        self.candles.iter().map(|c| c.close).collect()
    }

    /// Elapsed duration in seconds from candle `i` to candle `j`.
    pub fn elapsed(&self, i: usize, j: usize, mode: TimeMode) -> Result<i64> {
        if i > j || j >= self.len() {
            return Err(Error::IndexOutOfRange(format!(
                "elapsed({i}, {j}) on series of length {}",
                self.len()
            )));
        }
        Ok(match mode {
            TimeMode::Candles => (j - i) as i64 * self.bar_duration,
            TimeMode::Seconds => self.candles[j].time - self.candles[i].time,
        })
    }

    /// Sub-series with open times inside `[start, end]`.
    pub fn truncate_to(&self, start: i64, end: i64) -> Result<CandleSeries> {
        let lo = self.candles.partition_point(|c| c.time < start);
        let hi = self.candles.partition_point(|c| c.time <= end);
        if lo >= hi {
            return Err(Error::EmptyInput("truncated candle series"));
        }
        Ok(CandleSeries {
            symbol: self.symbol.clone(),
            bar_duration: self.bar_duration,
            candles: self.candles[lo..hi].to_vec(),
        })
    }

    /// Shared time span of two series, if any.
    pub fn common_span(&self, other: &CandleSeries) -> Option<(i64, i64)> {
        let start = self.first_time().max(other.first_time());
        let end = self.last_time().min(other.last_time());
        (start <= end).then_some((start, end))
    }
}

/// Truncate both series to their common time span.
pub fn truncate_to_common_span(a: &CandleSeries, b: &CandleSeries) -> Result<(CandleSeries, CandleSeries)> {
    let no_overlap = || Error::NoOverlap(a.symbol().to_string(), b.symbol().to_string());
    let (start, end) = a.common_span(b).ok_or_else(no_overlap)?;
    let ta = a.truncate_to(start, end).map_err(|_| no_overlap())?;
    let tb = b.truncate_to(start, end).map_err(|_| no_overlap())?;
    Ok((ta, tb))
}

/// A column addressed by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Name(String),
    Index(usize),
}

impl From<&str> for Column {
    fn from(s: &str) -> Self {
        Column::Name(s.to_string())
    }
}

impl From<usize> for Column {
    fn from(i: usize) -> Self {
        Column::Index(i)
    }
}

/// Maps CSV columns onto candle fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub has_header: bool,
    pub time: Column,
    pub open: Column,
    pub high: Column,
    pub low: Column,
    pub close: Column,
    pub volume: Option<Column>,
}

impl Default for ColumnSchema {
    /// `time,open,high,low,close[,volume]` with a header row.
    fn default() -> Self {
        ColumnSchema {
            has_header: true,
            time: "time".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: Some("volume".into()),
        }
    }
}

impl ColumnSchema {
    /// Positional schema for files without a header row.
    pub fn positional() -> Self {
        ColumnSchema {
            has_header: false,
            time: 0.into(),
            open: 1.into(),
            high: 2.into(),
            low: 3.into(),
            close: 4.into(),
            volume: Some(5.into()),
        }
    }
}

struct ResolvedSchema {
    time: usize,
    open: usize,
    high: usize,
    low: usize,
    close: usize,
    volume: Option<usize>,
}

fn resolve(schema: &ColumnSchema, header: Option<&csv::StringRecord>) -> Result<ResolvedSchema> {
    let find = |col: &Column, required: bool| -> Result<Option<usize>> {
        match col {
            Column::Index(i) => Ok(Some(*i)),
            Column::Name(name) => {
                let Some(h) = header else {
                    return Err(Error::invalid(format!(
                        "column '{name}' addressed by name but the schema has no header row"
                    )));
                };
                let pos = h.iter().position(|f| f.trim().eq_ignore_ascii_case(name));
                match pos {
                    Some(p) => Ok(Some(p)),
                    None if required => Err(Error::MalformedRow {
                        row: 1,
                        reason: format!("header lacks column '{name}'"),
                    }),
                    None => Ok(None),
                }
            }
        }
    };
    let req = |col: &Column| find(col, true).map(|o| o.expect("required column"));
    Ok(ResolvedSchema {
        time: req(&schema.time)?,
        open: req(&schema.open)?,
        high: req(&schema.high)?,
        low: req(&schema.low)?,
        close: req(&schema.close)?,
        volume: match &schema.volume {
            Some(c) => find(c, false)?,
            None => None,
        },
    })
}

/// Parse an integer epoch-seconds value or an ISO-8601 `YYYY-MM-DDTHH:MM:SSZ` stamp.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%SZ")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Load and validate a candle series from CSV text.
pub fn load_candles<R: Read>(
    source: R,
    schema: &ColumnSchema,
    symbol: &str,
    bar_duration: i64,
) -> Result<CandleSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut records = rdr.records();
    let header = if schema.has_header {
        match records.next() {
            Some(h) => Some(h?),
            None => return Err(Error::EmptyInput("csv")),
        }
    } else {
        None
    };
    let cols = resolve(schema, header.as_ref())?;

    let mut candles = Vec::new();
    for rec in records {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(candles.len() + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |idx: usize, what: &str| -> Result<&str> {
            rec.get(idx).ok_or_else(|| Error::MalformedRow {
                row,
                reason: format!("missing {what} column"),
            })
        };
        let num = |idx: usize, what: &str| -> Result<f64> {
            let f = field(idx, what)?;
            f.parse::<f64>().map_err(|_| Error::MalformedRow {
                row,
                reason: format!("{what} '{f}' is not a number"),
            })
        };
        let ts = field(cols.time, "time")?;
        let time = parse_timestamp(ts).ok_or_else(|| Error::MalformedRow {
            row,
            reason: format!("unparseable time '{ts}'"),
        })?;
        let volume = match cols.volume.and_then(|i| rec.get(i)) {
            None | Some("") => None,
            Some(v) => Some(v.parse::<f64>().map_err(|_| Error::MalformedRow {
                row,
                reason: format!("volume '{v}' is not a number"),
            })?),
        };
        let candle = Candle {
            time,
            open: num(cols.open, "open")?,
            high: num(cols.high, "high")?,
            low: num(cols.low, "low")?,
            close: num(cols.close, "close")?,
            volume,
        };
        candle.check().map_err(|reason| Error::OhlcInvariant { row, reason })?;
        if let Some(prev) = candles.last().map(|c: &Candle| c.time) {
            if time <= prev {
                return Err(Error::NonIncreasingTimestamps { row, prev, next: time });
            }
        }
        candles.push(candle);
    }
    if candles.is_empty() {
        return Err(Error::EmptyInput("csv"));
    }
    CandleSeries::new(symbol, bar_duration, candles)
}

/// Write a series in the default `time,open,high,low,close[,volume]` layout.
///
/// Prices use the shortest round-trip float representation, so loading the
/// output again reproduces the series exactly.
pub fn write_candles<W: Write>(series: &CandleSeries, sink: W) -> Result<()> {
    let with_volume = series.candles.iter().any(|c| c.volume.is_some());
    let mut w = csv::Writer::from_writer(sink);
    if with_volume {
        w.write_record(["time", "open", "high", "low", "close", "volume"])?;
    } else {
        w.write_record(["time", "open", "high", "low", "close"])?;
    }
    for c in &series.candles {
        let mut rec = vec![
            c.time.to_string(),
            c.open.to_string(),
            c.high.to_string(),
            c.low.to_string(),
            c.close.to_string(),
        ];
        if with_volume {
            rec.push(c.volume.map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hourly(n: usize) -> CandleSeries {
        let candles = (0..n)
            .map(|i| Candle::new(i as i64 * 3600, 100.0, 101.0, 99.0, 100.5))
            .collect();
        CandleSeries::new("X", 3600, candles).unwrap()
    }

    #[test]
    fn loads_three_rows() {
        let csv = "time,open,high,low,close\n0,1,2,0.5,1.5\n3600,1.5,2,1,1.2\n7200,1.2,1.3,1,1.1\n";
        let s = load_candles(csv.as_bytes(), &ColumnSchema::default(), "X", 3600).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.bar_duration(), 3600);
        assert_eq!(s.candles()[1].close, 1.2);
        assert_eq!(s.candles()[0].volume, None);
    }

    #[test]
    fn rejects_duplicate_timestamps() {
        let csv = "time,open,high,low,close\n100,1,2,0.5,1.5\n100,1.5,2,1,1.2\n";
        let err = load_candles(csv.as_bytes(), &ColumnSchema::default(), "X", 60).unwrap_err();
        assert!(matches!(err, Error::NonIncreasingTimestamps { row: 3, .. }), "{err}");
        assert!(err.to_string().contains("non-increasing timestamps"));
    }

    #[test]
    fn rejects_high_below_low() {
        let csv = "time,open,high,low,close\n0,1,0.5,2,1\n";
        let err = load_candles(csv.as_bytes(), &ColumnSchema::default(), "X", 60).unwrap_err();
        assert!(err.to_string().contains("OHLC invariant"), "{err}");
    }

    #[test]
    fn rejects_empty_and_malformed() {
        let err = load_candles("time,open,high,low,close\n".as_bytes(), &ColumnSchema::default(), "X", 60)
            .unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
        let err = load_candles("".as_bytes(), &ColumnSchema::default(), "X", 60).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
        let csv = "time,open,high,low,close\n0,1,2,0.5,1\n3600,abc,2,0.5,1\n";
        let err = load_candles(csv.as_bytes(), &ColumnSchema::default(), "X", 60).unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 3, .. }), "{err}");
    }

    #[test]
    fn iso_timestamps_and_positional_schema() {
        let csv = "2014-05-15T00:00:00Z,1,2,0.5,1.5,10\n2014-05-15T01:00:00Z,1.5,2,1,1.2,\n";
        let s = load_candles(csv.as_bytes(), &ColumnSchema::positional(), "X", 3600).unwrap();
        assert_eq!(s.first_time(), 1_400_112_000);
        assert_eq!(s.time(1) - s.time(0), 3600);
        assert_eq!(s.candles()[0].volume, Some(10.0));
        assert_eq!(s.candles()[1].volume, None);
    }

    #[test]
    fn rejects_overlapping_bars() {
        let candles = vec![Candle::new(0, 1.0, 1.0, 1.0, 1.0), Candle::new(1800, 1.0, 1.0, 1.0, 1.0)];
        assert!(matches!(
            CandleSeries::new("X", 3600, candles),
            Err(Error::OverlappingCandles { .. })
        ));
    }

    #[test]
    fn elapsed_modes() {
        let s = hourly(6);
        assert_eq!(s.elapsed(0, 5, TimeMode::Candles).unwrap(), 18_000);
        assert_eq!(s.elapsed(0, 5, TimeMode::Seconds).unwrap(), 18_000);
        assert_eq!(s.elapsed(3, 3, TimeMode::Candles).unwrap(), 0);
        assert_eq!(s.elapsed(3, 3, TimeMode::Seconds).unwrap(), 0);
        assert!(s.elapsed(4, 2, TimeMode::Seconds).is_err());
        assert!(s.elapsed(0, 6, TimeMode::Seconds).is_err());

        // weekend gap between index 4 and 5
        let mut candles = s.candles().to_vec();
        candles[5].time += 48 * 3600;
        let gapped = CandleSeries::new("X", 3600, candles).unwrap();
        assert_eq!(gapped.elapsed(0, 5, TimeMode::Candles).unwrap(), 18_000);
        assert!(gapped.elapsed(0, 5, TimeMode::Seconds).unwrap() > 18_000);
    }

    #[test]
    fn common_span_truncation() {
        let a = hourly(10);
        let candles = (5..20)
            .map(|i| Candle::new(i * 3600, 1.0, 1.0, 1.0, 1.0))
            .collect();
        let b = CandleSeries::new("Y", 3600, candles).unwrap();
        let (ta, tb) = truncate_to_common_span(&a, &b).unwrap();
        assert_eq!(ta.len(), 5);
        assert_eq!(tb.len(), 5);
        assert_eq!(ta.first_time(), tb.first_time());

        let far = CandleSeries::new("Z", 3600, vec![Candle::new(1_000_000, 1.0, 1.0, 1.0, 1.0)]).unwrap();
        let err = truncate_to_common_span(&a, &far).unwrap_err();
        assert!(err.to_string().contains("no overlapping span"));
    }
}
