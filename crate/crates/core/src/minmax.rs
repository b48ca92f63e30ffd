//! The MinMax process: alternating relevant local extrema found by a
//! MACD-driven SAR, and the mean wavelength of the resulting wave.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{self, IndicatorSeries, MacdParams, SarState, ATR_PERIOD};
use crate::market_data::{CandleSeries, TimeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExtremumKind {
    Min,
    Max,
}

impl ExtremumKind {
    pub fn flipped(self) -> Self {
        match self {
            ExtremumKind::Min => ExtremumKind::Max,
            ExtremumKind::Max => ExtremumKind::Min,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExtremumKind::Min => "min",
            ExtremumKind::Max => "max",
        }
    }
}

/// A confirmed local extremum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    /// Open time of the extremum candle.
    pub time: i64,
    /// High of the candle for maxima, low for minima.
    pub price: f64,
    /// Open time of the bar on which the SAR reversal fixed the extremum.
    pub confirm_time: i64,
    pub candle_index: usize,
    pub confirm_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremumSeries {
    pub extrema: Vec<Extremum>,
    pub timescale: f64,
    pub source_symbol: String,
}

impl ExtremumSeries {
    pub fn len(&self) -> usize {
        self.extrema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extrema.is_empty()
    }

    /// Strict alternation of kinds and strictly increasing times.
    pub fn is_well_formed(&self) -> bool {
        self.extrema.windows(2).all(|w| {
            w[0].kind != w[1].kind && w[0].time < w[1].time && w[0].confirm_time < w[1].confirm_time
        }) && self.extrema.iter().all(|e| e.confirm_time >= e.time)
    }
}

/// Reusable detector for one series; caches closes and ATR, which do not
/// depend on the timescale.
pub struct MinMaxDetector<'a> {
    series: &'a CandleSeries,
    closes: Vec<f64>,
    atr: IndicatorSeries,
    delta_coeff: f64,
}

impl<'a> MinMaxDetector<'a> {
    pub fn new(series: &'a CandleSeries, delta_coeff: f64) -> Result<Self> {
        if !(delta_coeff >= 0.0) {
            return Err(Error::invalid(format!("delta coefficient must be >= 0, got {delta_coeff}")));
        }
        Ok(MinMaxDetector {
            series,
            closes: series.closes(),
            atr: indicators::atr(series, ATR_PERIOD)?,
            delta_coeff,
        })
    }

    pub fn series(&self) -> &CandleSeries {
        self.series
    }

    pub fn detect(&self, timescale: f64) -> Result<ExtremumSeries> {
        let params = MacdParams::from_timescale(timescale)?;
        let n = self.closes.len();
        let warmup = params.slow_period.ceil() as usize;
        if n <= warmup {
            return Err(Error::SeriesTooShort { needed: warmup, have: n });
        }
        let (line, signal) = indicators::macd(&self.closes, &params)?;
        // Phase detection only starts after the slow EMA warm-up.
        let tail = |s: &IndicatorSeries| IndicatorSeries {
            values: s.values[warmup..].to_vec(),
            valid_from: 0,
        };
        let states = indicators::sar_direction(&tail(&line), &tail(&signal), &tail(&self.atr), self.delta_coeff)?;

        let candles = self.series.candles();
        let mut out: Vec<Extremum> = Vec::new();
        let mut prev = SarState::Undetermined;
        // (candle index, price) of the running extreme of the current phase
        let mut best: Option<(usize, f64)> = None;

        for (offset, &state) in states.iter().enumerate() {
            let i = warmup + offset;
            let c = &candles[i];
            if state != prev {
                if let Some((idx, price)) = best {
                    let kind = match prev {
                        SarState::Up => Some(ExtremumKind::Max),
                        SarState::Down => Some(ExtremumKind::Min),
                        SarState::Undetermined => None,
                    };
                    if let Some(kind) = kind {
                        push_alternating(
                            &mut out,
                            Extremum {
                                kind,
                                time: candles[idx].time,
                                price,
                                confirm_time: c.time,
                                candle_index: idx,
                                confirm_index: i,
                            },
                        );
                    }
                }
                best = match state {
                    SarState::Up => Some((i, c.high)),
                    SarState::Down => Some((i, c.low)),
                    SarState::Undetermined => None,
                };
                prev = state;
                continue;
            }
            // strict comparison: earliest candle wins ties
            best = match (state, best) {
                (SarState::Up, Some((_, p))) if c.high > p => Some((i, c.high)),
                (SarState::Down, Some((_, p))) if c.low < p => Some((i, c.low)),
                (_, b) => b,
            };
        }

        if out.len() < 2 {
            return Err(Error::TooFewExtrema(out.len()));
        }
        Ok(ExtremumSeries {
            extrema: out,
            timescale,
            source_symbol: self.series.symbol().to_string(),
        })
    }
}

fn push_alternating(out: &mut Vec<Extremum>, e: Extremum) {
    if let Some(last) = out.last_mut() {
        if last.kind == e.kind {
            let more_extreme = match e.kind {
                ExtremumKind::Max => e.price > last.price,
                ExtremumKind::Min => e.price < last.price,
            };
            if more_extreme {
                *last = e;
            }
            return;
        }
    }
    out.push(e);
}

/// Run the MinMax process on a series at the given timescale.
pub fn detect_extrema(series: &CandleSeries, timescale: f64, delta_coeff: f64) -> Result<ExtremumSeries> {
    MinMaxDetector::new(series, delta_coeff)?.detect(timescale)
}

/// Mean wavelength `2 (t_N - t_1) / (N - 1)` in seconds, with time measured
/// per `mode` on the candle series the extrema came from.
pub fn mean_wavelength(extrema: &ExtremumSeries, series: &CandleSeries, mode: TimeMode) -> Result<f64> {
    let n = extrema.len();
    if n < 2 {
        return Err(Error::TooFewExtrema(n));
    }
    let first = &extrema.extrema[0];
    let last = &extrema.extrema[n - 1];
    let span = series.elapsed(first.candle_index, last.candle_index, mode)?;
    Ok(2.0 * span as f64 / (n - 1) as f64)
}

/// Trailing moving average of `2 (t_{i+1} - t_i)` over `window` gaps, one
/// value per extremum from index `window` onward, in wall-clock seconds.
pub fn rolling_wavelength(extrema: &ExtremumSeries, window: usize) -> Result<Vec<(i64, f64)>> {
    if window == 0 {
        return Err(Error::invalid("rolling window must be >= 1"));
    }
    let e = &extrema.extrema;
    if e.len() < window + 1 {
        return Err(Error::TooFewExtrema(e.len()));
    }
    Ok((window..e.len())
        .map(|s| {
            let span = e[s].time - e[s - window].time;
            (e[s].time, 2.0 * span as f64 / window as f64)
        })
        .collect())
}

/// Diagnostic dump: `kind,time,price,confirm_time,candle_index`.
pub fn write_extrema_csv<W: Write>(extrema: &ExtremumSeries, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["kind", "time", "price", "confirm_time", "candle_index"])?;
    for e in &extrema.extrema {
        w.write_record([
            e.kind.as_str().to_string(),
            e.time.to_string(),
            e.price.to_string(),
            e.confirm_time.to_string(),
            e.candle_index.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
