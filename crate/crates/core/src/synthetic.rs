//! Seeded synthetic candle series for examples, tests and demos.
//!
//! A latent path `base + amplitude·sin(2πu/period) + walk(u) + noise(u)` is
//! sampled on a fixed lattice that starts `LEAD_IN` bars before candle 0,
//! so series built from the same seed with different delays are exact
//! time-shifted copies of one another.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::market_data::{Candle, CandleSeries};

const LEAD_IN: usize = 4096;
/// Monday 2014-01-06 00:00:00 UTC.
pub const DEFAULT_START: i64 = 1_388_966_400;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub symbol: String,
    pub n: usize,
    pub bar_duration: i64,
    pub start: i64,
    pub seed: u64,
    /// Period of the driving sinusoid in candles.
    pub period: f64,
    pub amplitude: f64,
    /// Standard deviation of the random-walk increments.
    pub walk: f64,
    /// Standard deviation of white noise added to each close.
    pub noise: f64,
    /// Scale of the intra-bar wicks beyond open/close.
    pub wick: f64,
    pub base: f64,
    /// The series follows the latent path this many candles late.
    pub delay: usize,
    /// Mirror prices around `base` (a negated market up to a shift).
    pub mirrored: bool,
    /// Only Monday to Friday bars; weekends become gaps.
    pub weekdays_only: bool,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            symbol: "SYN".into(),
            n: 4000,
            bar_duration: 3600,
            start: DEFAULT_START,
            seed: 7,
            period: 50.0,
            amplitude: 100.0,
            walk: 1.0,
            noise: 1.0,
            wick: 1.0,
            base: 10_000.0,
            delay: 0,
            mirrored: false,
            weekdays_only: false,
        }
    }
}

impl SyntheticConfig {
    pub fn with_symbol(mut self, symbol: &str) -> Self {
        self.symbol = symbol.to_string();
        self
    }

    pub fn delayed(mut self, delay: usize) -> Self {
        self.delay = delay;
        self
    }

    pub fn mirrored(mut self) -> Self {
        self.mirrored = true;
        self
    }
}

/// Open time of candle `k`.
pub fn bar_time(cfg: &SyntheticConfig, k: usize) -> i64 {
    if !cfg.weekdays_only {
        return cfg.start + k as i64 * cfg.bar_duration;
    }
    let per_week = (5 * 86_400 / cfg.bar_duration) as usize;
    let week = (k / per_week) as i64;
    let rem = (k % per_week) as i64;
    cfg.start + week * 7 * 86_400 + rem * cfg.bar_duration
}

pub fn sinusoid_series(cfg: &SyntheticConfig) -> Result<CandleSeries> {
    if cfg.n == 0 || !(cfg.period > 0.0) || cfg.delay >= LEAD_IN {
        return Err(Error::invalid(format!("bad synthetic config: {cfg:?}")));
    }
    if cfg.weekdays_only && 86_400 % cfg.bar_duration != 0 {
        return Err(Error::invalid("weekday sessions need a bar duration dividing one day"));
    }
    let len = LEAD_IN + cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut walk = 0.0;
    let mut latent = Vec::with_capacity(len);
    let mut wicks = Vec::with_capacity(len);
    for u in 0..len {
        let (dw, dn, wu, wd): (f64, f64, f64, f64) = (
            std_normal.sample(&mut rng),
            std_normal.sample(&mut rng),
            std_normal.sample(&mut rng),
            std_normal.sample(&mut rng),
        );
        walk += cfg.walk * dw;
        let phase = 2.0 * PI * (u as f64 - LEAD_IN as f64) / cfg.period;
        latent.push(cfg.base + cfg.amplitude * phase.sin() + walk + cfg.noise * dn);
        wicks.push((cfg.wick * wu.abs(), cfg.wick * wd.abs()));
    }

    let price = |p: f64| if cfg.mirrored { 2.0 * cfg.base - p } else { p };
    let candles = (0..cfg.n)
        .map(|k| {
            let u = LEAD_IN + k - cfg.delay;
            let open = latent[u - 1];
            let close = latent[u];
            let (up, down) = wicks[u];
            let high = open.max(close) + up;
            let low = open.min(close) - down;
            let (high, low) = if cfg.mirrored {
                (price(low), price(high))
            } else {
                (high, low)
            };
            Candle::new(bar_time(cfg, k), price(open), high, low, price(close))
        })
        .collect();
    CandleSeries::new(cfg.symbol.clone(), cfg.bar_duration, candles)
}

/// A primary series and a secondary built from the same latent path,
/// `delay` candles late.
pub fn delayed_pair(cfg: &SyntheticConfig, delay: usize) -> Result<(CandleSeries, CandleSeries)> {
    let primary = sinusoid_series(&cfg.clone().with_symbol("A").delayed(0))?;
    let secondary = sinusoid_series(&cfg.clone().with_symbol("B").delayed(delay))?;
    Ok((primary, secondary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_copy_is_shifted() {
        let cfg = SyntheticConfig {
            n: 500,
            ..Default::default()
        };
        let (a, b) = delayed_pair(&cfg, 5).unwrap();
        for k in 5..500 {
            let ca = &a.candles()[k - 5];
            let cb = &b.candles()[k];
            assert_eq!((ca.open, ca.high, ca.low, ca.close), (cb.open, cb.high, cb.low, cb.close));
        }
    }

    #[test]
    fn mirrored_swaps_extremes() {
        let cfg = SyntheticConfig {
            n: 200,
            ..Default::default()
        };
        let a = sinusoid_series(&cfg).unwrap();
        let m = sinusoid_series(&cfg.clone().mirrored()).unwrap();
        for (x, y) in a.candles().iter().zip(m.candles()) {
            assert_eq!(y.high, 2.0 * cfg.base - x.low);
            assert_eq!(y.close, 2.0 * cfg.base - x.close);
        }
    }

    #[test]
    fn weekday_sessions_leave_gaps() {
        let cfg = SyntheticConfig {
            n: 300,
            weekdays_only: true,
            ..Default::default()
        };
        let s = sinusoid_series(&cfg).unwrap();
        assert_eq!(s.time(120) - s.time(119), 3600 + 2 * 86_400);
        assert_eq!(s.time(119) - s.time(118), 3600);
    }
}
