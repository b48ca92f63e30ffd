//! EMA, MACD, ATR and the threshold-gated SAR direction derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::CandleSeries;

/// Default MACD periods before timescale scaling.
pub const MACD_DEFAULTS: (f64, f64, f64) = (12.0, 26.0, 9.0);
/// ATR window used for the SAR threshold.
pub const ATR_PERIOD: usize = 100;
/// Threshold coefficient on ATR for a SAR reversal.
pub const DELTA_COEFF: f64 = 0.3;

/// Indicator values aligned 1:1 with the candle index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub values: Vec<f64>,
    pub valid_from: usize,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        if i >= self.valid_from {
            self.values.get(i).copied()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacdParams {
    pub fast_period: f64,
    pub slow_period: f64,
    pub signal_period: f64,
    pub timescale: f64,
}

impl MacdParams {
    pub fn new(fast_period: f64, slow_period: f64, signal_period: f64) -> Result<Self> {
        let p = MacdParams {
            fast_period,
            slow_period,
            signal_period,
            timescale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// The default periods (12, 26, 9) scaled by one common factor.
    pub fn from_timescale(timescale: f64) -> Result<Self> {
        if !(timescale > 0.0) || !timescale.is_finite() {
            return Err(Error::invalid(format!("timescale must be positive, got {timescale}")));
        }
        let (f, s, g) = MACD_DEFAULTS;
        let p = MacdParams {
            fast_period: f * timescale,
            slow_period: s * timescale,
            signal_period: g * timescale,
            timescale,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.fast_period, self.slow_period, self.signal_period];
        if all.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!("MACD periods must be positive: {self:?}")));
        }
        if self.fast_period >= self.slow_period {
            return Err(Error::invalid(format!(
                "fast period {} must be below slow period {}",
                self.fast_period, self.slow_period
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SarState {
    Up,
    Down,
    Undetermined,
}

/// Exponential moving average with smoothing `2 / (period + 1)`, seeded with
/// the first price. Periods need not be integral.
pub fn ema(prices: &[f64], period: f64) -> Result<IndicatorSeries> {
    if prices.is_empty() {
        return Err(Error::EmptyInput("ema prices"));
    }
    if !(period >= 1.0) || !period.is_finite() {
        return Err(Error::invalid(format!("EMA period must be >= 1, got {period}")));
    }
    let k = 2.0 / (period + 1.0);
    let mut values = Vec::with_capacity(prices.len());
    let mut acc = prices[0];
    values.push(acc);
    for &p in &prices[1..] {
        acc += k * (p - acc);
        values.push(acc);
    }
    Ok(IndicatorSeries { values, valid_from: 0 })
}

/// MACD line and its signal line.
pub fn macd(prices: &[f64], params: &MacdParams) -> Result<(IndicatorSeries, IndicatorSeries)> {
    params.validate()?;
    if (prices.len() as f64) <= params.slow_period {
        return Err(Error::SeriesTooShort {
            needed: params.slow_period.ceil() as usize,
            have: prices.len(),
        });
    }
    let fast = ema(prices, params.fast_period)?;
    let slow = ema(prices, params.slow_period)?;
    let line: Vec<f64> = fast
        .values
        .iter()
        .zip(&slow.values)
        .map(|(f, s)| f - s)
        .collect();
    let signal = ema(&line, params.signal_period)?;
    Ok((IndicatorSeries { values: line, valid_from: 0 }, signal))
}

/// Average true range as a simple moving average of the true range.
///
/// The first `period - 1` entries average the shorter available prefix.
pub fn atr(series: &CandleSeries, period: usize) -> Result<IndicatorSeries> {
    if series.is_empty() {
        return Err(Error::EmptyInput("atr series"));
    }
    if period == 0 {
        return Err(Error::invalid("ATR period must be >= 1"));
    }
    let candles = series.candles();
    let tr: Vec<f64> = candles
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let range = c.high - c.low;
            if i == 0 {
                range
            } else {
                let pc = candles[i - 1].close;
                range.max((c.high - pc).abs()).max((c.low - pc).abs())
            }
        })
        .collect();

    // Running sum re-anchored each window so rounding error stays bounded.
    let mut values = Vec::with_capacity(tr.len());
    for i in 0..tr.len() {
        let lo = (i + 1).saturating_sub(period);
        let window = &tr[lo..=i];
        values.push(window.iter().sum::<f64>() / window.len() as f64);
    }
    Ok(IndicatorSeries { values, valid_from: 0 })
}

/// SAR direction with a hysteresis band of `delta_coeff * atr` around zero
/// MACD-minus-signal. Crossings are strict.
pub fn sar_direction(
    macd_line: &IndicatorSeries,
    signal_line: &IndicatorSeries,
    atr_series: &IndicatorSeries,
    delta_coeff: f64,
) -> Result<Vec<SarState>> {
    if macd_line.len() != signal_line.len() || macd_line.len() != atr_series.len() {
        return Err(Error::Misaligned(format!(
            "macd {}, signal {}, atr {}",
            macd_line.len(),
            signal_line.len(),
            atr_series.len()
        )));
    }
    if !(delta_coeff >= 0.0) {
        return Err(Error::invalid(format!("delta coefficient must be >= 0, got {delta_coeff}")));
    }
    let mut state = SarState::Undetermined;
    let states = macd_line
        .values
        .iter()
        .zip(&signal_line.values)
        .zip(&atr_series.values)
        .map(|((m, s), a)| {
            let delta = delta_coeff * a;
            let diff = m - s;
            if diff > delta {
                state = SarState::Up;
            } else if -diff > delta {
                state = SarState::Down;
            }
            state
        })
        .collect();
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Candle;
    use proptest::prelude::*;

    fn series(v: Vec<f64>) -> IndicatorSeries {
        IndicatorSeries { values: v, valid_from: 0 }
    }

    #[test]
    fn ema_examples() {
        let e = ema(&[7.0; 20], 5.3).unwrap();
        assert!(e.values.iter().all(|&v| v == 7.0));
        let p = [1.0, 5.0, -2.0, 9.5];
        assert_eq!(ema(&p, 1.0).unwrap().values, p.to_vec());
        assert_eq!(ema(&[10.0, 13.0], 3.0).unwrap().values, vec![10.0, 11.5]);
        assert!(ema(&[], 3.0).is_err());
        assert!(ema(&[1.0], 0.5).is_err());
    }

    #[test]
    fn macd_constant_and_scaling() {
        let p = vec![50.0; 100];
        let (m, s) = macd(&p, &MacdParams::from_timescale(1.0).unwrap()).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        assert!(s.values.iter().all(|&v| v == 0.0));

        let p: Vec<f64> = (0..300).map(|i| (i as f64 * 0.13).sin() * 10.0 + 100.0).collect();
        let scaled = macd(&p, &MacdParams::from_timescale(2.0).unwrap()).unwrap();
        let explicit = macd(&p, &MacdParams::new(24.0, 52.0, 18.0).unwrap()).unwrap();
        assert_eq!(scaled, explicit);

        assert!(matches!(
            macd(&p[..20], &MacdParams::from_timescale(1.0).unwrap()),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(MacdParams::new(26.0, 12.0, 9.0).is_err());
    }

    #[test]
    fn macd_on_ramp_converges() {
        // For p_t = c·t the EMA with factor k lags by (1-k)/k·c, so the MACD
        // line tends to c·((1-k_s)/k_s - (1-k_f)/k_f) = c·(slow - fast)/2.
        let c = 0.5;
        let p: Vec<f64> = (0..2000).map(|i| 100.0 + c * i as f64).collect();
        let params = MacdParams::from_timescale(1.0).unwrap();
        let (m, s) = macd(&p, &params).unwrap();
        let limit = c * (26.0 - 12.0) / 2.0;
        assert!((m.values[1999] - limit).abs() < 1e-9);
        assert!(m.values[100..].iter().all(|&v| v > 0.0));
        assert!((s.values[1999] - limit).abs() < 1e-9);
    }

    #[test]
    fn atr_examples() {
        let flat: Vec<Candle> = (0..5).map(|i| Candle::new(i * 60, 3.0, 3.0, 3.0, 3.0)).collect();
        let s = CandleSeries::new("X", 60, flat).unwrap();
        assert!(atr(&s, 100).unwrap().values.iter().all(|&v| v == 0.0));

        let one = CandleSeries::new("X", 60, vec![Candle::new(0, 102.0, 105.0, 100.0, 101.0)]).unwrap();
        assert_eq!(atr(&one, 100).unwrap().values, vec![5.0]);

        let two = CandleSeries::new(
            "X",
            60,
            vec![Candle::new(0, 12.0, 12.0, 12.0, 12.0), Candle::new(60, 9.5, 10.0, 9.0, 9.5)],
        )
        .unwrap();
        // TR[1] = max(1, |10-12|, |9-12|) = 3; prefix average (0 + 3) / 2
        assert_eq!(atr(&two, 100).unwrap().values[1], 1.5);
        assert_eq!(atr(&two, 1).unwrap().values[1], 3.0);
    }

    #[test]
    fn sar_examples() {
        let zero = series(vec![0.0; 4]);
        let atr1 = series(vec![1.0; 4]);
        let st = sar_direction(&zero, &zero, &atr1, 0.3).unwrap();
        assert!(st.iter().all(|s| *s == SarState::Undetermined));

        // delta = 0.3 with atr = 1
        let d = 0.3;
        let m = series(vec![2.0 * d, 2.0 * d, -0.5 * d, -2.0 * d]);
        let st = sar_direction(&m, &zero, &atr1, 0.3).unwrap();
        assert_eq!(st, vec![SarState::Up, SarState::Up, SarState::Up, SarState::Down]);

        let m = series(vec![1.0, -1.0]);
        let z2 = series(vec![0.0; 2]);
        let st = sar_direction(&m, &z2, &z2, 0.0).unwrap();
        assert_eq!(st, vec![SarState::Up, SarState::Down]);

        assert!(matches!(
            sar_direction(&m, &zero, &atr1, 0.3),
            Err(Error::Misaligned(_))
        ));
    }

    proptest! {
        #[test]
        fn ema_shift_equivariant(
            prices in prop::collection::vec(-1e3f64..1e3, 1..60),
            c in -1e3f64..1e3,
            period in 1.0f64..40.0,
        ) {
            let base = ema(&prices, period).unwrap();
            let shifted: Vec<f64> = prices.iter().map(|p| p + c).collect();
            let moved = ema(&shifted, period).unwrap();
            for (a, b) in base.values.iter().zip(&moved.values) {
                prop_assert!((a + c - b).abs() < 1e-9);
            }
        }

        #[test]
        fn macd_shift_invariant(
            prices in prop::collection::vec(-1e3f64..1e3, 40..80),
            c in -1e3f64..1e3,
        ) {
            let params = MacdParams::from_timescale(1.0).unwrap();
            let (m0, _) = macd(&prices, &params).unwrap();
            let shifted: Vec<f64> = prices.iter().map(|p| p + c).collect();
            let (m1, _) = macd(&shifted, &params).unwrap();
            for (a, b) in m0.values.iter().zip(&m1.values) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn sar_holds_inside_band(
            diffs in prop::collection::vec(-3.0f64..3.0, 1..50),
            atrs in prop::collection::vec(0.0f64..3.0, 50),
        ) {
            let n = diffs.len();
            let m = series(diffs.clone());
            let z = series(vec![0.0; n]);
            let a = series(atrs[..n].to_vec());
            let st = sar_direction(&m, &z, &a, 0.3).unwrap();
            for i in 1..n {
                if diffs[i].abs() <= 0.3 * atrs[i] {
                    prop_assert_eq!(st[i], st[i - 1]);
                }
            }
        }

        #[test]
        fn atr_nonnegative(moves in prop::collection::vec((-5.0f64..5.0, 0.0f64..3.0), 1..120)) {
            let mut price = 100.0;
            let candles: Vec<Candle> = moves
                .iter()
                .enumerate()
                .map(|(i, (step, wick))| {
                    let open = price;
                    price += step;
                    Candle::new(i as i64 * 60, open, open.max(price) + wick, open.min(price) - wick, price)
                })
                .collect();
            let s = CandleSeries::new("X", 60, candles).unwrap();
            prop_assert!(atr(&s, 100).unwrap().values.iter().all(|&v| v >= 0.0));
        }
    }
}
