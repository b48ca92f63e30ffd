// MACD, ATR and the thresholded SAR state on a synthetic series.

use leadlag::indicators::{atr, macd, sar_direction, MacdParams, SarState, ATR_PERIOD, DELTA_COEFF};
use leadlag::synthetic::{sinusoid_series, SyntheticConfig};

pub fn run_example() -> leadlag::Result<()> {
    let series = sinusoid_series(&SyntheticConfig {
        n: 600,
        ..SyntheticConfig::default()
    })?;
    let closes = series.closes();

    // one factor scales all three MACD periods
    let params = MacdParams::from_timescale(2.0)?;
    let (line, signal) = macd(&closes, &params)?;
    let range = atr(&series, ATR_PERIOD)?;
    let states = sar_direction(&line, &signal, &range, DELTA_COEFF)?;

    let flips = states
        .windows(2)
        .filter(|w| w[0] != w[1] && w[1] != SarState::Undetermined)
        .count();
    println!("MACD periods {:?}", (params.fast_period, params.slow_period, params.signal_period));
    println!("ATR({ATR_PERIOD}) at the last bar: {:.3}", range.values[closes.len() - 1]);
    println!("SAR state changes: {flips}");
    assert!(flips > 0);
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
