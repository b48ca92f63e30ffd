// Detect the MinMax extrema of one market at a few timescales and report
// the mean wavelength on both clocks.

use leadlag::market_data::TimeMode;
use leadlag::minmax::{mean_wavelength, rolling_wavelength, write_extrema_csv, MinMaxDetector};
use leadlag::synthetic::{sinusoid_series, SyntheticConfig};
use leadlag::indicators::DELTA_COEFF;

pub fn run_example() -> leadlag::Result<()> {
    // weekday sessions, so wall-clock and candle-clock wavelengths differ
    let series = sinusoid_series(&SyntheticConfig {
        n: 3000,
        weekdays_only: true,
        ..SyntheticConfig::default()
    })?;
    let bar = series.bar_duration() as f64;
    let detector = MinMaxDetector::new(&series, DELTA_COEFF)?;

    for t in [1.0, 4.0, 12.0] {
        let ex = detector.detect(t)?;
        assert!(ex.is_well_formed());
        let candles = mean_wavelength(&ex, &series, TimeMode::Candles)? / bar;
        let wall = mean_wavelength(&ex, &series, TimeMode::Seconds)? / bar;
        println!("timescale {t:>4}: {:>4} extrema, wavelength {candles:.1} candles ({wall:.1} bars of wall clock)", ex.len());
    }

    let ex = detector.detect(1.0)?;
    let rolling = rolling_wavelength(&ex, 10)?;
    println!("rolling wavelength over 10 extrema: {} points", rolling.len());

    let mut csv = Vec::new();
    write_extrema_csv(&ex, &mut csv)?;
    let text = String::from_utf8(csv).expect("utf-8");
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
