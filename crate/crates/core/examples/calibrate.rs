// Calibrate one market to a target wavelength, then synchronize a pair on
// a common wavelength and reuse the result through the cache.

use leadlag::calibration::{calibrate_timescale, synchronize_pair, CalibrationCache, CalibrationOptions};
use leadlag::market_data::TimeMode;
use leadlag::synthetic::{delayed_pair, SyntheticConfig};

pub fn run_example() -> leadlag::Result<()> {
    let cfg = SyntheticConfig {
        n: 3000,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 3)?;
    let bar = a.bar_duration() as f64;
    let opts = CalibrationOptions::default();

    let res = calibrate_timescale(&a, 80.0 * bar, TimeMode::Candles, &opts, None)?;
    println!(
        "{}: timescale {:.4} gives {:.2} candles (error {:.2}%)",
        a.symbol(),
        res.timescale,
        res.achieved_wavelength / bar,
        100.0 * res.relative_error
    );
    assert!(res.relative_error <= opts.tolerance);

    let cache = CalibrationCache::new();
    let synced = synchronize_pair(&a, &b, 80.0, &opts, Some(&cache))?;
    println!(
        "pair synchronized at {:.2} bars; timescales {:.4} / {:.4}",
        synced.lambda_star_seconds / bar,
        synced.primary.timescale,
        synced.secondary.timescale
    );
    println!("cache holds {} entries", cache.len());

    let again = synchronize_pair(&a, &b, 80.0, &opts, Some(&cache))?;
    assert_eq!(again.primary.timescale, synced.primary.timescale);

    // far beyond what 3000 candles can resolve
    let err = calibrate_timescale(&a, 2000.0 * bar, TimeMode::Candles, &opts, None).unwrap_err();
    println!("unreachable target: {err}");
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
