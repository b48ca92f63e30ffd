// Phase shifts of a delayed market against its leader.

use std::f64::consts::PI;

use leadlag::calibration::{synchronize_pair, CalibrationOptions};
use leadlag::circular_stats::mean_direction;
use leadlag::phase_shift::{compute_phase_shifts, PhaseTime};
use leadlag::synthetic::{delayed_pair, SyntheticConfig};

pub fn run_example() -> leadlag::Result<()> {
    let cfg = SyntheticConfig {
        n: 3000,
        walk: 0.0,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 4)?;
    let synced = synchronize_pair(&a, &b, 50.0, &CalibrationOptions::default(), None)?;

    for mode in PhaseTime::ALL {
        let dist = compute_phase_shifts(&synced.primary_extrema, &synced.secondary_extrema, mode)?;
        let mean = mean_direction(&dist.alphas(), None)?;
        println!("{:>8}: {} samples, mean phase {:.3}π", mode.as_str(), dist.len(), mean / PI);
        // B lags A, so its extrema come late: positive phase
        assert!(mean > 0.0);
    }
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
