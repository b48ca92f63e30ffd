// Directional statistics on a handful of angles.

use std::f64::consts::FRAC_PI_2;

use leadlag::circular_stats::{
    classify_lead, confidence_interval, lead_lag, mean_direction, one_sample_mean_test, watson_williams,
    CircularSummary,
};

pub fn run_example() -> leadlag::Result<()> {
    let angles = [0.10, 0.25, -0.05, 0.18, 0.31, 0.02, 0.22, 0.15, -0.12, 0.27];
    let s = CircularSummary::compute(&angles, 0.0, 0.95)?;
    println!("mean direction {:.3}, variance {:.3}", s.mean_direction.unwrap_or(f64::NAN), s.variance);
    println!("95% half-width {:?}", s.ci_halfwidth);
    println!("weighted mean {:?} ± {:?}", s.weighted_mean, s.weighted_ci);

    let h = one_sample_mean_test(&angles, 0.0)?;
    println!("H0 mean = 0: {}", if h == 0 { "kept" } else { "rejected" });

    let m = mean_direction(&angles, None)?;
    let d = confidence_interval(&angles, None, 0.95)?;
    // 100 candles of 60 minutes
    let (lead, spread) = lead_lag(m, d, 6000.0);
    println!("lead {lead:.1} ± {spread:.1} minutes, {:?}", classify_lead(m, d));

    let shifted: Vec<f64> = angles.iter().map(|a| a + FRAC_PI_2).collect();
    let p_same = watson_williams(&[angles.to_vec(), angles.to_vec()])?;
    let p_diff = watson_williams(&[angles.to_vec(), shifted])?;
    println!("Watson-Williams p: identical {p_same:.3}, shifted {p_diff:.2e}");
    assert_eq!(p_same, 1.0);
    assert!(p_diff < 0.05);
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
