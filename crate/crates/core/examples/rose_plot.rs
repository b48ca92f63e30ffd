// Aggregate per-wavelength histograms and draw them as a rose plot.

use std::f64::consts::PI;

use leadlag::circular_stats::CircularSummary;
use leadlag::phase_shift::{AngularDistribution, PhaseSample, PhaseTime};
use leadlag::pipeline::aggregate_histograms;
use leadlag::report::write_rose_plot;

fn distribution(alphas: &[f64]) -> AngularDistribution {
    AngularDistribution {
        samples: alphas
            .iter()
            .enumerate()
            .map(|(j, &alpha)| PhaseSample {
                alpha,
                secondary_index: j,
                primary_interval: (j, j + 1),
                selector: PhaseTime::ExtremumTime,
                secondary_time: j as i64,
            })
            .collect(),
        wavelength_candles: None,
        lambda_star_seconds: None,
        pair: ("A".into(), "B".into()),
    }
}

pub fn run_example() -> leadlag::Result<()> {
    // three wavelength groups clustered a little right of zero
    let groups: Vec<AngularDistribution> = (0..3)
        .map(|g| {
            let alphas: Vec<f64> = (0..40)
                .map(|k| 0.2 + 0.05 * g as f64 + 0.6 * ((k * 7919 % 40) as f64 / 40.0 - 0.5))
                .collect();
            distribution(&alphas)
        })
        .collect();
    let hist = aggregate_histograms(&groups, 24)?;
    let pooled: Vec<f64> = groups.iter().flat_map(|d| d.alphas()).collect();
    let summary = CircularSummary::compute(&pooled, 0.0, 0.95)?;

    let path = std::env::temp_dir().join("leadlag-rose.svg");
    write_rose_plot(&hist, &summary, std::fs::File::create(&path)?)?;
    let peak = hist
        .pooled_freq
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (k, &f)| if f > best.1 { (k, f) } else { best });
    println!(
        "peak bin [{:.3}, {:.3}) holds {:.1}% of the pooled sample",
        hist.bin_edges[peak.0] / PI,
        hist.bin_edges[peak.0 + 1] / PI,
        100.0 * peak.1
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
