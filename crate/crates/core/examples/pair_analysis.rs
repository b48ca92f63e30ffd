// Full sweep over a band of wavelengths for a pair where B trails A by
// five candles, written out as tables, rose plots and a manifest.

use leadlag::calibration::data_hash;
use leadlag::pipeline::{run_pair_analysis, SweepConfig};
use leadlag::report::{write_reports, InputRecord};
use leadlag::synthetic::{delayed_pair, SyntheticConfig};

pub fn run_example() -> leadlag::Result<()> {
    let cfg = SyntheticConfig {
        n: 4000,
        walk: 0.0,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 5)?;
    let config = SweepConfig {
        wavelengths: 55..=70,
        ..SweepConfig::default()
    };
    let report = run_pair_analysis(&a, &b, &config, None)?;

    for d in &report.directions {
        for m in &d.modes {
            println!(
                "{} vs {} [{}]: α̂ = {:.3}, α̂w = {:.3} ± {:.3}, lead {:.1} min, p_ww {:.3}, {}",
                d.primary,
                d.secondary,
                m.mode.as_str(),
                m.summary.mean_direction.unwrap_or(f64::NAN),
                m.summary.weighted_mean.unwrap_or(f64::NAN),
                m.summary.weighted_ci.unwrap_or(f64::NAN),
                m.lead.minutes.unwrap_or(f64::NAN),
                m.p_ww.unwrap_or(f64::NAN),
                m.classification.as_str()
            );
        }
    }

    let inputs = [&a, &b]
        .iter()
        .map(|s| InputRecord {
            symbol: s.symbol().to_string(),
            path: None,
            sha256: data_hash(s),
            candles: s.len(),
        })
        .collect();
    let out = std::env::temp_dir().join("leadlag-pair-analysis");
    let files = write_reports(&report, inputs, &out, false)?;
    println!("{} files under {}", files.len(), out.display());
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
