use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use leadlag::circular_stats::{CircularSummary, LeadClass};
use leadlag::phase_shift::{AngularDistribution, PhaseSample, PhaseTime};
use leadlag::pipeline::{aggregate_histograms, run_pair_analysis, SweepConfig};
use leadlag::report::{write_rose_plot, write_table, ReportRow, TableFormat, TABLE_HEADER};
use leadlag::synthetic::{delayed_pair, sinusoid_series, SyntheticConfig};
use quick_xml::events::Event;
use quick_xml::Reader;

fn sweep(lo: u32, hi: u32) -> SweepConfig {
    SweepConfig {
        wavelengths: lo..=hi,
        ..SweepConfig::default()
    }
}

#[test]
fn five_candle_lead_over_attainable_band() {
    let cfg = SyntheticConfig {
        n: 20_000,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 5).unwrap();
    let report = run_pair_analysis(&a, &b, &sweep(50, 80), None).unwrap();
    let [ab, ba] = &report.directions;
    assert!(ab.failed.is_empty());
    let m = ab.mode(PhaseTime::ExtremumTime).unwrap();
    let mean = m.summary.mean_direction.unwrap();
    assert!((mean - 0.2 * PI).abs() <= 0.05, "α̂ = {mean}");
    assert_eq!(m.classification, LeadClass::PrimaryLeads);
    let lead = m.lead.minutes.unwrap() / 60.0;
    assert!((lead - 5.0).abs() <= 1.5, "lead {lead} candles");

    // the reverse direction sees the same lag with the opposite sign
    let r = ba.mode(PhaseTime::ExtremumTime).unwrap();
    assert_eq!(r.classification, LeadClass::SecondaryLeads);
    assert!(r.lead.minutes.unwrap() < 0.0);
}

#[test]
fn sweep_invariants() {
    let cfg = SyntheticConfig {
        n: 5000,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 2).unwrap();
    let report = run_pair_analysis(&a, &b, &sweep(50, 64), None).unwrap();
    for d in &report.directions {
        for m in &d.modes {
            let total = 15 - d.failed.len();
            assert_eq!(m.groups.len(), total);
            assert_eq!(m.distributions.len(), total);
            let wl: Vec<u32> = m.groups.iter().map(|g| g.wavelength).collect();
            assert!(wl.windows(2).all(|w| w[0] < w[1]));
            for g in &m.groups {
                assert!(g.primary.relative_error <= 0.02);
                assert!(g.secondary.relative_error <= 0.02);
            }
            for dist in &m.distributions {
                let h = aggregate_histograms(std::slice::from_ref(dist), 24).unwrap();
                assert!((h.pooled_freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(dist.samples.iter().all(|s| (-PI..PI).contains(&s.alpha)));
            }
            let pooled: usize = m.groups.iter().map(|g| g.samples).sum();
            assert_eq!(pooled, m.pooled_alphas.len());
        }
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    let a = sinusoid_series(&SyntheticConfig {
        n: 4000,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let r1 = run_pair_analysis(&a, &a, &sweep(50, 60), None).unwrap();
    assert_eq!(r1.directions[0].modes, r1.directions[1].modes);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let r2 = pool.install(|| run_pair_analysis(&a, &a, &sweep(50, 60), None).unwrap());
    assert_eq!(r1, r2);
}

#[test]
fn mismatched_bars_rejected() {
    let a = sinusoid_series(&SyntheticConfig {
        n: 1000,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let b = sinusoid_series(&SyntheticConfig {
        n: 1000,
        bar_duration: 1800,
        ..SyntheticConfig::default()
    })
    .unwrap();
    assert!(run_pair_analysis(&a, &b, &sweep(50, 60), None).is_err());
}

fn fixture_histogram() -> (leadlag::pipeline::AggregatedHistogram, CircularSummary) {
    let groups: Vec<AngularDistribution> = (0..4)
        .map(|g| AngularDistribution {
            samples: (0..30)
                .map(|k| PhaseSample {
                    alpha: 0.4 + 0.1 * g as f64 + 0.9 * ((k * 13 % 30) as f64 / 30.0 - 0.5),
                    secondary_index: k,
                    primary_interval: (k, k + 1),
                    selector: PhaseTime::ExtremumTime,
                    secondary_time: k as i64,
                })
                .collect(),
            wavelength_candles: Some(50 + g),
            lambda_star_seconds: None,
            pair: ("A".into(), "B".into()),
        })
        .collect();
    let pooled: Vec<f64> = groups.iter().flat_map(|d| d.alphas()).collect();
    (
        aggregate_histograms(&groups, 24).unwrap(),
        CircularSummary::compute(&pooled, 0.0, 0.95).unwrap(),
    )
}

#[test]
fn rose_plot_matches_golden_file() {
    let (hist, summary) = fixture_histogram();
    let mut svg = Vec::new();
    write_rose_plot(&hist, &summary, &mut svg).unwrap();
    let mut again = Vec::new();
    write_rose_plot(&hist, &summary, &mut again).unwrap();
    assert_eq!(svg, again);

    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/rose.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &svg).unwrap();
    }
    assert_eq!(String::from_utf8(svg).unwrap(), fs::read_to_string(&golden).unwrap());
}

#[test]
fn rose_plot_is_well_formed_svg() {
    let (hist, summary) = fixture_histogram();
    let mut svg = Vec::new();
    write_rose_plot(&hist, &summary, &mut svg).unwrap();
    let text = String::from_utf8(svg).unwrap();
    let mut reader = Reader::from_str(&text);
    let mut depth = 0i32;
    let mut root = None;
    loop {
        match reader.read_event().expect("well-formed XML") {
            Event::Start(e) => {
                if depth == 0 {
                    let version = e.try_get_attribute("version").unwrap().map(|a| a.value.into_owned());
                    root = Some((String::from_utf8(e.name().as_ref().to_vec()).unwrap(), version));
                }
                depth += 1;
            }
            Event::End(_) => depth -= 1,
            Event::Eof => break,
            _ => {}
        }
    }
    assert_eq!(depth, 0);
    assert_eq!(root, Some(("svg".to_string(), Some(b"1.1".to_vec()))));
}

#[test]
fn csv_table_reads_back_rounded() {
    let row = ReportRow {
        prime: "EURUSD".into(),
        sec: "GBPUSD".into(),
        alpha_hat: Some(0.0123456),
        d: Some(0.0031),
        alpha_w: Some(0.0119),
        d_w: Some(0.0029),
        lead_minutes: Some(11.8334),
        d_lead: Some(2.8765),
        s_hat: 0.61234,
        b_hat: Some(-0.0456),
        k_hat: Some(0.1),
        p_ww: Some(0.98765),
        h_m: Some(1),
        leader: leadlag::report::Leader::Prime,
    };
    let mut out = Vec::new();
    write_table(std::slice::from_ref(&row), TableFormat::Csv, &mut out).unwrap();
    let mut rdr = csv::Reader::from_reader(out.as_slice());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), TABLE_HEADER);
    let rec = rdr.records().next().unwrap().unwrap();
    let cell = |i: usize| rec[i].parse::<f64>().unwrap();
    let round = |v: f64| (v * 1000.0).round() / 1000.0;
    assert_eq!(cell(2), round(row.alpha_hat.unwrap()));
    assert_eq!(cell(6), round(row.lead_minutes.unwrap()));
    assert_eq!(cell(8), round(row.s_hat));
    assert_eq!(cell(9), round(row.b_hat.unwrap()));
    assert_eq!(cell(11), round(row.p_ww.unwrap()));
    assert_eq!(&rec[12], "1");
    assert_eq!(&rec[13], "prime");
}
