//! Tables, rose plots and the run manifest.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circular_stats::{CircularSummary, LeadClass};
use crate::error::Result;
use crate::phase_shift::write_samples_csv;
use crate::pipeline::{AggregatedHistogram, DirectionReport, FailedGroup, ModeReport, PairReport, SweepConfig, WavelengthGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leader {
    Prime,
    Sec,
    None,
}

impl Leader {
    pub fn from_class(c: LeadClass) -> Self {
        match c {
            LeadClass::PrimaryLeads => Leader::Prime,
            LeadClass::SecondaryLeads => Leader::Sec,
            LeadClass::Undecided | LeadClass::NotPositivelyCorrelated => Leader::None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Leader::Prime => "prime",
            Leader::Sec => "sec",
            Leader::None => "none",
        }
    }
}

/// One line of the results table. Angles in radians, leads in minutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub prime: String,
    pub sec: String,
    pub alpha_hat: Option<f64>,
    pub d: Option<f64>,
    pub alpha_w: Option<f64>,
    pub d_w: Option<f64>,
    pub lead_minutes: Option<f64>,
    pub d_lead: Option<f64>,
    pub s_hat: f64,
    pub b_hat: Option<f64>,
    pub k_hat: Option<f64>,
    pub p_ww: Option<f64>,
    pub h_m: Option<u8>,
    pub leader: Leader,
}

pub const TABLE_HEADER: [&str; 14] = [
    "prime",
    "sec",
    "alpha_hat",
    "d",
    "alpha_w",
    "d_w",
    "lead_minutes",
    "d_lead",
    "s_hat",
    "b_hat",
    "k_hat",
    "p_ww",
    "h_m",
    "leader",
];

impl ReportRow {
    pub fn from_mode(direction: &DirectionReport, m: &ModeReport) -> Self {
        ReportRow {
            prime: direction.primary.clone(),
            sec: direction.secondary.clone(),
            alpha_hat: m.summary.mean_direction,
            d: m.summary.ci_halfwidth,
            alpha_w: m.summary.weighted_mean,
            d_w: m.summary.weighted_ci,
            lead_minutes: m.lead.minutes,
            d_lead: m.lead.halfwidth_minutes,
            s_hat: m.summary.variance,
            b_hat: m.summary.skewness,
            k_hat: m.summary.kurtosis,
            p_ww: m.p_ww,
            h_m: m.mean_test,
            leader: Leader::from_class(m.classification),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

fn fixed3(v: Option<f64>) -> String {
    match v {
        // avoid printing "-0.000"
        Some(x) if x.abs() < 0.0005 => "0.000".to_string(),
        Some(x) => format!("{x:.3}"),
        None => String::new(),
    }
}

/// CSV rounds to three decimals and leaves undefined cells empty; JSON keeps
/// full precision with `null` for undefined values.
pub fn write_table<W: Write>(rows: &[ReportRow], format: TableFormat, mut sink: W) -> Result<()> {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(TABLE_HEADER)?;
            for r in rows {
                w.write_record([
                    r.prime.clone(),
                    r.sec.clone(),
                    fixed3(r.alpha_hat),
                    fixed3(r.d),
                    fixed3(r.alpha_w),
                    fixed3(r.d_w),
                    fixed3(r.lead_minutes),
                    fixed3(r.d_lead),
                    fixed3(Some(r.s_hat)),
                    fixed3(r.b_hat),
                    fixed3(r.k_hat),
                    fixed3(r.p_ww),
                    r.h_m.map(|h| h.to_string()).unwrap_or_default(),
                    r.leader.as_str().to_string(),
                ])?;
            }
            w.flush()?;
        }
        TableFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, rows)?;
            sink.write_all(b"\n")?;
        }
    }
    Ok(())
}

const SIZE: f64 = 400.0;
const CENTER: f64 = 200.0;
const RADIUS: f64 = 160.0;

fn polar(alpha: f64, r: f64) -> (f64, f64) {
    // 0 points up, positive angles run clockwise
    (CENTER + r * alpha.sin(), CENTER - r * alpha.cos())
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Rose histogram of the mean per-wavelength frequencies, with min/max and
/// ±std whiskers, and the plain (red) and hat-weighted (green) mean
/// directions drawn with length equal to the resultant.
pub fn write_rose_plot<W: Write>(hist: &AggregatedHistogram, summary: &CircularSummary, mut sink: W) -> Result<()> {
    let bins = hist.mean_freq.len();
    let top = hist
        .max_freq
        .iter()
        .chain(&hist.mean_freq)
        .fold(0.0_f64, |a, &b| a.max(b));
    let scale = if top > 0.0 { RADIUS / top } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SIZE
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{0}" height="{0}" fill="white"/>"#, SIZE);
    let _ = writeln!(
        s,
        r##"<circle cx="{c}" cy="{c}" r="{r}" fill="none" stroke="#888888" stroke-width="1"/>"##,
        c = CENTER,
        r = RADIUS
    );
    for k in 0..4 {
        let (x, y) = polar(k as f64 * PI / 2.0, RADIUS);
        let _ = writeln!(
            s,
            r##"<line x1="{c}" y1="{c}" x2="{}" y2="{}" stroke="#cccccc" stroke-width="0.5"/>"##,
            num(x),
            num(y),
            c = CENTER
        );
    }

    let _ = writeln!(s, r#"<g fill="steelblue" fill-opacity="0.6" stroke="navy" stroke-width="0.5">"#);
    for b in 0..bins {
        let r = hist.mean_freq[b] * scale;
        if r <= 0.0 {
            continue;
        }
        let (a0, a1) = (hist.bin_edges[b], hist.bin_edges[b + 1]);
        let (x0, y0) = polar(a0, r);
        let (x1, y1) = polar(a1, r);
        let _ = writeln!(
            s,
            r#"<path d="M {c} {c} L {} {} A {r} {r} 0 0 1 {} {} Z"/>"#,
            num(x0),
            num(y0),
            num(x1),
            num(y1),
            c = CENTER,
            r = num(r)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g stroke="black" fill="none">"#);
    for b in 0..bins {
        if hist.max_freq[b] <= 0.0 {
            continue;
        }
        let mid = 0.5 * (hist.bin_edges[b] + hist.bin_edges[b + 1]);
        let (x0, y0) = polar(mid, hist.min_freq[b] * scale);
        let (x1, y1) = polar(mid, hist.max_freq[b] * scale);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="0.5"/>"#,
            num(x0),
            num(y0),
            num(x1),
            num(y1)
        );
        let lo = (hist.mean_freq[b] - hist.std_freq[b]).max(0.0) * scale;
        let hi = (hist.mean_freq[b] + hist.std_freq[b]) * scale;
        let (x0, y0) = polar(mid, lo);
        let (x1, y1) = polar(mid, hi);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="2"/>"#,
            num(x0),
            num(y0),
            num(x1),
            num(y1)
        );
    }
    let _ = writeln!(s, "</g>");

    let length = summary.resultant_length * RADIUS;
    let directed = summary.mean_direction.is_some();
    if let Some(a) = summary.mean_direction {
        let (x, y) = polar(a, length);
        let _ = writeln!(
            s,
            r#"<line class="mean" x1="{c}" y1="{c}" x2="{}" y2="{}" stroke="red" stroke-width="2"/>"#,
            num(x),
            num(y),
            c = CENTER
        );
    }
    if let Some(a) = summary.weighted_mean.filter(|_| directed) {
        let (x, y) = polar(a, length);
        let _ = writeln!(
            s,
            r#"<line class="weighted-mean" x1="{c}" y1="{c}" x2="{}" y2="{}" stroke="green" stroke-width="2" stroke-dasharray="6,3"/>"#,
            num(x),
            num(y),
            c = CENTER
        );
    }
    let _ = writeln!(s, "</svg>");
    sink.write_all(s.as_bytes())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub symbol: String,
    pub path: Option<String>,
    pub sha256: String,
    pub candles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionManifest {
    pub primary: String,
    pub secondary: String,
    pub groups: Vec<WavelengthGroup>,
    pub failed: Vec<FailedGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: SweepConfig,
    pub inputs: Vec<InputRecord>,
    pub directions: Vec<DirectionManifest>,
    pub outputs: Vec<String>,
}

pub fn pair_name(report: &PairReport) -> String {
    let d = &report.directions[0];
    format!("{}-{}", d.primary, d.secondary)
}

/// Write every table, plot and the manifest under `out`. Returns the paths
/// written, manifest last.
pub fn write_reports(
    report: &PairReport,
    inputs: Vec<InputRecord>,
    out: &Path,
    dump_samples: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let pair = pair_name(report);
    let mut written = Vec::new();
    for d in &report.directions {
        let direction = format!("{}_vs_{}", d.primary, d.secondary);
        for m in &d.modes {
            let stem = format!("{pair}_{direction}_{}", m.mode.as_str());
            let row = [ReportRow::from_mode(d, m)];

            let path = out.join(format!("{stem}.csv"));
            write_table(&row, TableFormat::Csv, fs::File::create(&path)?)?;
            written.push(path);

            let path = out.join(format!("{stem}.json"));
            write_table(&row, TableFormat::Json, fs::File::create(&path)?)?;
            written.push(path);

            let path = out.join(format!("{stem}_rose.svg"));
            write_rose_plot(&m.histogram, &m.summary, fs::File::create(&path)?)?;
            written.push(path);

            if dump_samples {
                let path = out.join(format!("{stem}_samples.csv"));
                write_samples_csv(&m.distributions, fs::File::create(&path)?)?;
                written.push(path);
            }
        }
    }

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: report.config.clone(),
        inputs,
        directions: report
            .directions
            .iter()
            .map(|d| DirectionManifest {
                primary: d.primary.clone(),
                secondary: d.secondary.clone(),
                groups: d.modes.first().map(|m| m.groups.clone()).unwrap_or_default(),
                failed: d.failed.clone(),
            })
            .collect(),
        outputs: written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = out.join(format!("{pair}_manifest.json"));
    let mut f = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circular_stats::CircularSummary;

    fn row(alpha: f64) -> ReportRow {
        ReportRow {
            prime: "A".into(),
            sec: "B".into(),
            alpha_hat: Some(alpha),
            d: Some(0.003),
            alpha_w: None,
            d_w: None,
            lead_minutes: Some(11.8333),
            d_lead: Some(2.9),
            s_hat: 0.5,
            b_hat: Some(-0.0001),
            k_hat: Some(0.25),
            p_ww: Some(1.0),
            h_m: Some(1),
            leader: Leader::Prime,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut out = Vec::new();
        write_table(&[], TableFormat::Csv, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), TABLE_HEADER.join(",") + "\n");
    }

    #[test]
    fn csv_rounds_to_three_decimals() {
        let mut out = Vec::new();
        write_table(&[row(0.0123456)], TableFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "A,B,0.012,0.003,,,11.833,2.900,0.500,0.000,0.250,1.000,1,prime");
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let rows = vec![row(0.012345678901234567), row(-1.0 / 3.0)];
        let mut out = Vec::new();
        write_table(&rows, TableFormat::Json, &mut out).unwrap();
        let back: Vec<ReportRow> = serde_json::from_slice(&out).unwrap();
        assert_eq!(back, rows);
    }

    fn point_mass_hist(bins: usize) -> AggregatedHistogram {
        let mut f = vec![0.0; bins];
        f[bins / 2] = 1.0;
        AggregatedHistogram {
            bin_edges: (0..=bins).map(|k| -PI + 2.0 * PI * k as f64 / bins as f64).collect(),
            mean_freq: f.clone(),
            min_freq: f.clone(),
            max_freq: f.clone(),
            std_freq: vec![0.0; bins],
            pooled_freq: f,
        }
    }

    #[test]
    fn rose_point_mass() {
        let summary = CircularSummary::compute(&[0.0; 5], 0.0, 0.95).unwrap();
        let mut out = Vec::new();
        write_rose_plot(&point_mass_hist(24), &summary, &mut out).unwrap();
        let svg = String::from_utf8(out).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(r#"class="mean" x1="200" y1="200" x2="200.000" y2="40.000""#));
        assert!(svg.contains(r#"class="weighted-mean" x1="200" y1="200" x2="200.000" y2="40.000""#));
    }

    #[test]
    fn rose_uniform_has_no_mean_lines() {
        let bins = 8;
        let f = vec![1.0 / bins as f64; bins];
        let hist = AggregatedHistogram {
            bin_edges: (0..=bins).map(|k| -PI + 2.0 * PI * k as f64 / bins as f64).collect(),
            mean_freq: f.clone(),
            min_freq: f.clone(),
            max_freq: f.clone(),
            std_freq: vec![0.0; bins],
            pooled_freq: f,
        };
        let angles: Vec<f64> = (0..bins).map(|k| -PI + 2.0 * PI * (k as f64 + 0.5) / bins as f64).collect();
        let summary = CircularSummary::compute(&angles, 0.0, 0.95).unwrap();
        let mut out = Vec::new();
        write_rose_plot(&hist, &summary, &mut out).unwrap();
        let svg = String::from_utf8(out).unwrap();
        assert_eq!(svg.matches("<path").count(), bins);
        assert!(svg.contains(r#"A 160.000 160.000"#));
        assert!(!svg.contains("mean"));
    }
}
