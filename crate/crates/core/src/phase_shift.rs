//! Phase shifts of secondary extrema relative to the primary wave.
//!
//! Each secondary extremum inside the primary's span falls into one primary
//! interval `[t_i, t_{i+1})`. Its phase is the distance to the same-kind end
//! of that interval, scaled so a full interval is π.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::circular_stats::wrap_angle;
use crate::error::{Error, Result};
use crate::minmax::{Extremum, ExtremumSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseTime {
    ExtremumTime,
    ConfirmTime,
}

impl PhaseTime {
    pub const ALL: [PhaseTime; 2] = [PhaseTime::ExtremumTime, PhaseTime::ConfirmTime];

    pub fn of(self, e: &Extremum) -> i64 {
        match self {
            PhaseTime::ExtremumTime => e.time,
            PhaseTime::ConfirmTime => e.confirm_time,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseTime::ExtremumTime => "extremum",
            PhaseTime::ConfirmTime => "confirm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "extremum" | "extremum_time" => Some(PhaseTime::ExtremumTime),
            "confirm" | "confirm_time" => Some(PhaseTime::ConfirmTime),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    /// Radians in `[-π, π)`.
    pub alpha: f64,
    pub secondary_index: usize,
    pub primary_interval: (usize, usize),
    pub selector: PhaseTime,
    pub secondary_time: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularDistribution {
    pub samples: Vec<PhaseSample>,
    pub wavelength_candles: Option<u32>,
    pub lambda_star_seconds: Option<f64>,
    pub pair: (String, String),
}

impl AngularDistribution {
    pub fn alphas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.alpha).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Phase of one time `t` inside the interval `[t_i, t_next)` whose same-kind
/// end is `s`.
pub fn phase_angle(t: i64, s: i64, t_i: i64, t_next: i64) -> f64 {
    assert!(t_next > t_i, "degenerate primary interval");
    wrap_angle((t - s) as f64 / (t_next - t_i) as f64 * PI)
}

pub fn compute_phase_shifts(
    primary: &ExtremumSeries,
    secondary: &ExtremumSeries,
    selector: PhaseTime,
) -> Result<AngularDistribution> {
    let p = &primary.extrema;
    let s = &secondary.extrema;
    if p.len() < 2 {
        return Err(Error::TooFewExtrema(p.len()));
    }
    if s.len() < 2 {
        return Err(Error::TooFewExtrema(s.len()));
    }
    let pt: Vec<i64> = p.iter().map(|e| selector.of(e)).collect();
    let (t_first, t_last) = (pt[0], pt[pt.len() - 1]);

    let mut samples = Vec::new();
    let mut i = 0;
    for (j, e) in s.iter().enumerate() {
        let t = selector.of(e);
        if t < t_first {
            continue;
        }
        if t >= t_last {
            break;
        }
        while pt[i + 1] <= t {
            i += 1;
        }
        let same_end = if p[i].kind == e.kind {
            pt[i]
        } else {
            debug_assert_eq!(p[i + 1].kind, e.kind);
            pt[i + 1]
        };
        samples.push(PhaseSample {
            alpha: phase_angle(t, same_end, pt[i], pt[i + 1]),
            secondary_index: j,
            primary_interval: (i, i + 1),
            selector,
            secondary_time: t,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyPhaseOverlap);
    }
    Ok(AngularDistribution {
        samples,
        wavelength_candles: None,
        lambda_star_seconds: None,
        pair: (primary.source_symbol.clone(), secondary.source_symbol.clone()),
    })
}

/// Raw-sample dump: `wavelength,alpha,secondary_time,mode`.
pub fn write_samples_csv<W: Write>(distributions: &[AngularDistribution], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["wavelength", "alpha", "secondary_time", "mode"])?;
    for d in distributions {
        let wl = d.wavelength_candles.map(|v| v.to_string()).unwrap_or_default();
        for s in &d.samples {
            w.write_record([
                wl.clone(),
                format!("{:?}", s.alpha),
                s.secondary_time.to_string(),
                s.selector.as_str().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
