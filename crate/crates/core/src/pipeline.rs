//! The wavelength sweep: synchronize a pair at every target wavelength,
//! extract phase shifts, and pool them into one report per direction and
//! time mode.
//!
//! Wavelength groups run in parallel on the current rayon pool. Results are
//! collected in wavelength order, so the report does not depend on how the
//! work was scheduled.

use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{synchronize_truncated, CalibrationCache, CalibrationOptions, CalibrationResult, DEFAULT_TOLERANCE};
use crate::circular_stats::{
    confidence_interval, hat_weights, mean_direction, watson_williams, CircularSummary, LeadClass,
};
use crate::error::{Error, Result};
use crate::market_data::{truncate_to_common_span, CandleSeries};
use crate::phase_shift::{compute_phase_shifts, AngularDistribution, PhaseTime};

/// Share of wavelength groups that may fail before the analysis gives up.
pub const MAX_FAILED_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub wavelengths: RangeInclusive<u32>,
    pub time_modes: Vec<PhaseTime>,
    pub histogram_bins: usize,
    pub hat_center: f64,
    pub tolerance: f64,
    pub confidence: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            wavelengths: 30..=180,
            time_modes: PhaseTime::ALL.to_vec(),
            histogram_bins: 24,
            hat_center: 0.0,
            tolerance: DEFAULT_TOLERANCE,
            confidence: 0.95,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wavelengths.is_empty() {
            return Err(Error::invalid("wavelength range is empty"));
        }
        if *self.wavelengths.start() < 3 {
            return Err(Error::invalid("wavelengths must be at least 3 candles"));
        }
        if self.histogram_bins < 4 || !self.histogram_bins.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "histogram bins must be even and at least 4, got {}",
                self.histogram_bins
            )));
        }
        if self.time_modes.is_empty() {
            return Err(Error::invalid("no time mode selected"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::invalid(format!("tolerance must be in (0, 1), got {}", self.tolerance)));
        }
        if !self.hat_center.is_finite() {
            return Err(Error::invalid("hat center must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedHistogram {
    /// `bins + 1` edges from -π to π.
    pub bin_edges: Vec<f64>,
    pub mean_freq: Vec<f64>,
    pub min_freq: Vec<f64>,
    pub max_freq: Vec<f64>,
    pub std_freq: Vec<f64>,
    pub pooled_freq: Vec<f64>,
}

pub fn bin_index(alpha: f64, bins: usize) -> usize {
    let k = ((alpha + PI) / TAU * bins as f64).floor();
    (k.max(0.0) as usize).min(bins - 1)
}

fn relative_frequencies(alphas: impl Iterator<Item = f64>, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    let mut n = 0usize;
    for a in alphas {
        counts[bin_index(a, bins)] += 1;
        n += 1;
    }
    counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect()
}

/// Per-bin mean, spread and range of the per-wavelength histograms, plus the
/// histogram of the pooled sample.
pub fn aggregate_histograms(distributions: &[AngularDistribution], bins: usize) -> Result<AggregatedHistogram> {
    if distributions.is_empty() {
        return Err(Error::EmptyInput("distributions"));
    }
    if bins < 4 || !bins.is_multiple_of(2) {
        return Err(Error::invalid(format!("histogram bins must be even and at least 4, got {bins}")));
    }
    let per: Vec<Vec<f64>> = distributions
        .iter()
        .map(|d| relative_frequencies(d.samples.iter().map(|s| s.alpha), bins))
        .collect();
    let m = per.len() as f64;
    let mut mean_freq = vec![0.0; bins];
    let mut min_freq = vec![f64::INFINITY; bins];
    let mut max_freq = vec![f64::NEG_INFINITY; bins];
    for h in &per {
        for b in 0..bins {
            mean_freq[b] += h[b];
            min_freq[b] = min_freq[b].min(h[b]);
            max_freq[b] = max_freq[b].max(h[b]);
        }
    }
    for v in &mut mean_freq {
        *v /= m;
    }
    let std_freq = (0..bins)
        .map(|b| (per.iter().map(|h| (h[b] - mean_freq[b]).powi(2)).sum::<f64>() / m).sqrt())
        .collect();
    let pooled_freq = relative_frequencies(
        distributions.iter().flat_map(|d| d.samples.iter().map(|s| s.alpha)),
        bins,
    );
    Ok(AggregatedHistogram {
        bin_edges: (0..=bins).map(|k| -PI + TAU * k as f64 / bins as f64).collect(),
        mean_freq,
        min_freq,
        max_freq,
        std_freq,
        pooled_freq,
    })
}

/// One wavelength group that calibrated successfully.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGroup {
    pub wavelength: u32,
    pub primary: CalibrationResult,
    pub secondary: CalibrationResult,
    pub lambda_star_seconds: f64,
    pub samples: usize,
    pub weighted_mean: Option<f64>,
    pub weighted_ci: Option<f64>,
    pub lead_minutes: Option<f64>,
    pub lead_halfwidth_minutes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedGroup {
    pub wavelength: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadLagEstimate {
    /// Sample-size-weighted mean of the per-wavelength leads, in minutes.
    pub minutes: Option<f64>,
    pub halfwidth_minutes: Option<f64>,
    /// Pooled weighted mean direction times the mean wavelength.
    pub pooled_minutes: Option<f64>,
    pub pooled_halfwidth_minutes: Option<f64>,
    pub mean_wavelength_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: PhaseTime,
    pub summary: CircularSummary,
    /// Test of zero mean direction: 0 keeps, 1 rejects, `None` if undefined.
    pub mean_test: Option<u8>,
    /// Watson-Williams p-value across wavelength groups.
    pub p_ww: Option<f64>,
    pub lead: LeadLagEstimate,
    pub classification: LeadClass,
    pub histogram: AggregatedHistogram,
    pub groups: Vec<WavelengthGroup>,
    pub pooled_alphas: Vec<f64>,
    #[serde(skip)]
    pub distributions: Vec<AngularDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionReport {
    pub primary: String,
    pub secondary: String,
    pub failed: Vec<FailedGroup>,
    pub modes: Vec<ModeReport>,
}

impl DirectionReport {
    pub fn mode(&self, mode: PhaseTime) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    /// `<primary>_<secondary>`.
    pub fn label(&self) -> String {
        format!("{}_{}", self.primary, self.secondary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub config: SweepConfig,
    /// First market as primary, then second market as primary.
    pub directions: [DirectionReport; 2],
}

struct GroupOutcome {
    wavelength: u32,
    result: Result<(WavelengthGroupBase, Vec<AngularDistribution>)>,
}

struct WavelengthGroupBase {
    primary: CalibrationResult,
    secondary: CalibrationResult,
    lambda_star_seconds: f64,
}

fn run_group(
    p: &CandleSeries,
    s: &CandleSeries,
    wavelength: u32,
    config: &SweepConfig,
    opts: &CalibrationOptions,
    cache: Option<&CalibrationCache>,
) -> Result<(WavelengthGroupBase, Vec<AngularDistribution>)> {
    let synced = synchronize_truncated(p, s, wavelength as f64, opts, cache)?;
    let mut dists = Vec::with_capacity(config.time_modes.len());
    for &mode in &config.time_modes {
        let mut d = compute_phase_shifts(&synced.primary_extrema, &synced.secondary_extrema, mode)?;
        d.wavelength_candles = Some(wavelength);
        d.lambda_star_seconds = Some(synced.lambda_star_seconds);
        dists.push(d);
    }
    Ok((
        WavelengthGroupBase {
            primary: synced.primary,
            secondary: synced.secondary,
            lambda_star_seconds: synced.lambda_star_seconds,
        },
        dists,
    ))
}

fn sweep_direction(
    p: &CandleSeries,
    s: &CandleSeries,
    config: &SweepConfig,
    opts: &CalibrationOptions,
    cache: Option<&CalibrationCache>,
) -> Result<DirectionReport> {
    let wavelengths: Vec<u32> = config.wavelengths.clone().collect();
    let outcomes: Vec<GroupOutcome> = wavelengths
        .par_iter()
        .map(|&w| GroupOutcome {
            wavelength: w,
            result: run_group(p, s, w, config, opts, cache),
        })
        .collect();

    let total = outcomes.len();
    let mut failed = Vec::new();
    let mut ok = Vec::new();
    for o in outcomes {
        match o.result {
            Ok(r) => ok.push((o.wavelength, r)),
            Err(e) => failed.push(FailedGroup {
                wavelength: o.wavelength,
                reason: e.to_string(),
            }),
        }
    }
    if failed.len() as f64 > MAX_FAILED_SHARE * total as f64 || ok.is_empty() {
        return Err(Error::TooManyFailedGroups {
            failed: failed.len(),
            total,
        });
    }

    let mut modes = Vec::with_capacity(config.time_modes.len());
    for (k, &mode) in config.time_modes.iter().enumerate() {
        let groups: Vec<(u32, &WavelengthGroupBase, &AngularDistribution)> =
            ok.iter().map(|(w, (base, d))| (*w, base, &d[k])).collect();
        modes.push(mode_report(mode, &groups, config)?);
    }
    Ok(DirectionReport {
        primary: p.symbol().to_string(),
        secondary: s.symbol().to_string(),
        failed,
        modes,
    })
}

fn mode_report(
    mode: PhaseTime,
    groups: &[(u32, &WavelengthGroupBase, &AngularDistribution)],
    config: &SweepConfig,
) -> Result<ModeReport> {
    let pooled: Vec<f64> = groups.iter().flat_map(|(_, _, d)| d.samples.iter().map(|s| s.alpha)).collect();
    let summary = CircularSummary::compute(&pooled, config.hat_center, config.confidence)?;

    let mut out_groups = Vec::with_capacity(groups.len());
    let (mut lead_sum, mut hw_sum, mut weight) = (0.0, 0.0, 0.0);
    let mut lambda_sum = 0.0;
    for (w, base, d) in groups {
        let alphas = d.alphas();
        let weights = hat_weights(&alphas, config.hat_center);
        let wm = mean_direction(&alphas, Some(&weights)).ok();
        let wci = wm.and_then(|_| confidence_interval(&alphas, Some(&weights), config.confidence).ok());
        // candle-clock wavelength of the primary, in minutes
        let lambda_min = base.primary.achieved_wavelength / 60.0;
        lambda_sum += lambda_min;
        let lead = wm.map(|a| a / TAU * lambda_min);
        let hw = wci.map(|d| d / TAU * lambda_min);
        if let (Some(l), Some(h)) = (lead, hw) {
            let n = alphas.len() as f64;
            lead_sum += n * l;
            hw_sum += n * h;
            weight += n;
        }
        out_groups.push(WavelengthGroup {
            wavelength: *w,
            primary: base.primary,
            secondary: base.secondary,
            lambda_star_seconds: base.lambda_star_seconds,
            samples: alphas.len(),
            weighted_mean: wm,
            weighted_ci: wci,
            lead_minutes: lead,
            lead_halfwidth_minutes: hw,
        });
    }
    let mean_lambda = lambda_sum / groups.len() as f64;
    let lead = LeadLagEstimate {
        minutes: (weight > 0.0).then(|| lead_sum / weight),
        halfwidth_minutes: (weight > 0.0).then(|| hw_sum / weight),
        pooled_minutes: summary.weighted_mean.map(|a| a / TAU * mean_lambda),
        pooled_halfwidth_minutes: summary.weighted_ci.map(|d| d / TAU * mean_lambda),
        mean_wavelength_minutes: mean_lambda,
    };

    let ww_groups: Vec<Vec<f64>> = groups
        .iter()
        .map(|(_, _, d)| d.alphas())
        .filter(|a| a.len() >= 2)
        .collect();
    let p_ww = if ww_groups.len() >= 2 {
        watson_williams(&ww_groups).ok()
    } else {
        None
    };

    Ok(ModeReport {
        mode,
        mean_test: summary.mean_test(0.0),
        classification: summary.classification(),
        summary,
        p_ww,
        lead,
        histogram: aggregate_histograms(
            &groups.iter().map(|(_, _, d)| (*d).clone()).collect::<Vec<_>>(),
            config.histogram_bins,
        )?,
        groups: out_groups,
        pooled_alphas: pooled,
        distributions: groups.iter().map(|(_, _, d)| (*d).clone()).collect(),
    })
}

/// Full analysis of a pair in both directions.
pub fn run_pair_analysis(
    a: &CandleSeries,
    b: &CandleSeries,
    config: &SweepConfig,
    cache: Option<&CalibrationCache>,
) -> Result<PairReport> {
    config.validate()?;
    if a.bar_duration() != b.bar_duration() {
        return Err(Error::Misaligned(format!(
            "bar durations differ: {} s vs {} s",
            a.bar_duration(),
            b.bar_duration()
        )));
    }
    let (a, b) = truncate_to_common_span(a, b)?;
    let opts = CalibrationOptions::default().with_tolerance(config.tolerance);
    let (ab, ba) = rayon::join(
        || sweep_direction(&a, &b, config, &opts, cache),
        || sweep_direction(&b, &a, config, &opts, cache),
    );
    Ok(PairReport {
        config: config.clone(),
        directions: [ab?, ba?],
    })
}
