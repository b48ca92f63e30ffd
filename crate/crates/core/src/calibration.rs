//! Timescale calibration: find the MACD timescale at which a market's
//! MinMax process attains a target mean wavelength, and synchronize a pair
//! of markets on one common wavelength.
//!
//! The wavelength-vs-timescale map is a noisy step function. Below some
//! timescale the SAR threshold suppresses nearly all reversals and the
//! wavelength blows up again, so the map is U-shaped overall. The search
//! only considers the increasing branch that starts where the finest
//! attainable resolution is first reached.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::indicators::{DELTA_COEFF, MACD_DEFAULTS};
use crate::market_data::{truncate_to_common_span, CandleSeries, TimeMode};
use crate::minmax::{mean_wavelength, ExtremumSeries, MinMaxDetector};

pub const DEFAULT_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub timescale: f64,
    /// Seconds, measured per `mode`.
    pub achieved_wavelength: f64,
    pub target_wavelength: f64,
    pub relative_error: f64,
    pub extrema_count: usize,
    pub mode: TimeMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    pub tolerance: f64,
    pub min_timescale: f64,
    pub max_timescale: f64,
    pub grid_points: usize,
    pub max_probes: usize,
    pub delta_coeff: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tolerance: DEFAULT_TOLERANCE,
            min_timescale: 0.1,
            max_timescale: 100.0,
            grid_points: 48,
            max_probes: 160,
            delta_coeff: DELTA_COEFF,
        }
    }
}

impl CalibrationOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    /// Lowest timescale whose scaled signal period is still a valid EMA period.
    fn lower_bound(&self) -> f64 {
        self.min_timescale.max(1.0 / MACD_DEFAULTS.2)
    }
}

#[derive(Debug, Clone, Copy)]
struct Probe {
    timescale: f64,
    wavelength: Option<f64>,
    count: usize,
}

impl Probe {
    /// Too coarse to yield extrema counts as an infinitely long wave.
    fn wl(&self) -> f64 {
        self.wavelength.unwrap_or(f64::INFINITY)
    }
}

struct Search<'a> {
    detector: MinMaxDetector<'a>,
    mode: TimeMode,
    probes: Vec<Probe>,
}

impl<'a> Search<'a> {
    fn eval(&self, timescale: f64) -> Probe {
        let (wavelength, count) = match self.detector.detect(timescale) {
            Ok(ex) => (
                mean_wavelength(&ex, self.detector.series(), self.mode).ok(),
                ex.len(),
            ),
            Err(_) => (None, 0),
        };
        Probe {
            timescale,
            wavelength,
            count,
        }
    }

    fn probe(&mut self, timescale: f64) -> Probe {
        let p = self.eval(timescale);
        self.probes.push(p);
        p
    }

    fn probe_many(&mut self, ts: &[f64]) -> Vec<Probe> {
        let out: Vec<Probe> = ts.par_iter().map(|&t| self.eval(t)).collect();
        self.probes.extend_from_slice(&out);
        out
    }
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo * (r * k as f64).exp() }).collect()
}

fn first_bracket(probes: &[Probe], target: f64) -> Option<(Probe, Probe)> {
    probes
        .windows(2)
        .find(|w| w[0].wl() <= target && target <= w[1].wl())
        .map(|w| (w[0], w[1]))
}

fn span_seconds(series: &CandleSeries, mode: TimeMode) -> i64 {
    series.elapsed(0, series.len() - 1, mode).unwrap_or(0)
}

/// Find a timescale whose mean wavelength (seconds, measured per `mode`)
/// is within the relative tolerance of `target`.
///
/// Among all evaluated timescales on the increasing branch that meet the
/// tolerance the smallest wins. `hint` adds one extra probe, which is
/// preferred whenever it meets the tolerance.
pub fn calibrate_timescale(
    series: &CandleSeries,
    target: f64,
    mode: TimeMode,
    opts: &CalibrationOptions,
    hint: Option<f64>,
) -> Result<CalibrationResult> {
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let bar = series.bar_duration() as f64;
    if !(target > 2.0 * bar) {
        return Err(Error::TargetUnreachable(format!(
            "target {:.1} candles is below the MACD resolution (> 2 candles required)",
            target / bar
        )));
    }
    // room for at least 10 extrema, i.e. 4.5 wavelengths
    if (span_seconds(series, mode) as f64) < 4.5 * target {
        return Err(Error::TargetUnreachable(format!(
            "series span is too short to host 10 extrema at wavelength {:.1} candles",
            target / bar
        )));
    }

    let mut search = Search {
        detector: MinMaxDetector::new(series, opts.delta_coeff)?,
        mode,
        probes: Vec::new(),
    };
    let lo = opts.lower_bound();
    let grid = search.probe_many(&geometric(lo, opts.max_timescale, opts.grid_points));

    let finest = grid.iter().map(Probe::wl).fold(f64::INFINITY, f64::min);
    if !finest.is_finite() {
        return Err(Error::TooFewExtrema(0));
    }
    let branch_start = grid
        .iter()
        .position(|p| p.wl() <= finest * (1.0 + opts.tolerance))
        .expect("finest probe exists");
    let branch_lo = grid[branch_start].timescale;
    if target < finest * (1.0 - opts.tolerance) {
        return Err(Error::TargetUnreachable(format!(
            "target {:.2} candles is below the finest attainable wavelength {:.2}",
            target / bar,
            finest / bar
        )));
    }

    if let Some(h) = hint {
        if h >= branch_lo && h <= opts.max_timescale {
            search.probe(h);
        }
    }

    if let Some((mut a, mut b)) = first_bracket(&grid[branch_start..], target) {
        let mut refined = false;
        while search.probes.len() < opts.max_probes && b.timescale / a.timescale > 1.0 + 1e-7 {
            if a.wl() == target {
                break;
            }
            let mid = search.probe((a.timescale * b.timescale).sqrt());
            let monotone = a.wl() <= mid.wl() && mid.wl() <= b.wl();
            if !monotone && !refined {
                // envelope broken: dense refinement of the current bracket
                refined = true;
                let dense = search.probe_many(&geometric(a.timescale, b.timescale, 17));
                if let Some((na, nb)) = first_bracket(&dense, target) {
                    a = na;
                    b = nb;
                    continue;
                }
            }
            if mid.wl() <= target {
                a = mid;
            } else {
                b = mid;
            }
        }
    }

    let feasible = |p: &&Probe| {
        p.timescale >= branch_lo && p.wavelength.is_some() && (p.wl() - target).abs() / target <= opts.tolerance
    };
    // a feasible hint keeps both markets on the same timescale
    let chosen = hint
        .and_then(|h| search.probes.iter().filter(feasible).find(|p| p.timescale == h))
        .or_else(|| {
            search
                .probes
                .iter()
                .filter(feasible)
                .min_by(|p, q| p.timescale.total_cmp(&q.timescale))
        });
    if let Some(p) = chosen {
        return Ok(CalibrationResult {
            timescale: p.timescale,
            achieved_wavelength: p.wl(),
            target_wavelength: target,
            relative_error: (p.wl() - target).abs() / target,
            extrema_count: p.count,
            mode,
        });
    }
    let closest = search
        .probes
        .iter()
        .filter(|p| p.timescale >= branch_lo && p.wavelength.is_some())
        .map(|p| (p, (p.wl() - target).abs() / target))
        .min_by(|(p, e), (q, f)| e.total_cmp(f).then(p.timescale.total_cmp(&q.timescale)));
    match closest {
        Some((p, err)) => Err(Error::TargetUnreachable(format!(
            "closest wavelength {:.2} candles at timescale {:.4} misses target {:.2} by {:.1}%",
            p.wl() / bar,
            p.timescale,
            target / bar,
            100.0 * err
        ))),
        None => Err(Error::TargetUnreachable("wavelength map never crosses the target".into())),
    }
}

/// Evaluate a known timescale as a calibration result without searching.
pub fn evaluate_timescale(
    series: &CandleSeries,
    timescale: f64,
    target: f64,
    mode: TimeMode,
    delta_coeff: f64,
) -> Result<(CalibrationResult, ExtremumSeries)> {
    let ex = MinMaxDetector::new(series, delta_coeff)?.detect(timescale)?;
    let achieved = mean_wavelength(&ex, series, mode)?;
    Ok((
        CalibrationResult {
            timescale,
            achieved_wavelength: achieved,
            target_wavelength: target,
            relative_error: (achieved - target).abs() / target,
            extrema_count: ex.len(),
            mode,
        },
        ex,
    ))
}

/// Both markets calibrated to one common wavelength.
#[derive(Debug, Clone)]
pub struct SyncedPair {
    pub primary: CalibrationResult,
    pub secondary: CalibrationResult,
    /// Wall-clock wavelength of the calibrated primary market.
    pub lambda_star_seconds: f64,
    pub primary_extrema: ExtremumSeries,
    pub secondary_extrema: ExtremumSeries,
}

fn labeled(market: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Calibration {
        market: market.to_string(),
        source: Box::new(e),
    }
}

/// Calibrate the primary to `target_candles` on the candle clock, read off
/// its wall-clock wavelength, and calibrate the secondary to that.
/// Both series are first cut to their common span.
pub fn synchronize_pair(
    primary: &CandleSeries,
    secondary: &CandleSeries,
    target_candles: f64,
    opts: &CalibrationOptions,
    cache: Option<&CalibrationCache>,
) -> Result<SyncedPair> {
    let (p, s) = truncate_to_common_span(primary, secondary)?;
    synchronize_truncated(&p, &s, target_candles, opts, cache)
}

/// `synchronize_pair` for series already cut to a common span.
pub fn synchronize_truncated(
    p: &CandleSeries,
    s: &CandleSeries,
    target_candles: f64,
    opts: &CalibrationOptions,
    cache: Option<&CalibrationCache>,
) -> Result<SyncedPair> {
    let target = target_candles * p.bar_duration() as f64;
    let (primary, primary_extrema) =
        calibrate_cached(p, target, TimeMode::Candles, opts, None, cache).map_err(labeled(p.symbol()))?;
    let lambda_star = mean_wavelength(&primary_extrema, p, TimeMode::Seconds)?;
    let (secondary, secondary_extrema) =
        calibrate_cached(s, lambda_star, TimeMode::Seconds, opts, Some(primary.timescale), cache)
            .map_err(labeled(s.symbol()))?;
    Ok(SyncedPair {
        primary,
        secondary,
        lambda_star_seconds: lambda_star,
        primary_extrema,
        secondary_extrema,
    })
}

fn calibrate_cached(
    series: &CandleSeries,
    target: f64,
    mode: TimeMode,
    opts: &CalibrationOptions,
    hint: Option<f64>,
    cache: Option<&CalibrationCache>,
) -> Result<(CalibrationResult, ExtremumSeries)> {
    let key = cache.map(|c| c.key(series, mode, target, opts.tolerance, hint));
    if let (Some(c), Some(k)) = (cache, key.as_ref()) {
        if let Some(t) = c.get(k) {
            if let Ok((res, ex)) = evaluate_timescale(series, t, target, mode, opts.delta_coeff) {
                if res.relative_error <= opts.tolerance {
                    return Ok((res, ex));
                }
            }
        }
    }
    let res = calibrate_timescale(series, target, mode, opts, hint)?;
    let (res2, ex) = evaluate_timescale(series, res.timescale, target, mode, opts.delta_coeff)?;
    debug_assert_eq!(res, res2);
    if let (Some(c), Some(k)) = (cache, key) {
        c.insert(k, res.timescale);
    }
    Ok((res2, ex))
}

/// SHA-256 over the candle data, hex encoded.
pub fn data_hash(series: &CandleSeries) -> String {
    let mut h = Sha256::new();
    h.update(series.bar_duration().to_le_bytes());
    for c in series.candles() {
        h.update(c.time.to_le_bytes());
        for v in [c.open, c.high, c.low, c.close] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Persistent map from (symbol, data hash, mode, target, tolerance, hint) to a
/// calibrated timescale, stored as `key = value` lines.
#[derive(Debug, Default)]
pub struct CalibrationCache {
    entries: Mutex<BTreeMap<String, f64>>,
    hashes: Mutex<BTreeMap<(String, usize, i64, i64), String>>,
}

impl CalibrationCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn key(&self, series: &CandleSeries, mode: TimeMode, target: f64, tolerance: f64, hint: Option<f64>) -> String {
        let id = (
            series.symbol().to_string(),
            series.len(),
            series.first_time(),
            series.last_time(),
        );
        let hash = {
            let mut hashes = self.hashes.lock().expect("cache lock");
            hashes.entry(id).or_insert_with(|| data_hash(series)).clone()
        };
        let hint = hint.map_or_else(|| "-".to_string(), |h| format!("{h:?}"));
        format!(
            "{}|{}|{}|{:.6}|{}|{}",
            series.symbol(),
            hash,
            mode.as_str(),
            target,
            tolerance,
            hint
        )
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries.lock().expect("cache lock").get(key).copied()
    }

    pub fn insert(&self, key: String, timescale: f64) {
        self.entries.lock().expect("cache lock").insert(key, timescale);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let cache = CalibrationCache::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line
                .rsplit_once('=')
                .and_then(|(k, v)| v.trim().parse::<f64>().ok().map(|v| (k.trim().to_string(), v)));
            match parsed {
                Some((k, v)) => cache.insert(k, v),
                None => {
                    return Err(Error::MalformedRow {
                        row: n + 1,
                        reason: format!("cache line '{line}' is not 'key = timescale'"),
                    })
                }
            }
        }
        Ok(cache)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        for (k, v) in self.entries.lock().expect("cache lock").iter() {
            writeln!(sink, "{k} = {v}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(CalibrationCache::new());
        }
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Candle;
    use crate::synthetic::{sinusoid_series, SyntheticConfig};

    fn market(seed: u64, n: usize) -> CandleSeries {
        sinusoid_series(&SyntheticConfig {
            seed,
            n,
            amplitude: 30.0,
            period: 200.0,
            walk: 10.0,
            noise: 0.0,
            wick: 2.0,
            ..Default::default()
        })
        .unwrap()
    }

    fn sinusoid(n: usize) -> CandleSeries {
        sinusoid_series(&SyntheticConfig {
            n,
            walk: 0.0,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn sinusoid_calibrates_to_its_period() {
        let s = sinusoid(4000);
        let r = calibrate_timescale(&s, 50.0 * 3600.0, TimeMode::Candles, &CalibrationOptions::default(), None)
            .unwrap();
        assert!(r.relative_error <= 0.02);
        assert!((r.achieved_wavelength / 3600.0 - 50.0).abs() <= 1.0);
        assert!(r.extrema_count >= 10);
    }

    #[test]
    fn target_below_resolution_is_unreachable() {
        let s = sinusoid(4000);
        let err = calibrate_timescale(&s, 3600.0, TimeMode::Candles, &CalibrationOptions::default(), None)
            .unwrap_err();
        assert!(err.to_string().contains("target unreachable"), "{err}");
        // attainable in principle but finer than the sinusoid's own period
        let err = calibrate_timescale(&s, 30.0 * 3600.0, TimeMode::Candles, &CalibrationOptions::default(), None)
            .unwrap_err();
        assert!(matches!(err, Error::TargetUnreachable(_)), "{err}");
    }

    #[test]
    fn recalibration_is_a_fixed_point() {
        let s = market(3, 8000);
        let opts = CalibrationOptions::default();
        let first = calibrate_timescale(&s, 120.0 * 3600.0, TimeMode::Candles, &opts, None).unwrap();
        let again =
            calibrate_timescale(&s, first.achieved_wavelength, TimeMode::Candles, &opts, None).unwrap();
        assert!(again.relative_error <= opts.tolerance);
        assert!((again.achieved_wavelength - first.achieved_wavelength).abs() / first.achieved_wavelength <= 0.02);
    }

    #[test]
    fn deterministic() {
        let s = market(4, 6000);
        let opts = CalibrationOptions::default();
        let a = calibrate_timescale(&s, 100.0 * 3600.0, TimeMode::Seconds, &opts, None).unwrap();
        let b = calibrate_timescale(&s, 100.0 * 3600.0, TimeMode::Seconds, &opts, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_series_synchronize_identically() {
        let s = sinusoid(4000);
        let sync = synchronize_pair(&s, &s, 50.0, &CalibrationOptions::default(), None).unwrap();
        assert_eq!(sync.primary.timescale, sync.secondary.timescale);
        assert!((sync.lambda_star_seconds / 3600.0 - 50.0).abs() <= 1.0);
        // gap-free: candle clock and wall clock agree exactly
        assert_eq!(sync.primary.achieved_wavelength, sync.lambda_star_seconds);
        assert!(sync.primary.relative_error <= 0.02 && sync.secondary.relative_error <= 0.02);
    }

    #[test]
    fn weekend_gaps_stretch_lambda_star() {
        let cfg = SyntheticConfig {
            n: 6000,
            walk: 0.0,
            weekdays_only: true,
            ..Default::default()
        };
        let s = sinusoid_series(&cfg).unwrap();
        let sync = synchronize_pair(&s, &s, 50.0, &CalibrationOptions::default(), None).unwrap();
        assert!(sync.lambda_star_seconds > 50.0 * 3600.0);
    }

    #[test]
    fn disjoint_ranges_fail() {
        let a = sinusoid(1000);
        let candles: Vec<Candle> = a
            .candles()
            .iter()
            .map(|c| Candle { time: c.time + 10_000_000, ..*c })
            .collect();
        let b = CandleSeries::new("B", 3600, candles).unwrap();
        let err = synchronize_pair(&a, &b, 50.0, &CalibrationOptions::default(), None).unwrap_err();
        assert!(err.to_string().contains("no overlapping span"), "{err}");
    }

    #[test]
    fn errors_are_labeled_by_market() {
        let s = sinusoid(4000);
        let err = synchronize_pair(&s, &s, 1.0, &CalibrationOptions::default(), None).unwrap_err();
        match err {
            Error::Calibration { market, .. } => assert_eq!(market, "SYN"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn cache_round_trip_and_reuse() {
        let s = market(5, 6000);
        let opts = CalibrationOptions::default();
        let cache = CalibrationCache::new();
        let first = synchronize_pair(&s, &s, 90.0, &opts, Some(&cache)).unwrap();
        assert!(!cache.is_empty());

        let mut buf = Vec::new();
        cache.write(&mut buf).unwrap();
        let reread = CalibrationCache::read(&buf[..]).unwrap();
        assert_eq!(reread.len(), cache.len());
        let second = synchronize_pair(&s, &s, 90.0, &opts, Some(&reread)).unwrap();
        assert_eq!(first.primary, second.primary);
        assert_eq!(first.secondary, second.secondary);

        assert!(CalibrationCache::read("garbage line\n".as_bytes()).is_err());
    }
}
