//! Command-line front end.
//!
//! Every `analyze` flag can also be given in a `--config` file of
//! `key = value` lines (keys are the flag names without dashes, `-` or `_`
//! both accepted). Flags given on the command line win over the file.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 analysis failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{calibrate_timescale, data_hash, evaluate_timescale, CalibrationCache, CalibrationOptions, DEFAULT_TOLERANCE};
use crate::circular_stats::CircularSummary;
use crate::error::Error;
use crate::market_data::{load_candles, CandleSeries, ColumnSchema, TimeMode};
use crate::minmax::{detect_extrema, mean_wavelength, write_extrema_csv};
use crate::phase_shift::PhaseTime;
use crate::pipeline::{run_pair_analysis, SweepConfig};
use crate::report::{write_reports, InputRecord};
use crate::indicators::DELTA_COEFF;

/// Environment variable that overrides the calibration cache path.
pub const CACHE_ENV: &str = "LEADLAG_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ANALYSIS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "leadlag", version, about = "Lead-lag analysis of two markets from the phase shifts of their extrema")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pair analysis; writes tables, rose plots and a manifest.
    Analyze(AnalyzeArgs),
    /// Dump the extrema of one market.
    Extrema(ExtremaArgs),
    /// Find the timescale that attains a target wavelength.
    Calibrate(CalibrateArgs),
    /// Directional statistics of a file of angles (radians).
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Bar duration in seconds.
    #[arg(long)]
    bar_duration: Option<i64>,
    /// Read CSV files without a header as time,open,high,low,close[,volume].
    #[arg(long)]
    no_header: bool,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    primary: Option<PathBuf>,
    #[arg(long)]
    secondary: Option<PathBuf>,
    /// Bar duration in seconds [default: 3600].
    #[arg(long)]
    bar_duration: Option<i64>,
    #[arg(long)]
    no_header: bool,
    /// Smallest target wavelength in candles [default: 30].
    #[arg(long)]
    min_wavelength: Option<u32>,
    /// Largest target wavelength in candles [default: 180].
    #[arg(long)]
    max_wavelength: Option<u32>,
    /// Comma-separated subset of `extremum,confirm` [default: both].
    #[arg(long)]
    modes: Option<String>,
    /// Histogram bins, even and at least 4 [default: 24].
    #[arg(long)]
    bins: Option<usize>,
    /// Center of the hat weight, radians [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    hat_center: Option<f64>,
    /// Relative wavelength tolerance of the calibration [default: 0.02].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Calibration cache file; the LEADLAG_CACHE variable overrides it.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write the raw phase samples.
    #[arg(long)]
    dump_samples: bool,
}

#[derive(Debug, Args)]
struct ExtremaArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    data: InputArgs,
    /// MACD timescale factor.
    #[arg(long, conflicts_with = "wavelength", required_unless_present = "wavelength")]
    timescale: Option<f64>,
    /// Target wavelength in candles; the timescale is calibrated to it.
    #[arg(long)]
    wavelength: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    data: InputArgs,
    /// Target wavelength in candles.
    #[arg(long)]
    wavelength: f64,
    /// `candles` or `seconds` clock.
    #[arg(long, default_value = "candles")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// One angle per line; a non-numeric first line is taken as header.
    #[arg(long)]
    angles: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    hat_center: f64,
    /// Hypothesized mean direction for the one-sample test.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Analysis(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Analysis(_) => EXIT_ANALYSIS,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Analysis(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Analysis(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::Extrema(a) => extrema(a, out),
        Command::Calibrate(a) => calibrate(a, out),
        Command::Stats(a) => stats(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn load(path: &Path, bar_duration: i64, no_header: bool) -> CliResult<CandleSeries> {
    let file = fs::File::open(path).map_err(|e| Failure::Data(format!("cannot open {}: {e}", path.display())))?;
    let schema = if no_header {
        ColumnSchema::positional()
    } else {
        ColumnSchema::default()
    };
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".into());
    load_candles(io::BufReader::new(file), &schema, &symbol, bar_duration)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn parse_config(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::Usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                n + 1
            )));
        };
        let key = k.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Failure::Usage(format!("{}:{}: unknown key `{}`", path.display(), n + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 14] = [
    "primary",
    "secondary",
    "bar_duration",
    "no_header",
    "min_wavelength",
    "max_wavelength",
    "modes",
    "bins",
    "hat_center",
    "tolerance",
    "out",
    "cache",
    "jobs",
    "dump_samples",
];

struct Merged {
    file: BTreeMap<String, String>,
}

impl Merged {
    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }
}

fn parse_modes(s: &str) -> CliResult<Vec<PhaseTime>> {
    let mut modes = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m = PhaseTime::parse(part)
            .ok_or_else(|| Failure::Usage(format!("unknown mode `{part}` (expected extremum or confirm)")))?;
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    modes.sort_by_key(|m| PhaseTime::ALL.iter().position(|x| x == m));
    Ok(modes)
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let merged = Merged {
        file: match &a.config {
            Some(p) => parse_config(p)?,
            None => BTreeMap::new(),
        },
    };
    let primary: PathBuf = merged
        .get(a.primary, "primary")?
        .ok_or_else(|| Failure::Usage("missing required option --primary <PATH>".into()))?;
    let secondary: PathBuf = merged
        .get(a.secondary, "secondary")?
        .ok_or_else(|| Failure::Usage("missing required option --secondary <PATH>".into()))?;
    let bar = merged.get(a.bar_duration, "bar_duration")?.unwrap_or(3600);
    let no_header = merged.switch(a.no_header, "no_header")?;
    let lo = merged.get(a.min_wavelength, "min_wavelength")?.unwrap_or(30);
    let hi = merged.get(a.max_wavelength, "max_wavelength")?.unwrap_or(180);
    let modes = match merged.get::<String>(a.modes, "modes")? {
        Some(s) => parse_modes(&s)?,
        None => PhaseTime::ALL.to_vec(),
    };
    let config = SweepConfig {
        wavelengths: lo..=hi,
        time_modes: modes,
        histogram_bins: merged.get(a.bins, "bins")?.unwrap_or(24),
        hat_center: merged.get(a.hat_center, "hat_center")?.unwrap_or(0.0),
        tolerance: merged.get(a.tolerance, "tolerance")?.unwrap_or(DEFAULT_TOLERANCE),
        confidence: 0.95,
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if bar <= 0 {
        return Err(Failure::Usage(format!("bar duration must be positive, got {bar}")));
    }
    let out_dir: PathBuf = merged.get(a.out, "out")?.unwrap_or_else(|| PathBuf::from("out"));
    let cache_path: Option<PathBuf> = match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => merged.get(a.cache, "cache")?,
    };
    let jobs = merged.get(a.jobs, "jobs")?;
    if jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let dump_samples = merged.switch(a.dump_samples, "dump_samples")?;

    let ps = load(&primary, bar, no_header)?;
    let ss = load(&secondary, bar, no_header)?;
    let cache = match &cache_path {
        Some(p) if p.exists() => CalibrationCache::load(p).map_err(|e| Failure::Data(format!("cache {}: {e}", p.display())))?,
        _ => CalibrationCache::new(),
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            b = b.num_threads(j);
        }
        b.build().map_err(|e| Failure::Analysis(format!("thread pool: {e}")))?
    };
    let report = pool.install(|| run_pair_analysis(&ps, &ss, &config, Some(&cache)))?;

    let inputs = vec![
        InputRecord {
            symbol: ps.symbol().to_string(),
            path: Some(primary.display().to_string()),
            sha256: data_hash(&ps),
            candles: ps.len(),
        },
        InputRecord {
            symbol: ss.symbol().to_string(),
            path: Some(secondary.display().to_string()),
            sha256: data_hash(&ss),
            candles: ss.len(),
        },
    ];
    let written = write_reports(&report, inputs, &out_dir, dump_samples)?;
    if let Some(p) = &cache_path {
        cache.save(p)?;
    }
    for d in &report.directions {
        for f in &d.failed {
            let _ = writeln!(out, "warning: {} vs {} wavelength {} skipped: {}", d.primary, d.secondary, f.wavelength, f.reason);
        }
        for m in &d.modes {
            let _ = writeln!(
                out,
                "{} vs {} [{}]: {} samples, leader {}",
                d.primary,
                d.secondary,
                m.mode.as_str(),
                m.pooled_alphas.len(),
                m.classification.as_str()
            );
        }
    }
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

fn extrema(a: ExtremaArgs, out: &mut dyn Write) -> CliResult<()> {
    let series = load(&a.input, a.data.bar_duration.unwrap_or(3600), a.data.no_header)?;
    let ex = match (a.timescale, a.wavelength) {
        (Some(t), _) => detect_extrema(&series, t, DELTA_COEFF)?,
        (None, Some(w)) => {
            let target = w * series.bar_duration() as f64;
            let res = calibrate_timescale(&series, target, TimeMode::Candles, &CalibrationOptions::default(), None)?;
            evaluate_timescale(&series, res.timescale, target, TimeMode::Candles, DELTA_COEFF)?.1
        }
        (None, None) => return Err(Failure::Usage("give --timescale or --wavelength".into())),
    };
    match &a.out {
        Some(p) => write_extrema_csv(&ex, fs::File::create(p).map_err(Error::from)?)?,
        None => write_extrema_csv(&ex, &mut *out)?,
    }
    if let Ok(w) = mean_wavelength(&ex, &series, TimeMode::Candles) {
        eprintln!(
            "{} extrema at timescale {:.4}, mean wavelength {:.2} candles",
            ex.len(),
            ex.timescale,
            w / series.bar_duration() as f64
        );
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs, out: &mut dyn Write) -> CliResult<()> {
    let mode = match a.mode.as_str() {
        "candles" => TimeMode::Candles,
        "seconds" => TimeMode::Seconds,
        other => return Err(Failure::Usage(format!("unknown mode `{other}` (expected candles or seconds)"))),
    };
    if !(a.tolerance > 0.0 && a.tolerance < 1.0) {
        return Err(Failure::Usage(format!("tolerance must be in (0, 1), got {}", a.tolerance)));
    }
    let series = load(&a.input, a.data.bar_duration.unwrap_or(3600), a.data.no_header)?;
    let opts = CalibrationOptions::default().with_tolerance(a.tolerance);
    let target = a.wavelength * series.bar_duration() as f64;
    let res = calibrate_timescale(&series, target, mode, &opts, None)?;
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &res).map_err(Error::from)?;
        let _ = writeln!(out);
    } else {
        let bar = series.bar_duration() as f64;
        let _ = writeln!(out, "timescale: {:.6}", res.timescale);
        let _ = writeln!(out, "target wavelength: {:.3} candles", res.target_wavelength / bar);
        let _ = writeln!(out, "achieved wavelength: {:.3} candles", res.achieved_wavelength / bar);
        let _ = writeln!(out, "relative error: {:.5}", res.relative_error);
        let _ = writeln!(out, "extrema: {}", res.extrema_count);
        let _ = writeln!(out, "mode: {}", res.mode.as_str());
    }
    Ok(())
}

fn read_angles(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut angles = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => angles.push(v),
            _ if n == 0 => continue,
            _ => {
                return Err(Failure::Data(format!(
                    "{}: line {}: not an angle: `{field}`",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    if angles.is_empty() {
        return Err(Failure::Data(format!("{}: no angles", path.display())));
    }
    Ok(angles)
}

fn stats(a: StatsArgs, out: &mut dyn Write) -> CliResult<()> {
    if !(a.confidence > 0.0 && a.confidence < 1.0) {
        return Err(Failure::Usage(format!("confidence must be in (0, 1), got {}", a.confidence)));
    }
    let angles = read_angles(&a.angles)?;
    let s = CircularSummary::compute(&angles, a.hat_center, a.confidence)?;
    let f = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.3}"));
    let _ = writeln!(out, "n: {}", s.n);
    let _ = writeln!(out, "mean direction: {}", f(s.mean_direction));
    let _ = writeln!(out, "resultant length: {:.3}", s.resultant_length);
    let _ = writeln!(out, "circular variance: {:.3}", s.variance);
    let _ = writeln!(out, "skewness: {}", f(s.skewness));
    let _ = writeln!(out, "kurtosis: {}", f(s.kurtosis));
    let _ = writeln!(out, "confidence half-width: {}", f(s.ci_halfwidth));
    let _ = writeln!(out, "weighted mean direction: {}", f(s.weighted_mean));
    let _ = writeln!(out, "weighted half-width: {}", f(s.weighted_ci));
    let _ = writeln!(
        out,
        "mean test (alpha0 = {:.3}): {}",
        a.alpha0,
        s.mean_test(a.alpha0).map_or_else(|| "undefined".to_string(), |h| h.to_string())
    );
    let _ = writeln!(out, "classification: {}", s.classification().as_str());
    Ok(())
}
