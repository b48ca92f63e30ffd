use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use leadlag::market_data::write_candles;
use leadlag::synthetic::{delayed_pair, SyntheticConfig};

fn leadlag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leadlag"))
        .args(args)
        .env_remove("LEADLAG_CACHE")
        .output()
        .expect("binary runs")
}

fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cfg = SyntheticConfig {
        n: 3000,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, 4).unwrap();
    let pa = dir.join("A.csv");
    let pb = dir.join("B.csv");
    write_candles(&a, fs::File::create(&pa).unwrap()).unwrap();
    write_candles(&b, fs::File::create(&pb).unwrap()).unwrap();
    (pa, pb)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixture(dir.path());
    let out = dir.path().join("out");
    let res = leadlag(&[
        "analyze", "--primary", s(&a), "--secondary", s(&b), "--out", s(&out),
        "--min-wavelength", "50", "--max-wavelength", "56",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for stem in ["A-B_A_vs_B_extremum", "A-B_B_vs_A_confirm"] {
        for ext in [".csv", ".json", "_rose.svg"] {
            assert!(out.join(format!("{stem}{ext}")).exists(), "{stem}{ext}");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("A-B_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["directions"][0]["groups"].as_array().unwrap().len(), 7);
    let table = fs::read_to_string(out.join("A-B_A_vs_B_extremum.csv")).unwrap();
    assert!(table.lines().nth(1).unwrap().ends_with(",prime"));
}

#[test]
fn missing_secondary_is_usage_error() {
    let res = leadlag(&["analyze", "--primary", "a.csv"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--secondary"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let res = leadlag(&["stats", "--angels", "x.csv"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn stats_of_two_angles() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("angles.csv");
    fs::write(&p, "0\n1.5707963267948966\n").unwrap();
    let res = leadlag(&["stats", "--angles", s(&p)]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("mean direction: 0.785"), "{text}");
}

#[test]
fn bad_data_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = fixture(dir.path());
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "time,open,high,low,close\n0,1,2,0.5,1\n0,1,2,0.5,1\n").unwrap();
    let res = leadlag(&["analyze", "--primary", s(&a), "--secondary", s(&bad), "--out", s(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
    let res = leadlag(&["stats", "--angles", s(&dir.path().join("missing.csv"))]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unreachable_wavelengths_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixture(dir.path());
    // nothing below the 50-candle period can be resolved
    let res = leadlag(&[
        "analyze", "--primary", s(&a), "--secondary", s(&b), "--out", s(&dir.path().join("o")),
        "--min-wavelength", "30", "--max-wavelength", "40",
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("too many failed"));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixture(dir.path());
    let conf = dir.path().join("run.conf");
    let from_file = dir.path().join("from_file");
    fs::write(
        &conf,
        format!(
            "# sweep\nprimary = {}\nsecondary = {}\nmin-wavelength = 50\nmax_wavelength = 53\nmodes = extremum\nbins = 12\nout = {}\n",
            s(&a),
            s(&b),
            s(&from_file)
        ),
    )
    .unwrap();
    let res = leadlag(&["analyze", "--config", s(&conf)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(from_file.join("A-B_A_vs_B_extremum.csv").exists());
    assert!(!from_file.join("A-B_A_vs_B_confirm.csv").exists());

    let overridden = dir.path().join("overridden");
    let res = leadlag(&["analyze", "--config", s(&conf), "--out", s(&overridden), "--modes", "confirm"]);
    assert_eq!(res.status.code(), Some(0));
    assert!(overridden.join("A-B_A_vs_B_confirm.csv").exists());
    assert!(!overridden.join("A-B_A_vs_B_extremum.csv").exists());

    fs::write(&conf, "bogus = 1\n").unwrap();
    assert_eq!(leadlag(&["analyze", "--config", s(&conf)]).status.code(), Some(1));
    fs::write(&conf, format!("primary = {}\nsecondary = {}\nbins = 7\n", s(&a), s(&b))).unwrap();
    assert_eq!(leadlag(&["analyze", "--config", s(&conf)]).status.code(), Some(1));
}

#[test]
fn cache_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = fixture(dir.path());
    let flag_cache = dir.path().join("flag.cache");
    let env_cache = dir.path().join("env.cache");
    let res = Command::new(env!("CARGO_BIN_EXE_leadlag"))
        .args([
            "analyze", "--primary", s(&a), "--secondary", s(&b), "--out", s(&dir.path().join("o")),
            "--min-wavelength", "50", "--max-wavelength", "52", "--cache", s(&flag_cache),
        ])
        .env("LEADLAG_CACHE", &env_cache)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert!(env_cache.exists());
    assert!(!flag_cache.exists());
    let text = fs::read_to_string(&env_cache).unwrap();
    assert!(text.lines().count() >= 6, "{text}");
}

#[test]
fn extrema_and_calibrate_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = fixture(dir.path());
    let res = leadlag(&["extrema", "--input", s(&a), "--timescale", "1"]);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.starts_with("kind,time,price,confirm_time,candle_index\n"));
    assert!(text.lines().count() > 50);

    let res = leadlag(&["calibrate", "--input", s(&a), "--wavelength", "50", "--json"]);
    assert_eq!(res.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(v["relative_error"].as_f64().unwrap() <= 0.02);

    let res = leadlag(&["calibrate", "--input", s(&a), "--wavelength", "1"]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unreachable"));
}
