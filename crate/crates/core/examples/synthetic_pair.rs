// Write a synthetic lead-lag pair as CSV files for the command-line tool.
//
// ```text
// cargo run --example synthetic_pair -- data/
// leadlag analyze --primary data/A.csv --secondary data/B.csv --out out/
// ```

use std::fs;
use std::path::{Path, PathBuf};

use leadlag::market_data::write_candles;
use leadlag::synthetic::{delayed_pair, SyntheticConfig};

pub fn write_pair(dir: &Path, n: usize, delay: usize) -> leadlag::Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let cfg = SyntheticConfig {
        n,
        ..SyntheticConfig::default()
    };
    let (a, b) = delayed_pair(&cfg, delay)?;
    let pa = dir.join("A.csv");
    let pb = dir.join("B.csv");
    write_candles(&a, fs::File::create(&pa)?)?;
    write_candles(&b, fs::File::create(&pb)?)?;
    Ok((pa, pb))
}

pub fn run_example() -> leadlag::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("leadlag-synthetic"));
    let (a, b) = write_pair(&dir, 4000, 5)?;
    println!("wrote {} and {}", a.display(), b.display());
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
