// Load two candle files, validate them and cut both to their common span.

use std::io::Cursor;

use leadlag::market_data::{load_candles, truncate_to_common_span, ColumnSchema};

const EURUSD: &str = "\
time,open,high,low,close,volume
2014-01-06T00:00:00Z,1.3590,1.3602,1.3585,1.3598,1200
2014-01-06T01:00:00Z,1.3598,1.3610,1.3594,1.3607,900
2014-01-06T02:00:00Z,1.3607,1.3611,1.3590,1.3593,1100
2014-01-06T03:00:00Z,1.3593,1.3599,1.3580,1.3584,1300
";

// no header, epoch seconds, starts one bar later
const GBPUSD: &str = "\
1388973600,1.6402,1.6415,1.6399,1.6411
1388977200,1.6411,1.6420,1.6405,1.6408
1388980800,1.6408,1.6409,1.6390,1.6395
1388984400,1.6395,1.6401,1.6386,1.6389
";

pub fn run_example() -> leadlag::Result<()> {
    let a = load_candles(Cursor::new(EURUSD), &ColumnSchema::default(), "EURUSD", 3600)?;
    let b = load_candles(Cursor::new(GBPUSD), &ColumnSchema::positional(), "GBPUSD", 3600)?;
    println!("{}: {} candles, {}..{}", a.symbol(), a.len(), a.first_time(), a.last_time());
    println!("{}: {} candles, {}..{}", b.symbol(), b.len(), b.first_time(), b.last_time());

    let (a, b) = truncate_to_common_span(&a, &b)?;
    assert_eq!(a.len(), 2);
    assert_eq!(b.len(), 2);
    println!("common span: {}..{} ({} candles each)", a.first_time(), a.last_time(), a.len());

    // rows violating low <= open, close <= high are rejected
    let bad = "time,open,high,low,close\n0,1.0,0.9,0.8,0.85\n";
    let err = load_candles(Cursor::new(bad), &ColumnSchema::default(), "BAD", 3600).unwrap_err();
    println!("rejected: {err}");
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
