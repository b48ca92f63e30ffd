// Drive the command-line front end in-process.

use std::fs;

use leadlag::cli::{run, EXIT_OK, EXIT_USAGE};

pub fn run_example() -> leadlag::Result<()> {
    let dir = std::env::temp_dir().join("leadlag-cli-example");
    fs::create_dir_all(&dir)?;
    let angles = dir.join("angles.csv");
    fs::write(&angles, "alpha\n0\n1.5707963267948966\n")?;

    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(["leadlag", "stats", "--angles", angles.to_str().unwrap()], &mut out, &mut err);
    assert_eq!(code, EXIT_OK);
    print!("{}", String::from_utf8_lossy(&out));

    let mut err = Vec::new();
    let code = run(["leadlag", "analyze", "--primary", "A.csv"], &mut Vec::new(), &mut err);
    assert_eq!(code, EXIT_USAGE);
    print!("{}", String::from_utf8_lossy(&err));
    Ok(())
}

fn main() -> leadlag::Result<()> {
    run_example()
}
