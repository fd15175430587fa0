//! Runs a named experiment with its default configuration and writes the
//! report files.
//!
//! `cargo run --release --example experiment -- phase_shift [out_dir]`
//!
//! Names: soliton_resolution, decay_rates, roundtrip, phase_shift.

use mtm::harness::{run_experiment, EXPERIMENTS};
use std::path::PathBuf;

fn main() -> mtm::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "phase_shift".into());
    if !EXPERIMENTS.contains(&name.as_str()) {
        eprintln!("unknown experiment {name:?}; choose one of {EXPERIMENTS:?}");
        std::process::exit(1);
    }
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join(format!("mtm_{name}")));
    let report = run_experiment(&name, None)?;
    for f in &report.fits {
        println!("fit {:<14} slope {:>8.4} +- {:.4} ({} points)", f.series, f.slope, f.half_width, f.points);
    }
    for v in &report.verdicts {
        let bound = |b: Option<f64>| b.map_or("-".to_string(), |x| format!("{x:.3e}"));
        println!(
            "{} {:<26} {:.4e} in [{}, {}]",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            bound(v.lower),
            bound(v.upper)
        );
    }
    report.write(&out)?;
    println!("report written to {}", out.display());
    Ok(())
}
