//! Runs all three detectors over the approach trajectory and writes CSV and SVG reports.
//!
//! `cargo run --release --example trajectory_benchmark [config.toml] [out_dir]`

use mvrp::harness::{emit_reports, run_bench};
use mvrp::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = args.next().map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("mvrp_bench"));

    let report = run_bench(&cfg)?;
    emit_reports(&report.results, &report.summary, &out)?;
    println!("{:>7} {:>6} {:>6} {:>10} {:>7}  mean |error| x y z (m), psi theta phi (deg)", "", "frames", "failed", "t_fe (ms)", "n_miss");
    for s in &report.summary {
        let err = s.mean_abs_error.map(|e| format!("{:.3} {:.3} {:.3}  {:.3} {:.3} {:.3}", e[0], e[1], e[2], e[3], e[4], e[5]));
        println!(
            "{:>7} {:>6} {:>6} {:>10.3} {:>7.2}  {}",
            s.detector.name(),
            s.frames,
            s.failed,
            s.mean_t_fe * 1e3,
            s.mean_n_miss,
            err.unwrap_or_else(|| "NA".into())
        );
    }
    println!("reports in {}", out.display());
    Ok(())
}
