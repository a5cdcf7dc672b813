//! Relative delay-bound improvement of IWRR over WRR across random systems.

use iwrr::experiments::{run_randomized_experiment, ExperimentConfig};

fn main() -> iwrr::Result<()> {
    let systems = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = ExperimentConfig {
        systems,
        ..ExperimentConfig::randomized_default()
    };
    let report = run_randomized_experiment(&cfg)?;
    println!("{systems} systems, {} redrawn as unstable", report.redrawn_systems);
    println!("rank  median improvement  q1..q3");
    for f in &report.summary {
        println!(
            "{:>4}  {:>17.1}%  {:.1}%..{:.1}%",
            f.flow_rank,
            100.0 * f.diff_norm.median,
            100.0 * f.diff_norm.q1,
            100.0 * f.diff_norm.q3
        );
    }
    Ok(())
}
