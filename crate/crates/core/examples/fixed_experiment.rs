//! Delay bounds of eight flows on one system: WRR against IWRR.

use iwrr::experiments::{run_fixed_experiment, ExperimentConfig};

fn main() -> iwrr::Result<()> {
    let cfg = ExperimentConfig::fixed_default();
    let report = run_fixed_experiment(&cfg)?;
    println!("flow  WRR median (ms)  improvement median (ms)  q1..q3 (ms)");
    for f in &report.summary {
        println!(
            "{:>4}  {:>15.2}  {:>23.2}  {:.2}..{:.2}",
            f.flow_rank, f.wrr_ms.median, f.diff_ms.median, f.diff_ms.q1, f.diff_ms.q3
        );
    }
    Ok(())
}
