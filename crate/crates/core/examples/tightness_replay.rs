//! Adversarial trajectory that gives a flow exactly its service curve value.

use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::sim::{build_tightness_scenario, build_wrr_tightness_scenario, run};
use iwrr::{rat, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let sys = SystemSpec::unit_rate(vec![FlowSpec::fixed(2, r(1))?, FlowSpec::fixed(3, r(1))?])?;
    for tau in [r(3), rat(9, 2), r(7), r(12)] {
        let plan = build_tightness_scenario(&sys, 0, tau, None)?;
        let trace = run(&plan.scenario)?;
        let wrr = build_wrr_tightness_scenario(&sys, 0, tau, None)?;
        let wrr_trace = run(&wrr.scenario)?;
        println!(
            "tau = {tau}: IWRR output {} (curve {}), WRR output {} (curve {})",
            plan.measured(&trace),
            plan.expected,
            wrr.measured(&wrr_trace),
            wrr.expected
        );
    }
    Ok(())
}
