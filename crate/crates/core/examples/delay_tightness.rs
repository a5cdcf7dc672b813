//! A packet that suffers the delay bound, approached as the offset shrinks.

use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::sim::{build_delay_tightness_scenario, max_packet_delay, run, Policy};
use iwrr::{Curve, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let sys = SystemSpec::unit_rate(vec![FlowSpec::fixed(2, r(1))?, FlowSpec::fixed(3, r(1))?])?;
    let alpha = Curve::token_bucket(r(0), r(2));
    for policy in [Policy::Iwrr, Policy::Wrr] {
        for m in 1..=6 {
            let eps = Rat::new(1, 1 << m);
            let plan = build_delay_tightness_scenario(&sys, 0, &alpha, policy, eps)?;
            let trace = run(&plan.scenario)?;
            let d = max_packet_delay(&trace, plan.flow);
            println!("{policy} eps = {eps}: worst delay {} of bound {}", d.max, plan.bound);
        }
    }
    Ok(())
}
