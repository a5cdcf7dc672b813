//! Packet-level IWRR simulation: emission order and strict-service check.

use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::sim::{run, verify_strict_service, PacketArrival, Policy, Scenario, ServiceModel};
use iwrr::Rat;

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let sys = SystemSpec::unit_rate(vec![
        FlowSpec::fixed(2, r(1))?,
        FlowSpec::fixed(3, r(1))?,
        FlowSpec::fixed(5, r(1))?,
    ])?;
    let arrivals: Vec<PacketArrival> = (0..3)
        .flat_map(|f| {
            (0..20).map(move |_| PacketArrival {
                flow: f,
                time: Rat::ZERO,
                size: Rat::ONE,
            })
        })
        .collect();
    for policy in [Policy::Iwrr, Policy::Wrr] {
        let sc = Scenario {
            system: sys.clone(),
            arrivals: arrivals.clone(),
            service: ServiceModel::ConstantRate(r(1)),
            horizon: r(10),
            policy,
        };
        let trace = run(&sc)?;
        let order: Vec<String> = trace.records.iter().map(|rec| format!("f{}", rec.flow + 1)).collect();
        println!("{policy} first round: {}", order.join(" "));
        for i in 0..3 {
            let rep = verify_strict_service(&trace, i, &sys.service_curve(i, policy)?);
            println!(
                "  flow {} meets its curve: {} ({} pairs)",
                i + 1,
                rep.holds(),
                rep.pairs_checked
            );
        }
    }
    Ok(())
}
