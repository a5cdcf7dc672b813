//! Non-dominated rate-latency lower bounds of the IWRR service curve.

use iwrr::curve::HorizonSpec;
use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::Rat;

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let flows = [(4, 4096, 8704), (6, 3072, 5632), (7, 4608, 6656), (10, 3072, 8192)]
        .iter()
        .map(|&(w, lo, hi)| FlowSpec::new(w, r(lo), r(hi)))
        .collect::<iwrr::Result<Vec<_>>>()?;
    let sys = SystemSpec::unit_rate(flows)?;
    let c = r(10_000_000);
    for i in 0..sys.n() {
        let fam = sys.rate_latency_family(i)?;
        let gamma = sys.gamma(i)?;
        println!("flow {}: r* = {}, k* = {}", i + 1, fam.r_star, fam.k_star);
        for (m, timed) in fam.members.iter().zip(fam.for_rate_latency_aggregate(c, r(0))) {
            let below = m.curve().curve_leq(&gamma, HorizonSpec::default()).holds;
            println!(
                "  k = {}: rate {} b/s, latency {} s, below γ: {below}",
                m.k,
                timed.rate.sig12(),
                timed.latency.sig12()
            );
        }
    }
    Ok(())
}
