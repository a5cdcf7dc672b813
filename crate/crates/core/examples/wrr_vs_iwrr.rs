//! The IWRR service curve dominates the WRR one, often strictly.

use iwrr::curve::HorizonSpec;
use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::Rat;

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let flows = [(4, 4096, 8704), (6, 3072, 5632), (7, 4608, 6656), (10, 3072, 8192)]
        .iter()
        .map(|&(w, lo, hi)| FlowSpec::new(w, r(lo), r(hi)))
        .collect::<iwrr::Result<Vec<_>>>()?;
    let sys = SystemSpec::constant_rate(flows, r(10_000_000))?;
    for i in 0..sys.n() {
        let iwrr = sys.iwrr_service_curve(i)?;
        let wrr = sys.wrr_service_curve(i)?;
        let leq = wrr.curve_leq(&iwrr, HorizonSpec::default());
        let gap = iwrr.curve_leq(&wrr, HorizonSpec::default()).witness;
        println!(
            "flow {} (w = {}): WRR <= IWRR {}, strictly better at {}",
            i + 1,
            sys.flows()[i].weight,
            leq.holds,
            gap.map_or("nowhere".into(), |x| format!("t = {} s", x.sig12()))
        );
    }
    Ok(())
}
