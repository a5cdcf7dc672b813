//! System and scenario files: load, derive curves, simulate.

use iwrr::config::{ConfigFile, ScenarioFile};
use iwrr::sim::{max_packet_delay, run};

fn main() -> iwrr::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let cfg = ConfigFile::load(&dir.join("four_flows.json"))?;
    let sys = cfg.system()?;
    for i in 0..sys.n() {
        let fam = sys.rate_latency_family(i)?;
        println!(
            "{}: L_tot = {} bits, {} rate-latency member(s)",
            cfg.flow_label(i),
            sys.l_tot(i)?,
            fam.members.len()
        );
    }
    let sc = ScenarioFile::load(&dir.join("toy_scenario.json"))?;
    let trace = run(&sc.scenario()?)?;
    for i in 0..sc.system.flows.len() {
        println!(
            "{}: worst delay {}",
            sc.system.flow_label(i),
            max_packet_delay(&trace, i).max
        );
    }
    Ok(())
}
