//! Delay bounds: horizontal deviation between an arrival and a service curve.

use iwrr::oracle::{grid_hdev, Grid};
use iwrr::{rat, Curve, Error, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let alpha = Curve::token_bucket(r(1), r(2));
    let beta = Curve::rate_latency(r(1), r(3));
    let h = alpha.horizontal_deviation(&beta)?;
    println!("h(γ(1,2), β(1,3)) = {} (reached for arrivals at {})", h.value, h.at);
    println!(
        "grid estimate: {}",
        grid_hdev(&alpha, &beta, &Grid::new(rat(1, 8), r(40))?)?
    );

    let packets = Curve::token_bucket(rat(1, 2), r(3)).packetize_ceil(r(2));
    println!("packetized bucket: {}", packets.horizontal_deviation(&beta)?.value);

    match Curve::linear(r(2)).horizontal_deviation(&beta) {
        Err(Error::Unbounded) => println!("rate 2 into rate 1: unbounded"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
