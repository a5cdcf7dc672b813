//! Lower pseudo-inverse: plateaus become jumps and jumps become plateaus.

use iwrr::{rat, Curve, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let stair = Curve::stair(r(2), r(3));
    let inv = stair.lower_pseudo_inverse()?;
    println!("stair:   {stair:?}");
    println!("inverse: {inv:?}");
    for y in [r(0), rat(1, 2), r(2), rat(5, 2), r(4)] {
        println!("inf {{x | stair(x) >= {y}}} = {}", inv.value_at(y));
    }
    // Galois connection: f(x) >= y  <=>  x >= f^↓(y), for continuous f
    let rl = Curve::rate_latency(r(2), r(1));
    let rl_inv = rl.lower_pseudo_inverse()?;
    let ok = (0..40).all(|k| {
        let x = rat(k, 4);
        let y = rat(k * 3, 7);
        (rl.value_at(x) >= y) == (x >= rl_inv.value_at(y))
    });
    println!("Galois connection on a grid: {ok}");
    Ok(())
}
