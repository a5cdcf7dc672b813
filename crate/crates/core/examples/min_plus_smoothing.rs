//! Min-plus convolution of a stair with the unit rate, checked on a grid.

use iwrr::oracle::{grid_convolution, Grid};
use iwrr::{rat, Curve, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let stair = Curve::stair(r(1), r(5));
    let smooth = stair.convolve_unit_rate();
    println!("λ1 ⊗ ν(1,5) = {smooth:?}");
    let grid = Grid::new(rat(1, 4), r(25))?;
    let brute = grid_convolution(&Curve::unit_rate(), &stair, &grid);
    let agree = brute.iter().all(|&(x, v)| v == smooth.value_at(x));
    println!("grid convolution agrees at all {} points: {agree}", brute.len());
    Ok(())
}
