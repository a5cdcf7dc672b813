//! Exact rationals: parsing, arithmetic, floor/ceil and float conversion.

use iwrr::{rat, Rat};

fn main() -> iwrr::Result<()> {
    let a: Rat = "0.1".parse()?;
    let b: Rat = "7/3".parse()?;
    println!("0.1 + 7/3 = {}", a + b);
    println!("0.1 * 3 == 3/10: {}", a * Rat::int(3) == rat(3, 10));
    println!("floor(7/3) = {}, ceil(7/3) = {}", b.floor(), b.ceil());
    println!("1e-3 parses to {}", "1e-3".parse::<Rat>()?);
    let from_float = Rat::from_f64(0.1).expect("finite");
    println!("the float 0.1 is exactly {from_float}");
    println!("7/3 ~ {}", b.sig12());
    Ok(())
}
