//! Ultimately pseudo-periodic curves: construction, evaluation, CSV export.

use iwrr::curve::{read_csv, write_csv};
use iwrr::{rat, Curve, Rat};

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    // rises 1 over [2, 3], flat until 5, then repeats every 5 adding 2
    let pts = [
        (r(0), r(0)),
        (r(2), r(0)),
        (r(3), r(1)),
        (r(4), r(1)),
        (r(5), r(2)),
        (r(7), r(2)),
    ];
    let f = Curve::from_points(&pts, r(5), r(2))?;
    println!("{f:?}");
    for x in [r(0), rat(5, 2), r(6), r(100), rat(1001, 2)] {
        println!("f({x}) = {}", f.value_at(x));
    }

    let stair = Curve::stair(r(3), r(2));
    println!(
        "stair at 2: {}, right-limit {}",
        stair.value_at(r(2)),
        stair.right_at(r(2))
    );

    let mut buf = Vec::new();
    write_csv(&f, &mut buf, r(12))?;
    print!("{}", String::from_utf8_lossy(&buf));
    let back = read_csv(buf.as_slice(), r(5), r(2))?;
    println!("round trip identical: {}", back.same_function(&f));
    Ok(())
}
