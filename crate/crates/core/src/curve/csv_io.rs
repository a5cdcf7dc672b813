//! CSV export / import of curves.
//!
//! Columns: `x_num,x_den,y_num,y_den,kind,x_f,y_f`. A `point` row is the
//! value at `x`, a `seg_start` row the right-limit at `x` (start of the open
//! segment), and a `seg_end` row the left-limit at `x` when it differs from
//! the value there. The float columns are for plotting only.

use std::io::{Read, Write};

use super::{Breakpoint, Curve};
use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(serde::Serialize, serde::Deserialize)]
struct Row {
    x_num: i128,
    x_den: i128,
    y_num: i128,
    y_den: i128,
    kind: String,
    x_f: String,
    y_f: String,
}

impl Row {
    fn new(x: Rat, y: Rat, kind: &str) -> Row {
        Row {
            x_num: x.numer(),
            x_den: x.denom(),
            y_num: y.numer(),
            y_den: y.denom(),
            kind: kind.to_string(),
            x_f: x.sig12(),
            y_f: y.sig12(),
        }
    }
}

/// Writes the curve on `[0, horizon]`, unrolling the periodic tail.
pub fn write_csv<W: Write>(curve: &Curve, out: W, horizon: Rat) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let bps: Vec<Breakpoint> = curve
        .breakpoints_until(horizon)
        .into_iter()
        .filter(|b| b.x < horizon)
        .collect();
    for (k, b) in bps.iter().enumerate() {
        if k > 0 {
            let left = bps[k - 1].seg_at(b.x);
            if left != b.value {
                w.serialize(Row::new(b.x, left, "seg_end"))?;
            }
        }
        w.serialize(Row::new(b.x, b.value, "point"))?;
        w.serialize(Row::new(b.x, b.right, "seg_start"))?;
    }
    let left = curve.left_at(horizon);
    let value = curve.value_at(horizon);
    if left != value {
        w.serialize(Row::new(horizon, left, "seg_end"))?;
    }
    w.serialize(Row::new(horizon, value, "point"))?;
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_csv`]; the last `period` of the file is
/// repeated with `increment`.
pub fn read_csv<R: Read>(input: R, period: Rat, increment: Rat) -> Result<Curve> {
    let mut rdr = csv::Reader::from_reader(input);
    // per abscissa: (x, value, right, left)
    let mut pts: Vec<(Rat, Rat, Option<Rat>, Option<Rat>)> = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row?;
        if row.x_den <= 0 || row.y_den <= 0 {
            return Err(Error::Parse("non-positive denominator in curve csv".into()));
        }
        let x = Rat::new(row.x_num, row.x_den);
        let y = Rat::new(row.y_num, row.y_den);
        if pts.last().is_none_or(|p| p.0 != x) {
            if pts.last().is_some_and(|p| p.0 > x) {
                return Err(Error::Parse(format!("abscissae not sorted at {x}")));
            }
            pts.push((x, y, None, None));
        }
        let p = pts.last_mut().expect("just pushed");
        match row.kind.as_str() {
            "point" => p.1 = y,
            "seg_start" => p.2 = Some(y),
            "seg_end" => p.3 = Some(y),
            other => return Err(Error::Parse(format!("unknown row kind {other:?}"))),
        }
    }
    if pts.len() < 2 {
        return Err(Error::Parse("curve csv needs at least two abscissae".into()));
    }
    let end = pts.last().expect("non-empty").0;
    let mut bps = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let (x0, v0, r0, _) = w[0];
        let (x1, v1, _, l1) = w[1];
        let right = r0.unwrap_or(v0);
        let left = l1.unwrap_or(v1);
        bps.push(Breakpoint::new(x0, v0, right, (left - right) / (x1 - x0)));
    }
    let transient = end - period;
    if transient.is_negative() {
        return Err(Error::Parse("curve csv shorter than one period".into()));
    }
    Curve::new(bps, transient, period, increment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_stair() {
        let nu = Curve::stair(Rat::int(2), Rat::int(3));
        let mut buf = Vec::new();
        write_csv(&nu, &mut buf, Rat::int(9)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_num,x_den,y_num,y_den,kind,x_f,y_f"));
        let back = read_csv(buf.as_slice(), Rat::int(3), Rat::int(2)).unwrap();
        assert!(back.same_function(&nu));
    }

    #[test]
    fn round_trip_rate_latency() {
        let b = Curve::rate_latency(Rat::new(3, 2), Rat::int(1));
        let mut buf = Vec::new();
        write_csv(&b, &mut buf, Rat::int(4)).unwrap();
        let back = read_csv(buf.as_slice(), Rat::int(1), Rat::new(3, 2)).unwrap();
        assert!(back.same_function(&b));
    }
}
