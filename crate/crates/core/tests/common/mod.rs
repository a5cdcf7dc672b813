//! Seeded random systems shared by the integration suites.
#![allow(dead_code)]

use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::{Curve, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct Shape {
    pub max_flows: usize,
    pub max_weight: u64,
    /// Packet sizes in bits are drawn from this range.
    pub sizes: (i128, i128),
    /// Every flow sends packets of one size.
    pub constant_size: bool,
}

impl Shape {
    pub const WIDE: Shape = Shape {
        max_flows: 6,
        max_weight: 12,
        sizes: (512, 12176),
        constant_size: false,
    };
}

pub fn random_flows(rng: &mut ChaCha8Rng, shape: &Shape) -> Vec<FlowSpec> {
    let n = rng.gen_range(1..=shape.max_flows);
    (0..n)
        .map(|_| {
            let w = rng.gen_range(1..=shape.max_weight);
            let a = rng.gen_range(shape.sizes.0..=shape.sizes.1);
            let b = if shape.constant_size {
                a
            } else {
                rng.gen_range(shape.sizes.0..=shape.sizes.1)
            };
            FlowSpec::new(w, Rat::int(a.min(b)), Rat::int(a.max(b))).expect("valid flow")
        })
        .collect()
}

/// Unit-rate aggregate, so that data and time share one unit.
pub fn random_system(rng: &mut ChaCha8Rng, shape: &Shape) -> SystemSpec {
    SystemSpec::unit_rate(random_flows(rng, shape)).expect("valid system")
}

/// Rate-latency aggregate with a small random rate and latency.
pub fn random_rate_latency_system(rng: &mut ChaCha8Rng, shape: &Shape) -> SystemSpec {
    let rate = Rat::new(rng.gen_range(1..=4), rng.gen_range(1..=3));
    let latency = Rat::int(rng.gen_range(0..=2000));
    SystemSpec::new(random_flows(rng, shape), Curve::rate_latency(rate, latency), rate).expect("valid system")
}

/// Positive breakpoints of `f` over three periods past its transient.
pub fn breakpoints(f: &Curve) -> Vec<Rat> {
    let end = f.transient() + f.period() * Rat::int(3);
    f.breakpoints_until(end)
        .into_iter()
        .map(|b| b.x)
        .filter(|x| x.is_positive())
        .collect()
}
