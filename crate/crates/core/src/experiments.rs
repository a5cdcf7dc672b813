//! Delay-bound comparison of IWRR and WRR over random token-bucket arrivals.
//!
//! Each sample draws a burst `b` (in packets), forms the arrival curve
//! `⌈γ_{r, b l} / l⌉ l` and computes the bound against the IWRR and the WRR
//! strict service curve of the flow. All bounds are exact; floats appear only
//! in the reports.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::service::{FlowSpec, SystemSpec};
use crate::sim::Policy;

/// `h(alpha, curve of flow i under policy)`.
pub fn delay_bound(sys: &SystemSpec, i: usize, alpha: &Curve, policy: Policy) -> Result<Rat> {
    Ok(alpha.horizontal_deviation(&sys.service_curve(i, policy)?)?.value)
}

/// `⌈γ_{rate, burst} / l⌉ l`.
pub fn packetized_token_bucket(rate: Rat, burst: Rat, l: Rat) -> Curve {
    Curve::token_bucket(rate, burst).packetize_ceil(l)
}

/// Exact `h(⌈γ_{r, b l} / l⌉ l, beta)` for many `(r, b)` against one curve.
///
/// The arrival curve sits at `(⌊b⌋ + 1) l` right after 0 (at `⌈b⌉ l` when
/// `r = 0`) and reaches `(m + 1) l` right after `(m - b) l / r`, so the
/// deviation is the largest `beta^↓((m + 1) l) - (m - b) l / r`. Past the
/// periodic level of `beta^↓` these terms repeat with a non-positive drift,
/// so one period of levels suffices.
#[derive(Clone, Debug)]
pub struct StaircaseBound {
    beta: Curve,
    l: Rat,
    /// Levels `m` with `(m + 1) l` above the transient of `beta^↓`.
    periodic_from: i128,
    /// `beta^↓(y + step l) = beta^↓(y) + shift` in the periodic part.
    step: i128,
    shift: Rat,
    inverse: Vec<Rat>,
}

impl StaircaseBound {
    pub fn new(beta: &Curve, l: Rat) -> Result<StaircaseBound> {
        if !l.is_positive() {
            return Err(Error::Precondition("packet length must be positive".into()));
        }
        if beta.increment().is_zero() {
            return Err(Error::Unbounded);
        }
        let ratio = beta.increment() / l;
        Ok(StaircaseBound {
            beta: beta.clone(),
            l,
            periodic_from: (beta.inverse_periodic_from() / l).floor_int().max(0),
            step: ratio.numer(),
            shift: beta.period() * Rat::int(ratio.denom()),
            inverse: Vec::new(),
        })
    }

    /// `beta^↓(level l)`.
    fn inverse_at_level(&mut self, level: i128) -> Result<Rat> {
        let k = level as usize;
        while self.inverse.len() <= k {
            let y = Rat::from(self.inverse.len()) * self.l;
            self.inverse
                .push(self.beta.lower_inverse_at(y).ok_or(Error::Unbounded)?);
        }
        Ok(self.inverse[k])
    }

    /// Bound for rate `rate` (bits per unit of time) and burst `burst_packets`.
    pub fn token_bucket(&mut self, rate: Rat, burst_packets: Rat) -> Result<Rat> {
        if rate.is_negative() || burst_packets.is_negative() {
            return Err(Error::Precondition("rate and burst must be non-negative".into()));
        }
        if rate.is_zero() {
            let level = burst_packets.ceil_int();
            return self.inverse_at_level(level);
        }
        if rate * self.shift > Rat::int(self.step) * self.l {
            return Err(Error::Unbounded);
        }
        let first = burst_packets.floor_int();
        let last = (first + 1).max(self.periodic_from) + self.step;
        let mut best = Rat::ZERO;
        for m in first..last {
            let at = ((Rat::int(m) - burst_packets) * self.l / rate).pos();
            best = best.max(self.inverse_at_level(m + 1)? - at);
        }
        Ok(best)
    }
}

/// Shape of the systems an experiment runs on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemTemplate {
    /// One system; flows must be listed by increasing weight.
    Fixed { weights: Vec<u64>, packet_bits: Rat },
    /// Integer weights and integer packet lengths in bytes, both uniform.
    Randomized {
        flows: usize,
        weights: (u64, u64),
        packet_bytes: (u64, u64),
    },
}

/// How bursts are drawn from the burst range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurstDraw {
    /// Uniform over the real interval (on a grid of `2^24` steps).
    #[default]
    Continuous,
    /// Uniform over the whole numbers of packets in the interval.
    Integer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub template: SystemTemplate,
    /// Constant rate of the aggregate, bits per second.
    pub link_rate_bps: Rat,
    /// Token-bucket rate of every flow, bits per second.
    pub arrival_rate_bps: Rat,
    /// Bursts are uniform over this range, in packets.
    pub burst_packets: (Rat, Rat),
    pub burst_draw: BurstDraw,
    /// Bursts per flow and system (N).
    pub samples: usize,
    /// Number of systems (M); ignored by fixed templates.
    pub systems: usize,
    pub seed: u64,
}

/// Resolution of the burst draw: `2^24` steps over the burst range.
const BURST_STEPS: u32 = 1 << 24;

/// Systems with an unstable flow are drawn again, at most this many times in a row.
const MAX_REDRAWS: usize = 10_000;

impl ExperimentConfig {
    /// Eight flows with weights 22 to 45, 7119-bit packets, 10 Mb/s, r = 0.5 Mb/s.
    pub fn fixed_default() -> ExperimentConfig {
        ExperimentConfig {
            template: SystemTemplate::Fixed {
                weights: vec![22, 27, 28, 30, 30, 34, 41, 45],
                packet_bits: Rat::int(7119),
            },
            link_rate_bps: Rat::int(10_000_000),
            arrival_rate_bps: Rat::int(500_000),
            burst_packets: (Rat::int(1), Rat::int(20)),
            burst_draw: BurstDraw::Continuous,
            samples: 1000,
            systems: 1,
            seed: 1,
        }
    }

    /// Eight flows with weights in [10, 50] and packets of 64 to 1522 bytes.
    pub fn randomized_default() -> ExperimentConfig {
        ExperimentConfig {
            template: SystemTemplate::Randomized {
                flows: 8,
                weights: (10, 50),
                packet_bytes: (64, 1522),
            },
            systems: 200,
            ..ExperimentConfig::fixed_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.samples == 0 || self.systems == 0 {
            return bad("sample and system counts must be at least 1");
        }
        let (lo, hi) = self.burst_packets;
        if lo.is_negative() || lo > hi {
            return bad("burst range must satisfy 0 <= lo <= hi");
        }
        if self.burst_draw == BurstDraw::Integer && lo.ceil() > hi.floor() {
            return bad("burst range holds no whole number of packets");
        }
        if !self.link_rate_bps.is_positive() || self.arrival_rate_bps.is_negative() {
            return bad("link rate must be positive and arrival rate non-negative");
        }
        match &self.template {
            SystemTemplate::Fixed { weights, packet_bits } => {
                if weights.is_empty() || weights.contains(&0) || !packet_bits.is_positive() {
                    return bad("fixed system needs positive weights and packet length");
                }
                if weights.windows(2).any(|w| w[0] > w[1]) {
                    return bad("fixed system weights must be listed in increasing order");
                }
            }
            SystemTemplate::Randomized {
                flows,
                weights,
                packet_bytes,
            } => {
                if *flows == 0
                    || weights.0 == 0
                    || weights.0 > weights.1
                    || packet_bytes.0 == 0
                    || packet_bytes.0 > packet_bytes.1
                {
                    return bad("randomized template needs flows >= 1 and valid positive ranges");
                }
            }
        }
        Ok(())
    }
}

/// One burst draw for one flow of one system. Bounds are in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub system: usize,
    /// 1 for the smallest weight.
    pub flow_rank: usize,
    pub burst_packets: Rat,
    pub wrr_bound: Rat,
    pub iwrr_bound: Rat,
    /// `(wrr - iwrr)` over the median WRR bound of the same flow and system.
    pub diff_norm: f64,
}

impl Sample {
    pub fn diff(&self) -> Rat {
        self.wrr_bound - self.iwrr_bound
    }
}

/// Minimum, quartiles and maximum (linear interpolation between order statistics).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(mut values: Vec<f64>) -> Quartiles {
        assert!(!values.is_empty(), "quartiles of an empty sample");
        values.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let pos = p * (values.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
        };
        Quartiles {
            min: values[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: values[values.len() - 1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSummary {
    pub flow_rank: usize,
    pub count: usize,
    pub wrr_ms: Quartiles,
    pub diff_ms: Quartiles,
    pub diff_norm: Quartiles,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayReport {
    pub samples: Vec<Sample>,
    pub summary: Vec<FlowSummary>,
    /// Systems drawn and rejected because a flow's arrival rate exceeded its long-term service rate.
    pub redrawn_systems: usize,
}

#[derive(Serialize)]
struct SampleRow {
    flow_rank: usize,
    b_packets: f64,
    wrr_bound_ms: f64,
    iwrr_bound_ms: f64,
    diff_ms: f64,
    diff_norm: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    flow_rank: usize,
    count: usize,
    wrr_median_ms: f64,
    diff_min_ms: f64,
    diff_q1_ms: f64,
    diff_median_ms: f64,
    diff_q3_ms: f64,
    diff_max_ms: f64,
    norm_min: f64,
    norm_q1: f64,
    norm_median: f64,
    norm_q3: f64,
    norm_max: f64,
}

fn ms(v: Rat) -> f64 {
    (v * Rat::int(1000)).to_f64()
}

impl DelayReport {
    /// `flow_rank,b_packets,wrr_bound_ms,iwrr_bound_ms,diff_ms,diff_norm`, one row per sample.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(SampleRow {
                flow_rank: s.flow_rank,
                b_packets: s.burst_packets.to_f64(),
                wrr_bound_ms: ms(s.wrr_bound),
                iwrr_bound_ms: ms(s.iwrr_bound),
                diff_ms: ms(s.diff()),
                diff_norm: s.diff_norm,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Box-plot data per flow rank.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for f in &self.summary {
            w.serialize(SummaryRow {
                flow_rank: f.flow_rank,
                count: f.count,
                wrr_median_ms: f.wrr_ms.median,
                diff_min_ms: f.diff_ms.min,
                diff_q1_ms: f.diff_ms.q1,
                diff_median_ms: f.diff_ms.median,
                diff_q3_ms: f.diff_ms.q3,
                diff_max_ms: f.diff_ms.max,
                norm_min: f.diff_norm.min,
                norm_q1: f.diff_norm.q1,
                norm_median: f.diff_norm.median,
                norm_q3: f.diff_norm.q3,
                norm_max: f.diff_norm.max,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    fn summarize(samples: Vec<Sample>, redrawn_systems: usize) -> DelayReport {
        let ranks = samples.iter().map(|s| s.flow_rank).max().unwrap_or(0);
        let summary = (1..=ranks)
            .map(|rank| {
                let of_rank: Vec<&Sample> = samples.iter().filter(|s| s.flow_rank == rank).collect();
                FlowSummary {
                    flow_rank: rank,
                    count: of_rank.len(),
                    wrr_ms: Quartiles::of(of_rank.iter().map(|s| ms(s.wrr_bound)).collect()),
                    diff_ms: Quartiles::of(of_rank.iter().map(|s| ms(s.diff())).collect()),
                    diff_norm: Quartiles::of(of_rank.iter().map(|s| s.diff_norm).collect()),
                }
            })
            .collect();
        DelayReport {
            samples,
            summary,
            redrawn_systems,
        }
    }
}

fn exact_median(mut values: Vec<Rat>) -> Rat {
    values.sort();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / Rat::int(2)
    }
}

fn draw_burst(rng: &mut ChaCha8Rng, (lo, hi): (Rat, Rat), draw: BurstDraw) -> Rat {
    match draw {
        BurstDraw::Continuous => {
            let u = rng.gen_range(0..=BURST_STEPS);
            lo + (hi - lo) * Rat::new(u as i128, BURST_STEPS as i128)
        }
        BurstDraw::Integer => Rat::int(rng.gen_range(lo.ceil_int()..=hi.floor_int())),
    }
}

/// Samples for every flow of one system; flows must be sorted by weight.
fn run_system(cfg: &ExperimentConfig, sys: &SystemSpec, system: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(sys.n() * cfg.samples);
    for i in 0..sys.n() {
        let l = sys.flows()[i].lmax;
        let bursts: Vec<Rat> = (0..cfg.samples)
            .map(|_| draw_burst(rng, cfg.burst_packets, cfg.burst_draw))
            .collect();
        let mut iwrr = StaircaseBound::new(&sys.iwrr_service_curve(i)?, l)?;
        let mut wrr = StaircaseBound::new(&sys.wrr_service_curve(i)?, l)?;
        let mut pairs = Vec::with_capacity(bursts.len());
        for &b in &bursts {
            pairs.push((
                b,
                wrr.token_bucket(cfg.arrival_rate_bps, b)?,
                iwrr.token_bucket(cfg.arrival_rate_bps, b)?,
            ));
        }
        let median = exact_median(pairs.iter().map(|p| p.1).collect());
        out.extend(pairs.into_iter().map(|(b, w, d)| Sample {
            system,
            flow_rank: i + 1,
            burst_packets: b,
            wrr_bound: w,
            iwrr_bound: d,
            diff_norm: if median.is_zero() {
                0.0
            } else {
                ((w - d) / median).to_f64()
            },
        }));
    }
    Ok(out)
}

fn fixed_length_system(weights: &[u64], l: Rat, c: Rat) -> Result<SystemSpec> {
    let flows = weights
        .iter()
        .map(|&w| FlowSpec::fixed(w, l))
        .collect::<Result<Vec<_>>>()?;
    SystemSpec::constant_rate(flows, c)
}

/// Every flow's long-term service rate is at least the arrival rate.
fn is_stable(weights: &[u64], cfg: &ExperimentConfig) -> bool {
    let total: u64 = weights.iter().sum();
    let smallest = *weights.iter().min().expect("at least one flow");
    cfg.arrival_rate_bps * Rat::from(total) <= cfg.link_rate_bps * Rat::from(smallest)
}

/// Both bounds for `N` bursts on every flow of the fixed system.
pub fn run_fixed_experiment(cfg: &ExperimentConfig) -> Result<DelayReport> {
    cfg.validate()?;
    let SystemTemplate::Fixed { weights, packet_bits } = &cfg.template else {
        return Err(Error::Config("fixed experiment needs a fixed system template".into()));
    };
    let sys = fixed_length_system(weights, *packet_bits, cfg.link_rate_bps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(DelayReport::summarize(run_system(cfg, &sys, 0, &mut rng)?, 0))
}

/// Both bounds for `N` bursts on every flow of `M` random systems, flows
/// ranked by increasing weight, differences normalized per system and flow.
/// Systems where some flow would be unstable are drawn again.
pub fn run_randomized_experiment(cfg: &ExperimentConfig) -> Result<DelayReport> {
    cfg.validate()?;
    let &SystemTemplate::Randomized {
        flows,
        weights: (wlo, whi),
        packet_bytes: (blo, bhi),
    } = &cfg.template
    else {
        return Err(Error::Config(
            "randomized experiment needs a randomized system template".into(),
        ));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.systems * flows * cfg.samples);
    let mut redrawn = 0;
    for system in 0..cfg.systems {
        let mut tries = 0;
        let (weights, bytes) = loop {
            let mut w: Vec<u64> = (0..flows).map(|_| rng.gen_range(wlo..=whi)).collect();
            let bytes = rng.gen_range(blo..=bhi);
            w.sort_unstable();
            if is_stable(&w, cfg) {
                break (w, bytes);
            }
            redrawn += 1;
            tries += 1;
            if tries >= MAX_REDRAWS {
                return Err(Error::Config("template rarely yields a stable system".into()));
            }
        };
        let sys = fixed_length_system(&weights, Rat::from(8 * bytes), cfg.link_rate_bps)?;
        samples.extend(run_system(cfg, &sys, system, &mut rng)?);
    }
    Ok(DelayReport::summarize(samples, redrawn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn r(v: i128) -> Rat {
        Rat::int(v)
    }

    fn toy() -> SystemSpec {
        SystemSpec::unit_rate(vec![
            FlowSpec::fixed(2, r(1)).unwrap(),
            FlowSpec::fixed(3, r(1)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn toy_bounds() {
        let alpha = Curve::token_bucket(r(0), r(2));
        assert_eq!(delay_bound(&toy(), 0, &alpha, Policy::Iwrr).unwrap(), r(5));
        assert!(delay_bound(&toy(), 0, &alpha, Policy::Wrr).unwrap() >= r(5));
        let single = SystemSpec::unit_rate(vec![FlowSpec::fixed(1, r(3)).unwrap()]).unwrap();
        let alpha = packetized_token_bucket(r(0), r(3), r(3));
        assert_eq!(delay_bound(&single, 0, &alpha, Policy::Wrr).unwrap(), r(3));
        assert!(matches!(
            delay_bound(&toy(), 0, &Curve::linear(r(1)), Policy::Iwrr),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn staircase_matches_general_deviation() {
        let sys = fixed_length_system(&[1, 2, 3], r(2), r(3)).unwrap();
        for i in 0..3 {
            for policy in [Policy::Iwrr, Policy::Wrr] {
                let beta = sys.service_curve(i, policy).unwrap();
                let mut fast = StaircaseBound::new(&beta, r(2)).unwrap();
                for (rate, b) in [
                    (rat(1, 4), rat(7, 3)),
                    (rat(1, 3), r(2)),
                    (r(0), rat(5, 2)),
                    (rat(1, 7), rat(1, 9)),
                ] {
                    let alpha = packetized_token_bucket(rate, b * r(2), r(2));
                    let general = alpha.horizontal_deviation(&beta).unwrap().value;
                    assert_eq!(
                        fast.token_bucket(rate, b).unwrap(),
                        general,
                        "flow {i} {policy} r={rate} b={b}"
                    );
                }
                assert!(matches!(fast.token_bucket(r(3), r(1)), Err(Error::Unbounded)));
            }
        }
    }

    #[test]
    fn fixed_system_spot_check() {
        let cfg = ExperimentConfig::fixed_default();
        let SystemTemplate::Fixed { weights, packet_bits } = &cfg.template else {
            unreachable!()
        };
        let sys = fixed_length_system(weights, *packet_bits, cfg.link_rate_bps).unwrap();
        let b = r(10);
        let alpha = packetized_token_bucket(cfg.arrival_rate_bps, b * *packet_bits, *packet_bits);
        for policy in [Policy::Iwrr, Policy::Wrr] {
            let beta = sys.service_curve(0, policy).unwrap();
            let general = alpha.horizontal_deviation_to_crossing(&beta).unwrap().value;
            let fast = StaircaseBound::new(&beta, *packet_bits)
                .unwrap()
                .token_bucket(cfg.arrival_rate_bps, b)
                .unwrap();
            assert_eq!(fast, general);
        }
        let d = delay_bound(&sys, 0, &alpha, Policy::Iwrr).unwrap();
        assert!(d < delay_bound(&sys, 0, &alpha, Policy::Wrr).unwrap());
    }

    #[test]
    fn deterministic_and_dominated() {
        let cfg = ExperimentConfig {
            samples: 20,
            ..ExperimentConfig::fixed_default()
        };
        let a = run_fixed_experiment(&cfg).unwrap();
        let b = run_fixed_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 160);
        assert!(a
            .samples
            .iter()
            .all(|s| s.iwrr_bound <= s.wrr_bound && s.iwrr_bound.is_positive()));
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .starts_with("flow_rank,b_packets,wrr_bound_ms,iwrr_bound_ms,diff_ms,diff_norm\n"));
    }

    #[test]
    fn randomized_normalization() {
        let cfg = ExperimentConfig {
            samples: 9,
            systems: 3,
            ..ExperimentConfig::randomized_default()
        };
        let rep = run_randomized_experiment(&cfg).unwrap();
        assert_eq!(rep.samples.len(), 3 * 8 * 9);
        assert!(rep.samples.iter().all(|s| (0.0..1.0).contains(&s.diff_norm)));
        assert_eq!(rep.summary.len(), 8);
    }

    #[test]
    fn quartiles() {
        let q = Quartiles::of(vec![4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert_eq!(Quartiles::of(vec![1.0, 2.0]).median, 1.5);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = ExperimentConfig::fixed_default();
        cfg.samples = 0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            burst_packets: (r(3), r(2)),
            ..ExperimentConfig::fixed_default()
        };
        assert!(cfg.validate().is_err());
        assert!(run_randomized_experiment(&ExperimentConfig::fixed_default()).is_err());
        let cfg = ExperimentConfig {
            burst_packets: (rat(3, 2), rat(7, 4)),
            burst_draw: BurstDraw::Integer,
            ..ExperimentConfig::fixed_default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn integer_bursts() {
        let cfg = ExperimentConfig {
            samples: 50,
            burst_draw: BurstDraw::Integer,
            ..ExperimentConfig::fixed_default()
        };
        let rep = run_fixed_experiment(&cfg).unwrap();
        assert!(rep
            .samples
            .iter()
            .all(|s| s.burst_packets.is_integer() && s.burst_packets >= r(1) && s.burst_packets <= r(20)));
    }
}
