//! Packet-level discrete-event simulation of IWRR and WRR.
//!
//! Time advances only while a packet is sent; visits to empty queues take
//! no time. Arrivals stamped at the current instant are enqueued before the
//! visit looks at the queue. When every queue is empty the scheduler waits
//! for the next arrival and resumes from where its pointer stands.

mod trajectory;
mod verify;

use std::collections::VecDeque;
use std::io::Write;

use crate::curve::{Breakpoint, Curve};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::service::SystemSpec;

pub use trajectory::{
    build_delay_tightness_scenario, build_tightness_scenario, build_wrr_tightness_scenario, DelayPlan, TightnessPlan,
};
pub use verify::{max_packet_delay, verify_strict_service, DelayMeasurement, StrictServiceReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Iwrr,
    Wrr,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Iwrr => "iwrr",
            Policy::Wrr => "wrr",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketArrival {
    pub flow: usize,
    pub time: Rat,
    pub size: Rat,
}

/// Service available to the whole round-robin subsystem.
#[derive(Clone, Debug)]
pub enum ServiceModel {
    /// Work-conserving line of rate `c`.
    ConstantRate(Rat),
    /// Cumulative service `profile(t)` from time 0, for scenarios that keep
    /// the subsystem backlogged from 0 through the horizon.
    ScriptedBusy { profile: Curve, lipschitz: Rat },
}

impl ServiceModel {
    fn validate(&self) -> Result<()> {
        match self {
            ServiceModel::ConstantRate(c) if !c.is_positive() => Err(Error::InvalidScenario(format!(
                "service rate must be positive, got {c}"
            ))),
            ServiceModel::ScriptedBusy { profile, lipschitz } => {
                if let Some(x) = profile.first_jump() {
                    return Err(Error::InvalidScenario(format!("service profile jumps at {x}")));
                }
                if !profile.value_at(Rat::ZERO).is_zero() || !profile.increment().is_positive() {
                    return Err(Error::InvalidScenario(
                        "service profile must start at 0 and be unbounded".into(),
                    ));
                }
                if profile.max_slope() > *lipschitz {
                    return Err(Error::InvalidScenario(
                        "service profile exceeds its Lipschitz bound".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// End of a send of `size` bits that starts at `start`, after `work` bits
    /// have been served since time 0.
    fn finish(&self, start: Rat, work: Rat, size: Rat) -> Rat {
        match self {
            ServiceModel::ConstantRate(c) => start + size / *c,
            ServiceModel::ScriptedBusy { profile, .. } => {
                profile.lower_inverse_at(work + size).expect("profile is unbounded")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub system: SystemSpec,
    /// Sorted by time.
    pub arrivals: Vec<PacketArrival>,
    pub service: ServiceModel,
    /// No send starts at or after the horizon.
    pub horizon: Rat,
    pub policy: Policy,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !self.horizon.is_positive() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        self.service.validate()?;
        for (k, a) in self.arrivals.iter().enumerate() {
            let f = self.system.flow(a.flow)?;
            if a.time.is_negative() {
                return bad(format!("arrival {k} at negative time {}", a.time));
            }
            if a.size < f.lmin || a.size > f.lmax {
                return bad(format!(
                    "arrival {k} of flow {} has size {} outside [{}, {}]",
                    a.flow, a.size, f.lmin, f.lmax
                ));
            }
            if k > 0 && self.arrivals[k - 1].time > a.time {
                return bad(format!("arrivals not sorted by time at index {k}"));
            }
        }
        Ok(())
    }
}

/// One packet transmission.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Record {
    pub start: Rat,
    pub end: Rat,
    pub flow: usize,
    pub size: Rat,
    pub arrival: Rat,
    /// Position of the packet in its flow's arrival order.
    pub seq: usize,
    /// Round counter, from 1.
    pub round: u64,
    /// IWRR: cycle of the emission opportunity. WRR: position within the visit.
    pub cycle: u64,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub records: Vec<Record>,
    /// Cumulative arrivals per flow (right-continuous).
    pub inputs: Vec<Curve>,
    /// Cumulative fluid output per flow.
    pub outputs: Vec<Curve>,
    /// Packets that arrived before the simulation stopped but never started.
    pub unserved: Vec<(PacketArrival, usize)>,
    /// The trace is exact up to this instant; `None` when every packet was served.
    pub valid_until: Option<Rat>,
    pub policy: Policy,
}

impl Trace {
    pub fn flow_records(&self, i: usize) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.flow == i)
    }

    /// CSV with columns `start_num,start_den,end_num,end_den,flow,size_bits,round,cycle`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "start_num",
            "start_den",
            "end_num",
            "end_den",
            "flow",
            "size_bits",
            "round",
            "cycle",
        ])?;
        for r in &self.records {
            w.write_record([
                r.start.numer().to_string(),
                r.start.denom().to_string(),
                r.end.numer().to_string(),
                r.end.denom().to_string(),
                r.flow.to_string(),
                r.size.to_string(),
                r.round.to_string(),
                r.cycle.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Pending {
    arrival: Rat,
    size: Rat,
    seq: usize,
}

/// Runs the scheduler until the horizon (or until every packet is served).
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let sys = &scenario.system;
    let n = sys.n();
    let weights: Vec<u64> = sys.flows().iter().map(|f| f.weight).collect();
    let wmax = *weights.iter().max().expect("n >= 1");
    let horizon = scenario.horizon;
    let arrivals = &scenario.arrivals;

    let mut queues: Vec<VecDeque<Pending>> = (0..n).map(|_| VecDeque::new()).collect();
    let mut seqs = vec![0usize; n];
    let mut pending = 0usize;
    let mut next = 0usize;
    let mut now = Rat::ZERO;
    let mut work = Rat::ZERO;
    let (mut round, mut cycle, mut j) = (1u64, 1u64, 0usize);
    let mut records: Vec<Record> = Vec::new();
    let mut drained = false;

    let mut enqueue = |now: Rat, next: &mut usize, queues: &mut Vec<VecDeque<Pending>>, pending: &mut usize| {
        while *next < arrivals.len() && arrivals[*next].time <= now {
            let a = arrivals[*next];
            queues[a.flow].push_back(Pending {
                arrival: a.time,
                size: a.size,
                seq: seqs[a.flow],
            });
            seqs[a.flow] += 1;
            *pending += 1;
            *next += 1;
        }
    };

    loop {
        if now >= horizon {
            break;
        }
        enqueue(now, &mut next, &mut queues, &mut pending);
        if pending == 0 {
            if matches!(scenario.service, ServiceModel::ScriptedBusy { .. }) {
                return Err(Error::BusyPeriodViolation(now));
            }
            match arrivals.get(next) {
                None => {
                    drained = true;
                    break;
                }
                Some(a) if a.time >= horizon => break,
                Some(a) => {
                    now = a.time;
                    continue;
                }
            }
        }
        let w = weights[j];
        let quota = match scenario.policy {
            Policy::Iwrr => u64::from(w >= cycle),
            Policy::Wrr => w,
        };
        let mut sent = 0u64;
        while sent < quota && now < horizon {
            let Some(p) = queues[j].pop_front() else { break };
            pending -= 1;
            sent += 1;
            let end = scenario.service.finish(now, work, p.size);
            let tag = match scenario.policy {
                Policy::Iwrr => cycle,
                Policy::Wrr => sent,
            };
            records.push(Record {
                start: now,
                end,
                flow: j,
                size: p.size,
                arrival: p.arrival,
                seq: p.seq,
                round,
                cycle: tag,
            });
            now = end;
            work += p.size;
            enqueue(now, &mut next, &mut queues, &mut pending);
        }
        // advance the pointer
        j += 1;
        if j == n {
            j = 0;
            match scenario.policy {
                Policy::Iwrr => {
                    cycle += 1;
                    if cycle > wmax {
                        cycle = 1;
                        round += 1;
                    }
                }
                Policy::Wrr => round += 1,
            }
        }
    }

    let valid_until = if drained { None } else { Some(now.max(horizon)) };
    let mut unserved = Vec::new();
    for (flow, q) in queues.iter().enumerate() {
        for p in q {
            unserved.push((
                PacketArrival {
                    flow,
                    time: p.arrival,
                    size: p.size,
                },
                p.seq,
            ));
        }
    }
    let inputs = (0..n)
        .map(|f| {
            input_curve(
                arrivals
                    .iter()
                    .filter(|a| a.flow == f && valid_until.is_none_or(|v| a.time <= v)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = (0..n)
        .map(|f| output_curve(records.iter().filter(|r| r.flow == f), &scenario.service))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trace {
        records,
        inputs,
        outputs,
        unserved,
        valid_until,
        policy: scenario.policy,
    })
}

fn input_curve<'a>(arrivals: impl Iterator<Item = &'a PacketArrival>) -> Result<Curve> {
    let mut bps: Vec<Breakpoint> = vec![Breakpoint::cont(Rat::ZERO, Rat::ZERO, Rat::ZERO)];
    let mut total = Rat::ZERO;
    for a in arrivals {
        total += a.size;
        let last = bps.last_mut().expect("non-empty");
        if last.x == a.time {
            last.value = total;
            last.right = total;
        } else {
            bps.push(Breakpoint::cont(a.time, total, Rat::ZERO));
        }
    }
    Curve::eventually_constant(bps)
}

fn output_curve<'a>(records: impl Iterator<Item = &'a Record>, service: &ServiceModel) -> Result<Curve> {
    let mut pts = vec![(Rat::ZERO, Rat::ZERO)];
    let mut total = Rat::ZERO;
    for r in records {
        pts.push((r.start, total));
        if let ServiceModel::ScriptedBusy { profile, .. } = service {
            // a linear tail has no kinks worth recording
            if !(profile.tail_is_linear() && r.start >= profile.transient()) {
                let base = profile.value_at(r.start);
                for b in profile.breakpoints_in(r.start, r.end) {
                    if b.x < r.end {
                        pts.push((b.x, total + b.value - base));
                    }
                }
            }
        }
        total += r.size;
        pts.push((r.end, total));
    }
    Curve::polyline(&pts)
}
