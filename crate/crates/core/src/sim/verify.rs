//! Checks on finished traces: strict-service inequality and per-packet delay.

use super::Trace;
use crate::curve::Curve;
use crate::rat::Rat;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StrictServiceReport {
    /// Maximal backlogged periods `[start, end]` of the flow.
    pub periods: Vec<(Rat, Rat)>,
    pub pairs_checked: usize,
    /// Number of `(s, t)` pairs with `R*(t) - R*(s) < curve(t - s)`.
    pub violation_count: usize,
    /// The first few violating pairs.
    pub violations: Vec<(Rat, Rat)>,
}

impl StrictServiceReport {
    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }
}

const KEPT_VIOLATIONS: usize = 16;

/// Maximal backlogged periods of flow `i`, from its packets in FIFO order.
fn backlogged_periods(trace: &Trace, i: usize) -> Vec<(Rat, Rat)> {
    let mut packets: Vec<(usize, Rat, Option<Rat>)> =
        trace.flow_records(i).map(|r| (r.seq, r.arrival, Some(r.end))).collect();
    packets.extend(
        trace
            .unserved
            .iter()
            .filter(|(a, _)| a.flow == i)
            .map(|&(a, seq)| (seq, a.time, None)),
    );
    packets.sort_by_key(|p| p.0);
    let stop = trace.valid_until;
    let mut out = Vec::new();
    let mut current: Option<(Rat, Option<Rat>)> = None;
    for &(_, arrival, end) in &packets {
        current = match current {
            None => Some((arrival, end)),
            Some((a, Some(e))) if arrival > e => {
                out.push((a, e));
                Some((arrival, end))
            }
            Some((a, Some(_))) => Some((a, end)),
            Some((a, None)) => Some((a, None)),
        };
    }
    if let Some((a, e)) = current {
        match e.or(stop) {
            Some(e) => out.push((a, e)),
            // every packet served and the last one never ends: cannot happen
            None => unreachable!("served packet without end"),
        }
    }
    out
}

/// Checks `R*_i(t) - R*_i(s) >= curve(t - s)` for every backlogged period
/// `(s, t]` of flow `i`.
///
/// The difference is piecewise linear on the arrangement of lines
/// `s = event`, `t = event` and `t - s = breakpoint of curve`, so it is
/// checked at all vertices of that arrangement, plus pairs a short step
/// apart next to each event to expose jumps of `curve` at the origin.
pub fn verify_strict_service(trace: &Trace, i: usize, curve: &Curve) -> StrictServiceReport {
    let out = &trace.outputs[i];
    let mut report = StrictServiceReport {
        periods: backlogged_periods(trace, i),
        ..Default::default()
    };
    let first_gap = curve
        .breakpoints_until(curve.period_end())
        .iter()
        .map(|b| b.x)
        .find(|x| x.is_positive());
    let first_gap = first_gap.unwrap_or(curve.period_end());
    for &(a, b) in &report.periods.clone() {
        let mut events: Vec<Rat> = out
            .breakpoints_until(b)
            .into_iter()
            .map(|p| p.x)
            .filter(|&x| x > a && x < b)
            .collect();
        events.push(a);
        events.push(b);
        events.sort();
        events.dedup();
        let gaps: Vec<Rat> = curve
            .breakpoints_until(b - a)
            .into_iter()
            .map(|p| p.x)
            .filter(|x| x.is_positive())
            .collect();
        let check = |s: Rat, t: Rat, report: &mut StrictServiceReport| {
            report.pairs_checked += 1;
            if out.value_at(t) - out.value_at(s) < curve.value_at(t - s) {
                report.violation_count += 1;
                if report.violations.len() < KEPT_VIOLATIONS {
                    report.violations.push((s, t));
                }
            }
        };
        for (k, &s) in events.iter().enumerate() {
            for &t in &events[k + 1..] {
                check(s, t, &mut report);
            }
            for &g in &gaps {
                if s + g <= b {
                    check(s, s + g, &mut report);
                }
                if s - g >= a {
                    check(s - g, s, &mut report);
                }
            }
            if let Some(&next) = events.get(k + 1) {
                let step = (next - s).min(first_gap) / Rat::int(2);
                check(s, s + step, &mut report);
                check(next - step, next, &mut report);
            }
        }
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DelayMeasurement {
    /// Largest `end - arrival` over served packets, or over unserved packets
    /// up to the end of the trace when that is larger.
    pub max: Rat,
    /// Sequence number of the packet attaining `max`.
    pub packet: Option<usize>,
    /// Some packet of the flow never finished; `max` is then a lower bound.
    pub unfinished: bool,
}

/// Worst per-packet delay of flow `i`.
pub fn max_packet_delay(trace: &Trace, i: usize) -> DelayMeasurement {
    let mut m = DelayMeasurement {
        max: Rat::ZERO,
        packet: None,
        unfinished: false,
    };
    for r in trace.flow_records(i) {
        let d = r.end - r.arrival;
        if m.packet.is_none() || d > m.max {
            m.max = d;
            m.packet = Some(r.seq);
        }
    }
    for (a, seq) in trace.unserved.iter().filter(|(a, _)| a.flow == i) {
        m.unfinished = true;
        let stop = trace.valid_until.expect("unserved packets imply a truncated trace");
        let d = stop - a.time;
        if m.packet.is_none() || d > m.max {
            m.max = d;
            m.packet = Some(*seq);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::super::{run, PacketArrival, Policy, Scenario, ServiceModel};
    use super::*;
    use crate::service::{FlowSpec, SystemSpec};

    fn r(v: i128) -> Rat {
        Rat::int(v)
    }

    fn toy_trace(per_flow: usize, horizon: i128) -> (SystemSpec, Trace) {
        let sys = SystemSpec::unit_rate(vec![
            FlowSpec::fixed(2, r(1)).unwrap(),
            FlowSpec::fixed(3, r(1)).unwrap(),
        ])
        .unwrap();
        let mut arrivals = Vec::new();
        for k in 0..per_flow {
            arrivals.push(PacketArrival {
                flow: 0,
                time: Rat::new(k as i128, 3),
                size: r(1),
            });
            arrivals.push(PacketArrival {
                flow: 1,
                time: r(0),
                size: r(1),
            });
        }
        arrivals.sort_by_key(|a| a.time);
        let sc = Scenario {
            system: sys.clone(),
            arrivals,
            service: ServiceModel::ConstantRate(r(1)),
            horizon: r(horizon),
            policy: Policy::Iwrr,
        };
        (sys.clone(), run(&sc).unwrap())
    }

    #[test]
    fn idle_flow_is_vacuous() {
        let (sys, trace) = toy_trace(0, 10);
        let rep = verify_strict_service(&trace, 0, &sys.gamma(0).unwrap());
        assert!(rep.holds());
        assert!(rep.periods.is_empty());
        assert_eq!(max_packet_delay(&trace, 0).packet, None);
    }

    #[test]
    fn gamma_holds_and_inflated_fails() {
        let (sys, trace) = toy_trace(12, 40);
        let g = sys.gamma(0).unwrap();
        let rep = verify_strict_service(&trace, 0, &g);
        assert!(rep.holds(), "{:?}", rep.violations);
        assert!(!rep.periods.is_empty());
        let bad = verify_strict_service(&trace, 0, &g.shift_up(r(1)));
        assert!(!bad.holds());
        let (s, t) = bad.violations[0];
        assert!(trace.outputs[0].value_at(t) - trace.outputs[0].value_at(s) < g.value_at(t - s) + r(1));
    }

    #[test]
    fn delays() {
        let (_, trace) = toy_trace(3, 100);
        let d = max_packet_delay(&trace, 0);
        assert!(!d.unfinished);
        // flow 1 packets at 0, 1/3, 2/3 leave at 1, 3, 6
        assert_eq!(d.max, Rat::new(16, 3));
        let (_, cut) = toy_trace(12, 4);
        assert!(max_packet_delay(&cut, 0).unfinished);
    }
}
