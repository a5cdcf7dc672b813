//! Adversarial trajectories that reach the service curves and delay bounds.
//!
//! All builders relabel the flows by increasing weight, the flow of interest
//! first among flows of equal weight, and return the scenario together with
//! the position of that flow in the relabelled system.

use super::{PacketArrival, Policy, Scenario, ServiceModel, Trace};
use crate::curve::{Breakpoint, Curve};
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::service::SystemSpec;

#[derive(Clone, Debug)]
pub struct TightnessPlan {
    pub scenario: Scenario,
    /// Index of the flow of interest in `scenario.system`.
    pub flow: usize,
    /// Start of the measured interval.
    pub s: Rat,
    /// Offset of the flow's burst after `s`.
    pub delta: Rat,
    pub tau: Rat,
    /// Service curve value the trajectory should deliver in `(s, s + tau]`.
    pub expected: Rat,
}

impl TightnessPlan {
    /// `R*_i(s + tau) - R*_i(s)` on a trace of this plan's scenario.
    pub fn measured(&self, trace: &Trace) -> Rat {
        let out = &trace.outputs[self.flow];
        out.value_at(self.s + self.tau) - out.value_at(self.s)
    }
}

#[derive(Clone, Debug)]
pub struct DelayPlan {
    pub scenario: Scenario,
    pub flow: usize,
    pub s: Rat,
    pub delta: Rat,
    /// `h(alpha, curve)`.
    pub bound: Rat,
    /// Arrival offset (relative to `s + delta`) of the packet that suffers the bound.
    pub worst_arrival: Rat,
}

impl DelayPlan {
    /// Delay the trajectory is built to produce: the bound minus the offset.
    pub fn expected_delay(&self) -> Rat {
        self.bound - self.delta
    }
}

/// Relabelled system and the new index of flow `i`.
fn relabel(sys: &SystemSpec, i: usize) -> Result<(SystemSpec, usize)> {
    sys.flow(i)?;
    let mut order: Vec<usize> = (0..sys.n()).collect();
    order.sort_by_key(|&j| (sys.flows()[j].weight, j != i, j));
    let flows = order.iter().map(|&j| sys.flows()[j]).collect();
    let new_i = order.iter().position(|&j| j == i).expect("i is a flow");
    Ok((SystemSpec::new(flows, sys.aggregate().clone(), sys.lipschitz())?, new_i))
}

/// Service at rate `K` until `s`, then `K s + beta(t - s)`.
fn profile(beta: &Curve, k: Rat, s: Rat) -> Curve {
    if s.is_zero() {
        return beta.clone();
    }
    let mut bps = vec![Breakpoint::cont(Rat::ZERO, Rat::ZERO, k)];
    let ks = k * s;
    bps.extend(
        beta.breakpoints_until(beta.period_end())
            .into_iter()
            .filter(|b| b.x < beta.period_end())
            .map(|b| Breakpoint::new(b.x + s, b.value + ks, b.right + ks, b.slope)),
    );
    Curve::fold(bps, beta.transient() + s, beta.period(), beta.increment())
}

/// Start of the measured interval: the visit to `i` at cycle `w_i` of the
/// first round (IWRR) or the first visit to `i` (WRR).
fn start_time(sys: &SystemSpec, i: usize, policy: Policy) -> Rat {
    let wi = sys.flows()[i].weight;
    let work: Rat = match policy {
        Policy::Iwrr => sys
            .flows()
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, f)| Rat::from((wi - 1).min(f.weight)) * f.lmax)
            .sum(),
        Policy::Wrr => sys.flows()[..i].iter().map(|f| Rat::from(f.weight) * f.lmax).sum(),
    };
    work / sys.lipschitz()
}

/// Largest admissible offset: the flow must arrive before its next opportunity.
fn offset_bound(sys: &SystemSpec, i: usize, policy: Policy) -> Result<Rat> {
    let y = match policy {
        Policy::Iwrr => sys.psi(i, Rat::ZERO)?,
        Policy::Wrr => sys.psi_wrr(i, Rat::ZERO)?,
    };
    Ok(sys.aggregate().lower_inverse_at(y).expect("aggregate is unbounded"))
}

/// Competitor bursts at 0 sized to keep them backlogged until `until`.
fn competitor_bursts(sys: &SystemSpec, i: usize, until: Rat) -> Vec<PacketArrival> {
    let served = sys.aggregate().value_at(until);
    let mut v = Vec::new();
    for (j, f) in sys.flows().iter().enumerate() {
        if j == i {
            continue;
        }
        let count = (served / f.lmax).ceil_int() as u64 + f.weight;
        v.extend((0..count).map(|_| PacketArrival {
            flow: j,
            time: Rat::ZERO,
            size: f.lmax,
        }));
    }
    v
}

fn tightness(sys: &SystemSpec, i: usize, tau: Rat, policy: Policy, delta: Option<Rat>) -> Result<TightnessPlan> {
    if !tau.is_positive() {
        return Err(Error::Precondition(format!("tau must be positive, got {tau}")));
    }
    let expected = sys.service_curve(i, policy)?.value_at(tau);
    let (sys, i) = relabel(sys, i)?;
    let s = start_time(&sys, i, policy);
    let delta = match delta {
        Some(d) => d,
        None if sys.n() == 1 => Rat::ZERO,
        None => offset_bound(&sys, i, policy)? / Rat::int(2),
    };
    if sys.n() > 1 && (!delta.is_positive() || delta >= offset_bound(&sys, i, policy)?) {
        return Err(Error::Precondition(format!(
            "offset {delta} outside the admissible range"
        )));
    }
    let beta = sys.aggregate().clone();
    let fi = sys.flows()[i];
    let mut arrivals = competitor_bursts(&sys, i, tau);
    // at least one packet, so the flow is backlogged even when nothing is due
    let own = ((beta.value_at(tau) / fi.lmin).ceil_int() as u64).max(1);
    arrivals.extend((0..own).map(|_| PacketArrival {
        flow: i,
        time: s + delta,
        size: fi.lmin,
    }));
    arrivals.sort_by_key(|a| a.time);
    let service = ServiceModel::ScriptedBusy {
        profile: profile(&beta, sys.lipschitz(), s),
        lipschitz: sys.lipschitz(),
    };
    let scenario = Scenario {
        system: sys,
        arrivals,
        service,
        horizon: s + tau,
        policy: Policy::Iwrr,
    };
    Ok(TightnessPlan {
        scenario: Scenario { policy, ..scenario },
        flow: i,
        s,
        delta,
        tau,
        expected,
    })
}

/// Trajectory where flow `i` gets exactly `β_i(tau)` in `(s, s + tau]` under IWRR.
///
/// `delta` is the offset of the flow's burst after `s`; `None` picks the
/// middle of the admissible range (and 0 for a single flow).
pub fn build_tightness_scenario(sys: &SystemSpec, i: usize, tau: Rat, delta: Option<Rat>) -> Result<TightnessPlan> {
    tightness(sys, i, tau, Policy::Iwrr, delta)
}

/// Same for WRR: flow `i` gets exactly `β'_i(tau)`.
pub fn build_wrr_tightness_scenario(sys: &SystemSpec, i: usize, tau: Rat, delta: Option<Rat>) -> Result<TightnessPlan> {
    tightness(sys, i, tau, Policy::Wrr, delta)
}

/// Trajectory where one packet of flow `i` (constant packet size `l`)
/// suffers the delay bound `h(alpha, curve)` minus `epsilon / K`.
///
/// `alpha` must be a sub-additive staircase taking values in multiples of
/// `l`. The flow's input is `alpha(t - s - delta)` with `delta = epsilon / K`,
/// realised up to the arrival that attains the bound.
pub fn build_delay_tightness_scenario(
    sys: &SystemSpec,
    i: usize,
    alpha: &Curve,
    policy: Policy,
    epsilon: Rat,
) -> Result<DelayPlan> {
    let f = *sys.flow(i)?;
    if f.lmin != f.lmax {
        return Err(Error::Precondition("delay tightness needs lmin = lmax".into()));
    }
    let l = f.lmin;
    for b in alpha.breakpoints() {
        if !b.slope.is_zero() || !(b.value / l).is_integer() || !(b.right / l).is_integer() {
            return Err(Error::Precondition(format!(
                "arrival curve must be a staircase in multiples of {l}"
            )));
        }
    }
    if !alpha.value_at(Rat::ZERO).is_zero() {
        return Err(Error::Precondition("arrival curve must be 0 at 0".into()));
    }
    if let Some((s, t)) = alpha.check_subadditive(Default::default()).witness {
        return Err(Error::Precondition(format!(
            "arrival curve is not sub-additive at ({s}, {t})"
        )));
    }
    let dev = alpha.horizontal_deviation(&sys.service_curve(i, policy)?)?;
    let (sys, i) = relabel(sys, i)?;
    let s = start_time(&sys, i, policy);
    let delta = if sys.n() == 1 {
        Rat::ZERO
    } else {
        epsilon / sys.lipschitz()
    };
    if sys.n() > 1 && (!delta.is_positive() || delta >= offset_bound(&sys, i, policy)?) {
        return Err(Error::Precondition(format!(
            "offset {delta} outside the admissible range"
        )));
    }
    // the worst packet leaves at the horizon; a lone flow then goes idle
    let horizon = s + delta + dev.at + dev.value;
    let mut arrivals = competitor_bursts(&sys, i, horizon);
    for b in alpha.breakpoints_until(dev.at) {
        let left = alpha.left_at(b.x);
        let packets = ((b.right - left) / l).floor_int() as u64;
        let time = s + delta + b.x;
        arrivals.extend((0..packets).map(|_| PacketArrival { flow: i, time, size: l }));
    }
    arrivals.sort_by_key(|a| a.time);
    let service = ServiceModel::ScriptedBusy {
        profile: profile(sys.aggregate(), sys.lipschitz(), s),
        lipschitz: sys.lipschitz(),
    };
    let scenario = Scenario {
        system: sys,
        arrivals,
        service,
        horizon,
        policy,
    };
    Ok(DelayPlan {
        scenario,
        flow: i,
        s,
        delta,
        bound: dev.value,
        worst_arrival: dev.at,
    })
}
