//! Strict service curves for one flow of an IWRR or WRR scheduler.
//!
//! Flows are indexed from 0 in the order given to [`SystemSpec`]. For flow
//! `i`, `psi(i, x)` bounds the aggregate work needed before flow `i` has
//! received `x` bits, `gamma(i)` is its lower pseudo-inverse, and the strict
//! service curve is `gamma(i)` composed with the aggregate curve.

use std::io::Write;

use crate::curve::{Breakpoint, Curve, HorizonSpec};
use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowSpec {
    pub weight: u64,
    pub lmin: Rat,
    pub lmax: Rat,
}

impl FlowSpec {
    pub fn new(weight: u64, lmin: Rat, lmax: Rat) -> Result<FlowSpec> {
        let flow = FlowSpec { weight, lmin, lmax };
        flow.validate()?;
        Ok(flow)
    }

    /// All packets of size `l`.
    pub fn fixed(weight: u64, l: Rat) -> Result<FlowSpec> {
        FlowSpec::new(weight, l, l)
    }

    fn validate(&self) -> Result<()> {
        if self.weight == 0 {
            return Err(Error::InvalidSystem("weights must be positive integers".into()));
        }
        if !self.lmin.is_positive() || self.lmax < self.lmin {
            return Err(Error::InvalidSystem(format!(
                "packet sizes must satisfy 0 < lmin <= lmax, got lmin = {}, lmax = {}",
                self.lmin, self.lmax
            )));
        }
        Ok(())
    }
}

/// Flows sharing a round-robin scheduler that receives the aggregate strict
/// service curve `aggregate`, whose slope never exceeds `lipschitz`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    flows: Vec<FlowSpec>,
    aggregate: Curve,
    lipschitz: Rat,
}

impl SystemSpec {
    pub fn new(flows: Vec<FlowSpec>, aggregate: Curve, lipschitz: Rat) -> Result<SystemSpec> {
        if flows.is_empty() {
            return Err(Error::InvalidSystem("at least one flow is required".into()));
        }
        for f in &flows {
            f.validate()?;
        }
        if !lipschitz.is_positive() {
            return Err(Error::InvalidSystem(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        if let Some(x) = aggregate.first_jump() {
            return Err(Error::InvalidSystem(format!(
                "aggregate curve must be continuous (jump at {x})"
            )));
        }
        if !aggregate.value_at(Rat::ZERO).is_zero() {
            return Err(Error::InvalidSystem("aggregate curve must be 0 at 0".into()));
        }
        if !aggregate.increment().is_positive() {
            return Err(Error::InvalidSystem("aggregate curve must be unbounded".into()));
        }
        if aggregate.max_slope() > lipschitz {
            return Err(Error::InvalidSystem(format!(
                "aggregate slope {} exceeds the Lipschitz constant {lipschitz}",
                aggregate.max_slope()
            )));
        }
        if let Some((s, t)) = aggregate.check_superadditive(HorizonSpec::default()).witness {
            return Err(Error::InvalidSystem(format!(
                "aggregate curve is not super-additive at s = {s}, t = {t}"
            )));
        }
        Ok(SystemSpec {
            flows,
            aggregate,
            lipschitz,
        })
    }

    /// Aggregate `λ_1` with `K = 1`: curves in the unit-rate domain.
    pub fn unit_rate(flows: Vec<FlowSpec>) -> Result<SystemSpec> {
        SystemSpec::new(flows, Curve::unit_rate(), Rat::ONE)
    }

    /// Transmission line of constant rate `c`.
    pub fn constant_rate(flows: Vec<FlowSpec>, c: Rat) -> Result<SystemSpec> {
        SystemSpec::new(flows, Curve::linear(c), c)
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }

    pub fn flow(&self, i: usize) -> Result<&FlowSpec> {
        self.flows.get(i).ok_or(Error::FlowIndex {
            index: i,
            flows: self.flows.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.flows.len()
    }

    pub fn aggregate(&self) -> &Curve {
        &self.aggregate
    }

    pub fn lipschitz(&self) -> Rat {
        self.lipschitz
    }

    /// Same flows with another aggregate curve.
    pub fn with_aggregate(&self, aggregate: Curve, lipschitz: Rat) -> Result<SystemSpec> {
        SystemSpec::new(self.flows.clone(), aggregate, lipschitz)
    }

    fn others(&self, i: usize) -> impl Iterator<Item = (usize, &FlowSpec)> {
        self.flows.iter().enumerate().filter(move |&(j, _)| j != i)
    }

    /// Maximum number of emission opportunities of flow `j` while flow `i`
    /// completes `x` services.
    pub fn phi(&self, i: usize, j: usize, x: u64) -> Result<u64> {
        let wi = self.flow(i)?.weight;
        let wj = self.flow(j)?.weight;
        if i == j {
            return Err(Error::SameFlow(i));
        }
        Ok(phi_weights(wi, wj, x))
    }

    /// WRR counterpart of [`SystemSpec::phi`]: `(1 + ⌊x / w_i⌋) w_j`.
    pub fn phi_wrr(&self, i: usize, j: usize, x: u64) -> Result<u64> {
        let wi = self.flow(i)?.weight;
        let wj = self.flow(j)?.weight;
        if i == j {
            return Err(Error::SameFlow(i));
        }
        Ok((1 + x / wi) * wj)
    }

    /// Aggregate work that may be needed before flow `i` gets `x` bits through.
    pub fn psi(&self, i: usize, x: Rat) -> Result<Rat> {
        self.psi_with(i, x, phi_weights)
    }

    pub fn psi_wrr(&self, i: usize, x: Rat) -> Result<Rat> {
        self.psi_with(i, x, |wi, wj, p| (1 + p / wi) * wj)
    }

    fn psi_with(&self, i: usize, x: Rat, phi: impl Fn(u64, u64, u64) -> u64) -> Result<Rat> {
        let fi = *self.flow(i)?;
        if x.is_negative() {
            return Err(Error::NegativeAbscissa(x));
        }
        let p = (x / fi.lmin).floor_int() as u64;
        let others: Rat = self
            .others(i)
            .map(|(_, f)| Rat::from(phi(fi.weight, f.weight, p)) * f.lmax)
            .sum();
        Ok(x + others)
    }

    /// `L_tot = w_i lmin_i + Σ_{j≠i} w_j lmax_j`.
    pub fn l_tot(&self, i: usize) -> Result<Rat> {
        let (q, big_q) = self.q_q(i)?;
        Ok(q + big_q)
    }

    /// `(q_i, Q_i) = (w_i lmin_i, Σ_{j≠i} w_j lmax_j)`.
    pub fn q_q(&self, i: usize) -> Result<(Rat, Rat)> {
        let fi = self.flow(i)?;
        let q = Rat::from(fi.weight) * fi.lmin;
        let big_q = self.others(i).map(|(_, f)| Rat::from(f.weight) * f.lmax).sum();
        Ok((q, big_q))
    }

    /// `ψ_i` as a curve: slope 1 between jumps at multiples of `lmin_i`,
    /// repeating every `w_i lmin_i` with increment `L_tot`.
    pub fn psi_curve(&self, i: usize) -> Result<Curve> {
        self.psi_curve_with(i, false)
    }

    pub fn psi_wrr_curve(&self, i: usize) -> Result<Curve> {
        self.psi_curve_with(i, true)
    }

    fn psi_curve_with(&self, i: usize, wrr: bool) -> Result<Curve> {
        let fi = *self.flow(i)?;
        let bps = (0..fi.weight)
            .map(|k| {
                let x = Rat::from(k) * fi.lmin;
                let y = if wrr { self.psi_wrr(i, x) } else { self.psi(i, x) }?;
                Ok(Breakpoint::cont(x, y, Rat::ONE))
            })
            .collect::<Result<Vec<_>>>()?;
        Curve::new(bps, Rat::ZERO, Rat::from(fi.weight) * fi.lmin, self.l_tot(i)?)
    }

    /// `γ_i = ψ_i^↓`, the unit-rate service curve of flow `i`.
    pub fn gamma(&self, i: usize) -> Result<Curve> {
        self.psi_curve(i)?.lower_pseudo_inverse()
    }

    /// `γ_i` built as `λ_1 ⊗ U_i` with
    /// `U_i(x) = Σ_k ν_{lmin_i, L_tot}([x − ψ_i(k lmin_i)]^+)`.
    pub fn gamma_via_u(&self, i: usize) -> Result<Curve> {
        let fi = *self.flow(i)?;
        let stair = Curve::stair(fi.lmin, self.l_tot(i)?);
        let mut u: Option<Curve> = None;
        for k in 0..fi.weight {
            let term = stair.delay(self.psi(i, Rat::from(k) * fi.lmin)?);
            u = Some(match u {
                None => term,
                Some(acc) => acc.add(&term),
            });
        }
        Ok(u.expect("weight >= 1").convolve_unit_rate())
    }

    /// IWRR strict service curve `β_i = γ_i ∘ β`.
    pub fn iwrr_service_curve(&self, i: usize) -> Result<Curve> {
        Curve::compose(&self.gamma(i)?, &self.aggregate)
    }

    /// WRR strict service curve `(λ_1 ⊗ ν_{q_i, L_tot})([β − Q_i]^+)`.
    pub fn wrr_service_curve(&self, i: usize) -> Result<Curve> {
        let (q, big_q) = self.q_q(i)?;
        let outer = Curve::stair(q, q + big_q).convolve_unit_rate();
        Curve::compose(&outer, &self.aggregate.minus_clipped(big_q))
    }

    /// Same curve as [`SystemSpec::wrr_service_curve`], built as `ψ'_i^↓ ∘ β`.
    pub fn wrr_service_curve_via_psi(&self, i: usize) -> Result<Curve> {
        let gamma = self.psi_wrr_curve(i)?.lower_pseudo_inverse()?;
        Curve::compose(&gamma, &self.aggregate)
    }

    /// Service curve of flow `i` under the given policy.
    pub fn service_curve(&self, i: usize, policy: crate::sim::Policy) -> Result<Curve> {
        match policy {
            crate::sim::Policy::Iwrr => self.iwrr_service_curve(i),
            crate::sim::Policy::Wrr => self.wrr_service_curve(i),
        }
    }

    /// Non-dominated rate-latency lower bounds of `γ_i`.
    pub fn rate_latency_family(&self, i: usize) -> Result<RateLatencyFamily> {
        let fi = *self.flow(i)?;
        let (q, big_q) = self.q_q(i)?;
        let r_star = q / (q + big_q);
        let w = fi.weight as usize;
        let psi_at = |k: usize| self.psi(i, Rat::from(k) * fi.lmin);
        let mut rks = Vec::with_capacity(w);
        for k in 0..w {
            rks.push(if k + 1 == w {
                Rat::ONE
            } else {
                fi.lmin / (psi_at(k + 1)? - psi_at(k)?)
            });
        }
        let k_star = rks.iter().position(|&r| r >= r_star).expect("last rate is 1 >= r*");
        let mut members: Vec<FamilyMember> = Vec::with_capacity(k_star + 1);
        for (k, &rk) in rks.iter().enumerate().take(k_star + 1) {
            let rate = rk.min(r_star);
            let latency = psi_at(k)? - Rat::from(k) * fi.lmin / rate;
            if members.last().is_some_and(|m| m.rate == rate && m.latency == latency) {
                continue;
            }
            members.push(FamilyMember { k, rate, latency });
        }
        Ok(RateLatencyFamily {
            r_star,
            rks,
            k_star,
            members,
        })
    }
}

fn phi_weights(wi: u64, wj: u64, x: u64) -> u64 {
    (x / wi) * wj + wj.saturating_sub(wi) + (x % wi + 1).min(wj)
}

impl Curve {
    /// `[f − k]^+` for a continuous `f`.
    pub fn minus_clipped(&self, k: Rat) -> Curve {
        assert!(!k.is_negative());
        if k.is_zero() {
            return self.clone();
        }
        let Some(cut) = self.upper_inverse_at(k) else {
            return Curve::zero();
        };
        let transient = self.transient().max(cut);
        let end = transient + self.period();
        let mut bps = Vec::new();
        if cut.is_positive() {
            bps.push(Breakpoint::cont(Rat::ZERO, Rat::ZERO, Rat::ZERO));
        }
        let value = (self.value_at(cut) - k).max(Rat::ZERO);
        bps.push(Breakpoint::new(
            cut,
            value,
            self.right_at(cut) - k,
            self.slope_right(cut),
        ));
        bps.extend(
            self.breakpoints_in(cut, end)
                .into_iter()
                .map(|b| Breakpoint::new(b.x, b.value - k, b.right - k, b.slope)),
        );
        Curve::fold(bps, transient, self.period(), self.increment())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyMember {
    /// Index `k` the member was derived from.
    pub k: usize,
    pub rate: Rat,
    pub latency: Rat,
}

impl FamilyMember {
    pub fn curve(&self) -> Curve {
        Curve::rate_latency(self.rate, self.latency)
    }
}

/// Rate-latency curves below `γ_i` that no other rate-latency curve below
/// `γ_i` improves in both rate and latency. Rates and latencies live in the
/// unit-rate domain of `γ_i`; see [`RateLatencyFamily::for_rate_latency_aggregate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateLatencyFamily {
    /// Long-term rate `q_i / L_tot`.
    pub r_star: Rat,
    /// `r_k` for `k = 0..w_i`.
    pub rks: Vec<Rat>,
    pub k_star: usize,
    /// Distinct members for `k = 0..=k_star`, in increasing `k`.
    pub members: Vec<FamilyMember>,
}

impl RateLatencyFamily {
    pub fn min_latency(&self) -> FamilyMember {
        self.members[0]
    }

    pub fn max_rate(&self) -> FamilyMember {
        *self.members.last().expect("family is never empty")
    }

    /// Maximum of all members, a convex lower bound of `γ_i`.
    pub fn envelope(&self) -> Curve {
        let curves: Vec<Curve> = self.members.iter().map(FamilyMember::curve).collect();
        crate::curve::max_of(&curves).expect("family is never empty")
    }

    /// Members for an aggregate `β_{c, T0}`: `γ_i(β(t)) >= r c [t − T0 − T / c]^+`.
    pub fn for_rate_latency_aggregate(&self, c: Rat, t0: Rat) -> Vec<FamilyMember> {
        self.members
            .iter()
            .map(|m| FamilyMember {
                k: m.k,
                rate: m.rate * c,
                latency: t0 + m.latency / c,
            })
            .collect()
    }

    /// CSV with columns `k,r_num,r_den,T_num,T_den`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "r_num", "r_den", "T_num", "T_den"])?;
        for m in &self.members {
            w.write_record([
                m.k.to_string(),
                m.rate.numer().to_string(),
                m.rate.denom().to_string(),
                m.latency.numer().to_string(),
                m.latency.denom().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
