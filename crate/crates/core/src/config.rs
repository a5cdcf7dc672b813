//! JSON system and scenario files.
//!
//! Every number may be a JSON number or a string such as `"3/7"`; decimals
//! are read exactly. Units are in the field names: bits, bits per second,
//! seconds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::service::{FlowSpec, SystemSpec};
use crate::sim::{PacketArrival, Policy, Scenario, ServiceModel};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowEntry {
    #[serde(default)]
    pub name: Option<String>,
    pub weight: u64,
    pub lmin_bits: Rat,
    pub lmax_bits: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregateSpec {
    RateLatency {
        rate_bps: Rat,
        latency_s: Rat,
    },
    UnitRate,
    /// Continuous curve through `points`; the last `period = [d, c]` of the
    /// list repeats, each repetition adding `c`.
    Piecewise {
        points: Vec<(Rat, Rat)>,
        period: (Rat, Rat),
    },
}

impl AggregateSpec {
    pub fn curve(&self) -> Result<Curve> {
        match self {
            AggregateSpec::RateLatency { rate_bps, latency_s } => {
                if !rate_bps.is_positive() || latency_s.is_negative() {
                    return Err(Error::Config(
                        "rate_latency needs rate_bps > 0 and latency_s >= 0".into(),
                    ));
                }
                Ok(Curve::rate_latency(*rate_bps, *latency_s))
            }
            AggregateSpec::UnitRate => Ok(Curve::unit_rate()),
            AggregateSpec::Piecewise { points, period: (d, c) } => {
                if !d.is_positive() || c.is_negative() {
                    return Err(Error::Config("piecewise period needs d > 0 and c >= 0".into()));
                }
                match points.first() {
                    Some((x, _)) if x.is_zero() => {}
                    _ => return Err(Error::Config("piecewise points must start at t = 0".into())),
                }
                Curve::from_points(points, *d, *c).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }

    /// Piecewise description of a continuous curve: its breakpoints over the
    /// transient and one period.
    pub fn from_curve(curve: &Curve) -> Result<AggregateSpec> {
        if let Some(x) = curve.first_jump() {
            return Err(Error::Precondition(format!(
                "only continuous curves can be exported as piecewise (jump at {x})"
            )));
        }
        let end = curve.period_end();
        let mut points: Vec<(Rat, Rat)> = curve
            .breakpoints_until(end)
            .iter()
            .filter(|b| b.x < end)
            .map(|b| (b.x, b.value))
            .collect();
        points.push((end, curve.value_at(end)));
        Ok(AggregateSpec::Piecewise {
            points,
            period: (curve.period(), curve.increment()),
        })
    }
}

/// A system file: flows, aggregate strict service curve and its Lipschitz constant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub flows: Vec<FlowEntry>,
    pub aggregate: AggregateSpec,
    /// Defaults to the largest slope of the aggregate.
    #[serde(default)]
    pub lipschitz_bps: Option<Rat>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<ConfigFile> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ConfigFile> {
        ConfigFile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn system(&self) -> Result<SystemSpec> {
        let flows = self
            .flows
            .iter()
            .enumerate()
            .map(|(k, f)| {
                FlowSpec::new(f.weight, f.lmin_bits, f.lmax_bits).map_err(|e| Error::Config(format!("flow {k}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregate = self.aggregate.curve()?;
        let k = self.lipschitz_bps.unwrap_or_else(|| aggregate.max_slope());
        SystemSpec::new(flows, aggregate, k).map_err(|e| Error::Config(e.to_string()))
    }

    /// Index of the flow called `name`, or `name` read as an index.
    pub fn flow_index(&self, name: &str) -> Result<usize> {
        if let Some(k) = self.flows.iter().position(|f| f.name.as_deref() == Some(name)) {
            return Ok(k);
        }
        match name.parse::<usize>() {
            Ok(k) if k < self.flows.len() => Ok(k),
            _ => Err(Error::Config(format!("no flow named or numbered {name:?}"))),
        }
    }

    pub fn flow_label(&self, i: usize) -> String {
        self.flows[i].name.clone().unwrap_or_else(|| i.to_string())
    }
}

/// A flow given by position or by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlowRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalEntry {
    pub flow: FlowRef,
    pub time_s: Rat,
    pub size_bits: Rat,
    /// Number of identical packets; defaults to 1.
    #[serde(default)]
    pub count: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceSpec {
    /// Work-conserving line of the given rate.
    ConstantRate { rate_bps: Rat },
    /// Cumulative service given by the system's aggregate curve from time 0;
    /// the subsystem must stay backlogged until the horizon.
    ScriptedBusy,
}

/// A simulation file: a system plus traffic, service model and horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub system: ConfigFile,
    pub policy: Policy,
    pub horizon_s: Rat,
    pub service: ServiceSpec,
    pub arrivals: Vec<ArrivalEntry>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<ScenarioFile> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<ScenarioFile> {
        ScenarioFile::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let system = self.system.system()?;
        let mut arrivals = Vec::new();
        for a in &self.arrivals {
            let flow = match &a.flow {
                FlowRef::Index(k) => *k,
                FlowRef::Name(n) => self.system.flow_index(n)?,
            };
            let packet = PacketArrival {
                flow,
                time: a.time_s,
                size: a.size_bits,
            };
            arrivals.extend(std::iter::repeat_n(packet, a.count.unwrap_or(1) as usize));
        }
        arrivals.sort_by_key(|a| a.time);
        let service = match &self.service {
            ServiceSpec::ConstantRate { rate_bps } => ServiceModel::ConstantRate(*rate_bps),
            ServiceSpec::ScriptedBusy => ServiceModel::ScriptedBusy {
                profile: system.aggregate().clone(),
                lipschitz: system.lipschitz(),
            },
        };
        let scenario = Scenario {
            system,
            arrivals,
            service,
            horizon: self.horizon_s,
            policy: self.policy,
        };
        scenario.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    const TOY: &str = r#"{
        "flows": [
            {"name": "a", "weight": 2, "lmin_bits": 1, "lmax_bits": 1},
            {"name": "b", "weight": 3, "lmin_bits": "1", "lmax_bits": 1.0}
        ],
        "aggregate": {"type": "unit_rate"},
        "lipschitz_bps": 1
    }"#;

    #[test]
    fn toy_config() {
        let cfg = ConfigFile::from_json(TOY).unwrap();
        let sys = cfg.system().unwrap();
        assert_eq!(sys.n(), 2);
        assert_eq!(cfg.flow_index("b").unwrap(), 1);
        assert_eq!(cfg.flow_index("0").unwrap(), 0);
        assert!(cfg.flow_index("c").is_err());
        assert!(sys.gamma(0).unwrap().same_function(
            &crate::service::SystemSpec::unit_rate(sys.flows().to_vec())
                .unwrap()
                .gamma(0)
                .unwrap()
        ));
    }

    #[test]
    fn exact_numbers() {
        let cfg = ConfigFile::from_json(
            r#"{"flows": [{"weight": 1, "lmin_bits": 0.1, "lmax_bits": "7/3"}],
                "aggregate": {"type": "rate_latency", "rate_bps": 1e7, "latency_s": 0.000123}}"#,
        )
        .unwrap();
        assert_eq!(cfg.flows[0].lmin_bits, rat(1, 10));
        assert_eq!(cfg.flows[0].lmax_bits, rat(7, 3));
        let sys = cfg.system().unwrap();
        assert_eq!(sys.lipschitz(), Rat::int(10_000_000));
        assert_eq!(
            sys.aggregate().value_at(rat(1, 1000)),
            Rat::int(10_000_000) * rat(877, 1_000_000)
        );
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"flows": [], "aggregate": {"type": "unit_rate"}}"#,
            r#"{"flows": [{"weight": 0, "lmin_bits": 1, "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}}"#,
            r#"{"flows": [{"weight": 1, "lmin_bits": 2, "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}}"#,
            r#"{"flows": [{"weight": 1, "lmin_bits": 1, "lmax_bits": 1}], "aggregate": {"type": "sine"}}"#,
            r#"{"flows": [{"weight": 1.5, "lmin_bits": 1, "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}}"#,
            r#"{"flows": [{"weight": 1, "lmin_bits": "x", "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}}"#,
            r#"{"flows": [{"weight": 1, "lmin_bits": 1, "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}, "extra": 1}"#,
            r#"{"flows": [{"weight": 1, "lmin_bits": 1, "lmax_bits": 1}], "aggregate": {"type": "unit_rate"}, "lipschitz_bps": "1/2"}"#,
        ] {
            let err = ConfigFile::from_json(bad).and_then(|c| c.system()).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{bad}: {err}");
        }
    }

    #[test]
    fn piecewise_round_trip() {
        let sys = ConfigFile::from_json(TOY).unwrap().system().unwrap();
        let gamma = sys.iwrr_service_curve(1).unwrap();
        let spec = AggregateSpec::from_curve(&gamma).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: AggregateSpec = serde_json::from_str(&text).unwrap();
        let curve = back.curve().unwrap();
        for k in 0..200 {
            let x = rat(k * 7, 13);
            assert_eq!(curve.value_at(x), gamma.value_at(x));
        }
    }

    #[test]
    fn scenario_file() {
        let text = r#"{
            "flows": [{"name": "a", "weight": 2, "lmin_bits": 1, "lmax_bits": 1},
                      {"name": "b", "weight": 3, "lmin_bits": 1, "lmax_bits": 1}],
            "aggregate": {"type": "unit_rate"},
            "policy": "iwrr",
            "horizon_s": 100,
            "service": {"type": "constant_rate", "rate_bps": 1},
            "arrivals": [{"flow": "b", "time_s": 0, "size_bits": 1, "count": 3},
                         {"flow": 0, "time_s": "1/2", "size_bits": 1}]
        }"#;
        let sc = ScenarioFile::from_json(text).unwrap().scenario().unwrap();
        assert_eq!(sc.arrivals.len(), 4);
        assert_eq!(sc.arrivals[3].flow, 0);
        let bad = text.replace("\"size_bits\": 1}]", "\"size_bits\": 2}]");
        assert!(ScenarioFile::from_json(&bad).unwrap().scenario().is_err());
    }
}
