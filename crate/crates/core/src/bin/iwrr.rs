//! Command-line front end: service curves, delay bounds, simulation,
//! tightness replays and the delay-bound experiments.
//!
//! Exit codes: 0 success, 2 invalid input, 3 math-domain failure (for
//! instance an unbounded delay), 4 internal failure.

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use iwrr::config::{AggregateSpec, ConfigFile, ScenarioFile};
use iwrr::curve::csv_io;
use iwrr::experiments::{run_fixed_experiment, run_randomized_experiment, BurstDraw, DelayReport, ExperimentConfig};
use iwrr::sim::{self, Policy};
use iwrr::{Curve, Error, Rat, Result};

#[derive(Parser)]
#[command(
    name = "iwrr",
    version,
    about = "Strict service curves and delay bounds for IWRR and WRR"
)]
struct Cli {
    /// Print machine-readable JSON reports instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export the service curve (or rate-latency family) of one flow.
    Curve(CurveArgs),
    /// Delay bound of a token-bucket flow.
    Delay(DelayArgs),
    /// Simulate a scenario file and check every flow against its service curve.
    Simulate(SimulateArgs),
    /// Replay the trajectory that attains a service curve value or a delay bound.
    Tightness(TightnessArgs),
    /// Run a delay-bound comparison experiment.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    Iwrr,
    Wrr,
    Family,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Iwrr,
    Wrr,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Iwrr => Policy::Iwrr,
            PolicyArg::Wrr => Policy::Wrr,
        }
    }
}

#[derive(Args)]
struct CurveArgs {
    config: PathBuf,
    /// Flow name or index.
    #[arg(long)]
    flow: String,
    #[arg(long, value_enum, default_value = "iwrr")]
    policy: CurveKind,
    /// Pseudo-periods written after the transient.
    #[arg(long, default_value_t = 3)]
    periods: u32,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the curve as a piecewise aggregate JSON document.
    #[arg(long)]
    aggregate_out: Option<PathBuf>,
}

#[derive(Args)]
struct DelayArgs {
    config: PathBuf,
    #[arg(long)]
    flow: String,
    /// Token bucket `rate_bps,burst_bits`.
    #[arg(long)]
    arrival: String,
    /// Round the arrival curve up to multiples of this many bits.
    #[arg(long)]
    packetize: Option<Rat>,
    #[arg(long, value_enum, default_value = "iwrr")]
    policy: PolicyArg,
}

#[derive(Args)]
struct SimulateArgs {
    scenario: PathBuf,
    /// Trace CSV destination.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct TightnessArgs {
    config: PathBuf,
    #[arg(long)]
    flow: String,
    /// Interval length whose service curve value is replayed.
    #[arg(long, conflicts_with = "delay", required_unless_present = "delay")]
    tau: Option<Rat>,
    /// Token bucket `rate_bps,burst_bits` (packetized to the flow's packet
    /// length) whose delay bound is replayed.
    #[arg(long)]
    delay: Option<String>,
    /// Offset of the flow's burst, in bits of aggregate service (delay replay).
    #[arg(long)]
    epsilon: Option<Rat>,
    #[arg(long, value_enum, default_value = "iwrr")]
    policy: PolicyArg,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Eight flows with fixed weights and packet length.
    #[arg(long, conflicts_with = "fig7", required_unless_present = "fig7")]
    fig6: bool,
    /// Randomized weights and packet lengths.
    #[arg(long)]
    fig7: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Bursts per flow and system.
    #[arg(long = "N", default_value_t = 1000)]
    samples: usize,
    /// Number of random systems.
    #[arg(long = "M", default_value_t = 200)]
    systems: usize,
    /// Token-bucket rate of every flow.
    #[arg(long, default_value = "500000")]
    rate_bps: Rat,
    /// Draw whole numbers of packets for the bursts.
    #[arg(long)]
    integer_bursts: bool,
    /// Per-sample CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-flow quartile CSV destination.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = if e.is_domain() {
            3
        } else {
            match e {
                Error::Config(_)
                | Error::Parse(_)
                | Error::InvalidSystem(_)
                | Error::InvalidCurve(_)
                | Error::InvalidScenario(_)
                | Error::FlowIndex { .. }
                | Error::Io(_) => 2,
                _ => 4,
            }
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// `p/q (float)`.
fn dual(v: Rat) -> String {
    if v.is_integer() {
        v.to_string()
    } else {
        format!("{v} (~{})", v.sig12())
    }
}

fn dual_json(v: Rat) -> Value {
    json!({ "exact": v.to_string(), "approx": v.to_f64() })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_bucket(spec: &str) -> std::result::Result<(Rat, Rat), Failure> {
    let (r, b) = spec
        .split_once(',')
        .ok_or_else(|| config_error(format!("expected rate,burst, got {spec:?}")))?;
    Ok((r.trim().parse()?, b.trim().parse()?))
}

fn emit(json_mode: bool, report: Value, text: String) {
    if json_mode {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{text}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Curve(a) => cmd_curve(a, cli.json),
        Command::Delay(a) => cmd_delay(a, cli.json),
        Command::Simulate(a) => cmd_simulate(a, cli.json),
        Command::Tightness(a) => cmd_tightness(a, cli.json),
        Command::Experiment(a) => cmd_experiment(a, cli.json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn cmd_curve(a: CurveArgs, json_mode: bool) -> Outcome {
    let cfg = ConfigFile::load(&a.config)?;
    let sys = cfg.system()?;
    let i = cfg.flow_index(&a.flow)?;
    let policy = match a.policy {
        CurveKind::Family => return curve_family(&cfg, &sys, i, &a, json_mode),
        CurveKind::Iwrr => Policy::Iwrr,
        CurveKind::Wrr => Policy::Wrr,
    };
    let curve = sys.service_curve(i, policy)?;
    let horizon = curve.transient() + Rat::from(a.periods) * curve.period();
    match &a.out {
        Some(p) => csv_io::write_csv(&curve, create(p)?, horizon)?,
        None if !json_mode => csv_io::write_csv(&curve, io::stdout().lock(), horizon)?,
        None => {}
    }
    if let Some(p) = &a.aggregate_out {
        let spec = AggregateSpec::from_curve(&curve)?;
        serde_json::to_writer_pretty(create(p)?, &spec).map_err(|e| config_error(e.to_string()))?;
    }
    let report = json!({
        "flow": cfg.flow_label(i),
        "policy": policy.to_string(),
        "transient": dual_json(curve.transient()),
        "period": dual_json(curve.period()),
        "increment": dual_json(curve.increment()),
        "breakpoints": curve.breakpoints().iter().map(|b| json!({
            "x": b.x.to_string(), "value": b.value.to_string(), "right": b.right.to_string(), "slope": b.slope.to_string()
        })).collect::<Vec<_>>(),
    });
    if json_mode || a.out.is_some() {
        let text = format!(
            "{policy} service curve of flow {}: transient {}, then +{} every {}\n",
            cfg.flow_label(i),
            dual(curve.transient()),
            dual(curve.increment()),
            dual(curve.period())
        );
        emit(json_mode, report, text);
    }
    Ok(())
}

fn curve_family(
    cfg: &ConfigFile,
    sys: &iwrr::service::SystemSpec,
    i: usize,
    a: &CurveArgs,
    json_mode: bool,
) -> Outcome {
    let family = sys.rate_latency_family(i)?;
    match &a.out {
        Some(p) => family.write_csv(create(p)?)?,
        None if !json_mode => family.write_csv(io::stdout().lock())?,
        None => {}
    }
    let timed = match &cfg.aggregate {
        AggregateSpec::RateLatency { rate_bps, latency_s } => {
            Some(family.for_rate_latency_aggregate(*rate_bps, *latency_s))
        }
        AggregateSpec::UnitRate => Some(family.members.clone()),
        AggregateSpec::Piecewise { .. } => None,
    };
    let member_json = |ms: &[iwrr::service::FamilyMember]| {
        ms.iter()
            .map(|m| json!({ "k": m.k, "rate": dual_json(m.rate), "latency": dual_json(m.latency) }))
            .collect::<Vec<_>>()
    };
    let report = json!({
        "flow": cfg.flow_label(i),
        "r_star": dual_json(family.r_star),
        "k_star": family.k_star,
        "members": member_json(&family.members),
        "members_in_time": timed.as_deref().map(member_json),
    });
    if json_mode || a.out.is_some() {
        let mut text = format!(
            "rate-latency family of flow {}: r* = {}, k* = {}, {} member(s)\n",
            cfg.flow_label(i),
            dual(family.r_star),
            family.k_star,
            family.members.len()
        );
        for m in timed.as_deref().unwrap_or(&family.members) {
            text += &format!("  k = {}: rate {}, latency {}\n", m.k, dual(m.rate), dual(m.latency));
        }
        emit(json_mode, report, text);
    }
    Ok(())
}

fn cmd_delay(a: DelayArgs, json_mode: bool) -> Outcome {
    let cfg = ConfigFile::load(&a.config)?;
    let sys = cfg.system()?;
    let i = cfg.flow_index(&a.flow)?;
    let (rate, burst) = parse_bucket(&a.arrival)?;
    if rate.is_negative() || burst.is_negative() {
        return Err(config_error("arrival rate and burst must be non-negative"));
    }
    let mut alpha = Curve::token_bucket(rate, burst);
    if let Some(l) = a.packetize {
        if !l.is_positive() {
            return Err(config_error("packet length must be positive"));
        }
        alpha = alpha.packetize_ceil(l);
    }
    let policy = Policy::from(a.policy);
    let bound = iwrr::experiments::delay_bound(&sys, i, &alpha, policy)?;
    let report = json!({ "flow": cfg.flow_label(i), "policy": policy.to_string(), "delay_s": dual_json(bound) });
    emit(
        json_mode,
        report,
        format!(
            "{policy} delay bound of flow {}: {} s\n",
            cfg.flow_label(i),
            dual(bound)
        ),
    );
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, json_mode: bool) -> Outcome {
    let file = ScenarioFile::load(&a.scenario)?;
    let scenario = file.scenario()?;
    let trace = sim::run(&scenario)?;
    if let Some(p) = &a.trace_out {
        trace.write_csv(create(p)?)?;
    }
    let sys = &scenario.system;
    let mut flows = Vec::new();
    let mut text = format!(
        "{} packets sent under {}{}\n",
        trace.records.len(),
        scenario.policy,
        trace
            .valid_until
            .map_or(String::new(), |t| format!(", trace truncated at {}", dual(t)))
    );
    let mut violations = 0;
    for i in 0..sys.n() {
        let curve = sys.service_curve(i, scenario.policy)?;
        let check = sim::verify_strict_service(&trace, i, &curve);
        let delay = sim::max_packet_delay(&trace, i);
        violations += check.violation_count;
        text += &format!(
            "flow {}: {} packets, max delay {}{} s, service curve {} ({} pairs checked)\n",
            file.system.flow_label(i),
            trace.flow_records(i).count(),
            if delay.unfinished { ">= " } else { "" },
            dual(delay.max),
            if check.holds() { "holds" } else { "VIOLATED" },
            check.pairs_checked
        );
        flows.push(json!({
            "flow": file.system.flow_label(i),
            "packets": trace.flow_records(i).count(),
            "max_delay_s": dual_json(delay.max),
            "delay_is_lower_bound": delay.unfinished,
            "service_curve_holds": check.holds(),
            "violations": check.violations.iter().map(|(s, t)| json!([s.to_string(), t.to_string()])).collect::<Vec<_>>(),
        }));
    }
    let report = json!({ "policy": scenario.policy.to_string(), "packets": trace.records.len(), "flows": flows });
    emit(json_mode, report, text);
    if violations > 0 {
        return Err(Failure {
            code: 4,
            message: format!("{violations} strict-service violations"),
        });
    }
    Ok(())
}

fn cmd_tightness(a: TightnessArgs, json_mode: bool) -> Outcome {
    let cfg = ConfigFile::load(&a.config)?;
    let sys = cfg.system()?;
    let i = cfg.flow_index(&a.flow)?;
    let policy = Policy::from(a.policy);
    let label = cfg.flow_label(i);
    let (report, text, matched, trace) = if let Some(tau) = a.tau {
        let plan = match policy {
            Policy::Iwrr => sim::build_tightness_scenario(&sys, i, tau, None)?,
            Policy::Wrr => sim::build_wrr_tightness_scenario(&sys, i, tau, None)?,
        };
        let trace = sim::run(&plan.scenario)?;
        let measured = plan.measured(&trace);
        let ok = measured == plan.expected;
        let text = format!(
            "flow {label}, {policy}, tau = {}: s = {}, measured {} vs curve {}\nmeasured == beta_i(tau): {}\n",
            dual(tau),
            dual(plan.s),
            dual(measured),
            dual(plan.expected),
            if ok { "exact match" } else { "MISMATCH" }
        );
        let report = json!({
            "flow": label, "policy": policy.to_string(), "tau": dual_json(tau), "s": dual_json(plan.s),
            "measured": dual_json(measured), "expected": dual_json(plan.expected), "exact_match": ok,
        });
        (report, text, ok, trace)
    } else {
        let spec = a.delay.as_deref().expect("clap requires --tau or --delay");
        let (rate, burst) = parse_bucket(spec)?;
        let l = sys.flow(i)?.lmax;
        let alpha = Curve::token_bucket(rate, burst).packetize_ceil(l);
        let epsilon = a.epsilon.unwrap_or(l / Rat::int(64));
        let plan = sim::build_delay_tightness_scenario(&sys, i, &alpha, policy, epsilon)?;
        let trace = sim::run(&plan.scenario)?;
        let measured = sim::max_packet_delay(&trace, plan.flow);
        let ok = !measured.unfinished && measured.max == plan.expected_delay();
        let text = format!(
            "flow {label}, {policy}: bound {} s, offset {} s, measured worst delay {} s\nmeasured == bound - offset: {}\n",
            dual(plan.bound),
            dual(plan.delta),
            dual(measured.max),
            if ok { "exact match" } else { "MISMATCH" }
        );
        let report = json!({
            "flow": label, "policy": policy.to_string(), "bound": dual_json(plan.bound), "offset": dual_json(plan.delta),
            "measured": dual_json(measured.max), "exact_match": ok,
        });
        (report, text, ok, trace)
    };
    if let Some(p) = &a.trace_out {
        trace.write_csv(create(p)?)?;
    }
    emit(json_mode, report, text);
    if !matched {
        return Err(Failure {
            code: 4,
            message: "replayed trajectory does not reach the bound".into(),
        });
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs, json_mode: bool) -> Outcome {
    let base = if a.fig7 {
        ExperimentConfig::randomized_default()
    } else {
        ExperimentConfig::fixed_default()
    };
    let cfg = ExperimentConfig {
        seed: a.seed,
        samples: a.samples,
        systems: a.systems,
        arrival_rate_bps: a.rate_bps,
        burst_draw: if a.integer_bursts {
            BurstDraw::Integer
        } else {
            BurstDraw::Continuous
        },
        ..base
    };
    let report: DelayReport = if a.fig7 {
        run_randomized_experiment(&cfg)?
    } else {
        run_fixed_experiment(&cfg)?
    };
    if let Some(p) = &a.out {
        report.write_csv(create(p)?)?;
    }
    if let Some(p) = &a.summary_out {
        report.write_summary_csv(create(p)?)?;
    }
    let mut text = format!(
        "{} samples, {} systems redrawn as unstable\n",
        report.samples.len(),
        report.redrawn_systems
    );
    text += "rank  WRR median ms  improvement median ms  relative improvement median\n";
    for f in &report.summary {
        text += &format!(
            "{:>4}  {:>13.2}  {:>21.2}  {:>26.1}%\n",
            f.flow_rank,
            f.wrr_ms.median,
            f.diff_ms.median,
            100.0 * f.diff_norm.median
        );
    }
    let summary: Vec<Value> = report
        .summary
        .iter()
        .map(|f| json!({ "flow_rank": f.flow_rank, "count": f.count, "wrr_ms": f.wrr_ms, "diff_ms": f.diff_ms, "diff_norm": f.diff_norm }))
        .collect();
    emit(
        json_mode,
        json!({ "samples": report.samples.len(), "redrawn_systems": report.redrawn_systems, "summary": summary }),
        text,
    );
    Ok(())
}
