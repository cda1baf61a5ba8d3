//! Deterministic device + battery + workload simulator.
//!
//! Stands in for an instrumented mobile runtime: given operator workload
//! specs, a battery, and noise parameters, it produces a [`TraceLog`] (polls
//! plus SoC drop events) together with a [`GroundTruth`] ledger of planted
//! powers and per-interval energy, which only tests and experiments consume.
//!
//! Power is piecewise constant (it changes only at schedule/state boundaries
//! and noise ticks), so integration is event-driven and exact rather than
//! fixed-step.

mod scenario;
mod truth;

pub use scenario::{make_scenario, Scenario};
pub use truth::{parse_truth, write_truth, TruthError};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{ActiveSet, DeviceSpec, OperatorType, PollRecord, SocRecord, TraceLog};

/// One dynamic-power level an operator instance can run in, chosen per
/// activation with the given probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerState {
    /// Watts added above idle while an instance is active in this state.
    pub dyn_power_w: f64,
    pub probability: f64,
}

/// Activity pattern of an operator. All instances of one operator share the
/// schedule timing; each instance draws its power state independently at
/// every activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Schedule {
    /// Active from t=0 onward; the power state is drawn once.
    AlwaysOn,
    /// Active for the first `active_s` of every `period_s` window.
    Periodic { period_s: f64, active_s: f64 },
    /// Repeating cycle: active `long_s`, idle `short_s`, active `short_s`,
    /// idle `long_s`. Successive discharge intervals therefore see the
    /// operator running for alternating long and short durations.
    Alternating { long_s: f64, short_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(rename = "type")]
    pub op_type: OperatorType,
    pub states: Vec<PowerState>,
    pub schedule: Schedule,
    pub instances: u32,
}

/// Measurement-noise model. All noise is seeded and reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Gaussian jitter (std dev, seconds) applied to each recorded SoC event
    /// time. The true crossing drives the ground-truth ledger.
    pub soc_timing_sigma_s: f64,
    /// Multiplicative Gaussian noise on total power, redrawn once per poll
    /// interval tick.
    pub power_sigma_frac: f64,
    /// Per-poll probability that the poll record is lost.
    pub poll_drop_prob: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn zero(seed: u64) -> Self {
        Self {
            soc_timing_sigma_s: 0.0,
            power_sigma_frac: 0.0,
            poll_drop_prob: 0.0,
            seed,
        }
    }

    /// Default noise level used by the named scenarios: 2% per-tick power
    /// noise, 1 s SoC timing jitter, 1% poll drop.
    pub fn calibrated(seed: u64) -> Self {
        Self {
            soc_timing_sigma_s: 1.0,
            power_sigma_frac: 0.02,
            poll_drop_prob: 0.01,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    /// Joules discharged per 1% SoC drop.
    pub e_per_percent_j: f64,
    /// Constant baseline power with no active operators.
    pub idle_power_w: f64,
    /// Starting state of charge in percent.
    pub initial_soc: u8,
}

/// Exact energy bookkeeping for one discharge interval, measured at the true
/// (pre-jitter) crossing times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalLedger {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    /// Energy consumed while at least one operator instance was active
    /// (includes the idle baseline during those spans).
    pub active_j: f64,
    /// Energy consumed while the device was fully idle.
    pub idle_j: f64,
}

/// Planted parameters and per-interval energy ledger; the oracle side of a
/// simulation, never visible to the modeling pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub battery: BatterySpec,
    /// (operator type, state index) -> planted dynamic power in watts.
    pub operator_powers: BTreeMap<(OperatorType, usize), f64>,
    pub interval_ledger: Vec<IntervalLedger>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopCondition {
    /// Stop once this many complete discharge intervals exist (one more SoC
    /// event than intervals).
    Intervals(u32),
    MaxTimeS(f64),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("operator {op}: state probabilities sum to {sum}, expected 1")]
    BadStateProbabilities { op: String, sum: f64 },
    #[error("operator {op}: {msg}")]
    BadOperator { op: String, msg: String },
    #[error("battery: {0}")]
    BadBattery(String),
    #[error("noise: {0}")]
    BadNoise(String),
    #[error("{0}")]
    BadStop(String),
    #[error("zero-power deadlock: idle power is {0} W, stop condition unreachable")]
    ZeroPowerDeadlock(f64),
    #[error("poll interval must be positive")]
    BadPollInterval,
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
}

/// Instantaneous total power for a given set of active instance states:
/// idle baseline plus the sum of the active instances' dynamic powers.
/// Noise is excluded here; the integrator applies it.
pub fn power_at(active_instance_dyn_w: &[f64], battery: &BatterySpec) -> f64 {
    battery.idle_power_w + active_instance_dyn_w.iter().sum::<f64>()
}

pub fn validate_config(
    operators: &[OperatorSpec],
    battery: &BatterySpec,
    noise: &NoiseSpec,
    poll_interval_ms: u64,
    stop: StopCondition,
) -> Result<(), SimError> {
    for op in operators {
        let name = op.op_type.to_string();
        if op.states.is_empty() {
            return Err(SimError::BadOperator {
                op: name,
                msg: "needs at least one power state".into(),
            });
        }
        let sum: f64 = op.states.iter().map(|s| s.probability).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::BadStateProbabilities { op: name, sum });
        }
        for s in &op.states {
            if !(s.dyn_power_w >= 0.0 && s.dyn_power_w.is_finite()) {
                return Err(SimError::BadOperator {
                    op: name,
                    msg: format!("dynamic power {} W is invalid", s.dyn_power_w),
                });
            }
            if !(0.0..=1.0).contains(&s.probability) {
                return Err(SimError::BadOperator {
                    op: name,
                    msg: format!("state probability {} outside [0, 1]", s.probability),
                });
            }
        }
        if op.instances == 0 {
            return Err(SimError::BadOperator {
                op: name,
                msg: "instances must be >= 1".into(),
            });
        }
        match op.schedule {
            Schedule::AlwaysOn => {}
            Schedule::Periodic { period_s, active_s } => {
                if !(period_s > 0.0 && active_s > 0.0 && active_s <= period_s) {
                    return Err(SimError::BadOperator {
                        op: name,
                        msg: format!(
                            "periodic schedule needs 0 < active_s <= period_s (got {active_s}, {period_s})"
                        ),
                    });
                }
            }
            Schedule::Alternating { long_s, short_s } => {
                if !(long_s > 0.0 && short_s > 0.0) {
                    return Err(SimError::BadOperator {
                        op: name,
                        msg: "alternating schedule durations must be positive".into(),
                    });
                }
            }
        }
    }
    if !(battery.e_per_percent_j > 0.0 && battery.e_per_percent_j.is_finite()) {
        return Err(SimError::BadBattery(
            "e_per_percent_j must be positive".into(),
        ));
    }
    if battery.initial_soc == 0 || battery.initial_soc > 100 {
        return Err(SimError::BadBattery(
            "initial_soc must be in 1..=100".into(),
        ));
    }
    if !(battery.idle_power_w > 0.0 && battery.idle_power_w.is_finite()) {
        return Err(SimError::ZeroPowerDeadlock(battery.idle_power_w));
    }
    if noise.soc_timing_sigma_s < 0.0 || noise.power_sigma_frac < 0.0 {
        return Err(SimError::BadNoise("sigmas must be >= 0".into()));
    }
    if !(0.0..1.0).contains(&noise.poll_drop_prob) {
        return Err(SimError::BadNoise("poll_drop_prob must be in [0, 1)".into()));
    }
    if poll_interval_ms == 0 {
        return Err(SimError::BadPollInterval);
    }
    match stop {
        StopCondition::Intervals(0) => {
            Err(SimError::BadStop("interval count must be positive".into()))
        }
        StopCondition::MaxTimeS(t) if t.is_nan() || t <= 0.0 => {
            Err(SimError::BadStop("max time must be positive".into()))
        }
        _ => Ok(()),
    }
}

/// k-th activation window of a schedule, as `[start, end)` seconds.
fn activation_window(schedule: &Schedule, k: u64) -> (f64, f64) {
    match *schedule {
        Schedule::AlwaysOn => {
            if k == 0 {
                (0.0, f64::INFINITY)
            } else {
                (f64::INFINITY, f64::INFINITY)
            }
        }
        Schedule::Periodic { period_s, active_s } => {
            let start = k as f64 * period_s;
            (start, start + active_s)
        }
        Schedule::Alternating { long_s, short_s } => {
            let cycle = 2.0 * (long_s + short_s);
            let base = (k / 2) as f64 * cycle;
            if k.is_multiple_of(2) {
                (base, base + long_s)
            } else {
                let start = base + long_s + short_s;
                (start, start + short_s)
            }
        }
    }
}

/// Standard-normal draw via Box-Muller; two uniforms per sample, fully
/// determined by the RNG stream.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

struct OperatorRuntime {
    spec: OperatorSpec,
    /// Next activation index to enter.
    next_activation: u64,
    /// Currently inside activation window? If so, the drawn per-instance
    /// dynamic powers sum to `current_dyn_w`.
    active: bool,
    current_dyn_w: f64,
    window: (f64, f64),
    rng: ChaCha8Rng,
}

impl OperatorRuntime {
    fn draw_state_sum(&mut self) -> f64 {
        let mut total = 0.0;
        for _ in 0..self.spec.instances {
            let u: f64 = self.rng.gen();
            let mut cum = 0.0;
            let mut chosen = self.spec.states.len() - 1;
            for (i, s) in self.spec.states.iter().enumerate() {
                cum += s.probability;
                if u < cum {
                    chosen = i;
                    break;
                }
            }
            total += self.spec.states[chosen].dyn_power_w;
        }
        total
    }

    /// Time of the next boundary (activation start or end) at or after now.
    fn next_boundary(&self) -> f64 {
        if self.active {
            self.window.1
        } else {
            self.window.0
        }
    }
}

/// Runs the simulation. Fully determined by its inputs (including
/// `noise.seed`): identical calls produce bit-identical outputs.
pub fn simulate(
    operators: &[OperatorSpec],
    battery: &BatterySpec,
    noise: &NoiseSpec,
    poll_interval_ms: u64,
    stop: StopCondition,
) -> Result<(TraceLog, GroundTruth), SimError> {
    validate_config(operators, battery, noise, poll_interval_ms, stop)?;

    let poll_s = poll_interval_ms as f64 / 1000.0;
    let e1pct = battery.e_per_percent_j;

    // Independent RNG streams per purpose so draws in one subsystem never
    // shift another: 1 = power noise ticks, 2 = SoC jitter, 3 = poll drops,
    // 16+i = per-operator state draws.
    let stream_rng = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(stream);
        rng
    };
    let mut noise_rng = stream_rng(1);
    let mut jitter_rng = stream_rng(2);
    let mut drop_rng = stream_rng(3);

    let mut ops: Vec<OperatorRuntime> = operators
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut rt = OperatorRuntime {
                spec: spec.clone(),
                next_activation: 0,
                active: false,
                current_dyn_w: 0.0,
                window: (0.0, 0.0),
                rng: stream_rng(16 + i as u64),
            };
            rt.window = activation_window(&rt.spec.schedule, 0);
            rt.next_activation = 1;
            rt
        })
        .collect();

    let mut operator_powers = BTreeMap::new();
    for op in operators {
        for (idx, state) in op.states.iter().enumerate() {
            operator_powers.insert((op.op_type.clone(), idx), state.dyn_power_w);
        }
    }

    let mut polls: Vec<PollRecord> = Vec::new();
    let mut soc_events: Vec<SocRecord> = Vec::new();
    let mut ledger: Vec<IntervalLedger> = Vec::new();

    let mut t = 0.0f64;
    let mut next_poll_idx: u64 = 1;
    let mut soc = battery.initial_soc;
    let mut e_acc = 0.0f64; // energy into the current (possibly partial) interval
    let mut interval_start = 0.0f64;
    let mut active_j = 0.0f64;
    let mut idle_j = 0.0f64;
    let mut last_recorded_ms: u64 = 0;
    let mut tick_idx: u64 = 0;
    let mut tick_factor = if noise.power_sigma_frac > 0.0 {
        (1.0 + noise.power_sigma_frac * gaussian(&mut noise_rng)).max(0.05)
    } else {
        1.0
    };

    // Once the stop condition fires we keep emitting polls (but no SoC
    // events) until the poll grid covers the last recorded event, so the
    // final interval's segments are fully observable.
    let mut drain_until_ms: Option<u64> = None;

    let max_time_s = match stop {
        StopCondition::MaxTimeS(limit) => Some(limit),
        StopCondition::Intervals(_) => None,
    };
    let wanted_events = match stop {
        StopCondition::Intervals(n) => Some(n as u64 + 1),
        StopCondition::MaxTimeS(_) => None,
    };

    loop {
        if let Some(limit) = drain_until_ms {
            // Keep polling until one poll lands at or past the limit, so the
            // final interval's last span is fully labeled.
            if (next_poll_idx - 1) * poll_interval_ms >= limit {
                break;
            }
        }

        let poll_t = next_poll_idx as f64 * poll_s;
        let mut t_next = poll_t;
        if noise.power_sigma_frac > 0.0 {
            t_next = t_next.min((tick_idx + 1) as f64 * poll_s);
        }
        for op in &ops {
            t_next = t_next.min(op.next_boundary());
        }
        if let (Some(limit), None) = (max_time_s, drain_until_ms) {
            t_next = t_next.min(limit);
        }

        // Integrate the constant-power piece [t, t_next], emitting SoC
        // events at exact crossings.
        if drain_until_ms.is_none() && t_next > t {
            let p_true = battery.idle_power_w
                + ops.iter().map(|o| o.current_dyn_w).sum::<f64>();
            let p_eff = p_true * tick_factor;
            let any_active = ops.iter().any(|o| o.active);
            loop {
                let span = t_next - t;
                let de = p_eff * span;
                if e_acc + de < e1pct {
                    e_acc += de;
                    if any_active {
                        active_j += de;
                    } else {
                        idle_j += de;
                    }
                    t = t_next;
                    break;
                }
                let need = e1pct - e_acc;
                let t_cross = t + need / p_eff;
                if any_active {
                    active_j += need;
                } else {
                    idle_j += need;
                }
                soc -= 1;
                let recorded = if noise.soc_timing_sigma_s > 0.0 {
                    t_cross + noise.soc_timing_sigma_s * gaussian(&mut jitter_rng)
                } else {
                    t_cross
                };
                let recorded_ms =
                    ((recorded * 1000.0).round().max(0.0) as u64).max(last_recorded_ms + 1);
                last_recorded_ms = recorded_ms;
                soc_events.push(SocRecord {
                    t_ms: recorded_ms,
                    soc,
                });
                if soc_events.len() >= 2 {
                    ledger.push(IntervalLedger {
                        index: ledger.len(),
                        start_s: interval_start,
                        end_s: t_cross,
                        active_j,
                        idle_j,
                    });
                }
                interval_start = t_cross;
                active_j = 0.0;
                idle_j = 0.0;
                e_acc = 0.0;
                t = t_cross;

                let done = match (wanted_events, soc) {
                    (Some(n), _) if soc_events.len() as u64 >= n => true,
                    (_, 0) => true,
                    _ => false,
                };
                if done {
                    drain_until_ms = Some(last_recorded_ms);
                    break;
                }
            }
        } else {
            t = t_next;
        }

        if drain_until_ms.is_none() {
            if let Some(limit) = max_time_s {
                if t >= limit {
                    drain_until_ms = Some(last_recorded_ms.max((limit * 1000.0) as u64));
                }
            }
        }

        // Poll fires before any toggle at the same instant: it samples the
        // composition as of just before the poll time.
        if t >= poll_t {
            let keep = if noise.poll_drop_prob > 0.0 {
                !drop_rng.gen_bool(noise.poll_drop_prob)
            } else {
                true
            };
            if keep {
                let mut set = ActiveSet::idle();
                for op in &ops {
                    if op.active {
                        set.insert(op.spec.op_type.clone(), op.spec.instances)
                            .expect("instances >= 1");
                    }
                }
                polls.push(PollRecord {
                    t_ms: next_poll_idx * poll_interval_ms,
                    active: set,
                });
            }
            next_poll_idx += 1;
        }

        if noise.power_sigma_frac > 0.0 {
            while t >= (tick_idx + 1) as f64 * poll_s {
                tick_idx += 1;
                tick_factor = (1.0 + noise.power_sigma_frac * gaussian(&mut noise_rng)).max(0.05);
            }
        }

        // Deactivations first, then activations, in operator order.
        for op in ops.iter_mut() {
            if op.active && t >= op.window.1 {
                op.active = false;
                op.current_dyn_w = 0.0;
                op.window = activation_window(&op.spec.schedule, op.next_activation);
                op.next_activation += 1;
            }
        }
        for op in ops.iter_mut() {
            if !op.active && t >= op.window.0 && op.window.0.is_finite() {
                op.active = true;
                op.current_dyn_w = op.draw_state_sum();
            }
        }
    }

    let device = DeviceSpec::new(e1pct, poll_interval_ms);
    let log = TraceLog {
        device,
        polls,
        soc_events,
    };
    let truth = GroundTruth {
        battery: *battery,
        operator_powers,
        interval_ledger: ledger,
    };
    Ok((log, truth))
}
