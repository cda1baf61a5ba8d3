//! Ground-truth sidecar file format (`<trace>.truth`).
//!
//! Line-oriented key-value text, written next to each simulated trace:
//!
//! ```text
//! TRUTH v=1
//! battery e1pct_j=<f> idle_w=<f> initial_soc=<u>
//! power <type> <state_index> <dyn_w>
//! interval <index> start_s=<f> end_s=<f> active_j=<f> idle_j=<f>
//! ```
//!
//! Floats render in shortest round-trip form, so write/parse is bit-exact.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::trace::OperatorType;

use super::{BatterySpec, GroundTruth, IntervalLedger};

#[derive(Debug, Error)]
pub enum TruthError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing TRUTH header")]
    MissingHeader,
    #[error("missing battery line")]
    MissingBattery,
}

pub fn write_truth(truth: &GroundTruth) -> String {
    let mut out = String::from("TRUTH v=1\n");
    out.push_str(&format!(
        "battery e1pct_j={} idle_w={} initial_soc={}\n",
        truth.battery.e_per_percent_j, truth.battery.idle_power_w, truth.battery.initial_soc
    ));
    for ((ty, state), dyn_w) in &truth.operator_powers {
        out.push_str(&format!("power {ty} {state} {dyn_w}\n"));
    }
    for l in &truth.interval_ledger {
        out.push_str(&format!(
            "interval {} start_s={} end_s={} active_j={} idle_j={}\n",
            l.index, l.start_s, l.end_s, l.active_j, l.idle_j
        ));
    }
    out
}

pub fn parse_truth(text: &str) -> Result<GroundTruth, TruthError> {
    let mut lines = text.lines().enumerate();
    let syntax = |line: usize, msg: &str| TruthError::Syntax {
        line: line + 1,
        msg: msg.to_string(),
    };

    match lines.next() {
        Some((_, l)) if l.trim() == "TRUTH v=1" => {}
        _ => return Err(TruthError::MissingHeader),
    }

    let mut battery: Option<BatterySpec> = None;
    let mut operator_powers = BTreeMap::new();
    let mut interval_ledger = Vec::new();

    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        match fields.next().unwrap() {
            "battery" => {
                let mut kv = parse_kv(fields, idx)?;
                battery = Some(BatterySpec {
                    e_per_percent_j: take_f64(&mut kv, "e1pct_j", idx)?,
                    idle_power_w: take_f64(&mut kv, "idle_w", idx)?,
                    initial_soc: take_f64(&mut kv, "initial_soc", idx)? as u8,
                });
            }
            "power" => {
                let ty = fields
                    .next()
                    .ok_or_else(|| syntax(idx, "power line missing type"))?;
                let ty = OperatorType::new(ty)
                    .map_err(|e| syntax(idx, &format!("bad operator type: {e}")))?;
                let state: usize = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| syntax(idx, "power line missing state index"))?;
                let dyn_w: f64 = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| syntax(idx, "power line missing watts"))?;
                operator_powers.insert((ty, state), dyn_w);
            }
            "interval" => {
                let index: usize = fields
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| syntax(idx, "interval line missing index"))?;
                let mut kv = parse_kv(fields, idx)?;
                interval_ledger.push(IntervalLedger {
                    index,
                    start_s: take_f64(&mut kv, "start_s", idx)?,
                    end_s: take_f64(&mut kv, "end_s", idx)?,
                    active_j: take_f64(&mut kv, "active_j", idx)?,
                    idle_j: take_f64(&mut kv, "idle_j", idx)?,
                });
            }
            other => return Err(syntax(idx, &format!("unknown record {other:?}"))),
        }
    }

    Ok(GroundTruth {
        battery: battery.ok_or(TruthError::MissingBattery)?,
        operator_powers,
        interval_ledger,
    })
}

fn parse_kv<'a>(
    fields: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<BTreeMap<&'a str, &'a str>, TruthError> {
    let mut map = BTreeMap::new();
    for field in fields {
        let (k, v) = field.split_once('=').ok_or_else(|| TruthError::Syntax {
            line: line + 1,
            msg: format!("field {field:?} is not key=value"),
        })?;
        map.insert(k, v);
    }
    Ok(map)
}

fn take_f64(
    kv: &mut BTreeMap<&str, &str>,
    key: &str,
    line: usize,
) -> Result<f64, TruthError> {
    kv.remove(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| TruthError::Syntax {
            line: line + 1,
            msg: format!("missing or invalid {key}"),
        })
}

#[cfg(test)]
mod tests {
    use super::super::{simulate, NoiseSpec, Schedule, StopCondition};
    use super::*;
    use crate::sim::{OperatorSpec, PowerState};

    #[test]
    fn truth_round_trips_exactly() {
        let ops = vec![OperatorSpec {
            op_type: OperatorType::new("A").unwrap(),
            states: vec![
                PowerState { dyn_power_w: 0.3, probability: 0.25 },
                PowerState { dyn_power_w: 1.7, probability: 0.75 },
            ],
            schedule: Schedule::Periodic { period_s: 17.0, active_s: 11.0 },
            instances: 2,
        }];
        let battery = BatterySpec {
            e_per_percent_j: 137.5,
            idle_power_w: 0.717,
            initial_soc: 100,
        };
        let (_, truth) = simulate(
            &ops,
            &battery,
            &NoiseSpec::calibrated(9),
            1000,
            StopCondition::Intervals(6),
        )
        .unwrap();
        let text = write_truth(&truth);
        let parsed = parse_truth(&text).unwrap();
        assert_eq!(parsed, truth);
        assert_eq!(write_truth(&parsed), text);
    }
}
