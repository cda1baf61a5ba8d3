//! Trace domain types and the canonical line-oriented trace file format.
//!
//! A trace is the sole boundary between the device side (simulator or a real
//! runtime) and the analysis toolkit: timestamped poll records carrying the
//! set of active operators, interleaved with battery state-of-charge events.
//!
//! File format (UTF-8, one record per line, `#` starts a comment):
//!
//! ```text
//! HDR v=1 poll_ms=1000 e1pct_j=100 [label=token]
//! POLL <t_ms> <type>:<count>[,<type>:<count>...]    # "-" for idle
//! SOC <t_ms> <percent>
//! ```
//!
//! Records appear in timestamp order; a POLL and a SOC may share a timestamp,
//! in which case the POLL comes first.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Short ASCII identifier for an operator type (e.g. `NQ`, `FaceDet`).
///
/// Must be non-empty and free of whitespace, commas, and colons, which are
/// reserved by the trace format.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OperatorType(String);

impl OperatorType {
    pub fn new(id: impl Into<String>) -> Result<Self, TraceError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TraceError::InvalidOperatorType {
                id,
                reason: "empty identifier",
            });
        }
        if id.chars().any(|c| c.is_whitespace() || c == ',' || c == ':') {
            return Err(TraceError::InvalidOperatorType {
                id,
                reason: "contains whitespace, comma, or colon",
            });
        }
        Ok(OperatorType(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OperatorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for OperatorType {
    type Error = TraceError;
    fn try_from(s: String) -> Result<Self, TraceError> {
        OperatorType::new(s)
    }
}

impl From<OperatorType> for String {
    fn from(t: OperatorType) -> String {
        t.0
    }
}

/// Multiset of operator types with instance counts active at one instant.
///
/// The empty set denotes an idle device. Equality is full map equality, so it
/// is independent of insertion order; the writer emits entries sorted by
/// operator type, which makes the canonical text unique.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActiveSet {
    entries: BTreeMap<OperatorType, u32>,
}

impl ActiveSet {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn is_idle(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds `count` instances of `ty`. A zero count is rejected: absence is
    /// represented by absence.
    pub fn insert(&mut self, ty: OperatorType, count: u32) -> Result<(), TraceError> {
        if count == 0 {
            return Err(TraceError::ZeroInstanceCount { ty: ty.to_string() });
        }
        *self.entries.entry(ty).or_insert(0) += count;
        Ok(())
    }

    pub fn count(&self, ty: &OperatorType) -> u32 {
        self.entries.get(ty).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OperatorType, u32)> {
        self.entries.iter().map(|(t, &c)| (t, c))
    }

    pub fn types(&self) -> impl Iterator<Item = &OperatorType> {
        self.entries.keys()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: Into<String>,
    {
        let mut set = ActiveSet::idle();
        for (ty, count) in pairs {
            set.insert(OperatorType::new(ty)?, count)?;
        }
        Ok(set)
    }
}

impl fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("-");
        }
        let mut first = true;
        for (ty, count) in &self.entries {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{ty}:{count}")?;
            first = false;
        }
        Ok(())
    }
}

/// One runtime poll: the active set observed at `t_ms` (covering the span
/// since the previous poll).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollRecord {
    pub t_ms: u64,
    pub active: ActiveSet,
}

/// One battery state-of-charge drop event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SocRecord {
    pub t_ms: u64,
    /// Remaining charge in integer percent, 0-100.
    pub soc: u8,
}

/// Static device parameters carried in the trace header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    /// Joules discharged per 1% state-of-charge drop.
    pub e_per_percent_j: f64,
    /// Polling period in milliseconds.
    pub poll_interval_ms: u64,
    pub label: Option<String>,
}

impl DeviceSpec {
    pub fn new(e_per_percent_j: f64, poll_interval_ms: u64) -> Self {
        Self {
            e_per_percent_j,
            poll_interval_ms,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// A full device trace: header parameters plus the time-ordered poll and SoC
/// record streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLog {
    pub device: DeviceSpec,
    pub polls: Vec<PollRecord>,
    pub soc_events: Vec<SocRecord>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: non-monotonic timestamp {t_ms} ms")]
    NonMonotonicTimestamp { line: usize, t_ms: u64 },
    #[error("line {line}: SoC did not decrease (got {soc}%, previous {prev}%)")]
    SocIncrease { line: usize, soc: u8, prev: u8 },
    #[error("unknown header version {version} (supported: 1)")]
    UnknownVersion { version: String },
    #[error("missing HDR line before first record")]
    MissingHeader,
    #[error("invalid operator type {id:?}: {reason}")]
    InvalidOperatorType { id: String, reason: &'static str },
    #[error("operator {ty} has zero instance count")]
    ZeroInstanceCount { ty: String },
}

/// A single invariant violation found by [`validate_trace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index of the offending record within its list (polls or soc_events).
    pub index: usize,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ index {}: {}", self.rule, self.index, self.detail)
    }
}

/// Parses the canonical trace format. Malformed input is rejected, never
/// repaired; errors carry the 1-based line number.
pub fn parse_trace(text: &str) -> Result<TraceLog, TraceError> {
    let mut device: Option<DeviceSpec> = None;
    let mut polls: Vec<PollRecord> = Vec::new();
    let mut soc_events: Vec<SocRecord> = Vec::new();
    // Last timestamp seen in the merged record stream, and whether it came
    // from a SOC record (POLL-before-SOC tie order).
    let mut last_t: Option<(u64, bool)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let tag = fields.next().unwrap();
        match tag {
            "HDR" => {
                if device.is_some() {
                    return Err(TraceError::Syntax {
                        line: line_no,
                        msg: "duplicate HDR line".into(),
                    });
                }
                device = Some(parse_header(fields, line_no)?);
            }
            "POLL" | "SOC" => {
                if device.is_none() {
                    return Err(TraceError::MissingHeader);
                }
                let t_ms: u64 = next_field(&mut fields, line_no, "timestamp")?
                    .parse()
                    .map_err(|_| TraceError::Syntax {
                        line: line_no,
                        msg: "timestamp is not an unsigned integer".into(),
                    })?;
                let is_soc = tag == "SOC";
                if let Some((prev_t, prev_was_soc)) = last_t {
                    // Strictly increasing, except a SOC may share its
                    // timestamp with the immediately preceding POLL.
                    let ok = t_ms > prev_t || (t_ms == prev_t && is_soc && !prev_was_soc);
                    if !ok {
                        return Err(TraceError::NonMonotonicTimestamp { line: line_no, t_ms });
                    }
                }
                last_t = Some((t_ms, is_soc));
                if is_soc {
                    let soc: u8 = next_field(&mut fields, line_no, "percent")?
                        .parse()
                        .ok()
                        .filter(|&v| v <= 100)
                        .ok_or_else(|| TraceError::Syntax {
                            line: line_no,
                            msg: "SoC percent must be an integer in 0..=100".into(),
                        })?;
                    // An outright increase is impossible on a discharging
                    // battery and gets rejected here; a plateau parses and
                    // is left for validate_trace to flag.
                    if let Some(prev) = soc_events.last() {
                        if soc > prev.soc {
                            return Err(TraceError::SocIncrease {
                                line: line_no,
                                soc,
                                prev: prev.soc,
                            });
                        }
                    }
                    soc_events.push(SocRecord { t_ms, soc });
                } else {
                    let active = parse_active_set(
                        next_field(&mut fields, line_no, "active set")?,
                        line_no,
                    )?;
                    polls.push(PollRecord { t_ms, active });
                }
                if let Some(extra) = fields.next() {
                    return Err(TraceError::Syntax {
                        line: line_no,
                        msg: format!("unexpected trailing field {extra:?}"),
                    });
                }
            }
            other => {
                return Err(TraceError::Syntax {
                    line: line_no,
                    msg: format!("unknown record tag {other:?}"),
                });
            }
        }
    }

    let device = device.ok_or(TraceError::MissingHeader)?;
    Ok(TraceLog {
        device,
        polls,
        soc_events,
    })
}

fn next_field<'a>(
    fields: &mut impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<&'a str, TraceError> {
    fields.next().ok_or_else(|| TraceError::Syntax {
        line,
        msg: format!("missing {what} field"),
    })
}

fn parse_header<'a>(
    fields: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<DeviceSpec, TraceError> {
    let mut version = None;
    let mut poll_ms = None;
    let mut e1pct = None;
    let mut label = None;
    for field in fields {
        let (key, value) = field.split_once('=').ok_or_else(|| TraceError::Syntax {
            line,
            msg: format!("header field {field:?} is not key=value"),
        })?;
        match key {
            "v" => version = Some(value.to_string()),
            "poll_ms" => {
                poll_ms = Some(value.parse::<u64>().ok().filter(|&v| v > 0).ok_or_else(
                    || TraceError::Syntax {
                        line,
                        msg: "poll_ms must be a positive integer".into(),
                    },
                )?)
            }
            "e1pct_j" => {
                e1pct = Some(
                    value
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite() && *v > 0.0)
                        .ok_or_else(|| TraceError::Syntax {
                            line,
                            msg: "e1pct_j must be a positive finite number".into(),
                        })?,
                )
            }
            "label" => label = Some(value.to_string()),
            other => {
                return Err(TraceError::Syntax {
                    line,
                    msg: format!("unknown header key {other:?}"),
                });
            }
        }
    }
    match version.as_deref() {
        Some("1") => {}
        Some(v) => {
            return Err(TraceError::UnknownVersion {
                version: v.to_string(),
            })
        }
        None => {
            return Err(TraceError::Syntax {
                line,
                msg: "header missing v=".into(),
            })
        }
    }
    Ok(DeviceSpec {
        e_per_percent_j: e1pct.ok_or_else(|| TraceError::Syntax {
            line,
            msg: "header missing e1pct_j=".into(),
        })?,
        poll_interval_ms: poll_ms.ok_or_else(|| TraceError::Syntax {
            line,
            msg: "header missing poll_ms=".into(),
        })?,
        label,
    })
}

fn parse_active_set(text: &str, line: usize) -> Result<ActiveSet, TraceError> {
    if text == "-" {
        return Ok(ActiveSet::idle());
    }
    let mut set = ActiveSet::idle();
    for entry in text.split(',') {
        let (ty, count) = entry.split_once(':').ok_or_else(|| TraceError::Syntax {
            line,
            msg: format!("active-set entry {entry:?} is not type:count"),
        })?;
        let count: u32 = count.parse().ok().filter(|&c| c > 0).ok_or_else(|| {
            TraceError::Syntax {
                line,
                msg: format!("instance count in {entry:?} must be a positive integer"),
            }
        })?;
        set.insert(OperatorType::new(ty)?, count)
            .map_err(|_| TraceError::Syntax {
                line,
                msg: format!("duplicate operator type in {text:?}"),
            })?;
    }
    Ok(set)
}

/// Renders the canonical text form: header first, then all records merged in
/// timestamp order with ties broken POLL-before-SOC.
pub fn write_trace(log: &TraceLog) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "HDR v=1 poll_ms={} e1pct_j={}",
        log.device.poll_interval_ms, log.device.e_per_percent_j
    ));
    if let Some(label) = &log.device.label {
        out.push_str(&format!(" label={label}"));
    }
    out.push('\n');

    let mut pi = 0;
    let mut si = 0;
    while pi < log.polls.len() || si < log.soc_events.len() {
        let take_poll = match (log.polls.get(pi), log.soc_events.get(si)) {
            (Some(p), Some(s)) => p.t_ms <= s.t_ms,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if take_poll {
            let p = &log.polls[pi];
            out.push_str(&format!("POLL {} {}\n", p.t_ms, p.active));
            pi += 1;
        } else {
            let s = &log.soc_events[si];
            out.push_str(&format!("SOC {} {}\n", s.t_ms, s.soc));
            si += 1;
        }
    }
    out
}

/// Checks every [`TraceLog`] invariant, returning violations as data.
///
/// An empty result means the log is well-formed. Violations are not errors:
/// callers decide whether to proceed.
pub fn validate_trace(log: &TraceLog) -> Vec<Violation> {
    let mut violations = Vec::new();
    let poll_ms = log.device.poll_interval_ms;

    if !(log.device.e_per_percent_j.is_finite() && log.device.e_per_percent_j > 0.0) {
        violations.push(Violation {
            index: 0,
            rule: "device e_per_percent_j must be positive",
            detail: format!("{}", log.device.e_per_percent_j),
        });
    }
    if poll_ms == 0 {
        violations.push(Violation {
            index: 0,
            rule: "device poll_interval_ms must be positive",
            detail: "0".into(),
        });
        return violations;
    }

    let mut prev_t = 0u64; // polls are expected on the poll grid starting at poll_ms
    for (i, poll) in log.polls.iter().enumerate() {
        if i > 0 && poll.t_ms <= prev_t {
            violations.push(Violation {
                index: i,
                rule: "poll timestamps not strictly increasing",
                detail: format!("{} ms after {} ms", poll.t_ms, prev_t),
            });
        }
        let gap = poll.t_ms.saturating_sub(prev_t);
        if gap == 0 || gap % poll_ms != 0 {
            violations.push(Violation {
                index: i,
                rule: "poll gap not a multiple of poll_interval",
                detail: format!("gap {gap} ms, poll_interval {poll_ms} ms"),
            });
        }
        prev_t = poll.t_ms;
    }

    for (i, ev) in log.soc_events.iter().enumerate() {
        if ev.soc > 100 {
            violations.push(Violation {
                index: i,
                rule: "SoC out of range",
                detail: format!("{}%", ev.soc),
            });
        }
        if i > 0 {
            let prev = &log.soc_events[i - 1];
            if ev.t_ms <= prev.t_ms {
                violations.push(Violation {
                    index: i,
                    rule: "SoC timestamps not strictly increasing",
                    detail: format!("{} ms after {} ms", ev.t_ms, prev.t_ms),
                });
            }
            if ev.soc >= prev.soc {
                violations.push(Violation {
                    index: i,
                    rule: "SoC not strictly decreasing",
                    detail: format!("{}% after {}%", ev.soc, prev.soc),
                });
            }
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nq(count: u32) -> ActiveSet {
        ActiveSet::from_pairs([("NQ", count)]).unwrap()
    }

    #[test]
    fn parses_minimal_trace() {
        let log = parse_trace("HDR v=1 poll_ms=1000 e1pct_j=100\nPOLL 1000 NQ:2\nSOC 50000 99")
            .unwrap();
        assert_eq!(log.device.poll_interval_ms, 1000);
        assert_eq!(log.device.e_per_percent_j, 100.0);
        assert_eq!(log.polls, vec![PollRecord { t_ms: 1000, active: nq(2) }]);
        assert_eq!(log.soc_events, vec![SocRecord { t_ms: 50000, soc: 99 }]);
    }

    #[test]
    fn rejects_non_monotonic_timestamps() {
        let err = parse_trace("HDR v=1 poll_ms=1000 e1pct_j=100\nPOLL 2000 NQ:1\nPOLL 1000 NQ:1")
            .unwrap_err();
        match err {
            TraceError::NonMonotonicTimestamp { line, t_ms } => {
                assert_eq!(line, 3);
                assert_eq!(t_ms, 1000);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_soc_increase() {
        let err = parse_trace("HDR v=1 poll_ms=1000 e1pct_j=100\nSOC 1000 90\nSOC 2000 91")
            .unwrap_err();
        assert!(matches!(err, TraceError::SocIncrease { line: 3, .. }));
    }

    #[test]
    fn rejects_unknown_header_version() {
        let err = parse_trace("HDR v=9 poll_ms=1000 e1pct_j=100\n").unwrap_err();
        assert!(matches!(err, TraceError::UnknownVersion { .. }));
    }

    #[test]
    fn reports_line_numbers_with_comments_and_blanks() {
        let err = parse_trace("HDR v=1 poll_ms=1000 e1pct_j=100\n# c\n\nPOLL 1000 bogus")
            .unwrap_err();
        match err {
            TraceError::Syntax { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_log_writes_header_only() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![],
            soc_events: vec![],
        };
        assert_eq!(write_trace(&log), "HDR v=1 poll_ms=1000 e1pct_j=100\n");
    }

    #[test]
    fn idle_poll_renders_dash() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![PollRecord {
                t_ms: 1000,
                active: ActiveSet::idle(),
            }],
            soc_events: vec![],
        };
        assert_eq!(
            write_trace(&log),
            "HDR v=1 poll_ms=1000 e1pct_j=100\nPOLL 1000 -\n"
        );
    }

    #[test]
    fn writer_merges_by_timestamp_poll_before_soc() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![
                PollRecord { t_ms: 1000, active: nq(1) },
                PollRecord { t_ms: 2000, active: nq(1) },
            ],
            soc_events: vec![SocRecord { t_ms: 1000, soc: 99 }],
        };
        let text = write_trace(&log);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "POLL 1000 NQ:1");
        assert_eq!(lines[2], "SOC 1000 99");
        assert_eq!(lines[3], "POLL 2000 NQ:1");
        assert_eq!(parse_trace(&text).unwrap(), log);
    }

    #[test]
    fn active_set_equality_is_order_independent() {
        let a = ActiveSet::from_pairs([("A", 1), ("B", 2)]).unwrap();
        let b = ActiveSet::from_pairs([("B", 2), ("A", 1)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "A:1,B:2");
    }

    #[test]
    fn operator_type_rejects_reserved_characters() {
        assert!(OperatorType::new("").is_err());
        assert!(OperatorType::new("a b").is_err());
        assert!(OperatorType::new("a,b").is_err());
        assert!(OperatorType::new("a:b").is_err());
        assert!(OperatorType::new("FaceDet").is_ok());
    }

    #[test]
    fn validate_flags_soc_not_decreasing() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![],
            soc_events: vec![
                SocRecord { t_ms: 10_000, soc: 99 },
                SocRecord { t_ms: 20_000, soc: 99 },
            ],
        };
        let violations = validate_trace(&log);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "SoC not strictly decreasing");
        assert_eq!(violations[0].index, 1);
    }

    #[test]
    fn validate_flags_off_grid_poll_gap() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![
                PollRecord { t_ms: 1000, active: nq(1) },
                PollRecord { t_ms: 3500, active: nq(1) },
            ],
            soc_events: vec![],
        };
        let violations = validate_trace(&log);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "poll gap not a multiple of poll_interval");
        assert_eq!(violations[0].index, 1);
    }

    #[test]
    fn validate_accepts_dropped_poll_gap() {
        let log = TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: vec![
                PollRecord { t_ms: 1000, active: nq(1) },
                PollRecord { t_ms: 4000, active: nq(1) },
            ],
            soc_events: vec![],
        };
        assert!(validate_trace(&log).is_empty());
    }
}
