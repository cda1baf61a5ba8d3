//! Segmentation: from a raw trace to execution segments, discharge
//! intervals, and per-interval training samples.
//!
//! Each poll labels the span of one poll interval *preceding* it (the
//! runtime reports what ran since the last poll). Consecutive spans with the
//! same active set merge into one execution segment; segments are split at
//! every SoC event so they never straddle a discharge-interval boundary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{ActiveSet, OperatorType, SocRecord, TraceLog};

/// Maximal span with a constant composition of active operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionSegment {
    pub start_ms: u64,
    pub end_ms: u64,
    pub active: ActiveSet,
    /// True when the span comes from a dropped-poll gap and the idle label
    /// is assumed rather than observed.
    pub imputed: bool,
}

impl ExecutionSegment {
    pub fn duration_s(&self) -> f64 {
        (self.end_ms - self.start_ms) as f64 / 1000.0
    }
}

/// The span between two consecutive SoC events: the unit of attribution and
/// one training row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DischargeInterval {
    pub index: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub segments: Vec<ExecutionSegment>,
    /// Polls observed inside (start, end].
    pub poll_count: usize,
}

impl DischargeInterval {
    pub fn duration_s(&self) -> f64 {
        (self.end_ms - self.start_ms) as f64 / 1000.0
    }
}

/// One regression row: per-operator active seconds (count-weighted) and the
/// interval duration as the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSample {
    /// Parallel to the schema used at featurization time.
    pub features: Vec<f64>,
    pub target_s: f64,
    pub interval_ref: usize,
}

/// How interval features are keyed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturizeMode {
    /// One feature per operator type; instance counts fold into
    /// count-weighted seconds.
    #[default]
    Compact,
    /// One feature per (type, instance count) pair, named `<type>@<count>`.
    ExpandCounts,
}

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("operator {0} appears in the interval but not in the schema")]
    OperatorNotInSchema(String),
    #[error("traces disagree: {0}")]
    MixedDevices(String),
}

/// Builds merged, SoC-split execution segments from a trace.
///
/// Dropped-poll gaps become idle segments flagged `imputed`. An empty log
/// yields an empty list.
pub fn build_segments(log: &TraceLog) -> Vec<ExecutionSegment> {
    let poll_ms = log.device.poll_interval_ms;
    let mut raw: Vec<ExecutionSegment> = Vec::new();

    let mut prev_end = 0u64;
    for poll in &log.polls {
        if poll.t_ms > prev_end + poll_ms {
            raw.push(ExecutionSegment {
                start_ms: prev_end,
                end_ms: poll.t_ms - poll_ms,
                active: ActiveSet::idle(),
                imputed: true,
            });
        }
        let start = poll.t_ms.saturating_sub(poll_ms).max(prev_end);
        if poll.t_ms > start {
            raw.push(ExecutionSegment {
                start_ms: start,
                end_ms: poll.t_ms,
                active: poll.active.clone(),
                imputed: false,
            });
        }
        prev_end = poll.t_ms;
    }

    // Merge adjacent spans with equal composition and imputedness.
    let mut merged: Vec<ExecutionSegment> = Vec::new();
    for seg in raw {
        match merged.last_mut() {
            Some(last)
                if last.end_ms == seg.start_ms
                    && last.active == seg.active
                    && last.imputed == seg.imputed =>
            {
                last.end_ms = seg.end_ms;
            }
            _ => merged.push(seg),
        }
    }

    split_at(&merged, log.soc_events.iter().map(|e| e.t_ms))
}

fn split_at(segments: &[ExecutionSegment], cuts: impl Iterator<Item = u64>) -> Vec<ExecutionSegment> {
    let mut cuts: Vec<u64> = cuts.collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(segments.len() + cuts.len());
    let mut ci = 0;
    for seg in segments {
        let mut start = seg.start_ms;
        while ci < cuts.len() && cuts[ci] <= start {
            ci += 1;
        }
        let mut k = ci;
        while k < cuts.len() && cuts[k] < seg.end_ms {
            out.push(ExecutionSegment {
                start_ms: start,
                end_ms: cuts[k],
                active: seg.active.clone(),
                imputed: seg.imputed,
            });
            start = cuts[k];
            k += 1;
        }
        out.push(ExecutionSegment {
            start_ms: start,
            end_ms: seg.end_ms,
            active: seg.active.clone(),
            imputed: seg.imputed,
        });
    }
    out
}

/// Groups segments into complete discharge intervals.
///
/// Interval `i` spans SoC events `i` and `i+1`; the leading portion before
/// the first event and the trailing portion after the last are partial and
/// discarded. Fewer than two events means no complete interval.
pub fn build_intervals(
    segments: &[ExecutionSegment],
    soc_events: &[SocRecord],
) -> Vec<DischargeInterval> {
    build_intervals_with_polls(segments, soc_events, &[])
}

/// Like [`build_intervals`] but also counts the polls observed inside each
/// interval (needed by the poll-count preprocessing filter).
pub fn build_intervals_with_polls(
    segments: &[ExecutionSegment],
    soc_events: &[SocRecord],
    poll_times_ms: &[u64],
) -> Vec<DischargeInterval> {
    if soc_events.len() < 2 {
        return Vec::new();
    }
    let mut intervals = Vec::with_capacity(soc_events.len() - 1);
    for (i, pair) in soc_events.windows(2).enumerate() {
        let (start, end) = (pair[0].t_ms, pair[1].t_ms);
        let segs: Vec<ExecutionSegment> = segments
            .iter()
            .filter(|s| s.start_ms >= start && s.end_ms <= end)
            .cloned()
            .collect();
        let poll_count = poll_times_ms
            .iter()
            .filter(|&&t| t > start && t <= end)
            .count();
        intervals.push(DischargeInterval {
            index: i,
            start_ms: start,
            end_ms: end,
            segments: segs,
            poll_count,
        });
    }
    intervals
}

/// Convenience: segments + intervals + poll counts straight from a trace.
pub fn intervals_from_trace(log: &TraceLog) -> Vec<DischargeInterval> {
    let segments = build_segments(log);
    let poll_times: Vec<u64> = log.polls.iter().map(|p| p.t_ms).collect();
    build_intervals_with_polls(&segments, &log.soc_events, &poll_times)
}

/// Collects the feature schema implied by a set of intervals: every operator
/// type (or `<type>@<count>` pair in expanded mode) that is ever active,
/// sorted.
pub fn schema_from_intervals(
    intervals: &[DischargeInterval],
    mode: FeaturizeMode,
) -> Vec<OperatorType> {
    let mut keys: BTreeMap<OperatorType, ()> = BTreeMap::new();
    for interval in intervals {
        for seg in &interval.segments {
            for (ty, count) in seg.active.iter() {
                keys.insert(feature_key(ty, count, mode), ());
            }
        }
    }
    keys.into_keys().collect()
}

fn feature_key(ty: &OperatorType, count: u32, mode: FeaturizeMode) -> OperatorType {
    match mode {
        FeaturizeMode::Compact => ty.clone(),
        FeaturizeMode::ExpandCounts => {
            OperatorType::new(format!("{ty}@{count}")).expect("valid synthesized key")
        }
    }
}

/// Turns one interval into a training sample against a fixed schema.
///
/// Compact mode: `feature[k] = sum over segments of count(k) x duration`,
/// in seconds. Expanded mode: `feature[(k, c)] = sum of durations where k
/// ran with exactly c instances`. Types absent from the interval get zero;
/// a type present in the interval but missing from the schema is an error.
pub fn featurize(
    interval: &DischargeInterval,
    schema: &[OperatorType],
    mode: FeaturizeMode,
) -> Result<IntervalSample, SegmentError> {
    let index: BTreeMap<&OperatorType, usize> =
        schema.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut features = vec![0.0; schema.len()];
    for seg in &interval.segments {
        let dur = seg.duration_s();
        for (ty, count) in seg.active.iter() {
            let key = feature_key(ty, count, mode);
            let slot = index
                .get(&key)
                .ok_or_else(|| SegmentError::OperatorNotInSchema(key.to_string()))?;
            let weight = match mode {
                FeaturizeMode::Compact => count as f64,
                FeaturizeMode::ExpandCounts => 1.0,
            };
            features[*slot] += weight * dur;
        }
    }
    Ok(IntervalSample {
        features,
        target_s: interval.duration_s(),
        interval_ref: interval.index,
    })
}

/// Featurizes every interval against the schema implied by the whole set.
pub fn featurize_all(
    intervals: &[DischargeInterval],
    mode: FeaturizeMode,
) -> Result<(Vec<OperatorType>, Vec<IntervalSample>), SegmentError> {
    let schema = schema_from_intervals(intervals, mode);
    let samples = intervals
        .iter()
        .map(|iv| featurize(iv, &schema, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((schema, samples))
}

/// Feature schema, discharge intervals, and training samples for one
/// dataset.
pub type Dataset = (Vec<OperatorType>, Vec<DischargeInterval>, Vec<IntervalSample>);

/// Builds one training dataset from several traces (e.g. separate battery
/// runs of the same workload), re-indexing intervals so references stay
/// unique. All traces must share the device header.
pub fn dataset_from_traces(logs: &[TraceLog], mode: FeaturizeMode) -> Result<Dataset, SegmentError> {
    if let Some(first) = logs.first() {
        for log in &logs[1..] {
            if log.device.poll_interval_ms != first.device.poll_interval_ms
                || log.device.e_per_percent_j != first.device.e_per_percent_j
            {
                return Err(SegmentError::MixedDevices(format!(
                    "header (poll_ms={}, e1pct_j={}) vs (poll_ms={}, e1pct_j={})",
                    first.device.poll_interval_ms,
                    first.device.e_per_percent_j,
                    log.device.poll_interval_ms,
                    log.device.e_per_percent_j
                )));
            }
        }
    }
    let mut intervals = Vec::new();
    let mut base = 0usize;
    for log in logs {
        let mut ivs = intervals_from_trace(log);
        for iv in &mut ivs {
            iv.index += base;
        }
        base += ivs.len();
        intervals.extend(ivs);
    }
    let (schema, samples) = featurize_all(&intervals, mode)?;
    Ok((schema, intervals, samples))
}

/// Renders samples as the CSV interchange format:
/// `interval,target_s,<type1>,<type2>,...`.
pub fn samples_to_csv(schema: &[OperatorType], samples: &[IntervalSample]) -> String {
    let mut out = String::from("interval,target_s");
    for ty in schema {
        out.push(',');
        out.push_str(ty.as_str());
    }
    out.push('\n');
    for s in samples {
        out.push_str(&format!("{},{}", s.interval_ref, s.target_s));
        for v in &s.features {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{DeviceSpec, PollRecord};

    fn nq(count: u32) -> ActiveSet {
        ActiveSet::from_pairs([("NQ", count)]).unwrap()
    }

    fn log_with(polls: Vec<(u64, ActiveSet)>, socs: Vec<u64>) -> TraceLog {
        TraceLog {
            device: DeviceSpec::new(100.0, 1000),
            polls: polls
                .into_iter()
                .map(|(t_ms, active)| PollRecord { t_ms, active })
                .collect(),
            soc_events: socs
                .iter()
                .enumerate()
                .map(|(i, &t_ms)| SocRecord { t_ms, soc: 99 - i as u8 })
                .collect(),
        }
    }

    #[test]
    fn equal_consecutive_polls_merge() {
        let log = log_with(
            vec![(1000, nq(1)), (2000, nq(1)), (3000, nq(1))],
            vec![],
        );
        let segs = build_segments(&log);
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start_ms, segs[0].end_ms), (0, 3000));
        assert_eq!(segs[0].active, nq(1));
    }

    #[test]
    fn composition_change_starts_new_segment() {
        let log = log_with(
            vec![(1000, nq(1)), (2000, nq(1)), (3000, ActiveSet::idle())],
            vec![],
        );
        let segs = build_segments(&log);
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start_ms, segs[0].end_ms), (0, 2000));
        assert_eq!((segs[1].start_ms, segs[1].end_ms), (2000, 3000));
        assert!(segs[1].active.is_idle());
    }

    #[test]
    fn segments_split_at_soc_events() {
        let log = log_with(
            vec![(1000, nq(1)), (2000, nq(1)), (3000, nq(1))],
            vec![2500],
        );
        let segs = build_segments(&log);
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start_ms, segs[0].end_ms), (0, 2500));
        assert_eq!((segs[1].start_ms, segs[1].end_ms), (2500, 3000));
        assert_eq!(segs[0].active, segs[1].active);
    }

    #[test]
    fn dropped_polls_become_imputed_idle() {
        // Poll at 1 s, gap (polls at 2 s and 3 s dropped), poll at 4 s.
        let log = log_with(vec![(1000, nq(1)), (4000, nq(1))], vec![]);
        let segs = build_segments(&log);
        assert_eq!(segs.len(), 3);
        assert_eq!((segs[1].start_ms, segs[1].end_ms), (1000, 3000));
        assert!(segs[1].active.is_idle());
        assert!(segs[1].imputed);
        assert!(!segs[0].imputed);
    }

    #[test]
    fn fewer_than_two_events_means_no_intervals() {
        let log = log_with(vec![(1000, nq(1))], vec![500]);
        assert!(intervals_from_trace(&log).is_empty());
    }

    #[test]
    fn five_events_make_four_intervals() {
        let polls = (1..=60).map(|k| (k * 1000, nq(1))).collect();
        let log = log_with(polls, vec![10_000, 21_000, 33_000, 46_000, 60_000]);
        let intervals = intervals_from_trace(&log);
        assert_eq!(intervals.len(), 4);
        assert_eq!(intervals[0].duration_s(), 11.0);
        // Segment durations tile each interval exactly.
        for iv in &intervals {
            let total: f64 = iv.segments.iter().map(|s| s.duration_s()).sum();
            assert!((total - iv.duration_s()).abs() < 1e-9);
        }
    }

    #[test]
    fn interval_poll_counts() {
        let polls: Vec<(u64, ActiveSet)> = (1..=30).map(|k| (k * 1000, nq(1))).collect();
        let log = log_with(polls, vec![5_500, 20_500]);
        let intervals = intervals_from_trace(&log);
        assert_eq!(intervals.len(), 1);
        // Polls at 6..=20 s fall inside (5.5 s, 20.5 s].
        assert_eq!(intervals[0].poll_count, 15);
    }

    #[test]
    fn featurize_weights_by_instance_count() {
        let interval = DischargeInterval {
            index: 0,
            start_ms: 0,
            end_ms: 120_000,
            segments: vec![
                ExecutionSegment {
                    start_ms: 0,
                    end_ms: 40_000,
                    active: nq(2),
                    imputed: false,
                },
                ExecutionSegment {
                    start_ms: 40_000,
                    end_ms: 120_000,
                    active: ActiveSet::idle(),
                    imputed: false,
                },
            ],
            poll_count: 120,
        };
        let schema = vec![OperatorType::new("NQ").unwrap()];
        let s = featurize(&interval, &schema, FeaturizeMode::Compact).unwrap();
        assert_eq!(s.features, vec![80.0]);
        assert_eq!(s.target_s, 120.0);
    }

    #[test]
    fn featurize_idle_interval_is_all_zero() {
        let interval = DischargeInterval {
            index: 3,
            start_ms: 0,
            end_ms: 139_500,
            segments: vec![ExecutionSegment {
                start_ms: 0,
                end_ms: 139_500,
                active: ActiveSet::idle(),
                imputed: false,
            }],
            poll_count: 139,
        };
        let schema = vec![OperatorType::new("NQ").unwrap()];
        let s = featurize(&interval, &schema, FeaturizeMode::Compact).unwrap();
        assert_eq!(s.features, vec![0.0]);
        assert_eq!(s.target_s, 139.5);
    }

    #[test]
    fn featurize_is_segment_order_invariant() {
        let seg_a = ExecutionSegment {
            start_ms: 0,
            end_ms: 10_000,
            active: nq(1),
            imputed: false,
        };
        let seg_b = ExecutionSegment {
            start_ms: 10_000,
            end_ms: 30_000,
            active: nq(3),
            imputed: false,
        };
        let schema = vec![OperatorType::new("NQ").unwrap()];
        let mk = |segments: Vec<ExecutionSegment>| DischargeInterval {
            index: 0,
            start_ms: 0,
            end_ms: 30_000,
            segments,
            poll_count: 30,
        };
        let fwd = featurize(&mk(vec![seg_a.clone(), seg_b.clone()]), &schema, FeaturizeMode::Compact)
            .unwrap();
        let rev = featurize(&mk(vec![seg_b, seg_a]), &schema, FeaturizeMode::Compact).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn expanded_mode_keys_by_count() {
        let interval = DischargeInterval {
            index: 0,
            start_ms: 0,
            end_ms: 30_000,
            segments: vec![
                ExecutionSegment { start_ms: 0, end_ms: 10_000, active: nq(1), imputed: false },
                ExecutionSegment { start_ms: 10_000, end_ms: 30_000, active: nq(2), imputed: false },
            ],
            poll_count: 30,
        };
        let (schema, samples) =
            featurize_all(std::slice::from_ref(&interval), FeaturizeMode::ExpandCounts).unwrap();
        let names: Vec<&str> = schema.iter().map(|t| t.as_str()).collect();
        assert_eq!(names, vec!["NQ@1", "NQ@2"]);
        assert_eq!(samples[0].features, vec![10.0, 20.0]);
    }

    #[test]
    fn operator_missing_from_schema_is_an_error() {
        let interval = DischargeInterval {
            index: 0,
            start_ms: 0,
            end_ms: 10_000,
            segments: vec![ExecutionSegment {
                start_ms: 0,
                end_ms: 10_000,
                active: nq(1),
                imputed: false,
            }],
            poll_count: 10,
        };
        let err = featurize(&interval, &[], FeaturizeMode::Compact).unwrap_err();
        assert!(matches!(err, SegmentError::OperatorNotInSchema(_)));
    }

    #[test]
    fn csv_export_shape() {
        let schema = vec![OperatorType::new("A").unwrap(), OperatorType::new("B").unwrap()];
        let samples = vec![IntervalSample {
            features: vec![1.5, 0.0],
            target_s: 120.0,
            interval_ref: 7,
        }];
        let csv = samples_to_csv(&schema, &samples);
        assert_eq!(csv, "interval,target_s,A,B\n7,120,1.5,0\n");
    }
}
