use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use volflow::flow_model::{
    aggregate_measure, read_trace, read_windows, window_partition, write_trace, write_windows,
    FlowRecord, MeasureKind, WindowingConfig,
};

const SET: [MeasureKind; 2] = [MeasureKind::Volume, MeasureKind::Flow];

fn cfg(delta_ms: u64) -> WindowingConfig {
    WindowingConfig {
        delta_ms,
        measure_set: SET.to_vec(),
    }
}

fn records() -> impl Strategy<Value = Vec<FlowRecord>> {
    prop::collection::vec((0u64..5_000, 0u8..12, 0u64..10_000), 0..80).prop_map(|raw| {
        let mut recs: Vec<FlowRecord> = raw
            .into_iter()
            .map(|(ts, f, bytes)| {
                FlowRecord::new(ts, format!("f{f}").as_str(), bytes, bytes.div_ceil(1460))
            })
            .collect();
        recs.sort_by_key(|r| r.timestamp_ms);
        recs
    })
}

/// Window owning `ts`, written from the interval definition rather than
/// from ceiling division.
fn owning_window(ts: u64, delta: u64) -> u64 {
    let mut w = 1;
    while ts > w * delta {
        w += 1;
    }
    w
}

proptest! {
    #[test]
    fn partition_keeps_every_byte(recs in records(), delta in 1u64..700) {
        let windows = window_partition(&recs, &cfg(delta)).unwrap();
        let total: u64 = recs.iter().map(|r| r.bytes).sum();
        prop_assert_eq!(windows.iter().map(|w| w.volume_bytes).sum::<u64>(), total);
        let last = recs.iter().map(|r| owning_window(r.timestamp_ms, delta)).max().unwrap_or(0);
        prop_assert_eq!(windows.len() as u64, last);
        for (i, w) in windows.iter().enumerate() {
            prop_assert_eq!(w.window_index, i as u64 + 1);
            prop_assert_eq!(w.window_end_ms, w.window_index * delta);
        }
    }

    #[test]
    fn records_land_in_their_interval(recs in records(), delta in 1u64..700) {
        let c = cfg(delta);
        let windows = window_partition(&recs, &c).unwrap();
        let mut expect: BTreeMap<u64, BTreeMap<String, u64>> = BTreeMap::new();
        for r in &recs {
            let w = owning_window(r.timestamp_ms, delta);
            prop_assert_eq!(c.window_of(r.timestamp_ms), w);
            if r.bytes > 0 {
                *expect.entry(w).or_default().entry(r.flow_id.as_str().to_owned()).or_default() += r.bytes;
            }
        }
        for w in &windows {
            let got: BTreeMap<String, u64> = w
                .per_flow_bytes
                .as_ref()
                .unwrap()
                .iter()
                .map(|(k, v)| (k.as_str().to_owned(), *v))
                .collect();
            prop_assert_eq!(&got, &expect.get(&w.window_index).cloned().unwrap_or_default());
            prop_assert_eq!(w.flow_count, got.len() as u64);
        }
    }

    #[test]
    fn aggregate_matches_brute_force(recs in records(), delta in 1u64..700) {
        for w in window_partition(&recs, &cfg(delta)).unwrap() {
            let flows = w.per_flow_bytes.as_ref().unwrap();
            let mut volume = 0u64;
            let mut active = BTreeSet::new();
            for (id, b) in flows {
                volume += b;
                if *b > 0 {
                    active.insert(id.clone());
                }
            }
            prop_assert_eq!(aggregate_measure(&w, &SET, 0).unwrap(), volume as f64);
            prop_assert_eq!(aggregate_measure(&w, &SET, 1).unwrap(), active.len() as f64);
            prop_assert_eq!(&w.measures, &vec![volume as f64, active.len() as f64]);
        }
    }

    #[test]
    fn csv_round_trips(recs in records(), delta in 1u64..700) {
        let mut buf = Vec::new();
        write_trace(&mut buf, &recs).unwrap();
        prop_assert_eq!(&read_trace(buf.as_slice()).unwrap(), &recs);

        let windows = window_partition(&recs, &cfg(delta)).unwrap();
        let truth: Vec<bool> = windows.iter().map(|w| w.window_index % 3 == 0).collect();
        let mut buf = Vec::new();
        write_windows(&mut buf, &windows, Some(&truth)).unwrap();
        let loaded = read_windows(buf.as_slice(), &SET).unwrap();
        prop_assert_eq!(loaded.truth.as_deref(), Some(truth.as_slice()));
        for (a, b) in loaded.windows.iter().zip(&windows) {
            prop_assert_eq!(a.volume_bytes, b.volume_bytes);
            prop_assert_eq!(a.flow_count, b.flow_count);
            prop_assert_eq!(a.window_end_ms, b.window_end_ms);
        }
    }
}

#[test]
fn zero_timestamp_is_first_window() {
    let recs = [
        FlowRecord::new(0, "a", 10, 1),
        FlowRecord::new(200, "b", 5, 1),
        FlowRecord::new(201, "c", 1, 1),
    ];
    let w = window_partition(&recs, &cfg(200)).unwrap();
    assert_eq!(w.len(), 2);
    assert_eq!((w[0].volume_bytes, w[0].flow_count), (15, 2));
    assert_eq!((w[1].volume_bytes, w[1].flow_count), (1, 1));
}

#[test]
fn negative_values_are_rejected_with_line() {
    let text = "timestamp_ms,flow_id,bytes,packets\n10,a,5,1\n20,b,-3,1\n";
    match read_trace(text.as_bytes()).unwrap_err() {
        volflow::flow_model::FlowModelError::RejectedLine { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}
