//! CSV formats for flow traces and windowed statistics.
//!
//! Trace files carry one record per line under the exact header
//! `timestamp_ms,flow_id,bytes,packets`. Windowed-stats files use
//! `window_index,window_end_ms,volume_bytes,flow_count` with an optional
//! trailing `is_attack_truth` column for labeled simulator traces.

use std::io::{Read, Write};

use super::record::{FlowId, FlowRecord};
use super::window::{MeasureKind, WindowStats};
use super::FlowModelError;

pub const TRACE_HEADER: [&str; 4] = ["timestamp_ms", "flow_id", "bytes", "packets"];
pub const WINDOWS_HEADER: [&str; 4] = [
    "window_index",
    "window_end_ms",
    "volume_bytes",
    "flow_count",
];
pub const TRUTH_COLUMN: &str = "is_attack_truth";

/// Which of the two CSV layouts a header line describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Trace,
    Windows,
}

pub fn sniff_kind(header_line: &str) -> Option<CsvKind> {
    let cols: Vec<&str> = header_line.trim_end().split(',').collect();
    if cols == TRACE_HEADER {
        Some(CsvKind::Trace)
    } else if cols.len() >= 4 && cols[..4] == WINDOWS_HEADER {
        Some(CsvKind::Windows)
    } else {
        None
    }
}

fn parse_non_negative(field: &str, name: &str, line: u64) -> Result<u64, FlowModelError> {
    let value: i128 = field
        .trim()
        .parse()
        .map_err(|_| FlowModelError::RejectedLine {
            line,
            reason: format!("{name} is not an integer: {field:?}"),
        })?;
    if value < 0 {
        return Err(FlowModelError::RejectedLine {
            line,
            reason: format!("negative {name}: {value}"),
        });
    }
    u64::try_from(value).map_err(|_| FlowModelError::RejectedLine {
        line,
        reason: format!("{name} out of range: {value}"),
    })
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input)
}

/// Reads a trace CSV. Records are returned sorted by timestamp (stable).
pub fn read_trace<R: Read>(input: R) -> Result<Vec<FlowRecord>, FlowModelError> {
    let mut rdr = csv_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(FlowModelError::Header {
            expected: TRACE_HEADER.join(","),
            found: header.join(","),
        });
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 4 {
            return Err(FlowModelError::RejectedLine {
                line,
                reason: format!("expected 4 fields, found {}", row.len()),
            });
        }
        let rec = FlowRecord {
            timestamp_ms: parse_non_negative(&row[0], "timestamp_ms", line)?,
            flow_id: FlowId::new(&row[1]),
            bytes: parse_non_negative(&row[2], "bytes", line)?,
            packets: parse_non_negative(&row[3], "packets", line)?,
        };
        if !rec.is_consistent() {
            return Err(FlowModelError::RejectedLine {
                line,
                reason: "packets present on a zero-byte record".into(),
            });
        }
        records.push(rec);
    }
    records.sort_by_key(|r| r.timestamp_ms);
    Ok(records)
}

pub fn write_trace<W: Write>(out: W, records: &[FlowRecord]) -> Result<(), FlowModelError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRACE_HEADER)?;
    for r in records {
        wtr.write_record([
            r.timestamp_ms.to_string(),
            r.flow_id.to_string(),
            r.bytes.to_string(),
            r.packets.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Windows loaded from a windowed-stats CSV plus the optional truth column.
#[derive(Debug, Clone)]
pub struct LoadedWindows {
    pub windows: Vec<WindowStats>,
    pub truth: Option<Vec<bool>>,
}

pub fn read_windows<R: Read>(
    input: R,
    measure_set: &[MeasureKind],
) -> Result<LoadedWindows, FlowModelError> {
    let mut rdr = csv_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let has_truth = match header.len() {
        4 => false,
        5 if header[4] == TRUTH_COLUMN => true,
        _ => {
            return Err(FlowModelError::Header {
                expected: format!("{},{TRUTH_COLUMN}", WINDOWS_HEADER.join(",")),
                found: header.join(","),
            })
        }
    };
    if header[..4] != WINDOWS_HEADER {
        return Err(FlowModelError::Header {
            expected: WINDOWS_HEADER.join(","),
            found: header.join(","),
        });
    }
    let mut windows = Vec::new();
    let mut truth = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let index = parse_non_negative(&row[0], "window_index", line)?;
        if index != windows.len() as u64 + 1 {
            return Err(FlowModelError::RejectedLine {
                line,
                reason: format!("window_index {index} out of sequence"),
            });
        }
        let end = parse_non_negative(&row[1], "window_end_ms", line)?;
        let volume = parse_non_negative(&row[2], "volume_bytes", line)?;
        let flows = parse_non_negative(&row[3], "flow_count", line)?;
        if has_truth {
            truth.push(match row[4].trim() {
                "true" | "1" => true,
                "false" | "0" => false,
                other => {
                    return Err(FlowModelError::RejectedLine {
                        line,
                        reason: format!("bad truth value {other:?}"),
                    })
                }
            });
        }
        windows.push(WindowStats::summary(index, end, volume, flows, measure_set));
    }
    Ok(LoadedWindows {
        windows,
        truth: has_truth.then_some(truth),
    })
}

pub fn write_windows<W: Write>(
    out: W,
    windows: &[WindowStats],
    truth: Option<&[bool]>,
) -> Result<(), FlowModelError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = WINDOWS_HEADER.to_vec();
    if truth.is_some() {
        header.push(TRUTH_COLUMN);
    }
    wtr.write_record(&header)?;
    for (i, w) in windows.iter().enumerate() {
        let mut row = vec![
            w.window_index.to_string(),
            w.window_end_ms.to_string(),
            w.volume_bytes.to_string(),
            w.flow_count.to_string(),
        ];
        if let Some(t) = truth {
            row.push(t.get(i).copied().unwrap_or(false).to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_roundtrip_sorts_on_ingest() {
        let csv = "timestamp_ms,flow_id,bytes,packets\n120,f1,200,1\n50,f1,300,1\n";
        let recs = read_trace(csv.as_bytes()).unwrap();
        assert_eq!(recs[0].timestamp_ms, 50);
        let mut out = Vec::new();
        write_trace(&mut out, &recs).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "timestamp_ms,flow_id,bytes,packets\n50,f1,300,1\n120,f1,200,1\n"
        );
    }

    #[test]
    fn negative_bytes_reports_line() {
        let csv = "timestamp_ms,flow_id,bytes,packets\n10,a,5,1\n20,b,-4,1\n";
        match read_trace(csv.as_bytes()) {
            Err(FlowModelError::RejectedLine { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("negative bytes"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_timestamp_rejected() {
        let csv = "timestamp_ms,flow_id,bytes,packets\n-1,a,5,1\n";
        assert!(matches!(
            read_trace(csv.as_bytes()),
            Err(FlowModelError::RejectedLine { line: 2, .. })
        ));
    }

    #[test]
    fn header_must_match_exactly() {
        let csv = "flow_id,timestamp_ms,bytes,packets\na,1,1,1\n";
        assert!(matches!(
            read_trace(csv.as_bytes()),
            Err(FlowModelError::Header { .. })
        ));
    }

    #[test]
    fn windows_with_and_without_truth() {
        let set = [MeasureKind::Volume, MeasureKind::Flow];
        let w = vec![
            WindowStats::summary(1, 200, 10, 1, &set),
            WindowStats::summary(2, 400, 0, 0, &set),
        ];
        let mut out = Vec::new();
        write_windows(&mut out, &w, Some(&[false, true])).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text
            .starts_with("window_index,window_end_ms,volume_bytes,flow_count,is_attack_truth\n"));
        let loaded = read_windows(out.as_slice(), &set).unwrap();
        assert_eq!(loaded.truth, Some(vec![false, true]));
        assert_eq!(loaded.windows[0].measures, vec![10.0, 1.0]);

        let mut out = Vec::new();
        write_windows(&mut out, &w, None).unwrap();
        let loaded = read_windows(out.as_slice(), &set).unwrap();
        assert!(loaded.truth.is_none());
    }

    #[test]
    fn sniffing() {
        assert_eq!(
            sniff_kind("timestamp_ms,flow_id,bytes,packets"),
            Some(CsvKind::Trace)
        );
        assert_eq!(
            sniff_kind("window_index,window_end_ms,volume_bytes,flow_count,is_attack_truth\n"),
            Some(CsvKind::Windows)
        );
        assert_eq!(sniff_kind("a,b"), None);
    }
}
