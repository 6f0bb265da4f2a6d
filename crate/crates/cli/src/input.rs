//! Loading traces written by `simulate` or supplied as single CSV files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use volflow::flow_model::{
    read_trace, read_windows, sniff_kind, window_partition, window_partition_span, CsvKind,
    MeasureKind, WindowStats, WindowingConfig,
};

use crate::config::{self, RunConfig};
use crate::error::CliError;
use crate::output::{read_manifest, TraceTimestamps, MANIFEST_FILE};

pub const VICTIM_TRACE: &str = "victim_trace.csv";
pub const VICTIM_WINDOWS: &str = "victim_windows.csv";

pub fn edge_trace_file(edge: usize) -> String {
    format!("edges/edge_{edge:02}_trace.csv")
}

pub fn edge_windows_file(edge: usize) -> String {
    format!("edges/edge_{edge:02}_windows.csv")
}

#[derive(Debug)]
pub struct LoadedTrace {
    pub victim: Vec<WindowStats>,
    pub edges: Option<Vec<Vec<WindowStats>>>,
    pub truth: Option<Vec<bool>>,
    pub delta_ms: u64,
    pub timestamps: TraceTimestamps,
    /// Every file read, in read order.
    pub files: Vec<PathBuf>,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn first_line(path: &Path) -> Result<String, CliError> {
    let mut line = String::new();
    BufReader::new(open(path)?)
        .read_line(&mut line)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(line)
}

fn delta_of(windows: &[WindowStats], path: &Path) -> Result<u64, CliError> {
    let first = windows
        .first()
        .ok_or_else(|| CliError::Data(format!("{}: no windows", path.display())))?;
    let delta = first.window_end_ms / first.window_index.max(1);
    if delta == 0
        || windows
            .iter()
            .any(|w| w.window_end_ms != w.window_index * delta)
    {
        return Err(CliError::Data(format!(
            "{}: window_end_ms is not a constant multiple of window_index",
            path.display()
        )));
    }
    Ok(delta)
}

/// Loads a trace: a `simulate` output directory, a windowed-stats CSV or a
/// record trace CSV (partitioned with `fallback_delta_ms`). Edge streams are
/// only available from directories and only loaded when `with_edges`.
pub fn load_trace(
    path: &Path,
    measure_set: &[MeasureKind],
    fallback_delta_ms: u64,
    with_edges: bool,
) -> Result<LoadedTrace, CliError> {
    if path.is_dir() {
        return load_sim_dir(path, measure_set, with_edges);
    }
    if with_edges {
        return Err(CliError::Data(format!(
            "{}: per-edge streams need a simulate output directory",
            path.display()
        )));
    }
    match sniff_kind(&first_line(path)?) {
        Some(CsvKind::Windows) => {
            let loaded = read_windows(open(path)?, measure_set)?;
            let delta_ms = delta_of(&loaded.windows, path)?;
            Ok(LoadedTrace {
                victim: loaded.windows,
                edges: None,
                truth: loaded.truth,
                delta_ms,
                timestamps: TraceTimestamps::default(),
                files: vec![path.to_owned()],
            })
        }
        Some(CsvKind::Trace) => {
            let records = read_trace(open(path)?)?;
            let cfg = WindowingConfig {
                delta_ms: fallback_delta_ms,
                measure_set: measure_set.to_vec(),
            };
            Ok(LoadedTrace {
                victim: window_partition(&records, &cfg)?,
                edges: None,
                truth: None,
                delta_ms: fallback_delta_ms,
                timestamps: TraceTimestamps::default(),
                files: vec![path.to_owned()],
            })
        }
        None => Err(CliError::Data(format!(
            "{}: unrecognised CSV header",
            path.display()
        ))),
    }
}

fn load_sim_dir(
    dir: &Path,
    measure_set: &[MeasureKind],
    with_edges: bool,
) -> Result<LoadedTrace, CliError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = read_manifest(&manifest_path)?;
    if manifest.command != "simulate" {
        return Err(CliError::Data(format!(
            "{} is a `{}` output, not a simulated trace",
            dir.display(),
            manifest.command
        )));
    }
    let sim: RunConfig = config::from_value(manifest.config.clone())?;
    let windows_path = dir.join(VICTIM_WINDOWS);
    let loaded = read_windows(open(&windows_path)?, measure_set)?;
    let delta_ms = sim.windowing.delta_ms;
    let mut files = vec![manifest_path, windows_path];

    let edges = if with_edges {
        let cfg = WindowingConfig {
            delta_ms,
            measure_set: measure_set.to_vec(),
        };
        let span = loaded.windows.len() as u64;
        let mut edges = Vec::new();
        for e in 0..sim.topology.edge_routers as usize {
            let p = dir.join(edge_trace_file(e));
            let records = read_trace(open(&p)?)?;
            edges.push(window_partition_span(&records, &cfg, span)?);
            files.push(p);
        }
        Some(edges)
    } else {
        None
    };

    Ok(LoadedTrace {
        victim: loaded.windows,
        edges,
        truth: loaded.truth,
        delta_ms,
        timestamps: manifest.timestamps,
        files,
    })
}
