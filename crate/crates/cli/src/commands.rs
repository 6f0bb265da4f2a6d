use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use volflow::coop::{run_coop_simulation, CoopProfiles, CoopReport};
use volflow::detector::{build_profile, detect_stream, DetectorConfig, NormalProfile, Verdict};
use volflow::eval::{
    attack_intervals, prepare_suite, roc_sweep, score_run, window_eval_mode, Confusion, EvalReport,
};
use volflow::flow_model::{write_trace, write_windows, MeasureKind, WindowingConfig};
use volflow::simulator::{build_topology, run_scenario};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::input::{
    edge_trace_file, edge_windows_file, load_trace, LoadedTrace, VICTIM_TRACE, VICTIM_WINDOWS,
};
use crate::output::{config_hash, hash_file, FileDigest, Manifest, OutputDir, TraceTimestamps};

/// A command with its non-config options; stored in manifests for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Invocation {
    Simulate,
    Train {
        trace: PathBuf,
        force: bool,
    },
    Detect {
        trace: PathBuf,
        profile: PathBuf,
        r: Option<f64>,
    },
    Coop {
        trace: PathBuf,
    },
    Roc,
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Simulate => "simulate",
            Invocation::Train { .. } => "train",
            Invocation::Detect { .. } => "detect",
            Invocation::Coop { .. } => "coop",
            Invocation::Roc => "roc",
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn digests(files: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    files
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.display().to_string(),
                sha256: hash_file(p)?,
            })
        })
        .collect()
}

struct Run {
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    timestamps: TraceTimestamps,
}

/// Runs one command into `out` and writes its manifest.
pub fn execute(inv: &Invocation, cfg: &RunConfig, out: &Path) -> Result<Manifest, CliError> {
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    let mut dir = OutputDir::create(out)?;
    let run = match inv {
        Invocation::Simulate => simulate(cfg, &mut dir)?,
        Invocation::Train { trace, force } => train(cfg, trace, *force, &mut dir)?,
        Invocation::Detect { trace, profile, r } => detect(cfg, trace, profile, *r, &mut dir)?,
        Invocation::Coop { trace } => coop(cfg, trace, &mut dir)?,
        Invocation::Roc => roc(cfg, &mut dir)?,
    };
    let config = serde_json::to_value(cfg).map_err(internal)?;
    let manifest = Manifest {
        command: inv.name().to_owned(),
        artifact_version: env!("CARGO_PKG_VERSION").to_owned(),
        config_hash: config_hash(&config),
        seeds: run.seeds,
        config,
        options: serde_json::to_value(inv).map_err(internal)?,
        inputs: digests(&run.inputs)?,
        outputs: Vec::new(),
        timestamps: run.timestamps,
    };
    dir.finish(manifest)
}

fn csv_bytes(
    f: impl FnOnce(&mut Vec<u8>) -> Result<(), volflow::flow_model::FlowModelError>,
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(internal)?;
    Ok(buf)
}

fn simulate(cfg: &RunConfig, dir: &mut OutputDir) -> Result<Run, CliError> {
    let seed = cfg.scenario.rng_seed;
    let topology = build_topology(&cfg.topology, seed)?;
    let trace = run_scenario(&topology, &cfg.scenario, &cfg.windowing)?;
    let truth = Some(trace.truth.as_slice());

    dir.write(
        VICTIM_TRACE,
        &csv_bytes(|b| write_trace(b, &trace.victim_records))?,
    )?;
    dir.write(
        VICTIM_WINDOWS,
        &csv_bytes(|b| write_windows(b, &trace.victim_windows, truth))?,
    )?;
    for (e, (records, windows)) in trace
        .edge_records
        .iter()
        .zip(&trace.edge_windows)
        .enumerate()
    {
        dir.write(
            &edge_trace_file(e),
            &csv_bytes(|b| write_trace(b, records))?,
        )?;
        dir.write(
            &edge_windows_file(e),
            &csv_bytes(|b| write_windows(b, windows, truth))?,
        )?;
    }
    dir.write_json("topology.json", &topology)?;

    Ok(Run {
        seeds: vec![seed],
        inputs: Vec::new(),
        timestamps: TraceTimestamps {
            t_a_ms: trace.t_a_ms,
            t_b_ms: trace.t_b_ms,
            attack_end_ms: trace.attack_end_ms,
        },
    })
}

fn train(cfg: &RunConfig, trace: &Path, force: bool, dir: &mut OutputDir) -> Result<Run, CliError> {
    let set = &cfg.windowing.measure_set;
    let loaded = load_trace(trace, set, cfg.windowing.delta_ms, false)?;
    let attack_windows = loaded
        .truth
        .as_ref()
        .map_or(0, |t| t.iter().filter(|x| **x).count());
    if attack_windows > 0 && !force {
        return Err(CliError::Data(format!(
            "{} has {attack_windows} attack windows; refusing to train on them without --force",
            trace.display()
        )));
    }
    let windowing = WindowingConfig {
        delta_ms: loaded.delta_ms,
        measure_set: set.clone(),
    };
    let profile = build_profile(&loaded.victim, &windowing)?;
    if profile.has_zero_spread() {
        eprintln!("warning: a measure has zero standard deviation; its threshold is 0");
    }
    dir.write_json("profile.json", &profile)?;
    Ok(Run {
        seeds: Vec::new(),
        inputs: loaded.files,
        timestamps: loaded.timestamps,
    })
}

fn read_profile(path: &Path) -> Result<NormalProfile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn scoring(
    alarms: &[bool],
    loaded: &LoadedTrace,
) -> Result<Option<(EvalReport, Confusion)>, CliError> {
    let Some(truth) = &loaded.truth else {
        return Ok(None);
    };
    let intervals = attack_intervals(
        truth,
        loaded.delta_ms,
        loaded.timestamps.t_a_ms,
        loaded.timestamps.t_b_ms,
    );
    Ok(Some((
        score_run(alarms, truth, &intervals, loaded.delta_ms)?,
        window_eval_mode(alarms, truth)?,
    )))
}

fn detect(
    cfg: &RunConfig,
    trace: &Path,
    profile_path: &Path,
    r: Option<f64>,
    dir: &mut OutputDir,
) -> Result<Run, CliError> {
    let profile = read_profile(profile_path)?;
    let loaded = load_trace(trace, &profile.measures, profile.delta_ms, false)?;
    if loaded.delta_ms != profile.delta_ms {
        return Err(CliError::Data(format!(
            "trace windows are {} ms, profile was trained on {} ms",
            loaded.delta_ms, profile.delta_ms
        )));
    }
    let det_cfg = match r {
        Some(r) => DetectorConfig::uniform(r, profile.arity()),
        None => cfg.detector.clone(),
    };
    let report = detect_stream(&loaded.victim, &profile, &det_cfg)?;

    let mut csv =
        String::from("window_index,is_attack,volume_deviation,flow_deviation,triggered\n");
    let dev = |v: &Verdict, k| {
        v.deviation_of(&profile, k)
            .map(|d| d.to_string())
            .unwrap_or_default()
    };
    for v in &report.verdicts {
        let triggered: Vec<&str> = v.triggered.iter().map(|m| m.name()).collect();
        writeln!(
            csv,
            "{},{},{},{},{}",
            v.window_index,
            v.is_attack,
            dev(v, MeasureKind::Volume),
            dev(v, MeasureKind::Flow),
            triggered.join("|")
        )
        .map_err(internal)?;
    }
    dir.write("verdicts.csv", csv.as_bytes())?;

    let scored = scoring(&report.alarms(), &loaded)?;
    dir.write_json(
        "report.json",
        &json!({
            "detector": det_cfg,
            "first_detection_window": report.first_detection_window,
            "detection_time_ms": report.detection_time_ms,
            "alarms": report.verdicts.iter().filter(|v| v.is_attack).count(),
            "eval": scored.as_ref().map(|s| &s.0),
            "confusion": scored.as_ref().map(|s| &s.1),
        }),
    )?;

    let mut inputs = vec![profile_path.to_owned()];
    inputs.extend(loaded.files);
    Ok(Run {
        seeds: Vec::new(),
        inputs,
        timestamps: loaded.timestamps,
    })
}

fn coop(cfg: &RunConfig, trace: &Path, dir: &mut OutputDir) -> Result<Run, CliError> {
    let set = &cfg.windowing.measure_set;
    let loaded = load_trace(trace, set, cfg.windowing.delta_ms, true)?;
    let edges = loaded.edges.as_ref().expect("edges requested");
    let windowing = WindowingConfig {
        delta_ms: loaded.delta_ms,
        measure_set: set.clone(),
    };
    let mut inputs = loaded.files.clone();

    let profiles = match &cfg.coop_training {
        Some(path) => {
            let training = load_trace(path, set, cfg.windowing.delta_ms, true)?;
            if training
                .truth
                .as_ref()
                .is_some_and(|t| t.iter().any(|x| *x))
            {
                return Err(CliError::Data(format!(
                    "coop training trace {} contains attack windows",
                    path.display()
                )));
            }
            inputs.extend(training.files.iter().cloned());
            CoopProfiles::train(
                &training.victim,
                training.edges.as_ref().expect("edges"),
                &windowing,
            )?
        }
        None => {
            let prefix = loaded
                .truth
                .as_ref()
                .and_then(|t| t.iter().position(|x| *x))
                .unwrap_or(loaded.victim.len());
            let edge_prefix: Vec<_> = edges.iter().map(|w| w[..prefix].to_vec()).collect();
            CoopProfiles::train(&loaded.victim[..prefix], &edge_prefix, &windowing)?
        }
    };

    let run = run_coop_simulation(&loaded.victim, edges, &profiles, &cfg.coop)?;
    let single = detect_stream(
        &loaded.victim,
        &profiles.central,
        &DetectorConfig::uniform(cfg.coop.central_r, profiles.central.arity()),
    )?;

    let mut csv = String::from("window_index,confirmed,sa_count,via,merged_flow_count\n");
    for v in &run.verdicts {
        writeln!(
            csv,
            "{},{},{},{},{}",
            v.window_index,
            v.confirmed,
            v.sa_count,
            v.via.map(|p| p.name()).unwrap_or(""),
            v.merged_flow_count
        )
        .map_err(internal)?;
    }
    dir.write("central_verdicts.csv", csv.as_bytes())?;

    let mut lines = String::new();
    for m in &run.messages {
        lines.push_str(&serde_json::to_string(m).map_err(internal)?);
        lines.push('\n');
    }
    dir.write("messages.jsonl", lines.as_bytes())?;

    let scored = scoring(&run.confirmations(), &loaded)?;
    let report: &CoopReport = &run.report;
    dir.write_json(
        "coop_report.json",
        &json!({
            "report": report,
            "single_point_first_detection_window": single.first_detection_window,
            "eval": scored.as_ref().map(|s| &s.0),
            "confusion": scored.as_ref().map(|s| &s.1),
        }),
    )?;
    Ok(Run {
        seeds: Vec::new(),
        inputs,
        timestamps: loaded.timestamps,
    })
}

fn roc(cfg: &RunConfig, dir: &mut OutputDir) -> Result<Run, CliError> {
    let runs = prepare_suite(&cfg.suite, &cfg.windowing)?;
    let rows = roc_sweep(&runs, &cfg.roc.r_values)?;
    let mut csv = String::from("r,R_d,R_fp,d,n,f,m\n");
    for row in &rows {
        let rep = &row.report;
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.point.r, rep.r_d, rep.r_fp, rep.d, rep.n, rep.f, rep.m
        )
        .map_err(internal)?;
    }
    dir.write("roc.csv", csv.as_bytes())?;
    dir.write_json("roc_reports.json", &rows)?;
    Ok(Run {
        seeds: cfg
            .suite
            .entries
            .iter()
            .flat_map(|e| e.seeds.iter().copied())
            .collect(),
        inputs: Vec::new(),
        timestamps: TraceTimestamps::default(),
    })
}
