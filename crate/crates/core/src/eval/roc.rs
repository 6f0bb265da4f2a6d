use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{attack_intervals, score_run, AttackInterval, EvalError, EvalReport};
use crate::detector::{build_profile, Detector, DetectorConfig, NormalProfile};
use crate::flow_model::{WindowStats, WindowingConfig};
use crate::simulator::{build_topology, run_scenario, AttackMode, ScenarioSpec, TopologySpec};

/// A family of seeded runs sharing topology and scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteEntry {
    pub name: String,
    pub topology: TopologySpec,
    pub scenario: ScenarioSpec,
    pub seeds: Vec<u64>,
}

impl Default for SuiteEntry {
    fn default() -> Self {
        Self {
            name: "default".into(),
            topology: TopologySpec::default(),
            scenario: ScenarioSpec::default(),
            seeds: vec![1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub entries: Vec<SuiteEntry>,
    /// The training run of seed `s` uses seed `s + train_seed_offset`.
    pub train_seed_offset: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        let entry = |name: &str, zombies, mode, rate, seeds: std::ops::Range<u64>| SuiteEntry {
            name: name.into(),
            topology: TopologySpec {
                zombies_total: zombies,
                ..Default::default()
            },
            scenario: ScenarioSpec {
                attack_mode: mode,
                attack_rate_mbps: rate,
                ..Default::default()
            },
            seeds: seeds.collect(),
        };
        Self {
            entries: vec![
                entry("high", 100, AttackMode::ConstantHigh, 3.0, 1..5),
                entry("low", 100, AttackMode::ConstantLow, 0.1, 5..9),
                entry("varied", 100, AttackMode::Varied, 1.8, 9..13),
            ],
            train_seed_offset: 1_000_000,
        }
    }
}

impl SuiteConfig {
    pub fn run_count(&self) -> usize {
        self.entries.iter().map(|e| e.seeds.len()).sum()
    }
}

/// A simulated attack run with the profile trained on its paired
/// attack-free run.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub name: String,
    pub seed: u64,
    pub profile: NormalProfile,
    pub windows: Vec<WindowStats>,
    pub truth: Vec<bool>,
    pub intervals: Vec<AttackInterval>,
    pub delta_ms: u64,
}

/// Simulates every (entry, seed) pair: an attack-free training run and the
/// attack run on the same topology. Runs execute in parallel; output order
/// follows the suite.
pub fn prepare_suite(
    suite: &SuiteConfig,
    windowing: &WindowingConfig,
) -> Result<Vec<PreparedRun>, EvalError> {
    let jobs: Vec<(&SuiteEntry, u64)> = suite
        .entries
        .iter()
        .flat_map(|e| e.seeds.iter().map(move |s| (e, *s)))
        .collect();
    jobs.par_iter()
        .map(|(entry, seed)| {
            let topology = build_topology(&entry.topology, *seed)?;
            let training = ScenarioSpec {
                attack_mode: AttackMode::None,
                rng_seed: seed.wrapping_add(suite.train_seed_offset),
                ..entry.scenario.clone()
            };
            let attack = ScenarioSpec {
                rng_seed: *seed,
                ..entry.scenario.clone()
            };
            let normal = run_scenario(&topology, &training, windowing)?;
            let trace = run_scenario(&topology, &attack, windowing)?;
            let profile = build_profile(&normal.victim_windows, windowing)?;
            Ok(PreparedRun {
                name: entry.name.clone(),
                seed: *seed,
                profile,
                intervals: attack_intervals(
                    &trace.truth,
                    trace.delta_ms,
                    trace.t_a_ms,
                    trace.t_b_ms,
                ),
                windows: trace.victim_windows,
                truth: trace.truth,
                delta_ms: trace.delta_ms,
            })
        })
        .collect()
}

pub fn evaluate_run(run: &PreparedRun, cfg: &DetectorConfig) -> Result<EvalReport, EvalError> {
    let report = Detector::new(run.profile.clone(), cfg)?.run(&run.windows)?;
    score_run(&report.alarms(), &run.truth, &run.intervals, run.delta_ms)
}

/// Pooled report of one detector configuration over prepared runs.
pub fn score_suite(runs: &[PreparedRun], cfg: &DetectorConfig) -> Result<EvalReport, EvalError> {
    let reports = runs
        .par_iter()
        .map(|r| evaluate_run(r, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::pool(&reports))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub r: f64,
    #[serde(rename = "R_d")]
    pub r_d: f64,
    #[serde(rename = "R_fp")]
    pub r_fp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub point: RocPoint,
    pub report: EvalReport,
}

/// Scores every run at each tolerance factor (same factor for all
/// measures), pooling counts across runs.
pub fn roc_sweep(runs: &[PreparedRun], r_values: &[f64]) -> Result<Vec<RocRow>, EvalError> {
    if r_values.is_empty() {
        return Err(EvalError::Sweep("no tolerance factors".into()));
    }
    if r_values
        .windows(2)
        .any(|p| p[0].partial_cmp(&p[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(EvalError::Sweep(
            "tolerance factors must be strictly ascending".into(),
        ));
    }
    r_values
        .iter()
        .map(|r| {
            let arity = runs.first().map_or(2, |run| run.profile.arity());
            let report = score_suite(runs, &DetectorConfig::uniform(*r, arity))?;
            Ok(RocRow {
                point: RocPoint {
                    r: *r,
                    r_d: report.r_d,
                    r_fp: report.r_fp,
                },
                report,
            })
        })
        .collect()
}
