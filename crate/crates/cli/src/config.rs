use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use volflow::coop::CoopConfig;
use volflow::detector::DetectorConfig;
use volflow::eval::SuiteConfig;
use volflow::flow_model::WindowingConfig;
use volflow::simulator::{ScenarioSpec, TopologySpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocSection {
    pub r_values: Vec<f64>,
}

impl Default for RocSection {
    fn default() -> Self {
        Self {
            r_values: (1..=12).map(f64::from).collect(),
        }
    }
}

/// Every tunable of every command. Commands read the sections they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub windowing: WindowingConfig,
    pub topology: TopologySpec,
    pub scenario: ScenarioSpec,
    pub detector: DetectorConfig,
    pub coop: CoopConfig,
    /// Attack-free simulate output used to train coop profiles. When
    /// absent, the attack-free prefix of the coop input trace is used.
    pub coop_training: Option<PathBuf>,
    pub suite: SuiteConfig,
    pub roc: RocSection,
}

fn parse_override(item: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
    let path: Vec<String> = key.split('.').map(str::to_owned).collect();
    if path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("bad key {key:?} in --set")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((path, value))
}

fn set_path(root: &mut Value, path: &[String], value: Value) -> Result<(), CliError> {
    let mut node = root;
    for (i, key) in path.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "--set {}: `{}` is not an object",
                path.join("."),
                path[..i].join(".")
            ))
        })?;
        if i + 1 == path.len() {
            obj.insert(key.clone(), value);
            return Ok(());
        }
        node = obj
            .entry(key.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Loads a config document (or defaults), applies `--set` overrides and the
/// seed override, and deserializes with field-path diagnostics.
pub fn load(
    path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    let mut doc = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for item in overrides {
        let (key, value) = parse_override(item)?;
        set_path(&mut doc, &key, value)?;
    }
    if let Some(seed) = seed {
        set_path(
            &mut doc,
            &["scenario".into(), "rng_seed".into()],
            seed.into(),
        )?;
    }
    from_value(doc)
}

pub fn from_value(doc: Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let at = e.path().to_string();
        CliError::Config(format!("at `{at}`: {}", e.into_inner()))
    })
}

impl RunConfig {
    pub fn validate(&self) -> Result<Vec<String>, CliError> {
        let cfg = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
        self.windowing.validate().map_err(|e| cfg(&e))?;
        self.topology.validate().map_err(|e| cfg(&e))?;
        self.detector.validate().map_err(|e| cfg(&e))?;
        self.coop.validate().map_err(|e| cfg(&e))?;
        let warnings = self
            .scenario
            .validate(self.windowing.delta_ms)
            .map_err(|e| cfg(&e))?;
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_by_dotted_path() {
        let c = load(
            None,
            &[
                "scenario.attack_rate_mbps=0.1".into(),
                "scenario.attack_mode=constant_low".into(),
            ],
            Some(9),
        )
        .unwrap();
        assert_eq!(c.scenario.attack_rate_mbps, 0.1);
        assert_eq!(c.scenario.rng_seed, 9);
        assert_eq!(
            c.scenario.attack_mode,
            volflow::simulator::AttackMode::ConstantLow
        );
    }

    #[test]
    fn bad_field_reports_path() {
        let err = load(None, &["scenario.attack_rate_mbps=\"fast\"".into()], None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario.attack_rate_mbps"), "{msg}");
        assert_eq!(err.exit_code(), 2);

        let err = load(None, &["topology.routers=3".into()], None).unwrap_err();
        assert!(err.to_string().contains("topology"), "{err}");
    }

    #[test]
    fn malformed_override() {
        assert!(load(None, &["noequals".into()], None).is_err());
        assert!(load(None, &["a..b=1".into()], None).is_err());
    }
}
