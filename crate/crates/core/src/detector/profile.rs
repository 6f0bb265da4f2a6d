use serde::{Deserialize, Serialize};

use super::DetectorError;
use crate::flow_model::{MeasureKind, WindowStats, WindowingConfig};

/// Learned normal behaviour: per-measure mean and sample standard deviation
/// over `training_window_count` attack-free windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileFile", into = "ProfileFile")]
pub struct NormalProfile {
    pub measures: Vec<MeasureKind>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub training_window_count: usize,
    pub delta_ms: u64,
}

impl NormalProfile {
    pub fn arity(&self) -> usize {
        self.measures.len()
    }

    pub fn index_of(&self, kind: MeasureKind) -> Option<usize> {
        self.measures.iter().position(|m| *m == kind)
    }

    pub fn mean_of(&self, kind: MeasureKind) -> Option<f64> {
        self.index_of(kind).map(|i| self.means[i])
    }

    pub fn std_dev_of(&self, kind: MeasureKind) -> Option<f64> {
        self.index_of(kind).map(|i| self.std_devs[i])
    }

    /// True when any measure has zero spread, which makes its threshold 0.
    pub fn has_zero_spread(&self) -> bool {
        self.std_devs.contains(&0.0)
    }
}

/// Builds the normal profile from training windows.
///
/// Each column is sorted before summation so the result does not depend on
/// window order.
pub fn build_profile(
    training: &[WindowStats],
    cfg: &WindowingConfig,
) -> Result<NormalProfile, DetectorError> {
    let l = training.len();
    if l < 2 {
        return Err(DetectorError::InsufficientTraining(l));
    }
    let arity = cfg.measure_set.len();
    if let Some(w) = training.iter().find(|w| w.measures.len() != arity) {
        return Err(DetectorError::Schema(format!(
            "window {} has {} measures, expected {arity}",
            w.window_index,
            w.measures.len()
        )));
    }

    let mut means = Vec::with_capacity(arity);
    let mut std_devs = Vec::with_capacity(arity);
    for j in 0..arity {
        let mut column: Vec<f64> = training.iter().map(|w| w.measures[j]).collect();
        column.sort_by(f64::total_cmp);
        let mean = column.iter().sum::<f64>() / l as f64;
        let mut sq: Vec<f64> = column.iter().map(|x| (x - mean) * (x - mean)).collect();
        sq.sort_by(f64::total_cmp);
        let var = sq.iter().sum::<f64>() / (l - 1) as f64;
        means.push(mean);
        std_devs.push(var.sqrt());
    }

    Ok(NormalProfile {
        measures: cfg.measure_set.clone(),
        means,
        std_devs,
        training_window_count: l,
        delta_ms: cfg.delta_ms,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    delta_ms: u64,
    training_window_count: usize,
    measures: Vec<MeasureEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureEntry {
    name: MeasureKind,
    mean: f64,
    std_dev: f64,
}

impl From<NormalProfile> for ProfileFile {
    fn from(p: NormalProfile) -> Self {
        Self {
            delta_ms: p.delta_ms,
            training_window_count: p.training_window_count,
            measures: p
                .measures
                .iter()
                .zip(p.means.iter().zip(&p.std_devs))
                .map(|(name, (mean, std_dev))| MeasureEntry {
                    name: *name,
                    mean: *mean,
                    std_dev: *std_dev,
                })
                .collect(),
        }
    }
}

impl TryFrom<ProfileFile> for NormalProfile {
    type Error = String;

    fn try_from(f: ProfileFile) -> Result<Self, Self::Error> {
        if f.training_window_count < 2 {
            return Err("training_window_count must be at least 2".into());
        }
        if f.delta_ms == 0 {
            return Err("delta_ms must be positive".into());
        }
        if f.measures.is_empty() {
            return Err("profile has no measures".into());
        }
        if f.measures
            .iter()
            .any(|m| m.std_dev.is_nan() || m.std_dev < 0.0 || !m.mean.is_finite())
        {
            return Err("std_dev must be non-negative and mean finite".into());
        }
        Ok(Self {
            measures: f.measures.iter().map(|m| m.name).collect(),
            means: f.measures.iter().map(|m| m.mean).collect(),
            std_devs: f.measures.iter().map(|m| m.std_dev).collect(),
            training_window_count: f.training_window_count,
            delta_ms: f.delta_ms,
        })
    }
}
