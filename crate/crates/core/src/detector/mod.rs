//! Normal-profile threshold detection over windowed volume/flow measures.
//!
//! A window is anomalous when any measure exceeds its normal mean by
//! strictly more than `r_j * sigma_j`. A deviation exactly equal to the
//! threshold is not an attack.

mod profile;

use serde::{Deserialize, Serialize};

use crate::flow_model::{MeasureKind, WindowStats};

pub use profile::{build_profile, NormalProfile};

#[derive(Debug, thiserror::Error)]
pub enum DetectorError {
    #[error("at least 2 training windows are required, got {0}")]
    InsufficientTraining(usize),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error("no windows to detect on")]
    EmptyStream,
}

/// Per-measure tolerance factors. An infinite factor disables a measure
/// (its threshold is infinite regardless of sigma).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(with = "tolerance_serde")]
    pub tolerance_factors: Vec<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self::uniform(6.0, 2)
    }
}

impl DetectorConfig {
    /// The same factor for all `arity` measures.
    pub fn uniform(r: f64, arity: usize) -> Self {
        Self {
            tolerance_factors: vec![r; arity],
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if self.tolerance_factors.is_empty() {
            return Err(DetectorError::InvalidConfig("no tolerance factors".into()));
        }
        if let Some(r) = self
            .tolerance_factors
            .iter()
            .find(|r| r.is_nan() || **r <= 0.0)
        {
            return Err(DetectorError::InvalidConfig(format!(
                "tolerance factor {r} must be positive"
            )));
        }
        Ok(())
    }
}

mod tolerance_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Factor {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            if r.is_infinite() {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element(r)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Factor>::deserialize(d)?
            .into_iter()
            .map(|f| match f {
                Factor::Num(x) => Ok(x),
                Factor::Text(t) if matches!(t.as_str(), "inf" | "infinity") => Ok(f64::INFINITY),
                Factor::Text(t) => Err(de::Error::custom(format!(
                    "tolerance factor must be a number or \"inf\", got {t:?}"
                ))),
            })
            .collect()
    }
}

/// Per-measure detection thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub xi: Vec<f64>,
}

pub fn compute_thresholds(
    profile: &NormalProfile,
    cfg: &DetectorConfig,
) -> Result<Thresholds, DetectorError> {
    cfg.validate()?;
    if cfg.tolerance_factors.len() != profile.arity() {
        return Err(DetectorError::Schema(format!(
            "{} tolerance factors for {} measures",
            cfg.tolerance_factors.len(),
            profile.arity()
        )));
    }
    let xi = cfg
        .tolerance_factors
        .iter()
        .zip(&profile.std_devs)
        .map(|(r, sigma)| {
            if r.is_infinite() {
                f64::INFINITY
            } else {
                r * sigma
            }
        })
        .collect();
    Ok(Thresholds { xi })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub window_index: u64,
    pub is_attack: bool,
    /// Measures whose deviation strictly exceeded the threshold.
    pub triggered: Vec<MeasureKind>,
    /// Signed `observed - normal` per measure.
    pub deviations: Vec<f64>,
}

impl Verdict {
    pub fn deviation_of(&self, profile: &NormalProfile, kind: MeasureKind) -> Option<f64> {
        profile.index_of(kind).map(|i| self.deviations[i])
    }
}

pub fn detect_window(
    stats: &WindowStats,
    profile: &NormalProfile,
    thr: &Thresholds,
) -> Result<Verdict, DetectorError> {
    let arity = profile.arity();
    if stats.measures.len() != arity || thr.xi.len() != arity {
        return Err(DetectorError::Schema(format!(
            "window {} has {} measures, profile {arity}, thresholds {}",
            stats.window_index,
            stats.measures.len(),
            thr.xi.len()
        )));
    }
    let deviations: Vec<f64> = stats
        .measures
        .iter()
        .zip(&profile.means)
        .map(|(observed, normal)| observed - normal)
        .collect();
    let triggered: Vec<MeasureKind> = deviations
        .iter()
        .zip(&thr.xi)
        .zip(&profile.measures)
        .filter(|((dev, xi), _)| dev > xi)
        .map(|(_, kind)| *kind)
        .collect();
    Ok(Verdict {
        window_index: stats.window_index,
        is_attack: !triggered.is_empty(),
        triggered,
        deviations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub verdicts: Vec<Verdict>,
    pub first_detection_window: Option<u64>,
    pub detection_time_ms: Option<u64>,
}

impl DetectionReport {
    pub fn alarms(&self) -> Vec<bool> {
        self.verdicts.iter().map(|v| v.is_attack).collect()
    }
}

/// A profile paired with its thresholds for repeated per-window use.
#[derive(Debug, Clone)]
pub struct Detector {
    pub profile: NormalProfile,
    pub thresholds: Thresholds,
}

impl Detector {
    pub fn new(profile: NormalProfile, cfg: &DetectorConfig) -> Result<Self, DetectorError> {
        let thresholds = compute_thresholds(&profile, cfg)?;
        Ok(Self {
            profile,
            thresholds,
        })
    }

    pub fn check(&self, stats: &WindowStats) -> Result<Verdict, DetectorError> {
        detect_window(stats, &self.profile, &self.thresholds)
    }

    pub fn run(&self, windows: &[WindowStats]) -> Result<DetectionReport, DetectorError> {
        if windows.is_empty() {
            return Err(DetectorError::EmptyStream);
        }
        let verdicts = windows
            .iter()
            .map(|w| self.check(w))
            .collect::<Result<Vec<_>, _>>()?;
        let first_detection_window = verdicts
            .iter()
            .find(|v| v.is_attack)
            .map(|v| v.window_index);
        Ok(DetectionReport {
            detection_time_ms: first_detection_window.map(|w| w * self.profile.delta_ms),
            first_detection_window,
            verdicts,
        })
    }
}

pub fn detect_stream(
    windows: &[WindowStats],
    profile: &NormalProfile,
    cfg: &DetectorConfig,
) -> Result<DetectionReport, DetectorError> {
    Detector::new(profile.clone(), cfg)?.run(windows)
}
