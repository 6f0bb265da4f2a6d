use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{FlowId, FlowRecord};
use super::FlowModelError;

/// A traffic measure computed per monitoring window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// Total bytes observed in the window.
    Volume,
    /// Number of distinct flows that carried at least one byte.
    Flow,
}

impl MeasureKind {
    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::Volume => "volume",
            MeasureKind::Flow => "flow",
        }
    }

    /// Contribution of a single flow to this measure.
    fn per_flow(self, bytes: u64) -> f64 {
        match self {
            MeasureKind::Volume => bytes as f64,
            MeasureKind::Flow => {
                if bytes > 0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = FlowModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "volume" => Ok(MeasureKind::Volume),
            "flow" => Ok(MeasureKind::Flow),
            other => Err(FlowModelError::UnknownMeasure(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowingConfig {
    /// Window length in milliseconds.
    pub delta_ms: u64,
    pub measure_set: Vec<MeasureKind>,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        Self {
            delta_ms: 200,
            measure_set: vec![MeasureKind::Volume, MeasureKind::Flow],
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<(), FlowModelError> {
        if self.delta_ms == 0 {
            return Err(FlowModelError::InvalidConfig(
                "delta_ms must be positive".into(),
            ));
        }
        if self.measure_set.is_empty() {
            return Err(FlowModelError::InvalidConfig("measure_set is empty".into()));
        }
        let unique: BTreeSet<_> = self.measure_set.iter().collect();
        if unique.len() != self.measure_set.len() {
            return Err(FlowModelError::InvalidConfig(
                "measure_set contains duplicates".into(),
            ));
        }
        Ok(())
    }

    /// 1-based window owning `timestamp_ms`; windows are `((w-1)Δ, wΔ]`
    /// and timestamp 0 belongs to window 1.
    pub fn window_of(&self, timestamp_ms: u64) -> u64 {
        timestamp_ms.div_ceil(self.delta_ms).max(1)
    }
}

/// Aggregated measures of one tumbling monitoring window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub window_index: u64,
    pub window_end_ms: u64,
    pub volume_bytes: u64,
    pub flow_count: u64,
    /// Per-flow byte totals. `None` for summary windows loaded from a
    /// windowed-stats file, which do not carry per-flow detail.
    pub per_flow_bytes: Option<BTreeMap<FlowId, u64>>,
    /// Measure values in `measure_set` order.
    pub measures: Vec<f64>,
}

impl WindowStats {
    /// Builds a detailed window from its per-flow byte map. Flows with zero
    /// bytes are not active and are dropped.
    pub fn from_flows(
        window_index: u64,
        delta_ms: u64,
        mut per_flow_bytes: BTreeMap<FlowId, u64>,
        measure_set: &[MeasureKind],
    ) -> Self {
        per_flow_bytes.retain(|_, b| *b > 0);
        let volume_bytes = per_flow_bytes.values().sum();
        let flow_count = per_flow_bytes.len() as u64;
        let mut stats = Self {
            window_index,
            window_end_ms: window_index * delta_ms,
            volume_bytes,
            flow_count,
            per_flow_bytes: Some(per_flow_bytes),
            measures: Vec::new(),
        };
        stats.measures = measure_set.iter().map(|m| stats.measure(*m)).collect();
        stats
    }

    /// Builds a summary window (no per-flow detail).
    pub fn summary(
        window_index: u64,
        window_end_ms: u64,
        volume_bytes: u64,
        flow_count: u64,
        measure_set: &[MeasureKind],
    ) -> Self {
        let mut stats = Self {
            window_index,
            window_end_ms,
            volume_bytes,
            flow_count,
            per_flow_bytes: None,
            measures: Vec::new(),
        };
        stats.measures = measure_set.iter().map(|m| stats.measure(*m)).collect();
        stats
    }

    pub fn measure(&self, kind: MeasureKind) -> f64 {
        match kind {
            MeasureKind::Volume => self.volume_bytes as f64,
            MeasureKind::Flow => self.flow_count as f64,
        }
    }

    /// Ids of the flows active in this window, if per-flow detail is present.
    pub fn active_flows(&self) -> Option<Vec<FlowId>> {
        self.per_flow_bytes
            .as_ref()
            .map(|m| m.keys().cloned().collect())
    }
}

/// Partitions records into tumbling windows, emitting every window from 1 up
/// to the window of the last record (empty windows included).
pub fn window_partition(
    records: &[FlowRecord],
    cfg: &WindowingConfig,
) -> Result<Vec<WindowStats>, FlowModelError> {
    let count = records
        .iter()
        .map(|r| cfg.window_of(r.timestamp_ms))
        .max()
        .unwrap_or(0);
    window_partition_span(records, cfg, count)
}

/// Like [`window_partition`] but always emits exactly `window_count`
/// windows. Records beyond the span are an error.
pub fn window_partition_span(
    records: &[FlowRecord],
    cfg: &WindowingConfig,
    window_count: u64,
) -> Result<Vec<WindowStats>, FlowModelError> {
    cfg.validate()?;
    let mut buckets: Vec<BTreeMap<FlowId, u64>> = vec![BTreeMap::new(); window_count as usize];
    for (offset, rec) in records.iter().enumerate() {
        if !rec.is_consistent() {
            return Err(FlowModelError::RejectedRecord {
                offset,
                reason: "packets present on a zero-byte record".into(),
            });
        }
        let w = cfg.window_of(rec.timestamp_ms);
        if w > window_count {
            return Err(FlowModelError::RejectedRecord {
                offset,
                reason: format!(
                    "timestamp {} beyond window {window_count}",
                    rec.timestamp_ms
                ),
            });
        }
        if rec.bytes > 0 {
            *buckets[(w - 1) as usize]
                .entry(rec.flow_id.clone())
                .or_insert(0) += rec.bytes;
        }
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .map(|(i, flows)| {
            WindowStats::from_flows(i as u64 + 1, cfg.delta_ms, flows, &cfg.measure_set)
        })
        .collect())
}

/// Sums per-flow contributions for measure `j` of `measure_set`.
pub fn aggregate_measure(
    window: &WindowStats,
    measure_set: &[MeasureKind],
    j: usize,
) -> Result<f64, FlowModelError> {
    let kind = *measure_set.get(j).ok_or(FlowModelError::MeasureIndex {
        index: j,
        len: measure_set.len(),
    })?;
    match &window.per_flow_bytes {
        Some(flows) => Ok(flows.values().map(|b| kind.per_flow(*b)).sum()),
        None => Ok(window.measure(kind)),
    }
}
