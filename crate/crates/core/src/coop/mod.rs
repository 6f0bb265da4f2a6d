//! Cooperative detection between edge routers and the victim's access router.
//!
//! Each edge router runs a local detector against its own normal profile and
//! reports a [`SuspiciousAlarm`] carrying its measures and active flow list
//! when a local threshold is exceeded. The central detector confirms an
//! attack when enough distinct edges alarm in the same window, when the
//! alarms it holds already push the aggregate over its own thresholds, or,
//! when its own window counters look anomalous, after querying the silent
//! edges and re-checking on the fully merged data.

mod central;
mod driver;

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::detector::{Detector, DetectorConfig, DetectorError, NormalProfile};
use crate::flow_model::{FlowId, MeasureKind, WindowStats};
use crate::simulator::EdgeId;

pub use central::{central_step, CentralDetector, CentralVerdict, ConfirmationPath, EdgeQuery};
pub use driver::{
    run_coop_simulation, CoopProfiles, CoopReport, CoopRun, EdgeBus, Message, MessageKind,
    ViaCounts,
};

#[derive(Debug, thiserror::Error)]
pub enum CoopError {
    #[error("window {window} evicted from {edge} (retains {retention} windows, latest {latest})")]
    StaleWindow {
        edge: EdgeId,
        window: u64,
        retention: usize,
        latest: u64,
    },
    #[error("window {window} not yet observed by {edge}")]
    FutureWindow { edge: EdgeId, window: u64 },
    #[error("no route to {0}")]
    UnknownEdge(EdgeId),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("invalid coop config: {0}")]
    Config(String),
    #[error("edge window {0} lacks per-flow detail")]
    MissingFlows(u64),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoopConfig {
    /// Distinct alarming edges needed for a quorum; defaults to
    /// `ceil(edges / 4)` when absent.
    pub sa_threshold: Option<usize>,
    pub local_r: f64,
    pub central_r: f64,
    pub query_on: bool,
    /// Windows of stats each edge keeps for answering queries.
    pub retention: usize,
}

impl Default for CoopConfig {
    fn default() -> Self {
        Self {
            sa_threshold: None,
            local_r: 6.0,
            central_r: 6.0,
            query_on: true,
            retention: 16,
        }
    }
}

impl CoopConfig {
    pub fn validate(&self) -> Result<(), CoopError> {
        if self.sa_threshold == Some(0) {
            return Err(CoopError::Config("sa_threshold must be at least 1".into()));
        }
        if [self.local_r, self.central_r]
            .iter()
            .any(|r| r.is_nan() || *r <= 0.0)
        {
            return Err(CoopError::Config(
                "tolerance factors must be positive".into(),
            ));
        }
        if self.retention == 0 {
            return Err(CoopError::Config("retention must be at least 1".into()));
        }
        Ok(())
    }

    pub fn quorum(&self, edges: usize) -> usize {
        self.sa_threshold
            .unwrap_or_else(|| edges.div_ceil(4).max(1))
    }
}

/// Alarm an edge detector sends when one of its local thresholds trips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspiciousAlarm {
    pub detector_id: EdgeId,
    pub window_index: u64,
    pub measures: Vec<f64>,
    pub active_flows: Vec<FlowId>,
    pub triggered: Vec<MeasureKind>,
}

/// An edge's answer to a central query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryResponse {
    pub detector_id: EdgeId,
    pub window_index: u64,
    pub stats: WindowStats,
    pub active_flows: Vec<FlowId>,
}

/// Cardinality of the union of all flow lists.
pub fn merge_flow_lists<'a, I>(lists: I) -> usize
where
    I: IntoIterator<Item = &'a [FlowId]>,
{
    lists.into_iter().flatten().collect::<BTreeSet<_>>().len()
}

fn flows_of(stats: &WindowStats) -> Result<Vec<FlowId>, CoopError> {
    stats
        .active_flows()
        .ok_or(CoopError::MissingFlows(stats.window_index))
}

/// Local detection at one edge: an alarm iff the edge's own detector at
/// `cfg.local_r` flags the window.
pub fn local_detect(
    edge: EdgeId,
    edge_stats: &WindowStats,
    edge_profile: &NormalProfile,
    cfg: &CoopConfig,
) -> Result<Option<SuspiciousAlarm>, CoopError> {
    let detector = Detector::new(
        edge_profile.clone(),
        &DetectorConfig::uniform(cfg.local_r, edge_profile.arity()),
    )?;
    alarm_from(edge, edge_stats, &detector)
}

fn alarm_from(
    edge: EdgeId,
    stats: &WindowStats,
    detector: &Detector,
) -> Result<Option<SuspiciousAlarm>, CoopError> {
    let verdict = detector.check(stats)?;
    if !verdict.is_attack {
        return Ok(None);
    }
    Ok(Some(SuspiciousAlarm {
        detector_id: edge,
        window_index: stats.window_index,
        measures: stats.measures.clone(),
        active_flows: flows_of(stats)?,
        triggered: verdict.triggered,
    }))
}

/// Edge-router detector state: its thresholds and a bounded window history.
#[derive(Debug, Clone)]
pub struct LocalDetector {
    pub id: EdgeId,
    detector: Detector,
    retained: VecDeque<WindowStats>,
    retention: usize,
}

impl LocalDetector {
    pub fn new(id: EdgeId, profile: NormalProfile, cfg: &CoopConfig) -> Result<Self, CoopError> {
        let detector = Detector::new(
            profile.clone(),
            &DetectorConfig::uniform(cfg.local_r, profile.arity()),
        )?;
        Ok(Self {
            id,
            detector,
            retained: VecDeque::with_capacity(cfg.retention),
            retention: cfg.retention,
        })
    }

    /// Records the window and returns an alarm if it trips a local threshold.
    pub fn observe(&mut self, stats: WindowStats) -> Result<Option<SuspiciousAlarm>, CoopError> {
        let alarm = alarm_from(self.id, &stats, &self.detector)?;
        if self.retained.len() == self.retention {
            self.retained.pop_front();
        }
        self.retained.push_back(stats);
        Ok(alarm)
    }

    pub fn retained_windows(&self) -> usize {
        self.retained.len()
    }

    pub fn latest_window(&self) -> Option<u64> {
        self.retained.back().map(|w| w.window_index)
    }

    pub fn query(&self, window: u64) -> Result<QueryResponse, CoopError> {
        let latest = self.latest_window().ok_or(CoopError::FutureWindow {
            edge: self.id,
            window,
        })?;
        if window > latest {
            return Err(CoopError::FutureWindow {
                edge: self.id,
                window,
            });
        }
        let stats = self
            .retained
            .iter()
            .find(|w| w.window_index == window)
            .ok_or(CoopError::StaleWindow {
                edge: self.id,
                window,
                retention: self.retention,
                latest,
            })?;
        Ok(QueryResponse {
            detector_id: self.id,
            window_index: window,
            stats: stats.clone(),
            active_flows: flows_of(stats)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    const SET: [MeasureKind; 2] = [MeasureKind::Volume, MeasureKind::Flow];

    fn ids(xs: &[&str]) -> Vec<FlowId> {
        xs.iter().map(|x| FlowId::from(*x)).collect()
    }

    fn detailed(window: u64, flows: &[(&str, u64)]) -> WindowStats {
        let map: BTreeMap<FlowId, u64> =
            flows.iter().map(|(f, b)| (FlowId::from(*f), *b)).collect();
        WindowStats::from_flows(window, 200, map, &SET)
    }

    fn profile(mean_v: f64, sd_v: f64, mean_f: f64, sd_f: f64) -> NormalProfile {
        NormalProfile {
            measures: SET.to_vec(),
            means: vec![mean_v, mean_f],
            std_devs: vec![sd_v, sd_f],
            training_window_count: 50,
            delta_ms: 200,
        }
    }

    #[test]
    fn merge_examples() {
        let a = ids(&["A", "B", "C"]);
        let b = ids(&["B", "C", "D"]);
        assert_eq!(merge_flow_lists([a.as_slice(), b.as_slice()]), 4);
        assert_eq!(merge_flow_lists(Vec::<&[FlowId]>::new()), 0);
        assert_eq!(merge_flow_lists([&[][..], &[][..]]), 0);
        let c = ids(&["1", "2", "3"]);
        let d = ids(&["4", "5", "6", "7", "8"]);
        assert_eq!(merge_flow_lists([c.as_slice(), d.as_slice()]), 8);
    }

    #[test]
    fn quiet_edge_sends_nothing() {
        let p = profile(300.0, 10.0, 2.0, 1.0);
        let w = detailed(1, &[("a", 150), ("b", 150)]);
        assert_eq!(
            local_detect(EdgeId(0), &w, &p, &CoopConfig::default()).unwrap(),
            None
        );
    }

    #[test]
    fn volume_surge_raises_alarm_with_flow_list() {
        let p = profile(300.0, 10.0, 2.0, 1.0);
        // local threshold 60; deviation 120
        let w = detailed(4, &[("a", 150), ("b", 270)]);
        let sa = local_detect(EdgeId(3), &w, &p, &CoopConfig::default())
            .unwrap()
            .unwrap();
        assert_eq!(sa.detector_id, EdgeId(3));
        assert_eq!(sa.window_index, 4);
        assert_eq!(sa.triggered, vec![MeasureKind::Volume]);
        assert_eq!(sa.active_flows, ids(&["a", "b"]));
        assert_eq!(sa.measures, vec![420.0, 2.0]);
    }

    #[test]
    fn diluted_load_stays_under_every_local_threshold() {
        let p = profile(1000.0, 100.0, 10.0, 2.0);
        // local thresholds 600 / 12; each edge carries half of that
        for e in 0..10 {
            let mut flows: Vec<(String, u64)> =
                (0..10).map(|i| (format!("c{e}-{i}"), 100)).collect();
            flows.extend((0..6).map(|i| (format!("z{e}-{i}"), 50)));
            let map = flows
                .into_iter()
                .map(|(f, b)| (FlowId::new(f), b))
                .collect();
            let w = WindowStats::from_flows(1, 200, map, &SET);
            assert_eq!(w.volume_bytes, 1300);
            assert!(local_detect(EdgeId(e), &w, &p, &CoopConfig::default())
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn retention_and_queries() {
        let cfg = CoopConfig {
            retention: 4,
            ..Default::default()
        };
        let mut local = LocalDetector::new(EdgeId(1), profile(10.0, 1.0, 1.0, 1.0), &cfg).unwrap();
        for w in 1..=10 {
            local.observe(detailed(w, &[("x", 10)])).unwrap();
        }
        assert_eq!(local.retained_windows(), 4);
        let current = local.query(10).unwrap();
        assert_eq!(current.stats.volume_bytes, 10);
        assert_eq!(current.active_flows, ids(&["x"]));
        assert!(local.query(7).is_ok());
        // ω − Q − 1 with ω = 10, Q = 4
        assert!(matches!(
            local.query(5),
            Err(CoopError::StaleWindow { window: 5, .. })
        ));
        assert!(matches!(local.query(6), Err(CoopError::StaleWindow { .. })));
        assert!(matches!(
            local.query(11),
            Err(CoopError::FutureWindow { .. })
        ));
    }

    #[test]
    fn config_checks() {
        assert!(CoopConfig {
            sa_threshold: Some(0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CoopConfig {
            retention: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(CoopConfig {
            local_r: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(CoopConfig::default().quorum(8), 2);
        assert_eq!(CoopConfig::default().quorum(10), 3);
        assert_eq!(CoopConfig::default().quorum(1), 1);
    }
}
