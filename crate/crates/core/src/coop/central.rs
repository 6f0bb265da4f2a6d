use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CoopConfig, CoopError, QueryResponse, SuspiciousAlarm};
use crate::detector::{Detector, DetectorConfig, NormalProfile};
use crate::flow_model::{FlowId, MeasureKind, WindowStats};
use crate::simulator::EdgeId;

/// How the central detector reached a confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationPath {
    SaQuorum,
    CentralCheck,
    QueryConfirmed,
}

impl ConfirmationPath {
    pub fn name(self) -> &'static str {
        match self {
            ConfirmationPath::SaQuorum => "sa_quorum",
            ConfirmationPath::CentralCheck => "central_check",
            ConfirmationPath::QueryConfirmed => "query_confirmed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralVerdict {
    pub window_index: u64,
    pub confirmed: bool,
    /// Distinct edges that alarmed in this window.
    pub sa_count: usize,
    pub via: Option<ConfirmationPath>,
    /// Distinct flows in the union of every flow list held after this step.
    pub merged_flow_count: usize,
    pub queries_issued: usize,
    /// Messages plus distinct flow ids held while processing the window.
    pub state_size: usize,
}

/// Route from the central detector to the edge detectors.
pub trait EdgeQuery {
    fn edges(&self) -> Vec<EdgeId>;
    fn query(&mut self, edge: EdgeId, window: u64) -> Result<QueryResponse, CoopError>;
}

/// Central detector at the victim's access router.
#[derive(Debug, Clone)]
pub struct CentralDetector {
    detector: Detector,
    quorum: usize,
    query_on: bool,
}

impl CentralDetector {
    pub fn new(profile: NormalProfile, cfg: &CoopConfig, edges: usize) -> Result<Self, CoopError> {
        cfg.validate()?;
        let detector = Detector::new(
            profile.clone(),
            &DetectorConfig::uniform(cfg.central_r, profile.arity()),
        )?;
        Ok(Self {
            detector,
            quorum: cfg.quorum(edges),
            query_on: cfg.query_on,
        })
    }

    pub fn quorum(&self) -> usize {
        self.quorum
    }

    pub fn profile(&self) -> &NormalProfile {
        &self.detector.profile
    }

    /// Window stats assembled from edge-supplied volumes and flow lists.
    pub fn aggregate<'a, I>(&self, window: u64, parts: I) -> (WindowStats, usize)
    where
        I: IntoIterator<Item = (u64, &'a [FlowId])>,
    {
        let mut volume = 0u64;
        let mut flows: BTreeSet<&FlowId> = BTreeSet::new();
        for (bytes, list) in parts {
            volume += bytes;
            flows.extend(list);
        }
        let profile = self.profile();
        let stats = WindowStats::summary(
            window,
            window * profile.delta_ms,
            volume,
            flows.len() as u64,
            &profile.measures,
        );
        (stats, flows.len())
    }

    /// The central two-measure check over aggregated stats.
    pub fn check(&self, aggregated: &WindowStats) -> Result<bool, CoopError> {
        Ok(self.detector.check(aggregated)?.is_attack)
    }

    fn sa_volume(&self, sa: &SuspiciousAlarm) -> u64 {
        self.profile()
            .index_of(MeasureKind::Volume)
            .and_then(|i| sa.measures.get(i))
            .map_or(0, |v| *v as u64)
    }
}

/// One central decision for window `own_stats.window_index`.
///
/// `own_stats` are the access router's own window counters. They are used
/// only to decide whether silent edges must be queried; confirmations rest
/// on edge-supplied data.
pub fn central_step(
    own_stats: &WindowStats,
    sas: &[SuspiciousAlarm],
    central: &CentralDetector,
    bus: &mut dyn EdgeQuery,
) -> Result<CentralVerdict, CoopError> {
    let window = own_stats.window_index;
    if let Some(bad) = sas.iter().find(|s| s.window_index != window) {
        return Err(CoopError::Protocol(format!(
            "alarm from {} for window {} delivered in window {window}",
            bad.detector_id, bad.window_index
        )));
    }
    let reporting: BTreeSet<EdgeId> = sas.iter().map(|s| s.detector_id).collect();
    if reporting.len() != sas.len() {
        return Err(CoopError::Protocol(format!(
            "duplicate alarms in window {window}"
        )));
    }
    let sa_count = reporting.len();

    let (partial, partial_flows) = central.aggregate(
        window,
        sas.iter()
            .map(|s| (central.sa_volume(s), s.active_flows.as_slice())),
    );
    let verdict = |confirmed, via, merged, queries, state| CentralVerdict {
        window_index: window,
        confirmed,
        sa_count,
        via,
        merged_flow_count: merged,
        queries_issued: queries,
        state_size: state,
    };
    let partial_state = sa_count + partial_flows;

    if sa_count >= central.quorum {
        return Ok(verdict(
            true,
            Some(ConfirmationPath::SaQuorum),
            partial_flows,
            0,
            partial_state,
        ));
    }
    if sa_count > 0 && central.check(&partial)? {
        return Ok(verdict(
            true,
            Some(ConfirmationPath::CentralCheck),
            partial_flows,
            0,
            partial_state,
        ));
    }

    let edges = bus.edges();
    let silent: Vec<EdgeId> = edges
        .iter()
        .copied()
        .filter(|e| !reporting.contains(e))
        .collect();
    if !central.query_on || silent.is_empty() || !central.check(own_stats)? {
        return Ok(verdict(false, None, partial_flows, 0, partial_state));
    }

    let responses = silent
        .iter()
        .map(|e| bus.query(*e, window))
        .collect::<Result<Vec<_>, _>>()?;
    let (complete, merged) = central.aggregate(
        window,
        sas.iter()
            .map(|s| (central.sa_volume(s), s.active_flows.as_slice()))
            .chain(
                responses
                    .iter()
                    .map(|r| (r.stats.volume_bytes, r.active_flows.as_slice())),
            ),
    );
    let state = sa_count + responses.len() + merged;
    let confirmed = central.check(&complete)?;
    Ok(verdict(
        confirmed,
        confirmed.then_some(ConfirmationPath::QueryConfirmed),
        merged,
        silent.len(),
        state,
    ))
}
