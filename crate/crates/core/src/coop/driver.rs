use serde::{Deserialize, Serialize};

use super::central::{central_step, CentralDetector, CentralVerdict, ConfirmationPath, EdgeQuery};
use super::{CoopConfig, CoopError, LocalDetector, QueryResponse, SuspiciousAlarm};
use crate::detector::{build_profile, NormalProfile};
use crate::flow_model::{FlowId, WindowStats, WindowingConfig};
use crate::simulator::EdgeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Sa,
    Query,
    Resp,
}

/// One protocol message, as exported to JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "type")]
    pub kind: MessageKind,
    pub detector_id: EdgeId,
    pub window_index: u64,
    pub measures: Vec<f64>,
    pub flows: Vec<FlowId>,
}

impl From<&SuspiciousAlarm> for Message {
    fn from(sa: &SuspiciousAlarm) -> Self {
        Self {
            kind: MessageKind::Sa,
            detector_id: sa.detector_id,
            window_index: sa.window_index,
            measures: sa.measures.clone(),
            flows: sa.active_flows.clone(),
        }
    }
}

/// Normal profiles for the central detector and for each edge, each
/// trained on its own attack-free windows.
#[derive(Debug, Clone, PartialEq)]
pub struct CoopProfiles {
    pub central: NormalProfile,
    pub edges: Vec<NormalProfile>,
}

impl CoopProfiles {
    pub fn train(
        victim_windows: &[WindowStats],
        edge_windows: &[Vec<WindowStats>],
        windowing: &WindowingConfig,
    ) -> Result<Self, CoopError> {
        Ok(Self {
            central: build_profile(victim_windows, windowing)?,
            edges: edge_windows
                .iter()
                .map(|w| build_profile(w, windowing))
                .collect::<Result<_, _>>()?,
        })
    }
}

/// Synchronous in-window transport between the central detector and the
/// edge detectors. Every query and response is logged.
#[derive(Debug)]
pub struct EdgeBus {
    locals: Vec<LocalDetector>,
    log: Vec<Message>,
}

impl EdgeBus {
    pub fn new(locals: Vec<LocalDetector>) -> Self {
        Self {
            locals,
            log: Vec::new(),
        }
    }

    pub fn locals(&self) -> &[LocalDetector] {
        &self.locals
    }

    pub fn local_mut(&mut self, edge: EdgeId) -> Result<&mut LocalDetector, CoopError> {
        self.locals
            .iter_mut()
            .find(|l| l.id == edge)
            .ok_or(CoopError::UnknownEdge(edge))
    }

    pub fn take_log(&mut self) -> Vec<Message> {
        std::mem::take(&mut self.log)
    }
}

impl EdgeQuery for EdgeBus {
    fn edges(&self) -> Vec<EdgeId> {
        self.locals.iter().map(|l| l.id).collect()
    }

    fn query(&mut self, edge: EdgeId, window: u64) -> Result<QueryResponse, CoopError> {
        self.log.push(Message {
            kind: MessageKind::Query,
            detector_id: edge,
            window_index: window,
            measures: Vec::new(),
            flows: Vec::new(),
        });
        let resp = self
            .locals
            .iter()
            .find(|l| l.id == edge)
            .ok_or(CoopError::UnknownEdge(edge))?
            .query(window)?;
        self.log.push(Message {
            kind: MessageKind::Resp,
            detector_id: edge,
            window_index: window,
            measures: resp.stats.measures.clone(),
            flows: resp.active_flows.clone(),
        });
        Ok(resp)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViaCounts {
    pub sa_quorum: usize,
    pub central_check: usize,
    pub query_confirmed: usize,
}

/// Message counters and state sizes of one cooperative run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoopReport {
    pub edges: usize,
    pub windows: usize,
    pub quorum: usize,
    pub sas_sent: usize,
    pub queries_issued: usize,
    pub responses_received: usize,
    pub confirmations: usize,
    pub via: ViaCounts,
    pub first_confirmation_window: Option<u64>,
    /// Windows of history held by each edge at the end of the run.
    pub per_edge_retained_windows: Vec<usize>,
    /// Largest per-window central state (messages plus distinct flows).
    pub max_central_state: usize,
    /// Largest number of distinct flows reported to the central in a window.
    pub max_flows_reported: usize,
}

#[derive(Debug, Clone)]
pub struct CoopRun {
    pub verdicts: Vec<CentralVerdict>,
    pub report: CoopReport,
    pub messages: Vec<Message>,
}

impl CoopRun {
    pub fn confirmations(&self) -> Vec<bool> {
        self.verdicts.iter().map(|v| v.confirmed).collect()
    }
}

/// Drives local detection on every edge and one central step per window.
/// `victim_windows` are the access router's own counters; edge windows
/// must carry per-flow detail.
pub fn run_coop_simulation(
    victim_windows: &[WindowStats],
    edge_windows: &[Vec<WindowStats>],
    profiles: &CoopProfiles,
    cfg: &CoopConfig,
) -> Result<CoopRun, CoopError> {
    cfg.validate()?;
    if edge_windows.len() != profiles.edges.len() {
        return Err(CoopError::Protocol(format!(
            "{} edge streams but {} edge profiles",
            edge_windows.len(),
            profiles.edges.len()
        )));
    }
    if let Some(e) = edge_windows
        .iter()
        .position(|w| w.len() != victim_windows.len())
    {
        return Err(CoopError::Protocol(format!(
            "edge {e} has {} windows, victim has {}",
            edge_windows[e].len(),
            victim_windows.len()
        )));
    }

    let locals = profiles
        .edges
        .iter()
        .enumerate()
        .map(|(i, p)| LocalDetector::new(EdgeId(i as u32), p.clone(), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bus = EdgeBus::new(locals);
    let central = CentralDetector::new(profiles.central.clone(), cfg, edge_windows.len())?;

    let mut verdicts = Vec::with_capacity(victim_windows.len());
    let mut messages = Vec::new();
    let mut via = ViaCounts::default();
    let mut sas_sent = 0;
    let mut max_flows_reported = 0;

    for (w, own) in victim_windows.iter().enumerate() {
        let mut sas = Vec::new();
        for (e, stream) in edge_windows.iter().enumerate() {
            if let Some(sa) = bus
                .local_mut(EdgeId(e as u32))?
                .observe(stream[w].clone())?
            {
                messages.push(Message::from(&sa));
                sas.push(sa);
            }
        }
        sas_sent += sas.len();
        let verdict = central_step(own, &sas, &central, &mut bus)?;
        messages.extend(bus.take_log());
        match verdict.via {
            Some(ConfirmationPath::SaQuorum) => via.sa_quorum += 1,
            Some(ConfirmationPath::CentralCheck) => via.central_check += 1,
            Some(ConfirmationPath::QueryConfirmed) => via.query_confirmed += 1,
            None => {}
        }
        max_flows_reported = max_flows_reported.max(verdict.merged_flow_count);
        verdicts.push(verdict);
    }

    let queries_issued = verdicts.iter().map(|v| v.queries_issued).sum();
    let report = CoopReport {
        edges: edge_windows.len(),
        windows: victim_windows.len(),
        quorum: central.quorum(),
        sas_sent,
        queries_issued,
        responses_received: queries_issued,
        confirmations: verdicts.iter().filter(|v| v.confirmed).count(),
        via,
        first_confirmation_window: verdicts
            .iter()
            .find(|v| v.confirmed)
            .map(|v| v.window_index),
        per_edge_retained_windows: bus.locals().iter().map(|l| l.retained_windows()).collect(),
        max_central_state: verdicts.iter().map(|v| v.state_size).max().unwrap_or(0),
        max_flows_reported,
    };
    Ok(CoopRun {
        verdicts,
        report,
        messages,
    })
}
