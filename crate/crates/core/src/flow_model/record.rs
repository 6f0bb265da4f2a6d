use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque flow identifier. The simulator assigns one per client or zombie
/// connection towards the victim; ingested traces may use any string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(String);

impl FlowId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FlowId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for FlowId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// One flow's byte and packet contribution inside a time slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    /// Milliseconds since trace start.
    pub timestamp_ms: u64,
    pub flow_id: FlowId,
    pub bytes: u64,
    pub packets: u64,
}

impl FlowRecord {
    pub fn new(timestamp_ms: u64, flow_id: impl Into<FlowId>, bytes: u64, packets: u64) -> Self {
        Self {
            timestamp_ms,
            flow_id: flow_id.into(),
            bytes,
            packets,
        }
    }

    /// A record with no bytes cannot carry packets.
    pub fn is_consistent(&self) -> bool {
        self.bytes > 0 || self.packets == 0
    }
}
