use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{seeded_stream, SimError};
use crate::flow_model::FlowId;

const STUB_SHUFFLE_STREAM: u64 = 0x7000_0000;
const CLIENT_HOMING_STREAM: u64 = 0x7000_0001;
const ZOMBIE_HOMING_STREAM: u64 = 0x7000_0002;

/// Identifier of a monitored edge router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "edge-{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologySpec {
    pub transit_domains: u32,
    pub stub_domains_per_transit: u32,
    pub clients_total: u32,
    pub zombies_total: u32,
    pub edge_routers: u32,
    /// 1-based transit domain hosting the victim server.
    pub victim_domain: u32,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            transit_domains: 4,
            stub_domains_per_transit: 3,
            clients_total: 400,
            zombies_total: 100,
            edge_routers: 8,
            victim_domain: 4,
        }
    }
}

impl TopologySpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: &str| Err(SimError::Config(msg.to_owned()));
        if self.edge_routers == 0 {
            return fail("edge_routers must be at least 1: endpoints cannot be homed");
        }
        if self.transit_domains == 0 {
            return fail("transit_domains must be at least 1");
        }
        if self.stub_domains_per_transit == 0 {
            return fail("stub_domains_per_transit must be at least 1");
        }
        if self.clients_total == 0 {
            return fail("clients_total must be at least 1");
        }
        if self.victim_domain == 0 || self.victim_domain > self.transit_domains {
            return fail("victim_domain must name an existing transit domain");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointKind {
    Client,
    Zombie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubDomain {
    /// 1-based transit domain the stub attaches to.
    pub transit: u32,
    pub edge: EdgeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoint {
    pub kind: EndpointKind,
    pub index: u32,
    pub stub: u32,
    pub edge: EdgeId,
}

impl Endpoint {
    /// The flow this endpoint opens towards the victim.
    pub fn flow_id(&self) -> FlowId {
        match self.kind {
            EndpointKind::Client => FlowId::new(format!("c{}", self.index)),
            EndpointKind::Zombie => FlowId::new(format!("z{}", self.index)),
        }
    }
}

/// Simplified transit-stub topology: every endpoint sits in one stub domain,
/// every stub domain reaches the victim's domain through one edge router.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub spec: TopologySpec,
    pub stubs: Vec<StubDomain>,
    pub clients: Vec<Endpoint>,
    pub zombies: Vec<Endpoint>,
}

impl Topology {
    pub fn edge_ids(&self) -> Vec<EdgeId> {
        (0..self.spec.edge_routers).map(EdgeId).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.spec.edge_routers as usize
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.clients.iter().chain(&self.zombies)
    }

    /// endpoint flow -> edge router on its path to the victim.
    pub fn routing_map(&self) -> BTreeMap<FlowId, EdgeId> {
        self.endpoints().map(|e| (e.flow_id(), e.edge)).collect()
    }
}

pub fn build_topology(spec: &TopologySpec, seed: u64) -> Result<Topology, SimError> {
    spec.validate()?;

    let mut order: Vec<u32> = (0..spec.transit_domains * spec.stub_domains_per_transit).collect();
    order.shuffle(&mut seeded_stream(seed, STUB_SHUFFLE_STREAM));
    let mut stubs = vec![
        StubDomain {
            transit: 0,
            edge: EdgeId(0)
        };
        order.len()
    ];
    for (slot, stub) in order.iter().enumerate() {
        stubs[*stub as usize] = StubDomain {
            transit: stub / spec.stub_domains_per_transit + 1,
            edge: EdgeId(slot as u32 % spec.edge_routers),
        };
    }

    let home = |kind: EndpointKind, count: u32, stream: u64| -> Vec<Endpoint> {
        let mut rng = seeded_stream(seed, stream);
        (0..count)
            .map(|index| {
                let stub = rng.random_range(0..stubs.len() as u32);
                Endpoint {
                    kind,
                    index,
                    stub,
                    edge: stubs[stub as usize].edge,
                }
            })
            .collect()
    };
    let clients = home(
        EndpointKind::Client,
        spec.clients_total,
        CLIENT_HOMING_STREAM,
    );
    let zombies = home(
        EndpointKind::Zombie,
        spec.zombies_total,
        ZOMBIE_HOMING_STREAM,
    );

    Ok(Topology {
        spec: spec.clone(),
        stubs,
        clients,
        zombies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> TopologySpec {
        TopologySpec {
            transit_domains: 4,
            stub_domains_per_transit: 2,
            clients_total: 400,
            zombies_total: 100,
            edge_routers: 8,
            victim_domain: 4,
        }
    }

    #[test]
    fn every_endpoint_homed_once_and_deterministic() {
        let a = build_topology(&spec(), 7).unwrap();
        let b = build_topology(&spec(), 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.routing_map().len(), 500);
        for e in a.endpoints() {
            assert!(e.edge.0 < 8);
            assert_eq!(a.stubs[e.stub as usize].edge, e.edge);
        }
    }

    #[test]
    fn seeds_change_assignment() {
        let a = build_topology(&spec(), 7).unwrap();
        let b = build_topology(&spec(), 8).unwrap();
        assert_ne!(a.routing_map(), b.routing_map());
    }

    #[test]
    fn degenerate_minimum() {
        let s = TopologySpec {
            transit_domains: 1,
            stub_domains_per_transit: 1,
            clients_total: 1,
            zombies_total: 0,
            edge_routers: 1,
            victim_domain: 1,
        };
        let t = build_topology(&s, 0).unwrap();
        assert_eq!(t.clients.len(), 1);
        assert!(t.zombies.is_empty());
        assert_eq!(t.clients[0].edge, EdgeId(0));
    }

    #[test]
    fn zero_edges_is_config_error() {
        let mut s = spec();
        s.edge_routers = 0;
        assert!(matches!(build_topology(&s, 1), Err(SimError::Config(_))));
    }

    #[test]
    fn client_homing_ignores_zombie_count() {
        let mut s = spec();
        let a = build_topology(&s, 3).unwrap();
        s.zombies_total = 10;
        let b = build_topology(&s, 3).unwrap();
        assert_eq!(a.clients, b.clients);
    }

    #[test]
    fn stubs_spread_over_edges() {
        let t = build_topology(&spec(), 1).unwrap();
        for edge in t.edge_ids() {
            assert_eq!(t.stubs.iter().filter(|s| s.edge == edge).count(), 1);
        }
        assert!(t.stubs.iter().all(|s| (1..=4).contains(&s.transit)));
    }
}
