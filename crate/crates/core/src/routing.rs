//! Depth field over the cluster-head overlay, on-demand route discovery and
//! hop-by-hop forwarding.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::clustering::Cluster;
use crate::energy::{Charge, Direction, EnergyModel};
use crate::network::{Network, NodeId};
use crate::num::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("source {0} is dead")]
    SourceDead(NodeId),
    #[error("source {0} belongs to a cluster without a head")]
    NoHead(NodeId),
    #[error("no route from {node} via head {head} to the sink")]
    RouteNotFound { node: NodeId, head: NodeId },
    #[error("route from epoch {route} used in epoch {current}")]
    StaleRoute { route: u64, current: u64 },
}

/// Undirected range-limited graph over the current heads and the sink.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlayGraph {
    pub sink: NodeId,
    adjacency: BTreeMap<NodeId, Vec<NodeId>>,
}

impl OverlayGraph {
    /// Ascending, sink included.
    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.adjacency.contains_key(&v)
    }

    /// Ascending neighbor ids.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        self.adjacency.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every edge once, as `(lower id, higher id)`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .flat_map(|(&u, vs)| vs.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }
}

/// Heads within `ch_link_range` of each other are linked; the sink is always a vertex.
pub fn build_overlay<S: Scalar>(heads: &[NodeId], network: &Network<S>) -> OverlayGraph {
    let sink = network.sink_id();
    let mut vertices: Vec<NodeId> = heads.iter().copied().filter(|&h| h != sink).collect();
    vertices.push(sink);
    vertices.sort();
    vertices.dedup();
    let range = network.config.ch_link_range;
    let adjacency = vertices
        .iter()
        .map(|&u| {
            let near = vertices
                .iter()
                .copied()
                .filter(|&v| v != u && network.distance(u, v) <= range)
                .collect();
            (u, near)
        })
        .collect();
    OverlayGraph { sink, adjacency }
}

/// Hop counts from the sink; `None` marks heads cut off from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthField {
    pub epoch: u64,
    depth: BTreeMap<NodeId, Option<u32>>,
}

impl DepthField {
    pub fn depth(&self, v: NodeId) -> Option<u32> {
        self.depth.get(&v).copied().flatten()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, Option<u32>)> + '_ {
        self.depth.iter().map(|(&k, &v)| (k, v))
    }
}

/// The sink starts at depth 0 and every head takes one more than the
/// neighbor it first hears from.
pub fn compute_depths(overlay: &OverlayGraph, epoch: u64) -> DepthField {
    let mut depth: BTreeMap<NodeId, Option<u32>> = overlay.vertices().map(|v| (v, None)).collect();
    depth.insert(overlay.sink, Some(0));
    let mut queue = VecDeque::from([overlay.sink]);
    while let Some(u) = queue.pop_front() {
        let d = depth[&u].expect("queued vertices have a depth");
        for &v in overlay.neighbors(u) {
            if depth[&v].is_none() {
                depth.insert(v, Some(d + 1));
                queue.push_back(v);
            }
        }
    }
    DepthField { epoch, depth }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub source: NodeId,
    /// Cluster heads from the source's own head to the last head before the sink.
    pub hops: Vec<NodeId>,
    pub sink: NodeId,
    pub epoch: u64,
}

impl Route {
    pub fn head_hops(&self) -> usize {
        self.hops.len()
    }

    /// Every node the data packet visits, source first and sink last.
    pub fn path(&self) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.hops.len() + 2);
        if self.hops.first() != Some(&self.source) {
            path.push(self.source);
        }
        path.extend_from_slice(&self.hops);
        path.push(self.sink);
        path
    }
}

/// Vertices a route request from `origin` reaches. The flood only travels
/// through alive heads and stops at the sink, which answers instead of
/// rebroadcasting. The origin itself is not listed.
pub fn flood_reach<S: Scalar>(origin: NodeId, overlay: &OverlayGraph, network: &Network<S>) -> Vec<NodeId> {
    if !overlay.contains(origin) || !network.is_alive(origin) {
        return Vec::new();
    }
    let mut seen = BTreeMap::from([(origin, ())]);
    let mut reached = Vec::new();
    let mut queue = VecDeque::from([origin]);
    while let Some(u) = queue.pop_front() {
        for &v in overlay.neighbors(u) {
            if seen.contains_key(&v) || !network.is_alive(v) {
                continue;
            }
            seen.insert(v, ());
            reached.push(v);
            if v != overlay.sink {
                queue.push_back(v);
            }
        }
    }
    reached
}

/// Head of the cluster `source` belongs to, if one is elected.
pub fn head_of(source: NodeId, clusters: &[Cluster]) -> Option<NodeId> {
    clusters.iter().find(|c| c.contains(source)).and_then(|c| c.head)
}

/// Resolves the request/reply exchange for `source`: the reply walks down the
/// depth field one level at a time, preferring the lowest neighbor id.
pub fn discover_route<S: Scalar>(
    source: NodeId,
    network: &Network<S>,
    clusters: &[Cluster],
    overlay: &OverlayGraph,
    depths: &DepthField,
) -> Result<Route, RoutingError> {
    if !network.is_alive(source) {
        return Err(RoutingError::SourceDead(source));
    }
    let head = head_of(source, clusters).ok_or(RoutingError::NoHead(source))?;
    let mut level = depths
        .depth(head)
        .ok_or(RoutingError::RouteNotFound { node: source, head })?;
    let mut hops = vec![head];
    let mut current = head;
    while level > 1 {
        current = overlay
            .neighbors(current)
            .iter()
            .copied()
            .find(|&v| depths.depth(v) == Some(level - 1))
            .expect("a vertex at depth d has a neighbor at depth d - 1");
        hops.push(current);
        level -= 1;
    }
    Ok(Route {
        source,
        hops,
        sink: overlay.sink,
        epoch: depths.epoch,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub source: NodeId,
    pub bytes: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered,
    /// `hop` indexes the link (`path[hop] -> path[hop + 1]`) where the packet died.
    Dropped { at: NodeId, hop: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forwarding<S> {
    pub outcome: DeliveryOutcome,
    pub charges: Vec<Charge<S>>,
}

impl<S: Scalar> Forwarding<S> {
    pub fn energy(&self) -> S {
        self.charges.iter().fold(S::zero(), |acc, c| acc + c.energy)
    }
}

/// Pushes `packet` along `route`, charging the sender of every link for a
/// transmission and the receiver for a reception. Any node that is dead
/// before its turn, or dies paying for it, drops the packet; nothing past
/// that point is touched.
pub fn forward_packet<S: Scalar>(
    route: &Route,
    packet: &Packet,
    network: &mut Network<S>,
    model: &EnergyModel<S>,
    current_epoch: u64,
) -> Result<Forwarding<S>, RoutingError> {
    if route.epoch != current_epoch {
        return Err(RoutingError::StaleRoute {
            route: route.epoch,
            current: current_epoch,
        });
    }
    let path = route.path();
    let mut charges = Vec::with_capacity(2 * path.len());
    let dropped = |at, hop, charges| Forwarding {
        outcome: DeliveryOutcome::Dropped { at, hop },
        charges,
    };
    for (hop, link) in path.windows(2).enumerate() {
        let (from, to) = (link[0], link[1]);
        if !network.is_alive(from) {
            return Ok(dropped(from, hop, charges));
        }
        let energy = network.charge_tx(from, model, packet.bytes);
        charges.push(Charge { node: from, direction: Direction::Tx, energy });
        if !network.is_alive(from) {
            return Ok(dropped(from, hop, charges));
        }
        if !network.is_alive(to) {
            return Ok(dropped(to, hop, charges));
        }
        let energy = network.charge_rx(to, model, packet.bytes);
        charges.push(Charge { node: to, direction: Direction::Rx, energy });
        if !network.is_alive(to) {
            return Ok(dropped(to, hop, charges));
        }
    }
    Ok(Forwarding {
        outcome: DeliveryOutcome::Delivered,
        charges,
    })
}

/// Alive sensors that cannot reach the sink even if any alive node could
/// serve as a head, i.e. over the `ch_link_range` disk graph of alive nodes.
pub fn disconnected_sensors<S: Scalar>(network: &Network<S>) -> usize {
    let sink = network.sink_id();
    let range = network.config.ch_link_range;
    let alive: Vec<NodeId> = network.sensors().iter().filter(|n| n.alive).map(|n| n.id).collect();
    let mut reached = vec![false; network.nodes.len()];
    reached[sink.0] = true;
    let mut queue = VecDeque::from([sink]);
    while let Some(u) = queue.pop_front() {
        for &v in &alive {
            if !reached[v.0] && network.distance(u, v) <= range {
                reached[v.0] = true;
                queue.push_back(v);
            }
        }
    }
    alive.iter().filter(|v| !reached[v.0]).count()
}
