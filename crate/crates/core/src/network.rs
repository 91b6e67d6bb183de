//! Nodes, deployment and the coverage neighbor relation.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{residual_energy, EnergyModel};
use crate::error::{Error, Result};
use crate::geometry::{distance, Point};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node<S> {
    pub id: NodeId,
    pub position: Point<S>,
    pub initial_energy: S,
    pub residual_energy: S,
    pub alive: bool,
    pub is_sink: bool,
    pub packets_tx: u64,
    pub packets_rx: u64,
    /// Accumulated transmit airtime, seconds.
    pub time_tx: S,
    /// Accumulated receive airtime, seconds.
    pub time_rx: S,
}

impl<S: Scalar> Node<S> {
    pub fn sensor(id: NodeId, position: Point<S>, initial_energy: S) -> Self {
        Self {
            id,
            position,
            initial_energy,
            residual_energy: initial_energy,
            alive: initial_energy > S::zero(),
            is_sink: false,
            packets_tx: 0,
            packets_rx: 0,
            time_tx: S::zero(),
            time_rx: S::zero(),
        }
    }

    pub fn sink(id: NodeId, position: Point<S>, initial_energy: S) -> Self {
        Self {
            alive: true,
            is_sink: true,
            ..Self::sensor(id, position, initial_energy)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig<S> {
    pub field_width: S,
    pub field_height: S,
    /// Number of sensor nodes, sink excluded.
    pub node_count: usize,
    pub cluster_count: usize,
    pub initial_energy: S,
    /// Data packet size in bytes.
    pub packet_size: u32,
    /// Control (route request) packet size in bytes.
    pub control_packet_size: u32,
    /// Radio bit rate used to turn packet sizes into airtime.
    pub bit_rate: S,
    pub sink_position: Point<S>,
    pub coverage_range: S,
    pub ch_link_range: S,
    pub simulation_time: S,
    pub tick: S,
    pub seed: u64,
}

impl<S: Scalar> NetworkConfig<S> {
    /// Sensors take ids `0..node_count`; the sink takes the next one.
    pub fn sink_id(&self) -> NodeId {
        NodeId(self.node_count)
    }

    pub fn airtime(&self, bytes: u32) -> S {
        S::of(f64::from(bytes) * 8.0) / self.bit_rate
    }

    pub fn tick_count(&self) -> u64 {
        (self.simulation_time / self.tick).round().to_u64().unwrap_or(0)
    }

    pub fn contains(&self, p: Point<S>) -> bool {
        p.x >= S::zero() && p.y >= S::zero() && p.x <= self.field_width && p.y <= self.field_height
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Config(what.to_string()));
        let positive = |v: S| v.is_finite() && v > S::zero();
        if self.cluster_count < 1 {
            return fail("cluster_count ≥ 1");
        }
        if self.node_count < self.cluster_count {
            return fail("node_count ≥ cluster_count");
        }
        if !positive(self.field_width) || !positive(self.field_height) {
            return fail("field dimensions > 0");
        }
        if !positive(self.coverage_range) {
            return fail("coverage_range > 0");
        }
        if !positive(self.ch_link_range) {
            return fail("ch_link_range > 0");
        }
        if !positive(self.tick) {
            return fail("tick > 0");
        }
        if !(self.simulation_time.is_finite() && self.simulation_time >= S::zero()) {
            return fail("simulation_time ≥ 0");
        }
        if !positive(self.initial_energy) {
            return fail("initial_energy > 0");
        }
        if !positive(self.bit_rate) {
            return fail("bit_rate > 0");
        }
        if self.packet_size == 0 {
            return fail("packet_size > 0");
        }
        if !self.contains(self.sink_position) {
            return fail("sink_position inside the field");
        }
        Ok(())
    }
}

/// Whole-network state: sensors at `0..N`, sink at index `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<S> {
    pub config: NetworkConfig<S>,
    pub nodes: Vec<Node<S>>,
}

impl<S: Scalar> Network<S> {
    /// Uniform random deployment over the field.
    pub fn deploy<R: Rng + ?Sized>(config: NetworkConfig<S>, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let w = config.field_width.as_f64();
        let h = config.field_height.as_f64();
        let positions = (0..config.node_count)
            .map(|_| {
                let x = rng.random_range(0.0..=w);
                let y = rng.random_range(0.0..=h);
                Point::new(S::of(x), S::of(y))
            })
            .collect();
        Self::with_positions(config, positions)
    }

    pub fn with_positions(config: NetworkConfig<S>, positions: Vec<Point<S>>) -> Result<Self> {
        config.validate()?;
        if positions.len() != config.node_count {
            return Err(Error::Config(format!(
                "expected {} sensor positions, got {}",
                config.node_count,
                positions.len()
            )));
        }
        if let Some(p) = positions.iter().find(|p| !config.contains(**p)) {
            return Err(Error::Config(format!("position ({}, {}) outside the field", p.x, p.y)));
        }
        let mut nodes: Vec<_> = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| Node::sensor(NodeId(i), p, config.initial_energy))
            .collect();
        nodes.push(Node::sink(config.sink_id(), config.sink_position, config.initial_energy));
        Ok(Self { config, nodes })
    }

    pub fn sink_id(&self) -> NodeId {
        self.config.sink_id()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node<S>> {
        self.nodes.get(id.0).ok_or(Error::UnknownNode(id))
    }

    pub fn sensors(&self) -> &[Node<S>] {
        &self.nodes[..self.config.node_count]
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes.get(id.0).is_some_and(|n| n.alive)
    }

    pub fn residual(&self, id: NodeId) -> S {
        self.nodes[id.0].residual_energy
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> S {
        distance(self.nodes[a.0].position, self.nodes[b.0].position)
    }

    /// Alive sensors within coverage range of `id`, excluding `id` itself.
    /// The sink is not a sensing neighbor and never appears here.
    pub fn neighbors(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let me = self.node(id)?;
        let range = self.config.coverage_range;
        Ok(self
            .sensors()
            .iter()
            .filter(|n| n.id != id && n.alive && distance(me.position, n.position) <= range)
            .map(|n| n.id)
            .collect())
    }

    pub fn alive_sensor_count(&self) -> usize {
        self.sensors().iter().filter(|n| n.alive).count()
    }

    pub fn alive_fraction(&self) -> S {
        S::of_count(self.alive_sensor_count() as u64) / S::of_count(self.config.node_count as u64)
    }

    pub fn total_residual(&self) -> S {
        self.sensors()
            .iter()
            .fold(S::zero(), |acc, n| acc + n.residual_energy)
    }

    pub fn total_initial(&self) -> S {
        self.sensors()
            .iter()
            .fold(S::zero(), |acc, n| acc + n.initial_energy)
    }

    pub fn residual_fraction(&self) -> S {
        self.total_residual() / self.total_initial()
    }

    /// Charges one transmitted packet of `bytes`; returns the energy drawn.
    pub fn charge_tx(&mut self, id: NodeId, model: &EnergyModel<S>, bytes: u32) -> S {
        let airtime = self.config.airtime(bytes);
        let node = &mut self.nodes[id.0];
        if node.is_sink || !node.alive {
            return S::zero();
        }
        let before = node.residual_energy;
        node.packets_tx += 1;
        node.time_tx = node.time_tx + airtime;
        before - residual_energy(node, model)
    }

    /// Charges one received packet of `bytes`; returns the energy drawn.
    pub fn charge_rx(&mut self, id: NodeId, model: &EnergyModel<S>, bytes: u32) -> S {
        let airtime = self.config.airtime(bytes);
        let node = &mut self.nodes[id.0];
        if node.is_sink || !node.alive {
            return S::zero();
        }
        let before = node.residual_energy;
        node.packets_rx += 1;
        node.time_rx = node.time_rx + airtime;
        before - residual_energy(node, model)
    }

    /// Multiplies every sensor's residual energy by `factor`, leaving the
    /// traffic counters alone. Used to probe scale invariance of elections.
    pub fn scale_residuals(&mut self, factor: S) {
        for n in self.nodes.iter_mut().filter(|n| !n.is_sink) {
            n.residual_energy = n.residual_energy * factor;
            n.initial_energy = n.initial_energy * factor;
        }
    }
}
