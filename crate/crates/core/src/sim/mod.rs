//! Tick-driven simulation loop.
//!
//! Every tick with traffic triggers a fresh election (or one every
//! `election_period` ticks when that is set), a rebuilt overlay and depth
//! field, and then one route discovery per source head before packets are
//! forwarded. Routes are cached only for the epoch they were found in.

pub mod metrics;
pub mod trace;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{elect, generate_clusters, Cluster, ClusterMethod, ElectionError, HeadStrategy};
use crate::energy::{Charge, Direction, EnergyModel};
use crate::error::{Error, Result};
use crate::network::{Network, NetworkConfig, NodeId};
use crate::num::Scalar;
use crate::routing::{
    build_overlay, compute_depths, discover_route, disconnected_sensors, flood_reach, forward_packet, head_of,
    DeliveryOutcome, DepthField, OverlayGraph, Packet, Route, RoutingError,
};

use metrics::{drop_ratio, pdr, throughput, MetricsFrame};
use trace::{DropReason, EventKind, SimEvent};

/// RNG stream ids derived from the run seed. Deployment and clustering share
/// the first so paired runs of different strategies see the same network.
const STREAM_DEPLOY: u64 = 0;
const STREAM_TRAFFIC: u64 = 1;
const STREAM_ELECTION: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<S> {
    pub network: NetworkConfig<S>,
    pub energy: EnergyModel<S>,
    pub cluster_method: ClusterMethod,
    /// 0 re-elects on every tick that carries traffic; `k > 0` re-elects
    /// every `k` ticks regardless of traffic.
    pub election_period: u64,
    /// Ticks between metrics frames.
    pub reporting_interval: u64,
}

impl<S: Scalar> SimConfig<S> {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if !self.energy.is_valid() {
            return Err(Error::Config("energy coefficients ≥ 0".into()));
        }
        if self.reporting_interval == 0 {
            return Err(Error::Config("reporting_interval ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum SourceSelection {
    /// Each event picks a uniformly random alive sensor.
    #[default]
    Uniform,
    /// Events cycle through the listed sensors, skipping dead ones.
    Fixed(Vec<NodeId>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficProfile {
    pub events_per_tick: f64,
    pub source_selection: SourceSelection,
    /// Data packet size, bytes.
    pub packet_size: u32,
}

impl TrafficProfile {
    pub fn uniform(events_per_tick: f64, packet_size: u32) -> Self {
        Self {
            events_per_tick,
            source_selection: SourceSelection::Uniform,
            packet_size,
        }
    }

    /// Events generated during zero-based tick `t`; fractional rates are
    /// spread evenly so that `t` ticks always carry `floor(t * rate)` events.
    pub fn events_due(&self, t: u64) -> u64 {
        let r = self.events_per_tick;
        ((t + 1) as f64 * r).floor() as u64 - (t as f64 * r).floor() as u64
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        if !(self.events_per_tick.is_finite() && self.events_per_tick >= 0.0) {
            return Err(Error::Config("events_per_tick ≥ 0".into()));
        }
        if self.packet_size == 0 {
            return Err(Error::Config("packet_size > 0".into()));
        }
        if let SourceSelection::Fixed(list) = &self.source_selection {
            if list.is_empty() {
                return Err(Error::Config("fixed source list must not be empty".into()));
            }
            if let Some(bad) = list.iter().find(|n| n.0 >= node_count) {
                return Err(Error::Config(format!("fixed source {bad} is not a sensor")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub record_trace: bool,
}

/// Network-lifetime measures of a finished run. Ticks are zero-based.
#[derive(Clone, Debug, PartialEq)]
pub struct LifetimeSummary<S> {
    pub first_death_tick: Option<u64>,
    /// First tick at which some alive sensor had no way to the sink.
    pub first_partition_tick: Option<u64>,
    /// Tick at which no alive sensor could reach the sink.
    pub full_partition_tick: Option<u64>,
    pub final_alive_fraction: S,
    pub final_residual_fraction: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary<S> {
    pub strategy: HeadStrategy,
    pub seed: u64,
    pub ticks_run: u64,
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub discoveries: u64,
    pub control_packets: u64,
    pub elections: u64,
    /// Sum of every charge the run made.
    pub energy_drawn: S,
    pub lifetime: LifetimeSummary<S>,
}

impl<S: Scalar> RunSummary<S> {
    pub fn pdr(&self) -> Option<S> {
        pdr(self.delivered, self.sent).ok().flatten()
    }

    /// First partition tick, or the run length when the network never split.
    pub fn partition_or_end(&self) -> u64 {
        self.lifetime.first_partition_tick.unwrap_or(self.ticks_run)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput<S> {
    pub frames: Vec<MetricsFrame<S>>,
    /// Empty unless requested through [`RunOptions`].
    pub trace: Vec<SimEvent<S>>,
    pub summary: RunSummary<S>,
    pub clusters: Vec<Cluster>,
    pub network: Network<S>,
}

/// Rebuilds the lifetime measures from an event trace alone.
pub fn lifetime_summary<S: Scalar>(trace: &[SimEvent<S>]) -> Result<LifetimeSummary<S>> {
    let (nodes, total) = trace
        .iter()
        .find_map(|e| match e.kind {
            EventKind::Deploy { nodes, total_energy, .. } => Some((nodes, total_energy)),
            _ => None,
        })
        .ok_or_else(|| Error::Accounting("trace has no DEPLOY event".into()))?;
    let mut deaths = 0u64;
    let mut drawn = S::zero();
    let mut summary = LifetimeSummary {
        first_death_tick: None,
        first_partition_tick: None,
        full_partition_tick: None,
        final_alive_fraction: S::one(),
        final_residual_fraction: S::one(),
    };
    for e in trace {
        drawn = drawn + e.energy();
        match e.kind {
            EventKind::NodeDeath { .. } => {
                deaths += 1;
                summary.first_death_tick.get_or_insert(e.tick);
            }
            EventKind::Partition { full, .. } => {
                summary.first_partition_tick.get_or_insert(e.tick);
                if full {
                    summary.full_partition_tick.get_or_insert(e.tick);
                }
            }
            _ => {}
        }
    }
    let n = S::of_count(nodes as u64);
    summary.final_alive_fraction = (n - S::of_count(deaths)) / n;
    summary.final_residual_fraction = (total - drawn) / total;
    Ok(summary)
}

struct Epoch {
    id: u64,
    overlay: OverlayGraph,
    depths: DepthField,
    /// Discovery outcome per source head, valid for this epoch only.
    routes: HashMap<NodeId, Option<Route>>,
}

struct Engine<'a, S: Scalar> {
    config: &'a SimConfig<S>,
    strategy: HeadStrategy,
    traffic: &'a TrafficProfile,
    network: Network<S>,
    clusters: Vec<Cluster>,
    traffic_rng: ChaCha8Rng,
    election_rng: ChaCha8Rng,
    epoch: Option<Epoch>,
    next_epoch: u64,
    fixed_cursor: usize,
    dead_reported: Vec<bool>,
    trace: Option<Vec<SimEvent<S>>>,
    seq: u64,
    summary: RunSummary<S>,
}

/// Runs one seeded simulation to `simulation_time` or full partition.
pub fn run<S: Scalar>(
    config: &SimConfig<S>,
    strategy: HeadStrategy,
    traffic: &TrafficProfile,
    options: RunOptions,
) -> Result<RunOutput<S>> {
    config.validate()?;
    traffic.validate(config.network.node_count)?;
    let seed = config.network.seed;
    let mut deploy_rng = stream(seed, STREAM_DEPLOY);
    let network = Network::deploy(config.network.clone(), &mut deploy_rng)?;
    let clusters = generate_clusters(&network, config.cluster_method, &mut deploy_rng)?;
    Engine::new(config, strategy, traffic, network, clusters, options).run()
}

/// Runs on a caller-supplied deployment and clustering.
pub fn run_on<S: Scalar>(
    config: &SimConfig<S>,
    strategy: HeadStrategy,
    traffic: &TrafficProfile,
    network: Network<S>,
    clusters: Vec<Cluster>,
    options: RunOptions,
) -> Result<RunOutput<S>> {
    config.validate()?;
    traffic.validate(config.network.node_count)?;
    Engine::new(config, strategy, traffic, network, clusters, options).run()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'a, S: Scalar> Engine<'a, S> {
    fn new(
        config: &'a SimConfig<S>,
        strategy: HeadStrategy,
        traffic: &'a TrafficProfile,
        network: Network<S>,
        clusters: Vec<Cluster>,
        options: RunOptions,
    ) -> Self {
        let seed = config.network.seed;
        let dead_reported = network.nodes.iter().map(|n| !n.alive).collect();
        Self {
            config,
            strategy,
            traffic,
            network,
            clusters,
            traffic_rng: stream(seed, STREAM_TRAFFIC),
            election_rng: stream(seed, STREAM_ELECTION),
            epoch: None,
            next_epoch: 0,
            fixed_cursor: 0,
            dead_reported,
            trace: options.record_trace.then(Vec::new),
            seq: 0,
            summary: RunSummary {
                strategy,
                seed,
                ticks_run: 0,
                sent: 0,
                delivered: 0,
                dropped: 0,
                discoveries: 0,
                control_packets: 0,
                elections: 0,
                energy_drawn: S::zero(),
                lifetime: LifetimeSummary {
                    first_death_tick: None,
                    first_partition_tick: None,
                    full_partition_tick: None,
                    final_alive_fraction: S::one(),
                    final_residual_fraction: S::one(),
                },
            },
        }
    }

    fn emit(&mut self, tick: u64, kind: EventKind<S>) {
        self.summary.energy_drawn = kind
            .charges()
            .iter()
            .fold(self.summary.energy_drawn, |acc, c| acc + c.energy);
        if let Some(trace) = self.trace.as_mut() {
            trace.push(SimEvent { tick, seq: self.seq, kind });
        }
        self.seq += 1;
    }

    fn report_deaths(&mut self, tick: u64, charges: &[Charge<S>]) {
        for c in charges {
            if !self.network.is_alive(c.node) && !self.dead_reported[c.node.0] {
                self.dead_reported[c.node.0] = true;
                self.summary.lifetime.first_death_tick.get_or_insert(tick);
                self.emit(tick, EventKind::NodeDeath { node: c.node });
            }
        }
    }

    fn run(mut self) -> Result<RunOutput<S>> {
        let total_energy = self.network.total_initial();
        self.emit(
            0,
            EventKind::Deploy {
                nodes: self.network.config.node_count,
                clusters: self.clusters.len(),
                total_energy,
            },
        );
        let ticks = self.config.network.tick_count();
        let interval = self.config.reporting_interval;
        let mut frames = Vec::new();
        let mut partitioned = false;
        for t in 0..ticks {
            let due = self.traffic.events_due(t);
            let elect_now = match self.config.election_period {
                0 => due > 0,
                k => t % k == 0,
            };
            let mut halted = false;
            if elect_now && !self.elect(t)? {
                halted = true;
            }
            if !halted && due > 0 {
                self.emit(t, EventKind::TrafficGen { count: due });
                for _ in 0..due {
                    let Some(source) = self.pick_source() else { break };
                    let packet = Packet {
                        id: self.summary.sent,
                        source,
                        bytes: self.traffic.packet_size,
                    };
                    self.summary.sent += 1;
                    self.deliver(t, packet)?;
                }
            }

            let alive = self.network.alive_sensor_count();
            let disconnected = disconnected_sensors(&self.network);
            let full = alive == 0 || disconnected == alive;
            partitioned = disconnected > 0 || alive == 0;
            if partitioned && self.summary.lifetime.first_partition_tick.is_none() {
                self.summary.lifetime.first_partition_tick = Some(t);
                self.emit(t, EventKind::Partition { disconnected, full });
            }
            if full {
                if self.summary.lifetime.full_partition_tick.is_none() {
                    self.summary.lifetime.full_partition_tick = Some(t);
                    if self.summary.lifetime.first_partition_tick != Some(t) {
                        self.emit(t, EventKind::Partition { disconnected, full });
                    }
                }
                halted = true;
            }
            self.summary.ticks_run = t + 1;
            if (t + 1) % interval == 0 || halted || t + 1 == ticks {
                frames.push(self.frame(t + 1, partitioned)?);
            }
            if halted {
                break;
            }
        }
        if frames.is_empty() {
            frames.push(self.frame(0, partitioned)?);
        }
        self.summary.lifetime.final_alive_fraction = self.network.alive_fraction();
        self.summary.lifetime.final_residual_fraction = self.network.residual_fraction();
        if self.summary.delivered + self.summary.dropped != self.summary.sent {
            return Err(Error::Accounting(format!(
                "sent {} != delivered {} + dropped {}",
                self.summary.sent, self.summary.delivered, self.summary.dropped
            )));
        }
        Ok(RunOutput {
            frames,
            trace: self.trace.unwrap_or_default(),
            summary: self.summary,
            clusters: self.clusters,
            network: self.network,
        })
    }

    fn frame(&self, ticks: u64, partitioned: bool) -> Result<MetricsFrame<S>> {
        let s = &self.summary;
        let elapsed = S::of_count(ticks.max(1)) * self.config.network.tick;
        Ok(MetricsFrame {
            tick: ticks,
            alive_fraction: self.network.alive_fraction(),
            residual_fraction: self.network.residual_fraction(),
            pdr: pdr(s.delivered, s.sent)?,
            drop_ratio: drop_ratio(s.dropped, s.sent)?,
            throughput: throughput(s.delivered, elapsed)?,
            partitioned,
        })
    }

    /// Returns `false` when nothing is left alive to elect.
    fn elect(&mut self, tick: u64) -> Result<bool> {
        let assignment = match elect(self.strategy, &self.clusters, &self.network, &mut self.election_rng) {
            Ok(a) => a,
            Err(ElectionError::NoAliveNodes) => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        assignment.apply(&mut self.clusters);
        let id = self.next_epoch;
        self.next_epoch += 1;
        self.summary.elections += 1;
        let heads = assignment.head_set();
        let overlay = build_overlay(&heads, &self.network);
        let depths = compute_depths(&overlay, id);
        self.emit(
            tick,
            EventKind::Elect {
                epoch: id,
                heads,
                local_head: assignment.local_head(),
                skipped: assignment.skipped,
            },
        );
        self.epoch = Some(Epoch {
            id,
            overlay,
            depths,
            routes: HashMap::new(),
        });
        Ok(true)
    }

    fn pick_source(&mut self) -> Option<NodeId> {
        match &self.traffic.source_selection {
            SourceSelection::Uniform => {
                let alive: Vec<NodeId> = self.network.sensors().iter().filter(|n| n.alive).map(|n| n.id).collect();
                (!alive.is_empty()).then(|| alive[self.traffic_rng.random_range(0..alive.len())])
            }
            SourceSelection::Fixed(list) => {
                for _ in 0..list.len() {
                    let candidate = list[self.fixed_cursor % list.len()];
                    self.fixed_cursor += 1;
                    if self.network.is_alive(candidate) {
                        return Some(candidate);
                    }
                }
                None
            }
        }
    }

    fn drop_packet(&mut self, tick: u64, packet: &Packet, reason: DropReason, at: Option<NodeId>, charges: Vec<Charge<S>>) {
        self.summary.dropped += 1;
        self.emit(
            tick,
            EventKind::Drop {
                packet: packet.id,
                source: packet.source,
                reason,
                at,
                charges,
            },
        );
    }

    fn deliver(&mut self, tick: u64, packet: Packet) -> Result<()> {
        let Some(head) = head_of(packet.source, &self.clusters) else {
            self.drop_packet(tick, &packet, DropReason::NoHead, None, Vec::new());
            return Ok(());
        };
        if !self.network.is_alive(head) {
            self.drop_packet(tick, &packet, DropReason::NodeDead, Some(head), Vec::new());
            return Ok(());
        }
        let epoch = self.epoch.as_ref().expect("an election precedes traffic");
        let epoch_id = epoch.id;
        let cached = epoch.routes.get(&head).cloned();
        let route = match cached {
            Some(r) => r,
            None => {
                let r = self.discover(tick, &packet, head)?;
                self.epoch
                    .as_mut()
                    .expect("epoch")
                    .routes
                    .insert(head, r.clone());
                r
            }
        };
        if !self.network.is_alive(head) {
            // The head spent its last energy on the route request.
            self.drop_packet(tick, &packet, DropReason::NodeDead, Some(head), Vec::new());
            return Ok(());
        }
        let Some(mut route) = route else {
            self.drop_packet(tick, &packet, DropReason::NoRoute, None, Vec::new());
            return Ok(());
        };
        route.source = packet.source;
        let forwarding = forward_packet(&route, &packet, &mut self.network, &self.config.energy, epoch_id)?;
        match forwarding.outcome {
            DeliveryOutcome::Delivered => {
                self.summary.delivered += 1;
                let charges = forwarding.charges;
                self.emit(
                    tick,
                    EventKind::Forward {
                        packet: packet.id,
                        path: route.path(),
                        charges: charges.clone(),
                    },
                );
                self.report_deaths(tick, &charges);
            }
            DeliveryOutcome::Dropped { at, .. } => {
                let charges = forwarding.charges;
                self.drop_packet(tick, &packet, DropReason::NodeDead, Some(at), charges.clone());
                self.report_deaths(tick, &charges);
            }
        }
        Ok(())
    }

    /// Floods a route request from `head` and resolves the reply.
    fn discover(&mut self, tick: u64, packet: &Packet, head: NodeId) -> Result<Option<Route>> {
        let epoch = self.epoch.as_ref().expect("epoch");
        let reached = flood_reach(head, &epoch.overlay, &self.network);
        let model = self.config.energy;
        let bytes = self.network.config.control_packet_size;
        let sink = self.network.sink_id();
        let mut charges = Vec::with_capacity(1 + 2 * reached.len());
        let energy = self.network.charge_tx(head, &model, bytes);
        charges.push(Charge { node: head, direction: Direction::Tx, energy });
        let mut control = 1;
        for &v in &reached {
            let energy = self.network.charge_rx(v, &model, bytes);
            charges.push(Charge { node: v, direction: Direction::Rx, energy });
            if v != sink && self.network.is_alive(v) {
                let energy = self.network.charge_tx(v, &model, bytes);
                charges.push(Charge { node: v, direction: Direction::Tx, energy });
                control += 1;
            }
        }
        self.summary.discoveries += 1;
        self.summary.control_packets += control;
        self.emit(
            tick,
            EventKind::Rreq {
                packet: packet.id,
                origin: head,
                reached,
                charges: charges.clone(),
            },
        );
        self.report_deaths(tick, &charges);

        let epoch = self.epoch.as_ref().expect("epoch");
        match discover_route(head, &self.network, &self.clusters, &epoch.overlay, &epoch.depths) {
            Ok(route) => {
                self.emit(
                    tick,
                    EventKind::Rrep {
                        packet: packet.id,
                        hops: route.hops.clone(),
                    },
                );
                Ok(Some(route))
            }
            Err(RoutingError::RouteNotFound { .. } | RoutingError::SourceDead(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}
