//! Cluster formation and cluster-head election.
//!
//! The energy-density election runs in two steps. A single local head is
//! crowned first: the alive sensor that is greatest under (residual energy,
//! random cost, lower id). Every other cluster then picks the member with the
//! highest energy density measured against that local head.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::geometry::{distance, Point};
use crate::network::{Network, NodeId};
use crate::num::Scalar;

/// Upper bound (exclusive) of the per-round node cost.
pub const COST_RANGE: u32 = 250;

/// Floor on the node-to-local-head distance in the energy density, meters.
pub const DISTANCE_FLOOR: f64 = 1e-6;

const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElectionError {
    #[error("cluster {0} has no alive member")]
    ClusterDead(ClusterId),
    #[error("no alive sensor left to elect")]
    NoAliveNodes,
    #[error("cost vector covers {got} nodes, expected {expected}")]
    CostsMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterId(pub usize);

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    pub id: ClusterId,
    /// Sorted ascending, never empty.
    pub members: Vec<NodeId>,
    pub head: Option<NodeId>,
}

impl Cluster {
    pub fn contains(&self, node: NodeId) -> bool {
        self.members.binary_search(&node).is_ok()
    }
}

/// Maps every sensor to the cluster it belongs to.
pub fn membership(clusters: &[Cluster], node_count: usize) -> Vec<ClusterId> {
    let mut of = vec![ClusterId(usize::MAX); node_count];
    for c in clusters {
        for m in &c.members {
            of[m.0] = c.id;
        }
    }
    of
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    /// Seeded k-means over node positions.
    #[default]
    Kmeans,
    /// Equal-population vertical strips, ordered by x.
    Grid,
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMethod::Kmeans => "kmeans",
            ClusterMethod::Grid => "grid",
        })
    }
}

impl FromStr for ClusterMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kmeans" => Ok(ClusterMethod::Kmeans),
            "grid" => Ok(ClusterMethod::Grid),
            other => Err(format!("unknown cluster method `{other}` (expected kmeans or grid)")),
        }
    }
}

/// Partitions the sensors (never the sink) into exactly `cluster_count`
/// non-empty clusters.
pub fn generate_clusters<S: Scalar, R: Rng + ?Sized>(
    network: &Network<S>,
    method: ClusterMethod,
    rng: &mut R,
) -> Result<Vec<Cluster>> {
    let n = network.config.node_count;
    let k = network.config.cluster_count;
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cannot form {k} clusters from {n} nodes (node_count ≥ cluster_count ≥ 1)"
        )));
    }
    let positions: Vec<Point<S>> = network.sensors().iter().map(|s| s.position).collect();
    let assignment = match method {
        ClusterMethod::Kmeans => kmeans(&positions, k, rng),
        ClusterMethod::Grid => strips(&positions, k),
    };
    let mut clusters: Vec<Cluster> = (0..k)
        .map(|i| Cluster {
            id: ClusterId(i),
            members: Vec::new(),
            head: None,
        })
        .collect();
    for (node, c) in assignment.into_iter().enumerate() {
        clusters[c].members.push(NodeId(node));
    }
    debug_assert!(clusters.iter().all(|c| !c.members.is_empty()));
    Ok(clusters)
}

fn nearest<S: Scalar>(p: Point<S>, centers: &[Point<S>]) -> usize {
    let mut best = 0;
    let mut best_d = distance(p, centers[0]);
    for (i, c) in centers.iter().enumerate().skip(1) {
        let d = distance(p, *c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn kmeans<S: Scalar, R: Rng + ?Sized>(points: &[Point<S>], k: usize, rng: &mut R) -> Vec<usize> {
    // k-means++ seeding.
    let mut centers = vec![points[rng.random_range(0..points.len())]];
    while centers.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| {
                let d = distance(*p, centers[nearest(*p, &centers)]).as_f64();
                d * d
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centers.push(points[pick]);
    }

    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(*p, &centers)).collect();
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut sums = vec![(S::zero(), S::zero(), 0u64); k];
        for (p, &c) in points.iter().zip(&assignment) {
            sums[c].0 = sums[c].0 + p.x;
            sums[c].1 = sums[c].1 + p.y;
            sums[c].2 += 1;
        }
        for (c, (sx, sy, count)) in sums.into_iter().enumerate() {
            if count > 0 {
                let n = S::of_count(count);
                centers[c] = Point::new(sx / n, sy / n);
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(*p, &centers)).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }

    // Coincident seeds or degenerate layouts can leave a cluster empty. Hand
    // it the point farthest from its own center among clusters that can spare one.
    loop {
        let mut sizes = vec![0usize; k];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let donor = (0..points.len())
            .filter(|&i| sizes[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = distance(points[a], centers[assignment[a]]);
                let db = distance(points[b], centers[assignment[b]]);
                da.partial_cmp(&db).unwrap_or(Ordering::Equal).then(b.cmp(&a))
            })
            .expect("k ≤ n guarantees a cluster with a spare member");
        assignment[donor] = empty;
        centers[empty] = points[donor];
    }
    assignment
}

fn strips<S: Scalar>(points: &[Point<S>], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a], points[b]);
        pa.x.partial_cmp(&pb.x)
            .unwrap_or(Ordering::Equal)
            .then(pa.y.partial_cmp(&pb.y).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let n = points.len();
    let mut assignment = vec![0; n];
    for (rank, node) in order.into_iter().enumerate() {
        assignment[node] = rank * k / n;
    }
    assignment
}

/// Maps a uniform draw in `[0, 1)` to an integer cost in `[0, COST_RANGE)`.
pub fn cost_from_unit(u: f64) -> u32 {
    ((u * f64::from(COST_RANGE)) as u32).min(COST_RANGE - 1)
}

pub fn node_cost<R: Rng + ?Sized>(rng: &mut R) -> u32 {
    cost_from_unit(rng.random::<f64>())
}

/// One cost per sensor, drawn in node-id order.
pub fn draw_costs<R: Rng + ?Sized>(node_count: usize, rng: &mut R) -> Vec<u32> {
    (0..node_count).map(|_| node_cost(rng)).collect()
}

/// Total order used for the local head: higher residual, then higher cost,
/// then lower id. `Greater` means `a` wins.
fn local_head_order<S: Scalar>(network: &Network<S>, costs: &[u32], a: NodeId, b: NodeId) -> Ordering {
    let (ra, rb) = (network.residual(a), network.residual(b));
    ra.partial_cmp(&rb)
        .unwrap_or(Ordering::Equal)
        .then(costs[a.0].cmp(&costs[b.0]))
        .then(b.cmp(&a))
}

fn check_costs<S: Scalar>(network: &Network<S>, costs: &[u32]) -> Result<(), ElectionError> {
    if costs.len() < network.config.node_count {
        return Err(ElectionError::CostsMismatch {
            expected: network.config.node_count,
            got: costs.len(),
        });
    }
    Ok(())
}

/// Step one of the energy-density election, restricted to one cluster.
pub fn select_local_head<S: Scalar>(
    cluster: &Cluster,
    network: &Network<S>,
    costs: &[u32],
) -> Result<NodeId, ElectionError> {
    check_costs(network, costs)?;
    cluster
        .members
        .iter()
        .copied()
        .filter(|&m| network.is_alive(m))
        .max_by(|&a, &b| local_head_order(network, costs, a, b))
        .ok_or(ElectionError::ClusterDead(cluster.id))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyDensity<S> {
    pub node: NodeId,
    pub value: S,
}

/// Residual energy of `node` and its alive coverage neighbors, divided by
/// the distance to the local head times the coverage range.
pub fn energy_density<S: Scalar>(node: NodeId, local_head: NodeId, network: &Network<S>) -> EnergyDensity<S> {
    let me = &network.nodes[node.0];
    let range = network.config.coverage_range;
    let numerator = network
        .sensors()
        .iter()
        .filter(|n| n.id != node && n.alive && distance(me.position, n.position) <= range)
        .fold(me.residual_energy, |acc, n| acc + n.residual_energy);
    let d = network.distance(node, local_head).max(S::of(DISTANCE_FLOOR));
    EnergyDensity {
        node,
        value: numerator / (d * range),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadStrategy {
    /// Two-step residual-energy / energy-density election.
    #[default]
    Edocr,
    /// Each cluster crowns its member with the most residual energy.
    MaxResidual,
    /// Each cluster crowns a uniformly random alive member.
    RandomRotation,
}

impl HeadStrategy {
    pub const ALL: [HeadStrategy; 3] = [
        HeadStrategy::Edocr,
        HeadStrategy::MaxResidual,
        HeadStrategy::RandomRotation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HeadStrategy::Edocr => "edocr",
            HeadStrategy::MaxResidual => "max-residual",
            HeadStrategy::RandomRotation => "random-rotation",
        }
    }
}

impl fmt::Display for HeadStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeadStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        HeadStrategy::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected edocr, max-residual or random-rotation)"))
    }
}

/// Outcome of one election round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeadAssignment {
    /// Indexed by cluster id; `None` for clusters with no alive member.
    pub heads: Vec<Option<NodeId>>,
    /// Cluster governed by step one (energy-density election only).
    pub local_cluster: Option<ClusterId>,
    pub skipped: Vec<ClusterId>,
}

impl HeadAssignment {
    pub fn head_of(&self, cluster: ClusterId) -> Option<NodeId> {
        self.heads.get(cluster.0).copied().flatten()
    }

    pub fn local_head(&self) -> Option<NodeId> {
        self.local_cluster.and_then(|c| self.head_of(c))
    }

    /// Elected heads in ascending id order.
    pub fn head_set(&self) -> Vec<NodeId> {
        let mut hs: Vec<NodeId> = self.heads.iter().flatten().copied().collect();
        hs.sort();
        hs
    }

    pub fn apply(&self, clusters: &mut [Cluster]) {
        for c in clusters.iter_mut() {
            c.head = self.head_of(c.id);
        }
    }
}

/// Energy-density election with explicitly supplied costs.
pub fn select_heads_edocr_with_costs<S: Scalar>(
    clusters: &[Cluster],
    network: &Network<S>,
    costs: &[u32],
) -> Result<HeadAssignment, ElectionError> {
    check_costs(network, costs)?;
    let local_head = network
        .sensors()
        .iter()
        .filter(|n| n.alive)
        .map(|n| n.id)
        .max_by(|&a, &b| local_head_order(network, costs, a, b))
        .ok_or(ElectionError::NoAliveNodes)?;

    let mut assignment = HeadAssignment {
        heads: vec![None; clusters.len()],
        ..Default::default()
    };
    for cluster in clusters {
        if cluster.contains(local_head) {
            assignment.local_cluster = Some(cluster.id);
            assignment.heads[cluster.id.0] = Some(local_head);
            continue;
        }
        let best = cluster
            .members
            .iter()
            .copied()
            .filter(|&m| network.is_alive(m))
            .map(|m| energy_density(m, local_head, network))
            .max_by(|a, b| {
                a.value
                    .partial_cmp(&b.value)
                    .unwrap_or(Ordering::Equal)
                    .then(b.node.cmp(&a.node))
            });
        match best {
            Some(ed) => assignment.heads[cluster.id.0] = Some(ed.node),
            None => assignment.skipped.push(cluster.id),
        }
    }
    Ok(assignment)
}

/// Energy-density election; costs are redrawn from `rng` every call.
pub fn select_heads_edocr<S: Scalar, R: Rng + ?Sized>(
    clusters: &[Cluster],
    network: &Network<S>,
    rng: &mut R,
) -> Result<HeadAssignment, ElectionError> {
    let costs = draw_costs(network.config.node_count, rng);
    select_heads_edocr_with_costs(clusters, network, &costs)
}

pub fn select_heads_baseline<S: Scalar, R: Rng + ?Sized>(
    strategy: HeadStrategy,
    clusters: &[Cluster],
    network: &Network<S>,
    rng: &mut R,
) -> Result<HeadAssignment, ElectionError> {
    let mut assignment = HeadAssignment {
        heads: vec![None; clusters.len()],
        ..Default::default()
    };
    for cluster in clusters {
        let alive: Vec<NodeId> = cluster
            .members
            .iter()
            .copied()
            .filter(|&m| network.is_alive(m))
            .collect();
        if alive.is_empty() {
            assignment.skipped.push(cluster.id);
            continue;
        }
        let head = match strategy {
            HeadStrategy::RandomRotation => alive[rng.random_range(0..alive.len())],
            // Treated as max-residual when called directly.
            HeadStrategy::MaxResidual | HeadStrategy::Edocr => *alive
                .iter()
                .max_by(|&&a, &&b| {
                    network
                        .residual(a)
                        .partial_cmp(&network.residual(b))
                        .unwrap_or(Ordering::Equal)
                        .then(b.cmp(&a))
                })
                .expect("non-empty"),
        };
        assignment.heads[cluster.id.0] = Some(head);
    }
    if assignment.skipped.len() == clusters.len() {
        return Err(ElectionError::NoAliveNodes);
    }
    Ok(assignment)
}

/// Runs one election round for `strategy`.
pub fn elect<S: Scalar, R: Rng + ?Sized>(
    strategy: HeadStrategy,
    clusters: &[Cluster],
    network: &Network<S>,
    rng: &mut R,
) -> Result<HeadAssignment, ElectionError> {
    match strategy {
        HeadStrategy::Edocr => select_heads_edocr(clusters, network, rng),
        other => select_heads_baseline(other, clusters, network, rng),
    }
}
