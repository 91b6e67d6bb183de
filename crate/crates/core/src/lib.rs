//! Deterministic wireless sensor network simulator built around a two-step
//! cluster-head election (residual energy, then neighborhood energy density)
//! and depth-driven on-demand routing over the cluster-head overlay.
//!
//! The model is generic over the floating point type; the `*F64` / `*F32`
//! aliases below fix it for the common cases.

pub mod clustering;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod network;
pub mod num;
pub mod report;
pub mod routing;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod sweep;

pub use clustering::{Cluster, ClusterId, ClusterMethod, HeadAssignment, HeadStrategy};
pub use energy::EnergyModel;
pub use error::{Error, Result};
pub use geometry::Point;
pub use network::{Network, NetworkConfig, Node, NodeId};
pub use num::Scalar;
pub use scenario::Scenario;
pub use sim::metrics::MetricsFrame;
pub use sim::{run, RunOptions, RunOutput, SimConfig, TrafficProfile};

pub type PointF64 = Point<f64>;
pub type NodeF64 = Node<f64>;
pub type NetworkF64 = Network<f64>;
pub type NetworkConfigF64 = NetworkConfig<f64>;
pub type EnergyModelF64 = EnergyModel<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type RunOutputF64 = RunOutput<f64>;

pub type PointF32 = Point<f32>;
pub type NetworkF32 = Network<f32>;
pub type SimConfigF32 = SimConfig<f32>;
