//! Per-node energy accounting.
//!
//! Transmit and receive energy are linear in the packet count and the
//! accumulated radio time: `E = packet_coeff * packets + time_coeff * time`.
//! With every coefficient at 1 this is the plain `packets + time` form, which
//! is not dimensionally meaningful but is kept as the default so that the
//! bare model can be checked by hand. Scenarios ship scaled coefficients.

use serde::{Deserialize, Serialize};

use crate::network::Node;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel<S> {
    /// Joules per transmitted packet.
    pub tx_packet_coeff: S,
    /// Joules per second of transmit airtime.
    pub tx_time_coeff: S,
    /// Joules per received packet.
    pub rx_packet_coeff: S,
    /// Joules per second of receive airtime.
    pub rx_time_coeff: S,
}

impl<S: Scalar> Default for EnergyModel<S> {
    fn default() -> Self {
        Self {
            tx_packet_coeff: S::one(),
            tx_time_coeff: S::one(),
            rx_packet_coeff: S::one(),
            rx_time_coeff: S::one(),
        }
    }
}

impl<S: Scalar> EnergyModel<S> {
    pub fn new(tx_packet: S, tx_time: S, rx_packet: S, rx_time: S) -> Self {
        Self {
            tx_packet_coeff: tx_packet,
            tx_time_coeff: tx_time,
            rx_packet_coeff: rx_packet,
            rx_time_coeff: rx_time,
        }
    }

    pub fn is_valid(&self) -> bool {
        [
            self.tx_packet_coeff,
            self.tx_time_coeff,
            self.rx_packet_coeff,
            self.rx_time_coeff,
        ]
        .iter()
        .all(|c| c.is_finite() && *c >= S::zero())
    }

    pub fn cast<T: Scalar>(&self) -> EnergyModel<T> {
        EnergyModel {
            tx_packet_coeff: T::of(self.tx_packet_coeff.as_f64()),
            tx_time_coeff: T::of(self.tx_time_coeff.as_f64()),
            rx_packet_coeff: T::of(self.rx_packet_coeff.as_f64()),
            rx_time_coeff: T::of(self.rx_time_coeff.as_f64()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Tx,
    Rx,
}

/// Energy actually drawn from one node by one radio operation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Charge<S> {
    pub node: crate::network::NodeId,
    pub direction: Direction,
    pub energy: S,
}

pub fn transmit_energy<S: Scalar>(model: &EnergyModel<S>, packets: u64, time: S) -> S {
    model.tx_packet_coeff * S::of_count(packets) + model.tx_time_coeff * time
}

pub fn receive_energy<S: Scalar>(model: &EnergyModel<S>, packets: u64, time: S) -> S {
    model.rx_packet_coeff * S::of_count(packets) + model.rx_time_coeff * time
}

/// Recomputes a node's residual energy from its traffic counters, stores it
/// on the node and marks the node dead once nothing is left. The sink never
/// runs out.
pub fn residual_energy<S: Scalar>(node: &mut Node<S>, model: &EnergyModel<S>) -> S {
    if node.is_sink {
        node.residual_energy = node.initial_energy;
        node.alive = true;
        return node.residual_energy;
    }
    let spent = transmit_energy(model, node.packets_tx, node.time_tx)
        + receive_energy(model, node.packets_rx, node.time_rx);
    let residual = (node.initial_energy - spent).max(S::zero());
    node.residual_energy = residual;
    if residual <= S::zero() {
        node.alive = false;
    }
    residual
}
