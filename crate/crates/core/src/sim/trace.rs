//! Structured simulation events.

use std::fmt::{self, Write as _};

use crate::clustering::ClusterId;
use crate::energy::{Charge, Direction};
use crate::network::NodeId;
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropReason {
    /// The source's cluster has no elected head.
    NoHead,
    /// The source's head has no overlay path to the sink.
    NoRoute,
    /// A node on the path was dead or ran out of energy.
    NodeDead,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::NoHead => "no_head",
            DropReason::NoRoute => "no_route",
            DropReason::NodeDead => "node_dead",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EventKind<S> {
    Deploy {
        nodes: usize,
        clusters: usize,
        total_energy: S,
    },
    Elect {
        epoch: u64,
        heads: Vec<NodeId>,
        local_head: Option<NodeId>,
        skipped: Vec<ClusterId>,
    },
    TrafficGen {
        count: u64,
    },
    /// Route request flood from `origin`, the source's head.
    Rreq {
        packet: u64,
        origin: NodeId,
        reached: Vec<NodeId>,
        charges: Vec<Charge<S>>,
    },
    Rrep {
        packet: u64,
        hops: Vec<NodeId>,
    },
    Forward {
        packet: u64,
        path: Vec<NodeId>,
        charges: Vec<Charge<S>>,
    },
    Drop {
        packet: u64,
        source: NodeId,
        reason: DropReason,
        at: Option<NodeId>,
        charges: Vec<Charge<S>>,
    },
    NodeDeath {
        node: NodeId,
    },
    Partition {
        disconnected: usize,
        full: bool,
    },
}

impl<S> EventKind<S> {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Deploy { .. } => "DEPLOY",
            EventKind::Elect { .. } => "ELECT",
            EventKind::TrafficGen { .. } => "TRAFFIC",
            EventKind::Rreq { .. } => "RREQ",
            EventKind::Rrep { .. } => "RREP",
            EventKind::Forward { .. } => "FWD",
            EventKind::Drop { .. } => "DROP",
            EventKind::NodeDeath { .. } => "DEATH",
            EventKind::Partition { .. } => "PARTITION",
        }
    }

    pub fn charges(&self) -> &[Charge<S>] {
        match self {
            EventKind::Rreq { charges, .. }
            | EventKind::Forward { charges, .. }
            | EventKind::Drop { charges, .. } => charges,
            _ => &[],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimEvent<S> {
    /// Zero-based tick the event happened in.
    pub tick: u64,
    /// Position in the run's total event order.
    pub seq: u64,
    pub kind: EventKind<S>,
}

impl<S: Scalar> SimEvent<S> {
    pub fn energy(&self) -> S {
        self.kind
            .charges()
            .iter()
            .fold(S::zero(), |acc, c| acc + c.energy)
    }

    /// One tab-separated line: tick, seq, kind, then `key=value` fields.
    pub fn to_line(&self) -> String {
        let mut fields: Vec<String> = vec![self.tick.to_string(), self.seq.to_string(), self.kind.name().into()];
        match &self.kind {
            EventKind::Deploy { nodes, clusters, total_energy } => {
                fields.push(format!("nodes={nodes}"));
                fields.push(format!("clusters={clusters}"));
                fields.push(format!("total_energy={}", fmt_energy(*total_energy)));
            }
            EventKind::Elect { epoch, heads, local_head, skipped } => {
                fields.push(format!("epoch={epoch}"));
                fields.push(format!("heads={}", join(heads)));
                fields.push(format!(
                    "local_head={}",
                    local_head.map_or_else(|| "-".to_string(), |h| h.to_string())
                ));
                fields.push(format!("skipped={}", join(skipped.iter().map(|c| c.0))));
            }
            EventKind::TrafficGen { count } => fields.push(format!("count={count}")),
            EventKind::Rreq { packet, origin, reached, charges } => {
                fields.push(format!("packet={packet}"));
                fields.push(format!("origin={origin}"));
                fields.push(format!("reached={}", join(reached)));
                fields.push(format!("charges={}", fmt_charges(charges)));
            }
            EventKind::Rrep { packet, hops } => {
                fields.push(format!("packet={packet}"));
                fields.push(format!("hops={}", join(hops)));
            }
            EventKind::Forward { packet, path, charges } => {
                fields.push(format!("packet={packet}"));
                fields.push(format!("path={}", join(path)));
                fields.push(format!("charges={}", fmt_charges(charges)));
            }
            EventKind::Drop { packet, source, reason, at, charges } => {
                fields.push(format!("packet={packet}"));
                fields.push(format!("source={source}"));
                fields.push(format!("reason={reason}"));
                fields.push(format!("at={}", at.map_or_else(|| "-".to_string(), |n| n.to_string())));
                fields.push(format!("charges={}", fmt_charges(charges)));
            }
            EventKind::NodeDeath { node } => fields.push(format!("node={node}")),
            EventKind::Partition { disconnected, full } => {
                fields.push(format!("disconnected={disconnected}"));
                fields.push(format!("full={full}"));
            }
        }
        fields.join("\t")
    }
}

fn join<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{item}").expect("writing to a String");
    }
    if out.is_empty() {
        out.push('-');
    }
    out
}

fn fmt_energy<S: Scalar>(e: S) -> String {
    // Shortest round-trip representation.
    format!("{:?}", e.as_f64())
}

fn fmt_charges<S: Scalar>(charges: &[Charge<S>]) -> String {
    join(charges.iter().map(|c| {
        let dir = match c.direction {
            Direction::Tx => "tx",
            Direction::Rx => "rx",
        };
        format!("{}:{dir}:{}", c.node, fmt_energy(c.energy))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_tab_separated() {
        let e = SimEvent::<f64> {
            tick: 3,
            seq: 17,
            kind: EventKind::Forward {
                packet: 4,
                path: vec![NodeId(2), NodeId(5), NodeId(50)],
                charges: vec![
                    Charge { node: NodeId(2), direction: Direction::Tx, energy: 0.5 },
                    Charge { node: NodeId(5), direction: Direction::Rx, energy: 0.25 },
                ],
            },
        };
        assert_eq!(e.to_line(), "3\t17\tFWD\tpacket=4\tpath=2,5,50\tcharges=2:tx:0.5,5:rx:0.25");
        assert_eq!(e.energy(), 0.75);
        let empty = SimEvent::<f64> {
            tick: 0,
            seq: 1,
            kind: EventKind::Elect { epoch: 0, heads: vec![], local_head: None, skipped: vec![] },
        };
        assert_eq!(empty.to_line(), "0\t1\tELECT\tepoch=0\theads=-\tlocal_head=-\tskipped=-");
    }
}
