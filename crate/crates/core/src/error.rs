use thiserror::Error;

use crate::clustering::ElectionError;
use crate::network::NodeId;
use crate::routing::RoutingError;
use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error(transparent)]
    Election(#[from] ElectionError),

    #[error(transparent)]
    Routing(#[from] RoutingError),

    /// A packet counter invariant was broken; the run cannot be trusted.
    #[error("accounting corruption: {0}")]
    Accounting(String),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
