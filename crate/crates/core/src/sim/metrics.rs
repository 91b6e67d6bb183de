//! Delivery ratio, drop ratio, throughput and the per-interval metrics row.

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Fraction of sent packets that reached the sink; `None` when nothing was sent.
pub fn pdr<S: Scalar>(received: u64, sent: u64) -> Result<Option<S>> {
    ratio(received, sent, "received")
}

/// Fraction of sent packets that were lost; `None` when nothing was sent.
pub fn drop_ratio<S: Scalar>(dropped: u64, sent: u64) -> Result<Option<S>> {
    ratio(dropped, sent, "dropped")
}

fn ratio<S: Scalar>(part: u64, sent: u64, what: &str) -> Result<Option<S>> {
    if part > sent {
        return Err(Error::Accounting(format!("{what} {part} exceeds sent {sent}")));
    }
    if sent == 0 {
        return Ok(None);
    }
    Ok(Some(S::of_count(part) / S::of_count(sent)))
}

/// Delivered packets per second.
pub fn throughput<S: Scalar>(delivered: u64, elapsed: S) -> Result<S> {
    if !(elapsed > S::zero()) {
        return Err(Error::Accounting(format!("elapsed time {elapsed} must be positive")));
    }
    Ok(S::of_count(delivered) / elapsed)
}

/// One sampled row. Delivery figures are cumulative since tick 0.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsFrame<S> {
    /// Ticks elapsed when the frame was taken.
    pub tick: u64,
    pub alive_fraction: S,
    pub residual_fraction: S,
    pub pdr: Option<S>,
    pub drop_ratio: Option<S>,
    pub throughput: S,
    pub partitioned: bool,
}
