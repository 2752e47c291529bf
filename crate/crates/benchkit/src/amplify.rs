//! Repeating read-only events to isolate their cost.

use crate::error::BenchError;
use crate::events::{EventOp, MarketEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Adjust,
    Best,
    NextBest,
    Iter,
}

impl Target {
    fn matches(self, op: &EventOp) -> bool {
        matches!(
            (self, op),
            (Target::Adjust, EventOp::Adjust { .. })
                | (Target::Best, EventOp::Best)
                | (Target::NextBest, EventOp::NextBest { .. })
                | (Target::Iter, EventOp::Iter { .. })
        )
    }
}

/// Replaces every `target` event by `factor` copies and drops the other
/// read-only events, so that the read cost measured is that of `target`
/// alone. Adjusts keep their order.
pub fn amplify(
    events: &[MarketEvent],
    factor: usize,
    target: Target,
) -> Result<Vec<MarketEvent>, BenchError> {
    if target == Target::Adjust {
        return Err(BenchError::AmplifyModifying);
    }
    if factor == 0 {
        return Err(BenchError::InvalidArgument(
            "amplification factor must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        if target.matches(&e.op) {
            out.extend(std::iter::repeat_n(*e, factor));
        } else if e.is_modifying() {
            out.push(*e);
        }
    }
    Ok(out)
}
