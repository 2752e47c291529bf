//! Synthetic single-operation workloads over locality-shaped keys.

use std::collections::HashSet;

use glass::oracle::{KeyWalk, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SynthOp {
    Insert,
    Erase,
    FindExisting,
    FindNonExisting,
}

impl SynthOp {
    pub const ALL: [SynthOp; 4] = [
        SynthOp::Insert,
        SynthOp::Erase,
        SynthOp::FindExisting,
        SynthOp::FindNonExisting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthOp::Insert => "insert",
            SynthOp::Erase => "erase",
            SynthOp::FindExisting => "find-e",
            SynthOp::FindNonExisting => "find-ne",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub op: SynthOp,
    /// Keys inserted before timing starts.
    pub prefill: Vec<u64>,
    /// Keys the timed operation is applied to, in order.
    pub keys: Vec<u64>,
}

/// `count` distinct keys in the order a local random walk first visits them.
pub fn unique_walk(seed: u64, count: usize, key_bits: u32) -> Vec<u64> {
    let mut walk = KeyWalk::new(seed, Shape::local(), key_bits);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let k = walk.next_key();
        if seen.insert(k) {
            out.push(k);
        }
    }
    out
}

/// Workload over `count` keys. Find-non-existing stores the even positions
/// of a walk of `2 * count` keys and queries the odd ones.
pub fn synth_workload(op: SynthOp, seed: u64, count: usize, key_bits: u32) -> Workload {
    match op {
        SynthOp::Insert => Workload {
            op,
            prefill: Vec::new(),
            keys: unique_walk(seed, count, key_bits),
        },
        SynthOp::Erase | SynthOp::FindExisting => {
            let keys = unique_walk(seed, count, key_bits);
            Workload {
                op,
                prefill: keys.clone(),
                keys,
            }
        }
        SynthOp::FindNonExisting => {
            let all = unique_walk(seed, 2 * count, key_bits);
            let prefill = all.iter().step_by(2).copied().collect();
            let keys = all.iter().skip(1).step_by(2).copied().collect();
            Workload { op, prefill, keys }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walks_are_unique_and_deterministic() {
        let a = unique_walk(3, 5000, 50);
        assert_eq!(a, unique_walk(3, 5000, 50));
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 5000);
    }

    #[test]
    fn find_non_existing_misses() {
        let w = synth_workload(SynthOp::FindNonExisting, 1, 1000, 50);
        let stored: HashSet<_> = w.prefill.iter().collect();
        assert!(w.keys.iter().all(|k| !stored.contains(k)));
        assert_eq!((w.prefill.len(), w.keys.len()), (1000, 1000));
    }

    #[test]
    fn names_round_trip() {
        for op in SynthOp::ALL {
            assert_eq!(SynthOp::from_name(op.name()), Some(op));
        }
    }
}
