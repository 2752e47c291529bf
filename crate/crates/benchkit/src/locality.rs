//! Sequential and edge locality of a feed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use glass::oracle::RefBook;

use crate::events::{EventOp, FeedSide, MarketEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalityKind {
    /// Distance from the previous adjust price on the same side.
    Sequential,
    /// Distance from the best price on the same side.
    Edge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityHistogram {
    pub kind: LocalityKind,
    pub bins: BTreeMap<u64, u64>,
}

impl LocalityHistogram {
    pub fn new(kind: LocalityKind) -> Self {
        Self {
            kind,
            bins: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, distance: u64) {
        *self.bins.entry(distance).or_default() += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.values().sum()
    }

    /// `distance count` lines in ascending distance.
    pub fn to_columns(&self) -> String {
        let mut out = String::new();
        for (d, c) in &self.bins {
            let _ = writeln!(out, "{d} {c}");
        }
        out
    }
}

/// Histograms over adjust events. The edge distance is measured against the
/// book as it stands before the event is applied; events on an empty side
/// are skipped.
pub fn locality_histograms(events: &[MarketEvent]) -> (LocalityHistogram, LocalityHistogram) {
    let mut seq = LocalityHistogram::new(LocalityKind::Sequential);
    let mut edge = LocalityHistogram::new(LocalityKind::Edge);
    let mut last: [Option<u64>; 2] = [None, None];
    let mut books = [
        RefBook::new(FeedSide::Bid.book_side()),
        RefBook::new(FeedSide::Ask.book_side()),
    ];
    for e in events {
        let EventOp::Adjust { price, delta } = e.op else {
            continue;
        };
        let s = e.side.index();
        if let Some(prev) = last[s] {
            seq.add(price.abs_diff(prev));
        }
        last[s] = Some(price);
        if let Some(best) = books[s].best() {
            edge.add(price.abs_diff(best));
        }
        books[s].adjust(price, delta);
    }
    (seq, edge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_price_is_one_bin() {
        let ev: Vec<_> = (0..10)
            .map(|_| MarketEvent::adjust(FeedSide::Bid, 100, 1))
            .collect();
        let (seq, edge) = locality_histograms(&ev);
        assert_eq!(seq.bins, BTreeMap::from([(0, 9)]));
        assert_eq!(edge.bins, BTreeMap::from([(0, 9)]));
    }

    #[test]
    fn alternating_prices() {
        let ev: Vec<_> = (0..10)
            .map(|i| MarketEvent::adjust(FeedSide::Ask, 100 + 3 * (i % 2), 1))
            .collect();
        let (seq, edge) = locality_histograms(&ev);
        assert_eq!(seq.bins, BTreeMap::from([(3, 9)]));
        assert_eq!(seq.total(), 9);
        // best ask stays at 100
        assert_eq!(edge.bins, BTreeMap::from([(0, 4), (3, 5)]));
        assert_eq!(seq.to_columns(), "3 9\n");
    }

    #[test]
    fn sides_are_tracked_separately() {
        let ev = [
            MarketEvent::adjust(FeedSide::Bid, 10, 1),
            MarketEvent::adjust(FeedSide::Ask, 20, 1),
            MarketEvent::adjust(FeedSide::Bid, 12, 1),
        ];
        let (seq, _) = locality_histograms(&ev);
        assert_eq!(seq.bins, BTreeMap::from([(2, 1)]));
    }
}
