//! Uniform interfaces over the structures being compared.

use std::collections::BTreeMap;

use glass::{BookConfig, Glass, GlassConfig, OrderBook, Side};

use crate::treap::ArenaTreap;

pub trait BenchMap {
    fn insert(&mut self, key: u64, val: u64) -> bool;
    fn erase(&mut self, key: u64) -> Option<u64>;
    fn find(&self, key: u64) -> Option<u64>;
    fn min(&self) -> Option<u64>;
    fn max(&self) -> Option<u64>;
    fn next(&self, key: u64) -> Option<u64>;
    fn prev(&self, key: u64) -> Option<u64>;
}

impl BenchMap for Glass {
    fn insert(&mut self, key: u64, val: u64) -> bool {
        matches!(Glass::insert(self, key, val), Ok(glass::Insert::Inserted))
    }
    fn erase(&mut self, key: u64) -> Option<u64> {
        Glass::erase(self, key)
    }
    fn find(&self, key: u64) -> Option<u64> {
        Glass::find(self, key).copied()
    }
    fn min(&self) -> Option<u64> {
        Glass::min(self)
    }
    fn max(&self) -> Option<u64> {
        Glass::max(self)
    }
    fn next(&self, key: u64) -> Option<u64> {
        Glass::next(self, key)
    }
    fn prev(&self, key: u64) -> Option<u64> {
        Glass::prev(self, key)
    }
}

impl BenchMap for BTreeMap<u64, u64> {
    fn insert(&mut self, key: u64, val: u64) -> bool {
        match self.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(val);
                true
            }
            std::collections::btree_map::Entry::Occupied(_) => false,
        }
    }
    fn erase(&mut self, key: u64) -> Option<u64> {
        self.remove(&key)
    }
    fn find(&self, key: u64) -> Option<u64> {
        self.get(&key).copied()
    }
    fn min(&self) -> Option<u64> {
        self.keys().next().copied()
    }
    fn max(&self) -> Option<u64> {
        self.keys().next_back().copied()
    }
    fn next(&self, key: u64) -> Option<u64> {
        self.range(key.checked_add(1)?..).next().map(|(&k, _)| k)
    }
    fn prev(&self, key: u64) -> Option<u64> {
        self.range(..key).next_back().map(|(&k, _)| k)
    }
}

impl BenchMap for ArenaTreap {
    fn insert(&mut self, key: u64, val: u64) -> bool {
        ArenaTreap::insert(self, key, val)
    }
    fn erase(&mut self, key: u64) -> Option<u64> {
        ArenaTreap::erase(self, key)
    }
    fn find(&self, key: u64) -> Option<u64> {
        ArenaTreap::find(self, key)
    }
    fn min(&self) -> Option<u64> {
        ArenaTreap::min(self)
    }
    fn max(&self) -> Option<u64> {
        ArenaTreap::max(self)
    }
    fn next(&self, key: u64) -> Option<u64> {
        ArenaTreap::next(self, key)
    }
    fn prev(&self, key: u64) -> Option<u64> {
        ArenaTreap::prev(self, key)
    }
}

/// One side of an order book as seen by the replay benchmark.
pub trait BenchBook {
    fn adjust(&mut self, price: u64, delta: i64);
    fn best(&mut self) -> Option<u64>;
    fn next_best_after(&mut self, price: u64) -> Option<u64>;
    fn iterate(&mut self, depth: usize, out: &mut Vec<(u64, u64)>);
}

impl BenchBook for OrderBook {
    fn adjust(&mut self, price: u64, delta: i64) {
        OrderBook::adjust(self, price, delta).expect("feed keeps amounts nonnegative");
    }
    fn best(&mut self) -> Option<u64> {
        OrderBook::best(self)
    }
    fn next_best_after(&mut self, price: u64) -> Option<u64> {
        OrderBook::next_best_after(self, price).expect("query within the window")
    }
    fn iterate(&mut self, depth: usize, out: &mut Vec<(u64, u64)>) {
        let n = depth.min(self.window());
        self.iterate_best_into(n, out)
            .expect("depth within the window");
    }
}

/// Order-book side over any [`BenchMap`], with no size bound.
pub struct MapBook<M> {
    side: Side,
    map: M,
}

impl<M: BenchMap> MapBook<M> {
    pub fn new(side: Side, map: M) -> Self {
        Self { side, map }
    }

    fn after(&self, price: u64) -> Option<u64> {
        match self.side {
            Side::Min => self.map.next(price),
            Side::Max => self.map.prev(price),
        }
    }
}

impl<M: BenchMap> BenchBook for MapBook<M> {
    fn adjust(&mut self, price: u64, delta: i64) {
        let old = self.map.find(price).unwrap_or(0);
        let new = old as i128 + i128::from(delta);
        assert!(new >= 0, "negative amount at {price}");
        if old > 0 {
            self.map.erase(price);
        }
        if new > 0 {
            self.map.insert(price, new as u64);
        }
    }
    fn best(&mut self) -> Option<u64> {
        match self.side {
            Side::Min => self.map.min(),
            Side::Max => self.map.max(),
        }
    }
    fn next_best_after(&mut self, price: u64) -> Option<u64> {
        self.after(price)
    }
    fn iterate(&mut self, depth: usize, out: &mut Vec<(u64, u64)>) {
        let mut at = if depth == 0 { None } else { self.best() };
        while let Some(p) = at {
            out.push((p, self.map.find(p).expect("listed level is stored")));
            if out.len() == depth {
                break;
            }
            at = self.after(p);
        }
    }
}

/// Structures under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Glass,
    BTree,
    Treap,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Glass, Structure::BTree, Structure::Treap];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Glass => "glass",
            Structure::BTree => "btree",
            Structure::Treap => "treap",
        }
    }
}

/// Default glass used by every benchmark: `K = 50`, `C = 5`, 16-bit handles.
pub fn bench_glass(max_size: usize) -> Glass {
    Glass::new(GlassConfig::default().max_size(max_size)).expect("valid bench configuration")
}

pub fn bench_book(side: Side) -> OrderBook {
    OrderBook::new(BookConfig::new(side)).expect("valid bench configuration")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn books_agree() {
        let feed = crate::events::synth_feed(2, 20_000);
        let mut a: Vec<Box<dyn BenchBook>> = vec![
            Box::new(bench_book(Side::Max)),
            Box::new(MapBook::new(Side::Max, BTreeMap::new())),
            Box::new(MapBook::new(Side::Max, ArenaTreap::with_capacity(64))),
        ];
        let mut b: Vec<Box<dyn BenchBook>> = vec![
            Box::new(bench_book(Side::Min)),
            Box::new(MapBook::new(Side::Min, BTreeMap::new())),
            Box::new(MapBook::new(Side::Min, ArenaTreap::with_capacity(64))),
        ];
        for e in feed {
            let books = match e.side {
                crate::events::FeedSide::Bid => &mut a,
                crate::events::FeedSide::Ask => &mut b,
            };
            let outs: Vec<Vec<(u64, u64)>> = books
                .iter_mut()
                .map(|bk| {
                    let mut out = Vec::new();
                    match e.op {
                        crate::events::EventOp::Adjust { price, delta } => bk.adjust(price, delta),
                        crate::events::EventOp::Best => out.extend(bk.best().map(|p| (p, 0))),
                        crate::events::EventOp::NextBest { price } => {
                            out.extend(bk.next_best_after(price).map(|p| (p, 0)))
                        }
                        crate::events::EventOp::Iter { depth } => bk.iterate(depth, &mut out),
                    }
                    out
                })
                .collect();
            assert_eq!(outs[0], outs[1], "{e}");
            assert_eq!(outs[0], outs[2], "{e}");
        }
    }
}
