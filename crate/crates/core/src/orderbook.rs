//! One side of a client-side order book: aggregate price levels kept in a
//! bounded [`Glass`], with far-from-best levels preempted into a hash map.
//!
//! The threshold price `thres` splits the book. Every glass price is strictly
//! better than `thres`; every overflow price is `thres` or worse. So the glass
//! always holds a best-priced prefix of the book, and best/next queries only
//! consult the overflow store when the glass runs out (a "restructure").

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::glass::{Glass, GlassConfig, Insert};
use crate::nodepool::Handle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Asks: lower is better.
    Min,
    /// Bids: higher is better.
    Max,
}

impl Side {
    /// `a` is strictly better than `b`.
    #[inline]
    pub fn better(self, a: u64, b: u64) -> bool {
        match self {
            Side::Min => a < b,
            Side::Max => a > b,
        }
    }

    /// `a` is strictly better than the threshold; `None` is worse than any price.
    #[inline]
    fn better_than(self, a: u64, thres: Option<u64>) -> bool {
        thres.is_none_or(|t| self.better(a, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BookConfig {
    pub side: Side,
    /// Largest depth that `next_best_after` callers may reach.
    pub window: usize,
    /// Glass settings; `glass.max_size` bounds the glass.
    pub glass: GlassConfig,
}

impl BookConfig {
    pub fn new(side: Side) -> Self {
        Self {
            side,
            window: 25,
            glass: GlassConfig::default(),
        }
    }

    pub fn max_size(mut self, max_size: usize) -> Self {
        self.glass.max_size = max_size;
        self
    }

    pub fn window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn glass(mut self, glass: GlassConfig) -> Self {
        self.glass = glass;
        self
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct BookStats {
    pub preemptions: u64,
    pub restructures: u64,
    /// Levels moved from the overflow store back into the glass.
    pub unpreempted: u64,
}

pub struct OrderBook<H: Handle = u16> {
    side: Side,
    window: usize,
    thres: Option<u64>,
    glass: Glass<u64, H>,
    overflow: HashMap<u64, u64>,
    stats: BookStats,
}

impl<H: Handle> OrderBook<H> {
    pub fn new(config: BookConfig) -> Result<Self> {
        if config.window >= config.glass.max_size {
            return Err(Error::ConfigInvalid(format!(
                "window {} must be below max size {}",
                config.window, config.glass.max_size
            )));
        }
        Ok(Self {
            side: config.side,
            window: config.window,
            thres: None,
            glass: Glass::new(config.glass)?,
            overflow: HashMap::new(),
            stats: BookStats::default(),
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn max_size(&self) -> usize {
        self.glass.max_size()
    }

    /// `None` stands for the "worse than anything" threshold.
    pub fn threshold(&self) -> Option<u64> {
        self.thres
    }

    pub fn glass(&self) -> &Glass<u64, H> {
        &self.glass
    }

    pub fn overflow(&self) -> &HashMap<u64, u64> {
        &self.overflow
    }

    pub fn stats(&self) -> BookStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.glass.len() + self.overflow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn in_glass(&self, price: u64) -> bool {
        self.side.better_than(price, self.thres)
    }

    /// Amount at `price`, if the level exists.
    pub fn find(&self, price: u64) -> Option<u64> {
        if self.in_glass(price) {
            self.glass.find(price).copied()
        } else {
            self.overflow.get(&price).copied()
        }
    }

    /// Adds a level that is not currently in the book.
    pub fn insert(&mut self, price: u64, amount: u64) -> Result<()> {
        debug_assert!(self.find(price).is_none());
        if !self.in_glass(price) {
            self.overflow.insert(price, amount);
            return Ok(());
        }
        if self.glass.len() < self.glass.max_size() {
            let done = self.glass.insert(price, amount)?;
            debug_assert_eq!(done, Insert::Inserted);
            return Ok(());
        }
        self.overflow.insert(price, amount);
        self.thres = Some(price);
        self.stats.preemptions += 1;
        // Glass levels at or beyond the new threshold would be unreachable.
        while let Some(worst) = self.glass_worst() {
            if self.side.better(worst, price) {
                break;
            }
            let a = self.glass.erase(worst).expect("worst level is stored");
            self.overflow.insert(worst, a);
        }
        Ok(())
    }

    /// Removes a level, returning its amount.
    pub fn erase(&mut self, price: u64) -> Option<u64> {
        if self.in_glass(price) {
            self.glass.erase(price)
        } else {
            let a = self.overflow.remove(&price);
            if self.overflow.is_empty() {
                self.thres = None;
            }
            a
        }
    }

    /// Adds `delta` to the level at `price`, creating or deleting it as needed.
    pub fn adjust(&mut self, price: u64, delta: i64) -> Result<()> {
        let old = self.find(price).unwrap_or(0);
        let new = old as i128 + i128::from(delta);
        if new < 0 {
            return Err(Error::NegativeAmount {
                price,
                amount: old,
                delta,
            });
        }
        if old > 0 {
            self.erase(price);
        }
        if new > 0 {
            self.insert(price, new as u64)?;
        }
        Ok(())
    }

    fn glass_best(&self) -> Option<u64> {
        match self.side {
            Side::Min => self.glass.min(),
            Side::Max => self.glass.max(),
        }
    }

    fn glass_worst(&self) -> Option<u64> {
        match self.side {
            Side::Min => self.glass.max(),
            Side::Max => self.glass.min(),
        }
    }

    fn glass_after(&self, price: u64) -> Option<u64> {
        match self.side {
            Side::Min => self.glass.next(price),
            Side::Max => self.glass.prev(price),
        }
    }

    /// Best price in the book.
    pub fn best(&mut self) -> Option<u64> {
        if self.glass.is_empty() && self.thres.is_some() {
            self.restructure().expect("an empty glass always has room");
        }
        self.glass_best()
    }

    /// Next worse price after `price`. Only valid for prices within the best
    /// `window` levels; outside it `PriceTooFar` may be returned.
    pub fn next_best_after(&mut self, price: u64) -> Result<Option<u64>> {
        let r = self.glass_after(price);
        if r.is_some() || self.thres.is_none() {
            return Ok(r);
        }
        self.restructure()?;
        let r = self.glass_after(price);
        if r.is_none() && self.thres.is_some() {
            // The answer lies beyond a full glass.
            return Err(Error::PriceTooFar);
        }
        Ok(r)
    }

    /// The best `n` levels, best first.
    pub fn iterate_best(&mut self, n: usize) -> Result<Vec<(u64, u64)>> {
        let mut out = Vec::with_capacity(n);
        self.iterate_best_into(n, &mut out)?;
        Ok(out)
    }

    /// Like [`iterate_best`](Self::iterate_best), appending to `out`.
    pub fn iterate_best_into(&mut self, n: usize, out: &mut Vec<(u64, u64)>) -> Result<()> {
        let mut left = n;
        let mut at = if n == 0 { None } else { self.best() };
        while let Some(p) = at {
            out.push((p, self.find(p).expect("listed level is stored")));
            left -= 1;
            if left == 0 {
                break;
            }
            at = self.next_best_after(p)?;
        }
        Ok(())
    }

    /// Moves the best overflow levels into the free part of the glass.
    pub fn restructure(&mut self) -> Result<()> {
        let sigma = self.glass.len();
        let cap = self.glass.max_size();
        if sigma == cap {
            return Err(Error::PriceTooFar);
        }
        let take = (cap - sigma).min(self.overflow.len());
        let mut levels: Vec<(u64, u64)> = self.overflow.iter().map(|(&p, &a)| (p, a)).collect();
        let side = self.side;
        let order = |a: &(u64, u64), b: &(u64, u64)| match side {
            Side::Min => a.0.cmp(&b.0),
            Side::Max => b.0.cmp(&a.0),
        };
        if take < levels.len() {
            levels.select_nth_unstable_by(take, order);
        }
        let (best, rest) = levels.split_at_mut(take);
        best.sort_unstable_by(order);
        for &(p, a) in best.iter() {
            self.glass.insert(p, a)?;
            self.overflow.remove(&p);
        }
        // after selection, rest[0] is the best remaining level
        self.thres = rest.first().map(|&(p, _)| p);
        self.stats.restructures += 1;
        self.stats.unpreempted += take as u64;
        Ok(())
    }

    /// Checks the partition between glass and overflow store.
    pub fn check_partition(&self) -> std::result::Result<(), String> {
        if self.overflow.is_empty() != self.thres.is_none() {
            return Err(format!(
                "overflow holds {} levels but threshold is {:?}",
                self.overflow.len(),
                self.thres
            ));
        }
        if self.glass.len() > self.glass.max_size() {
            return Err("glass over its max size".into());
        }
        for (p, &a) in self.glass.iter() {
            if !self.in_glass(p) {
                return Err(format!("glass price {p} not better than {:?}", self.thres));
            }
            if a == 0 {
                return Err(format!("zero amount at {p}"));
            }
        }
        for (&p, &a) in &self.overflow {
            if self.in_glass(p) {
                return Err(format!("overflow price {p} better than {:?}", self.thres));
            }
            if a == 0 {
                return Err(format!("zero amount at {p}"));
            }
        }
        Ok(())
    }
}
