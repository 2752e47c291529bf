//! Reference maps, trace generation and differential drivers.
//!
//! Everything here is deliberately simple: a `BTreeMap`-backed map with the
//! same result vocabulary as [`Glass`], and a `BTreeMap`-backed order book
//! with no size bound.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::Error;
use crate::glass::{Glass, Insert};
use crate::nodepool::Handle;
use crate::orderbook::{OrderBook, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Insert(u64, u64),
    Erase(u64),
    Find(u64),
    Min,
    Max,
    Next(u64),
    Prev(u64),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Insert(k, v) => write!(f, "I {k} {v}"),
            Op::Erase(k) => write!(f, "E {k}"),
            Op::Find(k) => write!(f, "F {k}"),
            Op::Min => write!(f, "MIN"),
            Op::Max => write!(f, "MAX"),
            Op::Next(k) => write!(f, "N {k}"),
            Op::Prev(k) => write!(f, "P {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let tag = parts.next().ok_or("empty op")?;
        let mut num = || -> Result<u64, String> {
            let t = parts
                .next()
                .ok_or_else(|| format!("{tag}: missing operand"))?;
            t.parse()
                .map_err(|e| format!("{tag}: bad operand {t:?}: {e}"))
        };
        let op = match tag {
            "I" => {
                let k = num()?;
                Op::Insert(k, num()?)
            }
            "E" => Op::Erase(num()?),
            "F" => Op::Find(num()?),
            "N" => Op::Next(num()?),
            "P" => Op::Prev(num()?),
            "MIN" => Op::Min,
            "MAX" => Op::Max,
            _ => return Err(format!("unknown op {tag:?}")),
        };
        match parts.next() {
            Some(extra) => Err(format!("{tag}: unexpected operand {extra:?}")),
            None => Ok(op),
        }
    }
}

/// What an operation returned, in a form comparable across implementations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reply {
    Inserted,
    AlreadyPresent,
    Full,
    OutOfRange,
    Value(Option<u64>),
    Key(Option<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Uniform,
    /// Successive keys differ by `±(1 + Geom(p))`.
    Local {
        p: f64,
    },
}

impl Shape {
    /// P(|Δ| ≤ 5) = 0.8.
    pub const DEFAULT_LOCAL_P: f64 = 0.275_220_340_595_942_2;

    pub fn local() -> Self {
        Shape::Local {
            p: Self::DEFAULT_LOCAL_P,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Uniform => write!(f, "uniform"),
            Shape::Local { p } => write!(f, "local p={p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpTrace {
    pub seed: u64,
    pub shape: Shape,
    pub key_bits: u32,
    pub ops: Vec<Op>,
}

impl OpTrace {
    /// Text form: a `#` header with the generator settings, then one op per line.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# seed {} key_bits {} shape {}\n",
            self.seed, self.key_bits, self.shape
        );
        for op in &self.ops {
            out.push_str(&op.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses one op per line; blank lines and `#` comments are skipped.
pub fn parse_ops(text: &str) -> Result<Vec<Op>, ParseError> {
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        ops.push(
            line.parse()
                .map_err(|msg| ParseError { line: i + 1, msg })?,
        );
    }
    Ok(ops)
}

/// Random walk over `[0, 2^key_bits)` that never repeats the previous value.
pub struct KeyWalk {
    rng: ChaCha8Rng,
    shape: Shape,
    geom: Option<Geometric>,
    span: u64,
    at: u64,
}

impl KeyWalk {
    pub fn new(seed: u64, shape: Shape, key_bits: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = if key_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << key_bits) - 1
        };
        let at = rng.random_range(0..=span);
        let geom = match shape {
            Shape::Local { p } => Some(Geometric::new(p).expect("0 < p <= 1")),
            Shape::Uniform => None,
        };
        Self {
            rng,
            shape,
            geom,
            span,
            at,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Signed step with nonzero magnitude.
    pub fn step(&mut self) -> i64 {
        let g = self.geom.as_ref().expect("local walk");
        let mag = 1 + g.sample(&mut self.rng).min(1 << 40) as i64;
        if self.rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    }

    pub fn next_key(&mut self) -> u64 {
        let prev = self.at;
        self.at = match self.shape {
            Shape::Uniform => loop {
                let k = self.rng.random_range(0..=self.span);
                if k != prev || self.span == 0 {
                    break k;
                }
            },
            Shape::Local { .. } => loop {
                let k = prev.wrapping_add_signed(self.step()) & self.span;
                if k != prev || self.span == 0 {
                    break k;
                }
            },
        };
        self.at
    }
}

/// Mixed operation trace: 40% inserts, 30% erases, 10% finds, 5% min/max,
/// 15% next/prev. Keys follow a [`KeyWalk`].
pub fn gen_trace(seed: u64, shape: Shape, key_bits: u32, len: usize) -> OpTrace {
    let mut walk = KeyWalk::new(seed, shape, key_bits);
    let mut ops = Vec::with_capacity(len);
    for _ in 0..len {
        let k = walk.next_key();
        let roll = walk.rng().random_range(0..100u32);
        ops.push(match roll {
            0..40 => Op::Insert(k, walk.rng().random()),
            40..70 => Op::Erase(k),
            70..80 => Op::Find(k),
            80..83 => Op::Min,
            83..85 => Op::Max,
            85..93 => Op::Next(k),
            _ => Op::Prev(k),
        });
    }
    OpTrace {
        seed,
        shape,
        key_bits,
        ops,
    }
}

/// Anything that can be driven by an [`Op`] stream.
pub trait OrderedMap {
    fn apply(&mut self, op: Op) -> Reply;

    /// Structural self-check; called after every op in instrumented runs.
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

/// Ordered map with insert-if-absent semantics and an optional size bound.
#[derive(Debug, Clone, Default)]
pub struct RefMap {
    map: BTreeMap<u64, u64>,
    key_bits: u32,
    max_size: Option<usize>,
}

impl RefMap {
    pub fn new(key_bits: u32, max_size: Option<usize>) -> Self {
        Self {
            map: BTreeMap::new(),
            key_bits,
            max_size,
        }
    }

    fn fits(&self, k: u64) -> bool {
        self.key_bits >= 64 || k >> self.key_bits == 0
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = u64> + '_ {
        self.map.keys().copied()
    }
}

impl OrderedMap for RefMap {
    fn apply(&mut self, op: Op) -> Reply {
        match op {
            Op::Insert(k, v) => {
                if !self.fits(k) {
                    Reply::OutOfRange
                } else if self.map.contains_key(&k) {
                    Reply::AlreadyPresent
                } else if self.max_size.is_some_and(|m| self.map.len() >= m) {
                    Reply::Full
                } else {
                    self.map.insert(k, v);
                    Reply::Inserted
                }
            }
            Op::Erase(k) => Reply::Value(self.map.remove(&k)),
            Op::Find(k) => Reply::Value(self.map.get(&k).copied()),
            Op::Min => Reply::Key(self.map.keys().next().copied()),
            Op::Max => Reply::Key(self.map.keys().next_back().copied()),
            Op::Next(k) => Reply::Key(
                k.checked_add(1)
                    .and_then(|lo| self.map.range(lo..).next().map(|(&k, _)| k)),
            ),
            Op::Prev(k) => Reply::Key(self.map.range(..k).next_back().map(|(&k, _)| k)),
        }
    }
}

/// Sorted vector map, used to cross-check [`RefMap`].
#[derive(Debug, Clone, Default)]
pub struct SortedVecMap {
    items: Vec<(u64, u64)>,
    key_bits: u32,
    max_size: Option<usize>,
}

impl SortedVecMap {
    pub fn new(key_bits: u32, max_size: Option<usize>) -> Self {
        Self {
            items: Vec::new(),
            key_bits,
            max_size,
        }
    }
}

impl OrderedMap for SortedVecMap {
    fn apply(&mut self, op: Op) -> Reply {
        let pos = |items: &[(u64, u64)], k: u64| items.iter().position(|&(x, _)| x == k);
        match op {
            Op::Insert(k, v) => {
                if self.key_bits < 64 && k >> self.key_bits != 0 {
                    return Reply::OutOfRange;
                }
                if pos(&self.items, k).is_some() {
                    return Reply::AlreadyPresent;
                }
                if self.max_size.is_some_and(|m| self.items.len() >= m) {
                    return Reply::Full;
                }
                let at = self.items.iter().filter(|&&(x, _)| x < k).count();
                self.items.insert(at, (k, v));
                Reply::Inserted
            }
            Op::Erase(k) => Reply::Value(pos(&self.items, k).map(|i| self.items.remove(i).1)),
            Op::Find(k) => Reply::Value(pos(&self.items, k).map(|i| self.items[i].1)),
            Op::Min => Reply::Key(self.items.first().map(|e| e.0)),
            Op::Max => Reply::Key(self.items.last().map(|e| e.0)),
            Op::Next(k) => Reply::Key(self.items.iter().map(|e| e.0).find(|&x| x > k)),
            Op::Prev(k) => Reply::Key(self.items.iter().rev().map(|e| e.0).find(|&x| x < k)),
        }
    }
}

impl<H: Handle> OrderedMap for Glass<u64, H> {
    fn apply(&mut self, op: Op) -> Reply {
        match op {
            Op::Insert(k, v) => match self.insert(k, v) {
                Ok(Insert::Inserted) => Reply::Inserted,
                Ok(Insert::AlreadyPresent) => Reply::AlreadyPresent,
                Err(Error::GlassFull(_)) => Reply::Full,
                Err(Error::KeyOutOfRange(_)) => Reply::OutOfRange,
                Err(e) => panic!("unexpected insert error: {e}"),
            },
            Op::Erase(k) => Reply::Value(self.erase(k)),
            Op::Find(k) => Reply::Value(self.find(k).copied()),
            Op::Min => Reply::Key(self.min()),
            Op::Max => Reply::Key(self.max()),
            Op::Next(k) => Reply::Key(self.next(k)),
            Op::Prev(k) => Reply::Key(self.prev(k)),
        }
    }

    fn check(&self) -> Result<(), String> {
        self.check_integrity()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence<O, R> {
    pub index: usize,
    pub op: O,
    pub expected: R,
    pub got: R,
    /// Set when a structural check failed rather than a reply.
    pub broken: Option<String>,
}

impl<O: fmt::Debug, R: fmt::Debug> fmt::Display for Divergence<O, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "op #{} {:?}: expected {:?}, got {:?}",
            self.index, self.op, self.expected, self.got
        )?;
        if let Some(b) = &self.broken {
            write!(f, " ({b})")?;
        }
        Ok(())
    }
}

/// Applies `ops` to both maps in lockstep and stops at the first mismatch.
/// With `check_each`, the map's structural check also runs after every op.
pub fn fuzz_run<M: OrderedMap + ?Sized>(
    map: &mut M,
    reference: &mut RefMap,
    ops: &[Op],
    check_each: bool,
) -> Result<(), Divergence<Op, Reply>> {
    for (index, &op) in ops.iter().enumerate() {
        let expected = reference.apply(op);
        let got = map.apply(op);
        let broken = if check_each { map.check().err() } else { None };
        if expected != got || broken.is_some() {
            return Err(Divergence {
                index,
                op,
                expected,
                got,
                broken,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BookOp {
    Adjust(u64, i64),
    Best,
    NextBest(u64),
    Iterate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BookReply {
    Done,
    Price(Option<u64>),
    TooFar,
    Levels(Vec<(u64, u64)>),
}

/// Unbounded order book side.
#[derive(Debug, Clone)]
pub struct RefBook {
    side: Side,
    levels: BTreeMap<u64, u64>,
}

impl RefBook {
    pub fn new(side: Side) -> Self {
        Self {
            side,
            levels: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn amount(&self, price: u64) -> u64 {
        self.levels.get(&price).copied().unwrap_or(0)
    }

    pub fn adjust(&mut self, price: u64, delta: i64) {
        let new = self.amount(price) as i128 + i128::from(delta);
        assert!(new >= 0, "negative amount at {price}");
        if new == 0 {
            self.levels.remove(&price);
        } else {
            self.levels.insert(price, new as u64);
        }
    }

    /// Levels best first.
    pub fn ranked(&self) -> Box<dyn Iterator<Item = (u64, u64)> + '_> {
        let it = self.levels.iter().map(|(&p, &a)| (p, a));
        match self.side {
            Side::Min => Box::new(it),
            Side::Max => Box::new(it.rev()),
        }
    }

    pub fn best(&self) -> Option<u64> {
        self.ranked().next().map(|l| l.0)
    }

    pub fn next_best_after(&self, price: u64) -> Option<u64> {
        match self.side {
            Side::Min => price
                .checked_add(1)
                .and_then(|lo| self.levels.range(lo..).next().map(|(&p, _)| p)),
            Side::Max => self.levels.range(..price).next_back().map(|(&p, _)| p),
        }
    }

    /// 0-based position of `price` counting from the best level.
    pub fn rank(&self, price: u64) -> usize {
        match self.side {
            Side::Min => self.levels.range(..price).count(),
            Side::Max => self.levels.range(price.saturating_add(1)..).count(),
        }
    }

    pub fn price_at_rank(&self, rank: usize) -> Option<u64> {
        self.ranked().nth(rank).map(|l| l.0)
    }

    pub fn iterate_best(&self, n: usize) -> Vec<(u64, u64)> {
        self.ranked().take(n).collect()
    }
}

/// Adjust-heavy book stream. Prices follow a local walk; removals pick a
/// stored level so amounts never go negative; next-best queries sample
/// ranks both inside the window and far beyond it.
pub fn gen_book_ops(
    seed: u64,
    side: Side,
    key_bits: u32,
    len: usize,
    window: usize,
) -> Vec<BookOp> {
    let mut walk = KeyWalk::new(seed, Shape::local(), key_bits);
    let mut book = RefBook::new(side);
    let mut ops = Vec::with_capacity(len);
    for _ in 0..len {
        let price = walk.next_key();
        let roll = walk.rng().random_range(0..100u32);
        let op = match roll {
            0..45 => BookOp::Adjust(price, walk.rng().random_range(1..=100)),
            45..70 if !book.is_empty() => {
                let rank = walk.rng().random_range(0..book.len());
                let p = book.price_at_rank(rank).expect("rank in range");
                let a = book.amount(p) as i64;
                let cut = if walk.rng().random_bool(0.7) {
                    a
                } else {
                    walk.rng().random_range(1..=a)
                };
                BookOp::Adjust(p, -cut)
            }
            70..80 => BookOp::Best,
            80..92 if !book.is_empty() => {
                let limit = if walk.rng().random_bool(0.8) {
                    window.min(book.len())
                } else {
                    book.len()
                };
                let rank = walk.rng().random_range(0..limit.max(1));
                BookOp::NextBest(book.price_at_rank(rank).expect("rank in range"))
            }
            _ => BookOp::Iterate(walk.rng().random_range(0..=window)),
        };
        if let BookOp::Adjust(p, d) = op {
            book.adjust(p, d);
        }
        ops.push(op);
    }
    ops
}

/// Drives an [`OrderBook`] and a [`RefBook`] in lockstep.
///
/// Next-best queries are expected to fail with `PriceTooFar` exactly when the
/// answer would sit at rank `max_size` or deeper while the book holds more
/// than `max_size` levels; all other replies must match. The partition
/// invariant is checked after every op.
pub fn book_fuzz_run<H: Handle>(
    book: &mut OrderBook<H>,
    reference: &mut RefBook,
    ops: &[BookOp],
) -> Result<usize, Divergence<BookOp, BookReply>> {
    let cap = book.max_size();
    let mut too_far = 0;
    for (index, &op) in ops.iter().enumerate() {
        let (expected, got) = match op {
            BookOp::Adjust(p, d) => {
                reference.adjust(p, d);
                let got = match book.adjust(p, d) {
                    Ok(()) => BookReply::Done,
                    Err(e) => panic!("adjust failed: {e}"),
                };
                (BookReply::Done, got)
            }
            BookOp::Best => (
                BookReply::Price(reference.best()),
                BookReply::Price(book.best()),
            ),
            BookOp::NextBest(p) => {
                let q = reference.rank(p);
                let expected = if q + 1 >= cap && reference.len() > cap {
                    BookReply::TooFar
                } else {
                    BookReply::Price(reference.next_best_after(p))
                };
                let got = match book.next_best_after(p) {
                    Ok(r) => BookReply::Price(r),
                    Err(Error::PriceTooFar) => {
                        too_far += 1;
                        BookReply::TooFar
                    }
                    Err(e) => panic!("next_best_after failed: {e}"),
                };
                (expected, got)
            }
            BookOp::Iterate(n) => {
                let got = match book.iterate_best(n) {
                    Ok(l) => BookReply::Levels(l),
                    Err(_) => BookReply::TooFar,
                };
                (BookReply::Levels(reference.iterate_best(n)), got)
            }
        };
        let broken = book.check_partition().err().or_else(|| {
            (book.len() != reference.len()).then(|| {
                format!(
                    "book has {} levels, reference {}",
                    book.len(),
                    reference.len()
                )
            })
        });
        if expected != got || broken.is_some() {
            return Err(Divergence {
                index,
                op,
                expected,
                got,
                broken,
            });
        }
    }
    Ok(too_far)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glass::GlassConfig;

    #[test]
    fn ref_map_blank_results() {
        let mut m = RefMap::new(8, None);
        assert_eq!(m.apply(Op::Min), Reply::Key(None));
        assert_eq!(m.apply(Op::Insert(5, 1)), Reply::Inserted);
        assert_eq!(m.apply(Op::Insert(5, 2)), Reply::AlreadyPresent);
        assert_eq!(m.apply(Op::Find(5)), Reply::Value(Some(1)));
        assert_eq!(m.apply(Op::Next(5)), Reply::Key(None));
        assert_eq!(m.apply(Op::Next(2)), Reply::Key(Some(5)));
        assert_eq!(m.apply(Op::Prev(9)), Reply::Key(Some(5)));
        assert_eq!(m.apply(Op::Insert(256, 0)), Reply::OutOfRange);
    }

    #[test]
    fn ref_map_agrees_with_sorted_vec() {
        for seed in 0..4 {
            let shape = if seed % 2 == 0 {
                Shape::Uniform
            } else {
                Shape::local()
            };
            let t = gen_trace(seed, shape, 10, 10_000);
            let mut a = RefMap::new(10, Some(300));
            let mut b = SortedVecMap::new(10, Some(300));
            for (i, &op) in t.ops.iter().enumerate() {
                assert_eq!(a.apply(op), b.apply(op), "op #{i} {op}");
            }
        }
    }

    #[test]
    fn trace_text_round_trip() {
        let t = gen_trace(9, Shape::local(), 20, 500);
        assert_eq!(parse_ops(&t.to_text()).unwrap(), t.ops);
        assert_eq!(
            parse_ops("# header\nI 3 4\n\nMIN # trailing\nP 7\n").unwrap(),
            [Op::Insert(3, 4), Op::Min, Op::Prev(7)]
        );
        let err = parse_ops("F 1\nX 2\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(parse_ops("I 3").is_err());
        assert!(parse_ops("E 3 4").is_err());
    }

    #[test]
    fn traces_are_deterministic() {
        assert_eq!(
            gen_trace(5, Shape::local(), 50, 1000),
            gen_trace(5, Shape::local(), 50, 1000)
        );
        assert_ne!(
            gen_trace(5, Shape::local(), 50, 1000).ops,
            gen_trace(6, Shape::local(), 50, 1000).ops
        );
    }

    #[test]
    fn local_walk_never_repeats_and_stays_close() {
        let mut w = KeyWalk::new(1, Shape::local(), 50);
        let mut prev = w.next_key();
        let mut diffs = Vec::new();
        for _ in 0..100_000 {
            let k = w.next_key();
            assert_ne!(k, prev);
            diffs.push(k.abs_diff(prev));
            prev = k;
        }
        diffs.sort_unstable();
        assert!(diffs[diffs.len() / 2] <= 10);
        let small = diffs.iter().filter(|&&d| d <= 5).count() as f64 / diffs.len() as f64;
        assert!((small - 0.8).abs() < 0.01, "{small}");
    }

    #[test]
    fn empty_trace_is_ok() {
        let mut g: Glass = Glass::new(GlassConfig::default()).unwrap();
        assert!(fuzz_run(&mut g, &mut RefMap::new(50, Some(9000)), &[], true).is_ok());
    }

    struct OffByOne(RefMap, usize);

    impl OrderedMap for OffByOne {
        fn apply(&mut self, op: Op) -> Reply {
            self.1 += 1;
            match (self.0.apply(op), op) {
                (Reply::Key(Some(k)), Op::Next(_)) if self.1 > 50 => Reply::Key(Some(k + 1)),
                (r, _) => r,
            }
        }
    }

    #[test]
    fn broken_map_is_caught_at_first_wrong_op() {
        let t = gen_trace(3, Shape::local(), 16, 5000);
        let mut broken = OffByOne(RefMap::new(16, None), 0);
        let d = fuzz_run(&mut broken, &mut RefMap::new(16, None), &t.ops, false).unwrap_err();
        let mut probe = RefMap::new(16, None);
        let first = t
            .ops
            .iter()
            .enumerate()
            .position(|(i, &op)| matches!((probe.apply(op), op), (Reply::Key(Some(_)), Op::Next(_)) if i >= 50))
            .unwrap();
        assert_eq!(d.index, first);
    }

    #[test]
    fn ref_book_ranks() {
        let mut b = RefBook::new(Side::Max);
        for p in [10, 30, 20] {
            b.adjust(p, 1);
        }
        assert_eq!(b.best(), Some(30));
        assert_eq!(b.rank(10), 2);
        assert_eq!(b.next_best_after(30), Some(20));
        assert_eq!(b.price_at_rank(1), Some(20));
        b.adjust(30, -1);
        assert_eq!(b.iterate_best(5), [(20, 1), (10, 1)]);
    }
}
