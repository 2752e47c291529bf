//! Replayable market events.
//!
//! Text format, one event per line:
//!
//! ```text
//! A <side> <price> <delta>   adjust the level at price by delta
//! B <side>                   best price
//! N <side> <price>           next best price after price
//! T <side> [depth]           iterate the best depth levels (default 25)
//! ```
//!
//! `side` is `B` (bids, higher is better) or `A` (asks, lower is better).
//! Text after `#` is ignored.

use std::fmt;

use glass::oracle::{KeyWalk, RefBook, Shape};
use glass::Side;
use rand::Rng;

use crate::error::BenchError;

pub const DEFAULT_DEPTH: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedSide {
    Bid,
    Ask,
}

impl FeedSide {
    pub fn book_side(self) -> Side {
        match self {
            FeedSide::Bid => Side::Max,
            FeedSide::Ask => Side::Min,
        }
    }

    pub fn index(self) -> usize {
        match self {
            FeedSide::Bid => 0,
            FeedSide::Ask => 1,
        }
    }

    fn tag(self) -> char {
        match self {
            FeedSide::Bid => 'B',
            FeedSide::Ask => 'A',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOp {
    Adjust { price: u64, delta: i64 },
    Best,
    NextBest { price: u64 },
    Iter { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarketEvent {
    pub side: FeedSide,
    pub op: EventOp,
}

impl MarketEvent {
    pub fn adjust(side: FeedSide, price: u64, delta: i64) -> Self {
        Self {
            side,
            op: EventOp::Adjust { price, delta },
        }
    }

    pub fn is_modifying(&self) -> bool {
        matches!(self.op, EventOp::Adjust { .. })
    }
}

impl fmt::Display for MarketEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.side.tag();
        match self.op {
            EventOp::Adjust { price, delta } => write!(f, "A {s} {price} {delta}"),
            EventOp::Best => write!(f, "B {s}"),
            EventOp::NextBest { price } => write!(f, "N {s} {price}"),
            EventOp::Iter { depth } => write!(f, "T {s} {depth}"),
        }
    }
}

fn parse_line(line: &str) -> Result<MarketEvent, String> {
    let mut parts = line.split_whitespace();
    let tag = parts.next().ok_or("empty event")?;
    let side = match parts.next() {
        Some("B") => FeedSide::Bid,
        Some("A") => FeedSide::Ask,
        Some(other) => return Err(format!("bad side {other:?}")),
        None => return Err("missing side".into()),
    };
    let mut field = |name: &str| -> Result<&str, String> {
        parts.next().ok_or_else(|| format!("missing {name}"))
    };
    let op = match tag {
        "A" => {
            let price = field("price")?.parse().map_err(|e| format!("price: {e}"))?;
            let delta: i64 = field("delta")?.parse().map_err(|e| format!("delta: {e}"))?;
            if delta == 0 {
                return Err("zero delta".into());
            }
            EventOp::Adjust { price, delta }
        }
        "B" => EventOp::Best,
        "N" => EventOp::NextBest {
            price: field("price")?.parse().map_err(|e| format!("price: {e}"))?,
        },
        "T" => EventOp::Iter {
            depth: match parts.next() {
                Some(d) => d.parse().map_err(|e| format!("depth: {e}"))?,
                None => DEFAULT_DEPTH,
            },
        },
        _ => return Err(format!("unknown event {tag:?}")),
    };
    if let Some(extra) = parts.next() {
        return Err(format!("unexpected field {extra:?}"));
    }
    Ok(MarketEvent { side, op })
}

pub fn parse_events(text: &str) -> Result<Vec<MarketEvent>, BenchError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_line(line).map_err(|msg| BenchError::MalformedEvent { line: i + 1, msg })?);
    }
    Ok(out)
}

pub fn events_to_text(events: &[MarketEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

/// Synthetic feed with both kinds of locality. Each side's adjust prices
/// walk from either the previous adjust price or the current best; about
/// half the adjusts on an existing level remove or shrink it. Reads query
/// the top of the book.
pub fn synth_feed(seed: u64, len: usize) -> Vec<MarketEvent> {
    let mut walk = KeyWalk::new(seed, Shape::local(), 50);
    let mid = 1u64 << 30;
    let mut books = [RefBook::new(Side::Max), RefBook::new(Side::Min)];
    let mut last = [mid - 1, mid + 1];
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let side = if walk.rng().random_bool(0.5) {
            FeedSide::Bid
        } else {
            FeedSide::Ask
        };
        let s = side.index();
        let roll = walk.rng().random_range(0..100u32);
        let op = match roll {
            0..60 => {
                let anchor = match books[s].best() {
                    Some(b) if walk.rng().random_bool(0.3) => b,
                    _ => last[s],
                };
                let price = anchor.saturating_add_signed(walk.step());
                last[s] = price;
                let have = books[s].amount(price) as i64;
                let delta = if have > 0 && walk.rng().random_bool(0.55) {
                    if walk.rng().random_bool(0.7) {
                        -have
                    } else {
                        -walk.rng().random_range(1..=have)
                    }
                } else {
                    walk.rng().random_range(1..=50)
                };
                books[s].adjust(price, delta);
                EventOp::Adjust { price, delta }
            }
            60..75 => EventOp::Best,
            75..88 if !books[s].is_empty() => {
                let rank = walk.rng().random_range(0..books[s].len().min(10));
                EventOp::NextBest {
                    price: books[s].price_at_rank(rank).expect("rank in range"),
                }
            }
            _ => EventOp::Iter {
                depth: DEFAULT_DEPTH,
            },
        };
        out.push(MarketEvent { side, op });
    }
    out
}
