//! An ordered map over fixed-width integer keys built on an uncompressed trie
//! with index-addressed nodes.
//!
//! The map is tuned for workloads where successive keys are close to each
//! other, such as price levels of a limit order book:
//!
//! * a cached root-to-pre-leaf path lets insertions and lookups start from the
//!   lowest common ancestor of the previous key and the new one;
//! * an optional [`cachetable::CacheTable`] maps a key without its last chunk
//!   straight to its pre-leaf node, with strictly bounded probing;
//! * first/last iterators are cached eagerly or lazily.
//!
//! [`orderbook::OrderBook`] layers a bounded-size glass with an overflow map,
//! so that memory stays fixed while only the best levels need to be ordered.

pub mod bitops;
pub mod cachetable;
pub mod error;
pub mod glass;
pub mod nodepool;
pub mod oracle;
pub mod orderbook;

pub use error::{Error, Result};
pub use glass::{CompressedIter, EdgeMode, Glass, GlassConfig, Insert, Iter};
pub use nodepool::{Growth, Handle, HandleWidth};
pub use orderbook::{BookConfig, OrderBook, Side};
