//! Separate-chaining table from "key without its last chunk" to the pre-leaf
//! node holding that key range.
//!
//! Chain links and stored keys live inside the node pool, so the table itself
//! is only an array of chain heads. Chains are doubly linked for O(1) removal
//! by handle, new entries go to the chain head, and a lookup inspects at most
//! `J` entries. When the answer is not among them and the chain is longer, the
//! table says [`Lookup::DontKnow`] and the caller falls back to a tree walk.

use std::cell::Cell;

use crate::nodepool::{Handle, Pool};

/// Default number of chain entries a lookup may inspect.
pub const PROBE_LIMIT: usize = 5;

/// Multiplier for Fibonacci hashing; the top `log2(b)` bits of the product
/// select the bucket.
const HASH_MUL: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup<H> {
    Exists(H),
    Absent,
    DontKnow,
}

/// Operation counters, for asserting the constant-time bounds.
#[derive(Debug, Default, Clone)]
pub struct TableStats {
    pub lookups: Cell<u64>,
    pub probes: Cell<u64>,
    pub dont_know: Cell<u64>,
    pub node_writes: Cell<u64>,
}

impl TableStats {
    fn bump(c: &Cell<u64>, by: u64) {
        c.set(c.get() + by);
    }
}

#[derive(Debug, Clone)]
pub struct CacheTable<H: Handle, const J: usize = PROBE_LIMIT> {
    heads: Vec<H>,
    log2_buckets: u32,
    len: usize,
    stats: TableStats,
}

/// Largest power of two not greater than `capacity` (at least one).
pub fn buckets_for_capacity(capacity: usize) -> usize {
    if capacity <= 1 {
        1
    } else {
        1 << (usize::BITS - 1 - capacity.leading_zeros())
    }
}

impl<H: Handle, const J: usize> CacheTable<H, J> {
    pub fn new(buckets: usize) -> Self {
        assert!(
            buckets.is_power_of_two(),
            "bucket count {buckets} is not a power of two"
        );
        Self {
            heads: vec![H::INVALID; buckets],
            log2_buckets: buckets.trailing_zeros(),
            len: 0,
            stats: TableStats::default(),
        }
    }

    pub fn for_capacity(capacity: usize) -> Self {
        Self::new(buckets_for_capacity(capacity))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bucket_count(&self) -> usize {
        self.heads.len()
    }

    pub fn stats(&self) -> &TableStats {
        &self.stats
    }

    #[inline]
    pub fn bucket_of(&self, key_hi: u64) -> usize {
        if self.log2_buckets == 0 {
            0
        } else {
            (key_hi.wrapping_mul(HASH_MUL) >> (64 - self.log2_buckets)) as usize
        }
    }

    /// Links `p` at the head of its chain and stamps it with `key_hi`.
    pub fn insert<V: Copy + Default>(&mut self, pool: &mut Pool<H, V>, key_hi: u64, p: H) {
        let b = self.bucket_of(key_hi);
        let head = self.heads[b];
        pool.set_cache_key(p, key_hi);
        pool.set_chain_prev(p, H::INVALID);
        pool.set_chain_next(p, head);
        let mut touched = 1;
        if head != H::INVALID {
            pool.set_chain_prev(head, p);
            touched += 1;
        }
        self.heads[b] = p;
        self.len += 1;
        TableStats::bump(&self.stats.node_writes, touched);
    }

    /// Unlinks `p` through its own links.
    pub fn remove<V: Copy + Default>(&mut self, pool: &mut Pool<H, V>, p: H) {
        let prev = pool.chain_prev(p);
        let next = pool.chain_next(p);
        let mut touched = 0;
        if prev == H::INVALID {
            let b = self.bucket_of(pool.cache_key(p));
            debug_assert_eq!(self.heads[b], p, "unlinked node {p:?} removed");
            self.heads[b] = next;
        } else {
            pool.set_chain_next(prev, next);
            touched += 1;
        }
        if next != H::INVALID {
            pool.set_chain_prev(next, prev);
            touched += 1;
        }
        self.len -= 1;
        TableStats::bump(&self.stats.node_writes, touched);
    }

    pub fn lookup<V: Copy + Default>(&self, pool: &Pool<H, V>, key_hi: u64) -> Lookup<H> {
        TableStats::bump(&self.stats.lookups, 1);
        let mut p = self.heads[self.bucket_of(key_hi)];
        let mut probes = 0;
        let answer = loop {
            if p == H::INVALID {
                break Lookup::Absent;
            }
            if probes == J {
                TableStats::bump(&self.stats.dont_know, 1);
                break Lookup::DontKnow;
            }
            probes += 1;
            if pool.cache_key(p) == key_hi {
                break Lookup::Exists(p);
            }
            p = pool.chain_next(p);
        };
        TableStats::bump(&self.stats.probes, probes as u64);
        answer
    }

    /// Doubles the bucket count. Entries that shared an old chain and land in
    /// the same new chain keep their relative order: each old chain is pushed
    /// front-first onto the new heads, then every new chain is reversed.
    pub fn grow<V: Copy + Default>(&mut self, pool: &mut Pool<H, V>) {
        let old = std::mem::take(&mut self.heads);
        self.log2_buckets += 1;
        self.heads = vec![H::INVALID; old.len() * 2];
        for head in old {
            let mut p = head;
            while p != H::INVALID {
                let next = pool.chain_next(p);
                let b = self.bucket_of(pool.cache_key(p));
                let new_head = self.heads[b];
                pool.set_chain_prev(p, H::INVALID);
                pool.set_chain_next(p, new_head);
                if new_head != H::INVALID {
                    pool.set_chain_prev(new_head, p);
                }
                self.heads[b] = p;
                p = next;
            }
        }
        for b in 0..self.heads.len() {
            let mut p = self.heads[b];
            let mut last = H::INVALID;
            while p != H::INVALID {
                let next = pool.chain_next(p);
                pool.set_chain_next(p, pool.chain_prev(p));
                pool.set_chain_prev(p, next);
                last = p;
                p = next;
            }
            self.heads[b] = last;
        }
    }

    /// Grows while the load factor exceeds one and the doubled table would
    /// still fit within `capacity` buckets.
    pub fn grow_if_needed<V: Copy + Default>(&mut self, pool: &mut Pool<H, V>, capacity: usize) {
        while self.len > self.heads.len() && self.heads.len() * 2 <= capacity {
            self.grow(pool);
        }
    }

    /// Entries of bucket `b`, head first.
    pub fn chain<V: Copy + Default>(&self, pool: &Pool<H, V>, b: usize) -> Vec<H> {
        let mut out = Vec::new();
        let mut p = self.heads[b];
        let mut prev = H::INVALID;
        while p != H::INVALID {
            debug_assert_eq!(pool.chain_prev(p), prev, "broken back link at {p:?}");
            out.push(p);
            prev = p;
            p = pool.chain_next(p);
        }
        out
    }
}
