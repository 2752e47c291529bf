//! The trie-backed ordered map.
//!
//! Keys are `K`-bit integers consumed `C` bits per level, most significant
//! chunk first. Nodes at depth `L - 1` ("pre-leafs") hold one value slot per
//! child; the post-leaf level is never materialized. An [`Iter`] is a pre-leaf
//! handle plus the full key, whose low `C` bits pick the slot.
//!
//! Lookups resolve in this order: cache table (when enabled), then a descent
//! that starts from the deepest cached-path node shared with the previous
//! inserted key, then a plain descent from the root. The cached path is only
//! updated by `insert` and truncated by `erase`; lookups leave it alone.

use std::cell::Cell;
use std::fmt::Write as _;

use crate::bitops::{
    common_prefix_chunks, depth_from_offset, highest_set_bit, low_bits, lowest_set_bit,
    next_set_bit, prev_set_bit, truncation_len, DivisionPlan, TrieGeometry,
};
use crate::cachetable::{CacheTable, Lookup};
use crate::error::{Error, Result};
use crate::nodepool::{capacity_bound_for_size, max_size_for_capacity, Growth, Handle, Pool};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMode {
    /// Recompute a cached first/last iterator as soon as its element is erased.
    Eager,
    /// Mark it bad on erase and recompute on the next query.
    Lazy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlassConfig {
    pub key_bits: u32,
    pub chunk_bits: u32,
    pub max_size: usize,
    pub cache_table: bool,
    pub edge_mode: EdgeMode,
    pub trash_encoding: bool,
    pub growth: Growth,
}

impl Default for GlassConfig {
    fn default() -> Self {
        Self {
            key_bits: 50,
            chunk_bits: 5,
            max_size: 9000,
            cache_table: true,
            edge_mode: EdgeMode::Eager,
            trash_encoding: true,
            growth: Growth::Preallocate,
        }
    }
}

impl GlassConfig {
    pub fn geometry(key_bits: u32, chunk_bits: u32) -> Self {
        Self {
            key_bits,
            chunk_bits,
            ..Self::default()
        }
    }

    pub fn max_size(mut self, max_size: usize) -> Self {
        self.max_size = max_size;
        self
    }

    pub fn cache_table(mut self, on: bool) -> Self {
        self.cache_table = on;
        self
    }

    pub fn edge_mode(mut self, mode: EdgeMode) -> Self {
        self.edge_mode = mode;
        self
    }

    pub fn trash_encoding(mut self, on: bool) -> Self {
        self.trash_encoding = on;
        self
    }

    pub fn growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }
}

/// Position of one element: its pre-leaf node and its full key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Iter<H> {
    preleaf: H,
    key: u64,
}

impl<H: Copy> Iter<H> {
    #[inline]
    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn preleaf(&self) -> H {
        self.preleaf
    }
}

/// An [`Iter`] that keeps only the low `C` bits of the key. The rest is
/// recovered from the pre-leaf's cache-table key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompressedIter<H> {
    preleaf: H,
    low: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge<H> {
    End,
    Bad,
    At(Iter<H>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insert {
    Inserted,
    AlreadyPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Next,
    Prev,
}

/// Instrumentation counters.
#[derive(Debug, Default, Clone)]
pub struct GlassStats {
    /// Child hops taken by lookups and neighbor searches.
    pub descent_steps: Cell<u64>,
    /// Lookups answered by the cache table without touching the tree.
    pub table_hits: Cell<u64>,
    pub inserts: Cell<u64>,
    /// Sum over inserts of the depth the descent started from.
    pub insert_start_depth: Cell<u64>,
}

fn bump(c: &Cell<u64>, by: u64) {
    c.set(c.get() + by);
}

#[derive(Debug, Clone)]
struct CachedPath<H> {
    last_key: u64,
    nodes: Vec<H>,
    len: usize,
}

pub struct Glass<V = u64, H: Handle = u16> {
    geo: TrieGeometry,
    plan: DivisionPlan,
    pool: Pool<H, V>,
    root: H,
    size: usize,
    max_size: usize,
    path: CachedPath<H>,
    edge_mode: EdgeMode,
    first: Cell<Edge<H>>,
    last: Cell<Edge<H>>,
    table: Option<CacheTable<H>>,
    stats: GlassStats,
}

impl<V: Copy + Default, H: Handle> Glass<V, H> {
    pub fn new(config: GlassConfig) -> Result<Self> {
        let geo = TrieGeometry::new(config.key_bits, config.chunk_bits)?;
        let limit = max_size_for_capacity(H::max_capacity() as u64, &geo);
        if config.max_size as u64 > limit {
            return Err(Error::ConfigInvalid(format!(
                "max size {} exceeds {limit} for {}-bit handles",
                config.max_size,
                H::BITS
            )));
        }
        let capacity = capacity_bound_for_size(config.max_size as u64, &geo) as usize;
        let pool = Pool::new(geo.fanout(), capacity, config.growth, config.trash_encoding)?;
        let table = config
            .cache_table
            .then(|| CacheTable::for_capacity(pool.capacity()));
        Ok(Self {
            plan: DivisionPlan::new(geo.chunk_bits()),
            path: CachedPath {
                last_key: 0,
                nodes: vec![H::INVALID; geo.levels() as usize],
                len: 0,
            },
            geo,
            pool,
            root: H::INVALID,
            size: 0,
            max_size: config.max_size,
            edge_mode: config.edge_mode,
            first: Cell::new(Edge::End),
            last: Cell::new(Edge::End),
            table,
            stats: GlassStats::default(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    #[inline]
    pub fn geometry(&self) -> &TrieGeometry {
        &self.geo
    }

    pub fn pool(&self) -> &Pool<H, V> {
        &self.pool
    }

    pub fn table(&self) -> Option<&CacheTable<H>> {
        self.table.as_ref()
    }

    pub fn stats(&self) -> &GlassStats {
        &self.stats
    }

    pub fn edge_mode(&self) -> EdgeMode {
        self.edge_mode
    }

    /// Last inserted key and the still-valid prefix of its root path.
    pub fn cached_path(&self) -> (u64, &[H]) {
        (self.path.last_key, &self.path.nodes[..self.path.len])
    }

    #[inline]
    fn preleaf_depth(&self) -> u32 {
        self.geo.levels() - 1
    }

    #[inline]
    fn slot_of(&self, key: u64) -> usize {
        (key & self.geo.chunk_mask()) as usize
    }

    #[inline]
    fn has_child(&self, node: H, chunk: usize) -> bool {
        self.pool.mask(node) >> chunk & 1 == 1
    }

    /// Deepest cached-path node that is also an ancestor of `key`.
    #[inline]
    fn jump(&self, key: u64) -> (H, u32) {
        if self.path.len == 0 {
            return (self.root, 0);
        }
        let shared = common_prefix_chunks(self.path.last_key, key, &self.geo);
        let depth = shared
            .min(self.path.len as u32 - 1)
            .min(self.preleaf_depth());
        (self.path.nodes[depth as usize], depth)
    }

    /// Follows `key` down from `node` at `depth`; `None` if the pre-leaf does
    /// not exist.
    fn descend(&self, mut node: H, mut depth: u32, key: u64) -> Option<H> {
        let mut steps = 0;
        let found = loop {
            if depth == self.preleaf_depth() {
                break Some(node);
            }
            let c = self.geo.chunk(key, depth);
            if !self.has_child(node, c) {
                break None;
            }
            node = self.pool.child(node, c);
            depth += 1;
            steps += 1;
        };
        bump(&self.stats.descent_steps, steps);
        found
    }

    /// Pre-leaf that would hold `key`, if it exists.
    fn locate(&self, key: u64) -> Option<H> {
        if self.root == H::INVALID || !self.geo.key_fits(key) {
            return None;
        }
        if let Some(table) = &self.table {
            match table.lookup(&self.pool, key >> self.geo.chunk_bits()) {
                Lookup::Exists(p) => {
                    bump(&self.stats.table_hits, 1);
                    return Some(p);
                }
                Lookup::Absent => return None,
                Lookup::DontKnow => {}
            }
        }
        let (node, depth) = self.jump(key);
        self.descend(node, depth, key)
    }

    pub fn find(&self, key: u64) -> Option<&V> {
        let p = self.locate(key)?;
        let c = self.slot_of(key);
        self.has_child(p, c).then(|| self.pool.value(p, c))
    }

    pub fn find_mut(&mut self, key: u64) -> Option<&mut V> {
        let p = self.locate(key)?;
        let c = self.slot_of(key);
        if self.has_child(p, c) {
            Some(self.pool.value_mut(p, c))
        } else {
            None
        }
    }

    pub fn contains(&self, key: u64) -> bool {
        self.find(key).is_some()
    }

    /// Iterator to `key` if it is stored.
    pub fn find_iter(&self, key: u64) -> Option<Iter<H>> {
        let p = self.locate(key)?;
        self.has_child(p, self.slot_of(key))
            .then_some(Iter { preleaf: p, key })
    }

    /// Inserts `key` unless it is already present; an existing value is left
    /// untouched.
    pub fn insert(&mut self, key: u64, value: V) -> Result<Insert> {
        if !self.geo.key_fits(key) {
            return Err(Error::KeyOutOfRange(key));
        }
        if self.size >= self.max_size {
            return if self.contains(key) {
                Ok(Insert::AlreadyPresent)
            } else {
                Err(Error::GlassFull(self.max_size))
            };
        }
        let levels = self.geo.levels() as usize;
        let cbits = u64::from(self.geo.chunk_bits());
        let mut fresh = [H::INVALID; 64];

        let preleaf = if self.root == H::INVALID {
            self.pool.allocate_many(&mut fresh[..levels])?;
            self.root = fresh[0];
            self.pool.set_parent(self.root, H::INVALID);
            self.link_chain(key, fresh[0], 0, &fresh[1..levels]);
            self.path.nodes[..levels].copy_from_slice(&fresh[..levels]);
            self.register_preleaf(key, fresh[levels - 1]);
            bump(&self.stats.inserts, 1);
            fresh[levels - 1]
        } else {
            let (mut node, start) = self.jump(key);
            bump(&self.stats.inserts, 1);
            bump(&self.stats.insert_start_depth, u64::from(start));
            let mut kappa = u64::from(self.geo.offset_of_depth(start));
            loop {
                if kappa == 0 {
                    break node;
                }
                let depth = depth_from_offset(kappa, &self.geo, &self.plan);
                let c = ((key >> kappa) & self.geo.chunk_mask()) as usize;
                if self.has_child(node, c) {
                    node = self.pool.child(node, c);
                    kappa -= cbits;
                    self.path.nodes[depth as usize + 1] = node;
                    continue;
                }
                // nodes for depths depth+1 ..= L-1
                let missing = self.plan.exact_div(kappa) as usize;
                self.pool.allocate_many(&mut fresh[..missing])?;
                self.link_chain(key, node, depth, &fresh[..missing]);
                let from = depth as usize + 1;
                self.path.nodes[from..levels].copy_from_slice(&fresh[..missing]);
                self.register_preleaf(key, fresh[missing - 1]);
                break fresh[missing - 1];
            }
        };
        self.path.last_key = key;
        self.path.len = levels;

        let c = self.slot_of(key);
        if self.has_child(preleaf, c) {
            return Ok(Insert::AlreadyPresent);
        }
        let mask = self.pool.mask(preleaf) | 1 << c;
        self.pool.set_mask(preleaf, mask);
        *self.pool.value_mut(preleaf, c) = value;
        self.size += 1;
        self.note_inserted(Iter { preleaf, key });
        if let Some(table) = &mut self.table {
            let capacity = self.pool.capacity();
            table.grow_if_needed(&mut self.pool, capacity);
        }
        Ok(Insert::Inserted)
    }

    /// Hangs `chain[0]` below `parent` (at `parent_depth`) and each following
    /// node below its predecessor, along the path of `key`.
    fn link_chain(&mut self, key: u64, parent: H, parent_depth: u32, chain: &[H]) {
        let mut above = parent;
        for (i, &node) in chain.iter().enumerate() {
            let c = self.geo.chunk(key, parent_depth + i as u32);
            let mask = self.pool.mask(above) | 1 << c;
            self.pool.set_mask(above, mask);
            self.pool.set_child(above, c, node);
            self.pool.set_parent(node, above);
            above = node;
        }
    }

    fn register_preleaf(&mut self, key: u64, preleaf: H) {
        if let Some(table) = &mut self.table {
            table.insert(&mut self.pool, key >> self.geo.chunk_bits(), preleaf);
        }
    }

    fn note_inserted(&mut self, it: Iter<H>) {
        if self.size == 1 {
            self.first.set(Edge::At(it));
            self.last.set(Edge::At(it));
            return;
        }
        match self.first.get() {
            Edge::At(f) if it.key < f.key => self.first.set(Edge::At(it)),
            Edge::End => self.first.set(Edge::At(it)),
            _ => {}
        }
        match self.last.get() {
            Edge::At(l) if it.key > l.key => self.last.set(Edge::At(it)),
            Edge::End => self.last.set(Edge::At(it)),
            _ => {}
        }
    }

    /// Removes `key`, returning its value if it was present.
    pub fn erase(&mut self, key: u64) -> Option<V> {
        let preleaf = self.locate(key)?;
        let c = self.slot_of(key);
        if !self.has_child(preleaf, c) {
            return None;
        }
        let value = *self.pool.value(preleaf, c);
        let mask = self.pool.mask(preleaf) & !(1 << c);
        self.pool.set_mask(preleaf, mask);
        self.size -= 1;

        let mut removed = 0u32;
        if mask == 0 {
            if let Some(table) = &mut self.table {
                table.remove(&mut self.pool, preleaf);
            }
            let mut node = preleaf;
            let mut depth = self.preleaf_depth();
            loop {
                let parent = self.pool.parent(node);
                self.pool.deallocate(node);
                removed += 1;
                if depth == 0 {
                    self.root = H::INVALID;
                    break;
                }
                depth -= 1;
                let pc = self.geo.chunk(key, depth);
                let pmask = self.pool.mask(parent) & !(1 << pc);
                self.pool.set_mask(parent, pmask);
                if pmask != 0 {
                    break;
                }
                node = parent;
            }
        }

        if self.path.len > 0 {
            let shared = common_prefix_chunks(self.path.last_key, key, &self.geo);
            let lca = shared.min(self.path.len as u32 - 1);
            let cut = truncation_len(self.geo.levels(), lca, removed) as usize;
            debug_assert!(cut <= self.path.len);
            self.path.len -= cut;
        }
        debug_assert!(self.root != H::INVALID || self.path.len == 0);

        if self.size == 0 {
            self.first.set(Edge::End);
            self.last.set(Edge::End);
        } else {
            if matches!(self.first.get(), Edge::At(f) if f.key == key) {
                self.first.set(match self.edge_mode {
                    EdgeMode::Eager => Edge::At(self.extreme(Dir::Next).expect("nonempty")),
                    EdgeMode::Lazy => Edge::Bad,
                });
            }
            if matches!(self.last.get(), Edge::At(l) if l.key == key) {
                self.last.set(match self.edge_mode {
                    EdgeMode::Eager => Edge::At(self.extreme(Dir::Prev).expect("nonempty")),
                    EdgeMode::Lazy => Edge::Bad,
                });
            }
        }
        Some(value)
    }

    /// Walks from the root always taking the lowest (`Next`) or highest
    /// (`Prev`) child.
    fn extreme(&self, dir: Dir) -> Option<Iter<H>> {
        if self.root == H::INVALID {
            return None;
        }
        Some(self.descend_extreme(self.root, 0, 0, dir))
    }

    fn descend_extreme(&self, mut node: H, mut depth: u32, mut key: u64, dir: Dir) -> Iter<H> {
        loop {
            let m = self.pool.mask(node);
            let b = match dir {
                Dir::Next => lowest_set_bit(m),
                Dir::Prev => highest_set_bit(m),
            };
            key |= u64::from(b) << self.geo.offset_of_depth(depth);
            if depth == self.preleaf_depth() {
                return Iter { preleaf: node, key };
            }
            node = self.pool.child(node, b as usize);
            depth += 1;
        }
    }

    fn cached_edge(&self, cell: &Cell<Edge<H>>, dir: Dir) -> Option<Iter<H>> {
        match cell.get() {
            Edge::At(it) => Some(it),
            Edge::End => None,
            Edge::Bad => {
                let it = self.extreme(dir);
                cell.set(it.map_or(Edge::End, Edge::At));
                it
            }
        }
    }

    /// Iterator to the smallest key.
    pub fn first(&self) -> Option<Iter<H>> {
        self.cached_edge(&self.first, Dir::Next)
    }

    /// Iterator to the largest key.
    pub fn last(&self) -> Option<Iter<H>> {
        self.cached_edge(&self.last, Dir::Prev)
    }

    pub fn min(&self) -> Option<u64> {
        self.first().map(|it| it.key)
    }

    pub fn max(&self) -> Option<u64> {
        self.last().map(|it| it.key)
    }

    /// From `node` at `depth` on the path of `key`, finds the nearest stored
    /// key strictly beyond `key` in direction `dir`, climbing through parents
    /// when the current node has no sibling in that direction.
    fn climb(&self, mut node: H, mut depth: u32, key: u64, dir: Dir) -> Option<Iter<H>> {
        loop {
            let c = self.geo.chunk(key, depth) as u32;
            let m = self.pool.mask(node);
            let hit = match dir {
                Dir::Next => next_set_bit(m, c),
                Dir::Prev => prev_set_bit(m, c),
            };
            if let Some(j) = hit {
                let kappa = self.geo.offset_of_depth(depth);
                let key = (key & !low_bits(kappa + self.geo.chunk_bits())) | u64::from(j) << kappa;
                if depth == self.preleaf_depth() {
                    return Some(Iter { preleaf: node, key });
                }
                let child = self.pool.child(node, j as usize);
                return Some(self.descend_extreme(child, depth + 1, key, dir));
            }
            if depth == 0 {
                return None;
            }
            node = self.pool.parent(node);
            depth -= 1;
        }
    }

    /// Deepest existing node on the path of `key`.
    fn deepest(&self, key: u64) -> (H, u32) {
        let (mut node, mut depth) = self.jump(key);
        let mut steps = 0;
        while depth < self.preleaf_depth() {
            let c = self.geo.chunk(key, depth);
            if !self.has_child(node, c) {
                break;
            }
            node = self.pool.child(node, c);
            depth += 1;
            steps += 1;
        }
        bump(&self.stats.descent_steps, steps);
        (node, depth)
    }

    /// Iterator to the smallest stored key greater than `key`.
    pub fn successor(&self, key: u64) -> Option<Iter<H>> {
        if self.root == H::INVALID || !self.geo.key_fits(key) {
            return None;
        }
        let (node, depth) = self.deepest(key);
        self.climb(node, depth, key, Dir::Next)
    }

    /// Iterator to the largest stored key smaller than `key`.
    pub fn predecessor(&self, key: u64) -> Option<Iter<H>> {
        if self.root == H::INVALID {
            return None;
        }
        if !self.geo.key_fits(key) {
            return self.last();
        }
        let (node, depth) = self.deepest(key);
        self.climb(node, depth, key, Dir::Prev)
    }

    pub fn next(&self, key: u64) -> Option<u64> {
        self.successor(key).map(|it| it.key)
    }

    pub fn prev(&self, key: u64) -> Option<u64> {
        self.predecessor(key).map(|it| it.key)
    }

    pub fn iter_next(&self, it: Iter<H>) -> Option<Iter<H>> {
        self.climb(it.preleaf, self.preleaf_depth(), it.key, Dir::Next)
    }

    pub fn iter_prev(&self, it: Iter<H>) -> Option<Iter<H>> {
        self.climb(it.preleaf, self.preleaf_depth(), it.key, Dir::Prev)
    }

    #[inline]
    pub fn get(&self, it: Iter<H>) -> &V {
        debug_assert!(self.has_child(it.preleaf, self.slot_of(it.key)));
        self.pool.value(it.preleaf, self.slot_of(it.key))
    }

    #[inline]
    pub fn get_mut(&mut self, it: Iter<H>) -> &mut V {
        let c = self.slot_of(it.key);
        debug_assert!(self.has_child(it.preleaf, c));
        self.pool.value_mut(it.preleaf, c)
    }

    /// Ascending `(key, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &V)> + '_ {
        std::iter::successors(self.first(), move |&it| self.iter_next(it))
            .map(move |it| (it.key, self.get(it)))
    }

    pub fn compress(&self, it: Iter<H>) -> Result<CompressedIter<H>> {
        if self.table.is_none() {
            return Err(Error::ConfigInvalid(
                "compressed iterators need the cache table".into(),
            ));
        }
        Ok(CompressedIter {
            preleaf: it.preleaf,
            low: self.slot_of(it.key) as u8,
        })
    }

    pub fn decompress(&self, cit: CompressedIter<H>) -> Result<Iter<H>> {
        if self.table.is_none() {
            return Err(Error::ConfigInvalid(
                "compressed iterators need the cache table".into(),
            ));
        }
        let hi = self.pool.cache_key(cit.preleaf);
        Ok(Iter {
            preleaf: cit.preleaf,
            key: hi << self.geo.chunk_bits() | u64::from(cit.low),
        })
    }

    /// Deterministic text rendering of the tree, one node per line in key
    /// order: `[chunk] node <handle> mask <bits>`, plus the stored keys on
    /// pre-leaf lines.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "glass key_bits={} chunk_bits={} size={}\n",
            self.geo.key_bits(),
            self.geo.chunk_bits(),
            self.size
        );
        if self.root != H::INVALID {
            self.dump_node(&mut out, self.root, 0, 0, None);
        }
        out
    }

    fn dump_node(&self, out: &mut String, node: H, depth: u32, prefix: u64, chunk: Option<usize>) {
        let width = if depth == 0 {
            1usize << self.geo.root_bits()
        } else {
            self.geo.fanout()
        };
        let m = self.pool.mask(node);
        let label = chunk.map_or_else(|| "-".to_string(), |c| c.to_string());
        let _ = write!(
            out,
            "{:indent$}[{label}] node {} mask {:0width$b}",
            "",
            node.index(),
            m,
            indent = 2 * depth as usize,
            width = width,
        );
        let kappa = self.geo.offset_of_depth(depth);
        if depth == self.preleaf_depth() {
            out.push_str(" keys");
            for c in 0..self.geo.fanout() {
                if m >> c & 1 == 1 {
                    let _ = write!(out, " {}", prefix | c as u64);
                }
            }
            out.push('\n');
            return;
        }
        out.push('\n');
        for c in 0..self.geo.fanout() {
            if m >> c & 1 == 1 {
                let child = self.pool.child(node, c);
                self.dump_node(out, child, depth + 1, prefix | (c as u64) << kappa, Some(c));
            }
        }
    }

    /// Verifies every structural invariant, returning a description of the
    /// first violation.
    pub fn check_integrity(&self) -> std::result::Result<(), String> {
        if self.root == H::INVALID {
            if self.size != 0 || self.pool.live() != 0 || self.path.len != 0 {
                return Err(format!(
                    "empty tree with size {} live {} path {}",
                    self.size,
                    self.pool.live(),
                    self.path.len
                ));
            }
        } else if self.pool.parent(self.root) != H::INVALID {
            return Err("root has a parent".into());
        }
        let mut nodes = 0usize;
        let mut elements = 0usize;
        let mut preleafs = Vec::new();
        if self.root != H::INVALID {
            let mut stack = vec![(self.root, 0u32, 0u64)];
            while let Some((node, depth, prefix)) = stack.pop() {
                nodes += 1;
                if node.index() >= self.pool.capacity() {
                    return Err(format!("handle {node:?} out of range"));
                }
                let m = self.pool.mask(node);
                if m == 0 {
                    return Err(format!("childless node {node:?} at depth {depth}"));
                }
                if m >> self.geo.fanout().min(63) > 0 && self.geo.fanout() < 64 {
                    return Err(format!("mask of {node:?} has bits beyond fanout"));
                }
                if depth == self.preleaf_depth() {
                    elements += m.count_ones() as usize;
                    preleafs.push((node, prefix >> self.geo.chunk_bits()));
                    continue;
                }
                let kappa = self.geo.offset_of_depth(depth);
                for c in 0..self.geo.fanout() {
                    if m >> c & 1 == 1 {
                        let child = self.pool.child(node, c);
                        if !child.is_valid() || child.index() >= self.pool.capacity() {
                            return Err(format!("bad child {child:?} under {node:?}"));
                        }
                        if self.pool.parent(child) != node {
                            return Err(format!("parent link of {child:?} is not {node:?}"));
                        }
                        stack.push((child, depth + 1, prefix | (c as u64) << kappa));
                    }
                }
            }
        }
        if elements != self.size {
            return Err(format!(
                "size {} but {elements} reachable elements",
                self.size
            ));
        }
        if nodes != self.pool.live() {
            return Err(format!(
                "{} live slots but {nodes} reachable nodes",
                self.pool.live()
            ));
        }
        if let Some(table) = &self.table {
            if table.len() != preleafs.len() {
                return Err(format!(
                    "cache table holds {} entries for {} pre-leafs",
                    table.len(),
                    preleafs.len()
                ));
            }
            for &(p, hi) in &preleafs {
                if self.pool.cache_key(p) != hi {
                    return Err(format!("pre-leaf {p:?} has stale cache key"));
                }
                if !table.chain(&self.pool, table.bucket_of(hi)).contains(&p) {
                    return Err(format!("pre-leaf {p:?} missing from its chain"));
                }
            }
        }
        self.check_cached_path()?;
        for (cell, dir, name) in [
            (&self.first, Dir::Next, "first"),
            (&self.last, Dir::Prev, "last"),
        ] {
            match (cell.get(), self.extreme(dir)) {
                (Edge::Bad, _) if self.edge_mode == EdgeMode::Eager => {
                    return Err(format!("{name} is bad in eager mode"))
                }
                (Edge::Bad, _) => {}
                (Edge::End, None) => {}
                (Edge::At(a), Some(b)) if a == b => {}
                (got, want) => return Err(format!("{name} cached as {got:?}, actual {want:?}")),
            }
        }
        Ok(())
    }

    fn check_cached_path(&self) -> std::result::Result<(), String> {
        let mut node = self.root;
        for depth in 0..self.path.len {
            if depth > 0 {
                let c = self.geo.chunk(self.path.last_key, depth as u32 - 1);
                if node == H::INVALID || !self.has_child(node, c) {
                    return Err(format!("cached path entry {depth} has no live node"));
                }
                node = self.pool.child(node, c);
            }
            if self.path.nodes[depth] != node {
                return Err(format!(
                    "cached path entry {depth} is {:?}, actual ancestor {node:?}",
                    self.path.nodes[depth]
                ));
            }
        }
        Ok(())
    }
}

impl<V: Copy + Default + std::fmt::Debug, H: Handle> std::fmt::Debug for Glass<V, H> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}
