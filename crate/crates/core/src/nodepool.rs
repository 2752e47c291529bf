//! Index-addressed node storage with a slot allocator.
//!
//! Nodes live in parallel arrays indexed by a [`Handle`]. Free slots form a
//! singly linked list threaded through the `link` field, which doubles as the
//! parent pointer of live nodes. With trash encoding enabled a zero link means
//! "the next slot in the array", so untouched storage never has to be written
//! and freshly grown memory is usable as-is.

use std::fmt::Debug;
use std::hash::Hash;

use crate::bitops::TrieGeometry;
use crate::error::{Error, Result};

/// Index into the node arrays. The two largest values are reserved for
/// "end / not found" and "bad", so a pool never exceeds `2^BITS - 2` slots.
pub trait Handle: Copy + Eq + Ord + Hash + Debug + Default + Send + Sync + 'static {
    const BITS: u32;
    const INVALID: Self;
    const BAD: Self;

    fn from_index(index: usize) -> Self;
    fn index(self) -> usize;
    fn raw(self) -> u64;
    fn from_raw(raw: u64) -> Self;

    fn max_capacity() -> usize {
        (1usize << Self::BITS) - 2
    }

    #[inline]
    fn is_valid(self) -> bool {
        self != Self::INVALID && self != Self::BAD
    }
}

macro_rules! impl_handle {
    ($t:ty) => {
        impl Handle for $t {
            const BITS: u32 = <$t>::BITS;
            const INVALID: Self = <$t>::MAX;
            const BAD: Self = <$t>::MAX - 1;

            #[inline]
            fn from_index(index: usize) -> Self {
                debug_assert!(index < Self::max_capacity());
                index as $t
            }
            #[inline]
            fn index(self) -> usize {
                self as usize
            }
            #[inline]
            fn raw(self) -> u64 {
                u64::from(self)
            }
            #[inline]
            fn from_raw(raw: u64) -> Self {
                debug_assert!(raw <= u64::from(<$t>::MAX));
                raw as $t
            }
        }
    };
}

impl_handle!(u16);
impl_handle!(u32);

/// Decodes a trash-encoded next-free field `v` stored in free slot `j`.
#[inline]
pub fn trash_decode(v: u64, j: usize) -> Option<usize> {
    match v {
        0 => Some(j + 1),
        1 => None,
        v => Some(v as usize - 2),
    }
}

/// Inverse of [`trash_decode`].
#[inline]
pub fn trash_encode(target: Option<usize>, j: usize) -> u64 {
    match target {
        None => 1,
        Some(t) if t == j + 1 => 0,
        Some(t) => {
            debug_assert_ne!(t, j);
            t as u64 + 2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Reserve the maximum capacity up front; the arrays never grow.
    Preallocate,
    /// Start empty and double on demand up to the maximum capacity.
    Doubling,
}

/// Node storage for a trie with `fanout` children per node.
///
/// Interior nodes use the per-child `children` row; pre-leaf nodes use the
/// per-child `values` row instead. Both rows are addressed by the same
/// `slot * fanout + child` index.
#[derive(Debug, Clone)]
pub struct Pool<H: Handle, V> {
    fanout: usize,
    masks: Vec<u64>,
    links: Vec<H>,
    chain_next: Vec<H>,
    chain_prev: Vec<H>,
    cache_keys: Vec<u64>,
    children: Vec<H>,
    values: Vec<V>,
    first_free: H,
    live: usize,
    high_water: usize,
    max_capacity: usize,
    trash: bool,
    growth: Growth,
    #[cfg(debug_assertions)]
    occupied: Vec<bool>,
}

const FIRST_GROWTH: usize = 16;

impl<H: Handle, V: Copy + Default> Pool<H, V> {
    pub fn new(fanout: usize, max_capacity: usize, growth: Growth, trash: bool) -> Result<Self> {
        if max_capacity > H::max_capacity() {
            return Err(Error::ConfigInvalid(format!(
                "capacity {max_capacity} exceeds {} for {}-bit handles",
                H::max_capacity(),
                H::BITS
            )));
        }
        assert!(fanout.is_power_of_two() && fanout <= 64);
        let mut pool = Self {
            fanout,
            masks: Vec::new(),
            links: Vec::new(),
            chain_next: Vec::new(),
            chain_prev: Vec::new(),
            cache_keys: Vec::new(),
            children: Vec::new(),
            values: Vec::new(),
            first_free: H::INVALID,
            live: 0,
            high_water: 0,
            max_capacity,
            trash,
            growth,
            #[cfg(debug_assertions)]
            occupied: Vec::new(),
        };
        if growth == Growth::Preallocate && max_capacity > 0 {
            pool.extend_to(max_capacity);
        }
        Ok(pool)
    }

    /// Slots currently backed by storage.
    #[inline]
    pub fn capacity(&self) -> usize {
        self.masks.len()
    }

    #[inline]
    pub fn max_capacity(&self) -> usize {
        self.max_capacity
    }

    #[inline]
    pub fn live(&self) -> usize {
        self.live
    }

    #[inline]
    pub fn fanout(&self) -> usize {
        self.fanout
    }

    /// One past the highest slot ever handed out.
    #[inline]
    pub fn high_water(&self) -> usize {
        self.high_water
    }

    #[inline]
    pub fn trash_encoding(&self) -> bool {
        self.trash
    }

    /// Head of the free list, `None` when the free list is empty.
    pub fn first_free(&self) -> Option<H> {
        self.first_free.is_valid().then_some(self.first_free)
    }

    pub fn allocate(&mut self) -> Result<H> {
        if self.first_free == H::INVALID {
            self.grow()?;
        }
        let p = self.first_free;
        self.first_free = self.read_free_link(p.index());
        self.mark_taken(p.index());
        Ok(p)
    }

    /// Fills `out` with fresh slots, in the order repeated [`Pool::allocate`]
    /// calls would return them. On exhaustion nothing stays allocated.
    pub fn allocate_many(&mut self, out: &mut [H]) -> Result<()> {
        let mut p = self.first_free;
        let mut taken = 0;
        while taken < out.len() && p != H::INVALID {
            out[taken] = p;
            p = self.read_free_link(p.index());
            taken += 1;
        }
        self.first_free = p;
        for &h in &out[..taken] {
            self.mark_taken(h.index());
        }
        while taken < out.len() {
            match self.allocate() {
                Ok(h) => out[taken] = h,
                Err(e) => {
                    for &h in out[..taken].iter().rev() {
                        self.deallocate(h);
                    }
                    return Err(e);
                }
            }
            taken += 1;
        }
        Ok(())
    }

    pub fn deallocate(&mut self, p: H) {
        let i = p.index();
        #[cfg(debug_assertions)]
        {
            assert!(self.occupied[i], "double free of slot {i}");
            self.occupied[i] = false;
        }
        self.masks[i] = 0;
        let link = if self.trash {
            H::from_raw(trash_encode(self.first_free().map(Handle::index), i))
        } else {
            self.first_free
        };
        self.links[i] = link;
        self.first_free = p;
        self.live -= 1;
    }

    #[inline]
    fn mark_taken(&mut self, i: usize) {
        #[cfg(debug_assertions)]
        {
            assert!(!self.occupied[i], "slot {i} handed out twice");
            self.occupied[i] = true;
        }
        debug_assert_eq!(self.masks[i], 0, "allocated slot {i} is not blank");
        self.live += 1;
        self.high_water = self.high_water.max(i + 1);
    }

    #[inline]
    fn read_free_link(&self, i: usize) -> H {
        let link = self.links[i];
        if !self.trash {
            return link;
        }
        match trash_decode(link.raw(), i) {
            Some(next) if next < self.capacity() => H::from_index(next),
            _ => H::INVALID,
        }
    }

    fn grow(&mut self) -> Result<()> {
        let len = self.capacity();
        if len >= self.max_capacity {
            return Err(Error::PoolExhausted(self.max_capacity));
        }
        let target = match self.growth {
            Growth::Preallocate => self.max_capacity,
            Growth::Doubling => (len * 2).max(FIRST_GROWTH).min(self.max_capacity),
        };
        self.extend_to(target);
        Ok(())
    }

    /// Appends zeroed slots up to `target` and makes them the free list.
    /// Only called when the free list is empty.
    fn extend_to(&mut self, target: usize) {
        let old = self.capacity();
        debug_assert!(target > old && self.first_free == H::INVALID);
        let n = self.fanout;
        self.masks.resize(target, 0);
        self.links.resize(target, H::default());
        self.chain_next.resize(target, H::default());
        self.chain_prev.resize(target, H::default());
        self.cache_keys.resize(target, 0);
        self.children.resize(target * n, H::default());
        self.values.resize(target * n, V::default());
        #[cfg(debug_assertions)]
        self.occupied.resize(target, false);
        if !self.trash {
            for j in old..target - 1 {
                self.links[j] = H::from_index(j + 1);
            }
            self.links[target - 1] = H::INVALID;
        }
        self.first_free = H::from_index(old);
    }

    #[inline]
    pub fn mask(&self, p: H) -> u64 {
        self.masks[p.index()]
    }

    #[inline]
    pub fn set_mask(&mut self, p: H, mask: u64) {
        self.masks[p.index()] = mask;
    }

    #[inline]
    pub fn parent(&self, p: H) -> H {
        self.links[p.index()]
    }

    #[inline]
    pub fn set_parent(&mut self, p: H, parent: H) {
        self.links[p.index()] = parent;
    }

    #[inline]
    pub fn child(&self, p: H, i: usize) -> H {
        self.children[p.index() * self.fanout + i]
    }

    #[inline]
    pub fn set_child(&mut self, p: H, i: usize, c: H) {
        self.children[p.index() * self.fanout + i] = c;
    }

    #[inline]
    pub fn value(&self, p: H, i: usize) -> &V {
        &self.values[p.index() * self.fanout + i]
    }

    #[inline]
    pub fn value_mut(&mut self, p: H, i: usize) -> &mut V {
        &mut self.values[p.index() * self.fanout + i]
    }

    #[inline]
    pub fn chain_next(&self, p: H) -> H {
        self.chain_next[p.index()]
    }

    #[inline]
    pub fn set_chain_next(&mut self, p: H, q: H) {
        self.chain_next[p.index()] = q;
    }

    #[inline]
    pub fn chain_prev(&self, p: H) -> H {
        self.chain_prev[p.index()]
    }

    #[inline]
    pub fn set_chain_prev(&mut self, p: H, q: H) {
        self.chain_prev[p.index()] = q;
    }

    #[inline]
    pub fn cache_key(&self, p: H) -> u64 {
        self.cache_keys[p.index()]
    }

    #[inline]
    pub fn set_cache_key(&mut self, p: H, key: u64) {
        self.cache_keys[p.index()] = key;
    }

    /// Walks the free list from its head. Used by tests and integrity checks.
    pub fn free_list(&self) -> Vec<H> {
        let mut out = Vec::new();
        let mut p = self.first_free;
        while p != H::INVALID {
            out.push(p);
            assert!(out.len() <= self.capacity(), "free list cycle");
            p = self.read_free_link(p.index());
        }
        out
    }
}

impl<H: Handle, V: Copy + Default + PartialEq> Pool<H, V> {
    /// Whether every field of slot `i` still holds its initial zero state.
    pub fn slot_is_pristine(&self, i: usize) -> bool {
        let n = self.fanout;
        self.masks[i] == 0
            && self.links[i] == H::default()
            && self.chain_next[i] == H::default()
            && self.chain_prev[i] == H::default()
            && self.cache_keys[i] == 0
            && self.children[i * n..(i + 1) * n]
                .iter()
                .all(|&c| c == H::default())
            && self.values[i * n..(i + 1) * n]
                .iter()
                .all(|v| *v == V::default())
    }
}

/// Handle width of a glass, with the per-node footprint used for memory
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandleWidth {
    W16,
    W32,
}

impl HandleWidth {
    pub fn bits(self) -> u32 {
        match self {
            HandleWidth::W16 => 16,
            HandleWidth::W32 => 32,
        }
    }

    /// Node size in bytes for the reference layout (`K = 50`, `C = 5`).
    pub fn node_bytes(self) -> u64 {
        match self {
            HandleWidth::W16 => 48,
            HandleWidth::W32 => 80,
        }
    }

    /// Largest addressable node count.
    pub fn max_capacity(self) -> u64 {
        (1u64 << self.bits()) - 2
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            16 => Some(HandleWidth::W16),
            32 => Some(HandleWidth::W32),
            _ => None,
        }
    }
}

/// Upper bound on node count as a function of element count.
#[derive(Debug, Clone, Copy)]
pub struct CapacityModel {
    pub geo: TrieGeometry,
    pub width: HandleWidth,
}

impl CapacityModel {
    pub fn new(geo: TrieGeometry, width: HandleWidth) -> Self {
        Self { geo, width }
    }

    pub fn node_bytes(&self) -> u64 {
        self.width.node_bytes()
    }

    pub fn bound_for_size(&self, size: u64) -> u64 {
        capacity_bound_for_size(size, &self.geo)
    }

    pub fn bytes_for_size(&self, size: u64) -> u64 {
        self.bound_for_size(size).saturating_mul(self.node_bytes())
    }

    /// Whether the bound for `size` fits in the handle width.
    pub fn addressable(&self, size: u64) -> bool {
        self.bound_for_size(size) <= self.width.max_capacity()
    }

    pub fn max_size(&self) -> u64 {
        max_size_for_capacity(self.width.max_capacity(), &self.geo)
    }
}

/// Sum over levels `0..L` of the per-level node bound: one root, at most
/// `2^r` nodes below it, then at most `2^C` times the level above, and never
/// more than `size` nodes on any level.
pub fn capacity_bound_for_size(size: u64, geo: &TrieGeometry) -> u64 {
    let size = u128::from(size);
    let mut total: u128 = 0;
    let mut level: u128 = 0;
    for i in 0..geo.levels() {
        level = match i {
            0 => size.min(1),
            1 => size.min(1u128 << geo.root_bits()),
            _ => size.min(level << geo.chunk_bits()),
        };
        total += level;
    }
    total.min(u128::from(u64::MAX)) as u64
}

/// Largest element count whose node bound fits into `capacity`, by binary
/// search over `[0, 2^K]`.
pub fn max_size_for_capacity(capacity: u64, geo: &TrieGeometry) -> u64 {
    let mut lo = 0u64;
    let mut hi = if geo.key_bits() >= 64 {
        u64::MAX
    } else {
        1u64 << geo.key_bits()
    };
    if capacity_bound_for_size(hi, geo) <= capacity {
        return hi;
    }
    // invariant: bound(lo) <= capacity < bound(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if capacity_bound_for_size(mid, geo) <= capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
