//! Bit-manipulation and integer kernels shared by the trie, the node pool and
//! the cache table.
//!
//! Keys and child masks always live in a single 64-bit word. The only place
//! where a narrower word width matters is [`common_prefix_chunks`], whose
//! result does not depend on the width as long as the key fits.

use crate::error::{Error, Result};

/// Machine word width used for keys and masks.
pub const WORD_BITS: u32 = 64;

/// Largest supported chunk width. A node with `2^7` children would need a
/// mask wider than one word.
pub const MAX_CHUNK_BITS: u32 = 6;

/// Shape of a trie over `key_bits`-bit integer keys split into
/// `chunk_bits`-bit chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrieGeometry {
    key_bits: u32,
    chunk_bits: u32,
    levels: u32,
    root_bits: u32,
    bias: u32,
    word_bits: u32,
}

impl TrieGeometry {
    pub fn new(key_bits: u32, chunk_bits: u32) -> Result<Self> {
        Self::with_word_bits(key_bits, chunk_bits, WORD_BITS)
    }

    /// Geometry with an explicit word width for the prefix computation.
    /// `word_bits` must be between 8 and 64 and at least `key_bits`.
    pub fn with_word_bits(key_bits: u32, chunk_bits: u32, word_bits: u32) -> Result<Self> {
        if !(1..=MAX_CHUNK_BITS).contains(&chunk_bits) {
            return Err(Error::ConfigInvalid(format!(
                "chunk width {chunk_bits} outside 1..={MAX_CHUNK_BITS}"
            )));
        }
        if !(8..=WORD_BITS).contains(&word_bits) {
            return Err(Error::ConfigInvalid(format!(
                "word width {word_bits} outside 8..={WORD_BITS}"
            )));
        }
        if key_bits == 0 || key_bits > word_bits {
            return Err(Error::ConfigInvalid(format!(
                "key width {key_bits} outside 1..={word_bits}"
            )));
        }
        let rem = key_bits % chunk_bits;
        Ok(Self {
            key_bits,
            chunk_bits,
            levels: key_bits.div_ceil(chunk_bits),
            root_bits: if rem == 0 { chunk_bits } else { rem },
            bias: (chunk_bits - rem) % chunk_bits,
            word_bits,
        })
    }

    /// `K`
    #[inline]
    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    /// `C`
    #[inline]
    pub fn chunk_bits(&self) -> u32 {
        self.chunk_bits
    }

    /// `N = 2^C`
    #[inline]
    pub fn fanout(&self) -> usize {
        1 << self.chunk_bits
    }

    #[inline]
    pub fn chunk_mask(&self) -> u64 {
        (1u64 << self.chunk_bits) - 1
    }

    /// `L`: distance from the root to a post-leaf. The pre-leaf sits at depth
    /// `L - 1`.
    #[inline]
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Bits that discriminate between the children of the root.
    #[inline]
    pub fn root_bits(&self) -> u32 {
        self.root_bits
    }

    /// `(-K) mod C`
    #[inline]
    pub fn bias(&self) -> u32 {
        self.bias
    }

    #[inline]
    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    /// Whether `key` has no bits set at or above `K`.
    #[inline]
    pub fn key_fits(&self, key: u64) -> bool {
        self.key_bits >= 64 || key >> self.key_bits == 0
    }

    /// Largest valid key.
    #[inline]
    pub fn max_key(&self) -> u64 {
        low_bits(self.key_bits)
    }

    /// Bit offset of the chunk consumed by a node at `depth`.
    #[inline]
    pub fn offset_of_depth(&self, depth: u32) -> u32 {
        debug_assert!(depth < self.levels);
        self.chunk_bits * (self.levels - 1 - depth)
    }

    /// The chunk of `key` consumed at `depth`.
    #[inline]
    pub fn chunk(&self, key: u64, depth: u32) -> usize {
        ((key >> self.offset_of_depth(depth)) & self.chunk_mask()) as usize
    }
}

/// Decomposition `C = 2^shift * odd` with the inverse of `odd` modulo `2^64`,
/// turning exact division by `C` into a shift and a multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionPlan {
    divisor: u32,
    shift: u32,
    odd: u64,
    odd_inverse: u64,
}

impl DivisionPlan {
    pub fn new(divisor: u32) -> Self {
        assert!(divisor > 0, "division plan for zero");
        let shift = divisor.trailing_zeros();
        let odd = u64::from(divisor >> shift);
        Self {
            divisor,
            shift,
            odd,
            odd_inverse: inverse_mod_word(odd),
        }
    }

    #[inline]
    pub fn divisor(&self) -> u32 {
        self.divisor
    }

    /// `ℓ`
    #[inline]
    pub fn shift(&self) -> u32 {
        self.shift
    }

    /// `ω`
    #[inline]
    pub fn odd(&self) -> u64 {
        self.odd
    }

    /// `ω⁻¹` in the ring of integers modulo `2^64`.
    #[inline]
    pub fn odd_inverse(&self) -> u64 {
        self.odd_inverse
    }

    /// `kappa / C`, valid only when `C` divides `kappa`.
    #[inline]
    pub fn exact_div(&self, kappa: u64) -> u64 {
        debug_assert!(
            kappa.is_multiple_of(u64::from(self.divisor)),
            "{kappa} is not a multiple of {}",
            self.divisor
        );
        (kappa >> self.shift).wrapping_mul(self.odd_inverse)
    }
}

/// Inverse of an odd `x` modulo `2^64` by Newton iteration; each step doubles
/// the number of correct low bits, starting from 3 (`x * x ≡ 1 mod 8`).
fn inverse_mod_word(x: u64) -> u64 {
    debug_assert!(x & 1 == 1);
    let mut inv = x;
    for _ in 0..5 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(x.wrapping_mul(inv)));
    }
    inv
}

/// All-ones in the low `bits` bits; saturates at a full word.
#[inline]
pub fn low_bits(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Leading zero count of `x` viewed as a `width`-bit word. Returns `width`
/// for zero.
#[inline]
pub fn clz(x: u64, width: u32) -> u32 {
    debug_assert!((1..=64).contains(&width));
    debug_assert!(
        width == 64 || x >> width == 0,
        "{x:#x} wider than {width} bits"
    );
    x.leading_zeros() - (64 - width)
}

/// Number of leading `C`-bit chunks shared by two valid keys, in `[0, L]`.
#[inline]
pub fn common_prefix_chunks(k1: u64, k2: u64, geo: &TrieGeometry) -> u32 {
    let w = geo.word_bits;
    let numerator = geo.bias + clz(k1 ^ k2, w) - (w - geo.key_bits);
    numerator / geo.chunk_bits
}

/// Smallest set bit strictly above `i`.
#[inline]
pub fn next_set_bit(mask: u64, i: u32) -> Option<u32> {
    debug_assert!(i < 64);
    let rest = mask & ((-2i64 as u64) << i);
    if rest == 0 {
        None
    } else {
        Some(rest.trailing_zeros())
    }
}

/// Largest set bit strictly below `i`.
#[inline]
pub fn prev_set_bit(mask: u64, i: u32) -> Option<u32> {
    debug_assert!(i < 64);
    let rest = zero_high_bits(mask, i);
    if rest == 0 {
        None
    } else {
        Some(63 - rest.leading_zeros())
    }
}

#[cfg(all(target_arch = "x86_64", target_feature = "bmi2"))]
#[inline]
fn zero_high_bits(x: u64, i: u32) -> u64 {
    // SAFETY: bmi2 is enabled for the whole build.
    #[allow(unused_unsafe)]
    unsafe {
        core::arch::x86_64::_bzhi_u64(x, i)
    }
}

#[cfg(not(all(target_arch = "x86_64", target_feature = "bmi2")))]
#[inline]
fn zero_high_bits(x: u64, i: u32) -> u64 {
    x & ((1u64 << i) - 1)
}

/// Lowest set bit of a nonzero mask.
#[inline]
pub fn lowest_set_bit(mask: u64) -> u32 {
    debug_assert!(mask != 0);
    mask.trailing_zeros()
}

/// Highest set bit of a nonzero mask.
#[inline]
pub fn highest_set_bit(mask: u64) -> u32 {
    debug_assert!(mask != 0);
    63 - mask.leading_zeros()
}

/// Depth of the node whose chunk sits at bit offset `kappa`.
#[inline]
pub fn depth_from_offset(kappa: u64, geo: &TrieGeometry, plan: &DivisionPlan) -> u32 {
    let chunks_below = plan.exact_div(kappa);
    debug_assert!(chunks_below < u64::from(geo.levels));
    geo.levels - 1 - chunks_below as u32
}

/// Number of cached-path entries invalidated by an erase: `levels` is the
/// root-to-post-leaf distance, `shared_depth` the depth of the lowest common
/// ancestor of the cached path's tail and the erased key's post-leaf, and
/// `removed` the number of nodes deallocated by the erase.
#[inline]
pub fn truncation_len(levels: u32, shared_depth: u32, removed: u32) -> u32 {
    (shared_depth + removed + 1).saturating_sub(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_next(mask: u64, i: u32) -> Option<u32> {
        (i + 1..64).find(|&j| mask >> j & 1 == 1)
    }

    fn scan_prev(mask: u64, i: u32) -> Option<u32> {
        (0..i).rev().find(|&j| mask >> j & 1 == 1)
    }

    /// Extended Euclid over i128, independent of the Newton iteration.
    fn euclid_inverse(a: u64) -> u64 {
        let m: i128 = 1i128 << 64;
        let (mut r0, mut r1) = (m, i128::from(a));
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        assert_eq!(r0, 1);
        t0.rem_euclid(m) as u64
    }

    #[test]
    fn clz_examples() {
        assert_eq!(clz(0, 8), 8);
        assert_eq!(clz(1, 8), 7);
        assert_eq!(clz(1 << 63, 64), 0);
        assert_eq!(clz(0, 64), 64);
    }

    #[test]
    fn geometry_fields() {
        let g = TrieGeometry::new(50, 5).unwrap();
        assert_eq!(
            (g.levels(), g.root_bits(), g.bias(), g.fanout()),
            (10, 5, 0, 32)
        );
        let g = TrieGeometry::new(16, 6).unwrap();
        assert_eq!((g.levels(), g.root_bits(), g.bias()), (3, 4, 2));
        assert_eq!((g.key_bits() + g.bias()) % g.chunk_bits(), 0);
        assert!(TrieGeometry::new(50, 7).is_err());
        assert!(TrieGeometry::new(50, 0).is_err());
        assert!(TrieGeometry::new(65, 5).is_err());
        assert!(TrieGeometry::with_word_bits(9, 1, 8).is_err());
    }

    #[test]
    fn prefix_worked_example() {
        let g = TrieGeometry::with_word_bits(3, 1, 8).unwrap();
        assert_eq!(common_prefix_chunks(0b010, 0b011, &g), 2);
        assert_eq!(common_prefix_chunks(0b010, 0b010, &g), g.levels());
    }

    #[test]
    fn prefix_wide_keys() {
        let g = TrieGeometry::new(50, 5).unwrap();
        // chunk-by-chunk: keys 0 and 1 differ only in the last chunk
        assert_eq!(common_prefix_chunks(0, 1, &g), 9);
        assert_eq!(common_prefix_chunks(0, 1 << 49, &g), 0);
        assert_eq!(common_prefix_chunks(7, 7, &g), 10);
    }

    #[test]
    fn prefix_matches_chunk_extraction() {
        for (k, c) in [(16, 1), (16, 3), (13, 5), (10, 6), (7, 4)] {
            let g = TrieGeometry::new(k, c).unwrap();
            let limit = 1u64 << k;
            let step = (limit / 97).max(1) | 1;
            for a in (0..limit).step_by(step as usize) {
                for b in (0..limit).step_by((step * 3 + 2) as usize) {
                    let shared = (0..g.levels())
                        .take_while(|&d| g.chunk(a, d) == g.chunk(b, d))
                        .count() as u32;
                    assert_eq!(
                        common_prefix_chunks(a, b, &g),
                        shared,
                        "k={k} c={c} {a} {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn set_bit_examples() {
        assert_eq!(next_set_bit(0b1010, 1), Some(3));
        assert_eq!(next_set_bit(0b1010, 3), None);
        assert_eq!(next_set_bit(u64::MAX, 62), Some(63));
        assert_eq!(next_set_bit(u64::MAX, 63), None);
        assert_eq!(prev_set_bit(0b1010, 3), Some(1));
        assert_eq!(prev_set_bit(0b1010, 1), None);
        assert_eq!(prev_set_bit(0b1, 0), None);
        assert_eq!(prev_set_bit(u64::MAX, 63), Some(62));
    }

    #[test]
    fn set_bit_scan_equivalence_on_wide_masks() {
        let masks = [
            0u64,
            1,
            u64::MAX,
            1 << 63,
            0x8000_0000_0000_0001,
            0x5555_5555_5555_5555,
        ];
        for m in masks {
            for i in 0..64 {
                assert_eq!(next_set_bit(m, i), scan_next(m, i));
                assert_eq!(prev_set_bit(m, i), scan_prev(m, i));
            }
        }
    }

    #[test]
    fn inverse_of_five() {
        let plan = DivisionPlan::new(5);
        assert_eq!(plan.odd_inverse(), 14757395258967641293);
        assert_eq!(plan.odd_inverse(), euclid_inverse(5));
        assert_eq!(5u64.wrapping_mul(plan.odd_inverse()), 1);
        assert_eq!(plan.exact_div(45), 9);
        assert_eq!(plan.exact_div(0), 0);
    }

    #[test]
    fn power_of_two_is_pure_shift() {
        let plan = DivisionPlan::new(4);
        assert_eq!((plan.shift(), plan.odd(), plan.odd_inverse()), (2, 1, 1));
        assert_eq!(plan.exact_div(12), 3);
    }

    #[test]
    fn plans_match_euclid() {
        for c in 1..=6u32 {
            let plan = DivisionPlan::new(c);
            assert_eq!(plan.odd() << plan.shift(), u64::from(c));
            assert_eq!(plan.odd_inverse(), euclid_inverse(plan.odd()));
        }
    }

    #[test]
    fn depth_examples() {
        let g = TrieGeometry::new(50, 5).unwrap();
        let plan = DivisionPlan::new(5);
        let root = u64::from(g.chunk_bits() * (g.levels() - 1));
        assert_eq!(depth_from_offset(root, &g, &plan), 0);
        assert_eq!(depth_from_offset(0, &g, &plan), g.levels() - 1);
        assert_eq!(depth_from_offset(20, &g, &plan), 5);
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_len(4, 3, 1), 1);
        assert_eq!(truncation_len(4, 0, 0), 0);
        // whole tree of depth L removed while fully cached
        assert_eq!(truncation_len(4, 3, 4), 4);
    }

    #[cfg(debug_assertions)]
    #[test]
    #[should_panic]
    fn inexact_division_asserts() {
        DivisionPlan::new(5).exact_div(7);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn clz_monotone_under_shift(x in any::<u64>()) {
                prop_assert!(clz(x >> 1, 64) >= clz(x, 64));
            }

            #[test]
            fn exact_div_matches_division(c in 1u32..=6, m in 0u64..(1 << 40)) {
                let plan = DivisionPlan::new(c);
                prop_assert_eq!(plan.exact_div(m * u64::from(c)), m);
            }
        }
    }
}
