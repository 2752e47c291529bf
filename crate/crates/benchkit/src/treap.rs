//! Treap over an index arena with a free list, the slab-allocated baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    key: u64,
    val: u64,
    prio: u32,
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
pub struct ArenaTreap {
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    len: usize,
    rng: ChaCha8Rng,
}

impl ArenaTreap {
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(capacity),
            free: Vec::new(),
            root: NIL,
            len: 0,
            rng: ChaCha8Rng::seed_from_u64(0x7265_6170),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn alloc(&mut self, key: u64, val: u64) -> u32 {
        let node = Node {
            key,
            val,
            prio: self.rng.random(),
            left: NIL,
            right: NIL,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    /// Splits `t` into keys `< key` and keys `>= key`.
    fn split(&mut self, t: u32, key: u64) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let n = self.nodes[t as usize];
        if n.key < key {
            let (l, r) = self.split(n.right, key);
            self.nodes[t as usize].right = l;
            (t, r)
        } else {
            let (l, r) = self.split(n.left, key);
            self.nodes[t as usize].left = r;
            (l, t)
        }
    }

    /// Joins two treaps where every key of `a` is below every key of `b`.
    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let r = self.merge(self.nodes[a as usize].right, b);
            self.nodes[a as usize].right = r;
            a
        } else {
            let l = self.merge(a, self.nodes[b as usize].left);
            self.nodes[b as usize].left = l;
            b
        }
    }

    fn locate(&self, key: u64) -> u32 {
        let mut t = self.root;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if key == n.key {
                return t;
            }
            t = if key < n.key { n.left } else { n.right };
        }
        NIL
    }

    pub fn find(&self, key: u64) -> Option<u64> {
        let t = self.locate(key);
        (t != NIL).then(|| self.nodes[t as usize].val)
    }

    /// Inserts if absent; returns whether a node was added.
    pub fn insert(&mut self, key: u64, val: u64) -> bool {
        if self.locate(key) != NIL {
            return false;
        }
        let (l, r) = self.split(self.root, key);
        let n = self.alloc(key, val);
        let l = self.merge(l, n);
        self.root = self.merge(l, r);
        self.len += 1;
        true
    }

    pub fn erase(&mut self, key: u64) -> Option<u64> {
        let t = self.locate(key);
        if t == NIL {
            return None;
        }
        let (l, r) = self.split(self.root, key);
        let (mid, r) = self.split(r, key + 1);
        debug_assert_eq!(mid, t);
        self.root = self.merge(l, r);
        self.free.push(t);
        self.len -= 1;
        Some(self.nodes[t as usize].val)
    }

    fn edge(&self, leftmost: bool) -> Option<u64> {
        let mut t = self.root;
        let mut out = None;
        while t != NIL {
            let n = &self.nodes[t as usize];
            out = Some(n.key);
            t = if leftmost { n.left } else { n.right };
        }
        out
    }

    pub fn min(&self) -> Option<u64> {
        self.edge(true)
    }

    pub fn max(&self) -> Option<u64> {
        self.edge(false)
    }

    /// Smallest key greater than `key`.
    pub fn next(&self, key: u64) -> Option<u64> {
        let mut t = self.root;
        let mut out = None;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.key > key {
                out = Some(n.key);
                t = n.left;
            } else {
                t = n.right;
            }
        }
        out
    }

    /// Largest key smaller than `key`.
    pub fn prev(&self, key: u64) -> Option<u64> {
        let mut t = self.root;
        let mut out = None;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.key < key {
                out = Some(n.key);
                t = n.right;
            } else {
                t = n.left;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glass::oracle::{gen_trace, Op, OrderedMap, RefMap, Reply, Shape};

    #[test]
    fn matches_reference_map() {
        let trace = gen_trace(12, Shape::local(), 16, 50_000);
        let mut reference = RefMap::new(16, None);
        let mut t = ArenaTreap::with_capacity(16);
        for (i, &op) in trace.ops.iter().enumerate() {
            let got = match op {
                Op::Insert(k, v) => {
                    if t.insert(k, v) {
                        Reply::Inserted
                    } else {
                        Reply::AlreadyPresent
                    }
                }
                Op::Erase(k) => Reply::Value(t.erase(k)),
                Op::Find(k) => Reply::Value(t.find(k)),
                Op::Min => Reply::Key(t.min()),
                Op::Max => Reply::Key(t.max()),
                Op::Next(k) => Reply::Key(t.next(k)),
                Op::Prev(k) => Reply::Key(t.prev(k)),
            };
            assert_eq!(got, reference.apply(op), "op #{i} {op}");
            assert_eq!(t.len(), reference.len());
        }
    }

    #[test]
    fn slots_are_reused() {
        let mut t = ArenaTreap::with_capacity(4);
        for k in 0..4 {
            t.insert(k, k);
        }
        t.erase(1);
        t.erase(2);
        t.insert(9, 9);
        t.insert(10, 10);
        assert_eq!(t.nodes.len(), 4);
    }
}
