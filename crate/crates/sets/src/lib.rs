//! Tiered immutable set universes.
//!
//! A [`Universe`] owns every set ever built over one element domain and hands
//! out canonical [`SetHandle`]s: two handles from the same universe are equal
//! exactly when the sets they denote are equal. The representation tier is a
//! pure function of cardinality:
//!
//! | size  | tier                                   |
//! |-------|----------------------------------------|
//! | 0     | [`SetHandle::Empty`]                   |
//! | 1     | [`SetHandle::Single`]                  |
//! | 2..16 | hash-consed ordered array              |
//! | 17..  | node of a splay-indexed ordered trie   |
//!
//! Array-tier sets are ordered by raw element id. Trie-tier sets are ordered
//! by *sort key*, a counter handed to an element the first time it enters the
//! trie; [`Universe::elements`] therefore yields trie sets in insertion-counter
//! order, not id order.
//!
//! Membership tests and intersection tests on trie sets splay the shared
//! auxiliary trees, so even read-style operations take `&mut self`.

mod array;
mod trie;

use array::ArrayArena;
use trie::{Trie, ROOT};

/// Largest cardinality stored as an ordered array.
pub const ARRAY_MAX: usize = 16;

/// Element identity inside a universe.
pub type Element = u32;

/// Canonical reference to a set inside one [`Universe`].
///
/// Handles are plain values; comparing them compares sets. Mixing handles
/// of different universes is meaningless.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum SetHandle {
    #[default]
    Empty,
    Single(Element),
    /// Interned array id.
    Array(u32),
    /// Trie node id.
    Trie(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    Empty,
    Singleton,
    SmallArray,
    Trie,
}

impl SetHandle {
    pub fn tier(self) -> Tier {
        match self {
            SetHandle::Empty => Tier::Empty,
            SetHandle::Single(_) => Tier::Singleton,
            SetHandle::Array(_) => Tier::SmallArray,
            SetHandle::Trie(_) => Tier::Trie,
        }
    }

    pub fn is_empty(self) -> bool {
        self == SetHandle::Empty
    }
}

/// An append-only universe of immutable sets.
#[derive(Clone, Default)]
pub struct Universe {
    arrays: ArrayArena,
    trie: Trie,
    /// Sort key per element id; 0 means the element never entered the trie.
    keys: Vec<u32>,
    next_key: u32,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn empty(&self) -> SetHandle {
        SetHandle::Empty
    }

    pub fn singleton(&self, x: Element) -> SetHandle {
        SetHandle::Single(x)
    }

    /// Builds a set from arbitrary elements (duplicates allowed).
    pub fn from_elements(&mut self, elems: impl IntoIterator<Item = Element>) -> SetHandle {
        let mut v: Vec<Element> = elems.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        self.canonical(v)
    }

    pub fn len(&self, s: SetHandle) -> usize {
        match s {
            SetHandle::Empty => 0,
            SetHandle::Single(_) => 1,
            SetHandle::Array(a) => self.arrays.get(a).len(),
            SetHandle::Trie(n) => self.trie.node(n).depth as usize,
        }
    }

    /// Elements of `s`: ascending id for the array tiers, ascending sort key
    /// for the trie tier.
    pub fn elements(&self, s: SetHandle) -> Vec<Element> {
        match s {
            SetHandle::Empty => Vec::new(),
            SetHandle::Single(x) => vec![x],
            SetHandle::Array(a) => self.arrays.get(a).to_vec(),
            SetHandle::Trie(n) => self.trie.path_elements(n),
        }
    }

    /// Calls `f` on each element without allocating for the array tiers.
    pub fn for_each(&self, s: SetHandle, mut f: impl FnMut(Element)) {
        match s {
            SetHandle::Empty => {}
            SetHandle::Single(x) => f(x),
            SetHandle::Array(a) => self.arrays.get(a).iter().copied().for_each(f),
            SetHandle::Trie(n) => self.trie.path_elements(n).into_iter().for_each(f),
        }
    }

    pub fn member(&mut self, s: SetHandle, x: Element) -> bool {
        match s {
            SetHandle::Empty => false,
            SetHandle::Single(y) => x == y,
            // Linear scan; arrays hold at most 16 elements.
            SetHandle::Array(a) => self.arrays.get(a).contains(&x),
            SetHandle::Trie(n) => self.trie_member(n, x),
        }
    }

    pub fn insert(&mut self, s: SetHandle, x: Element) -> SetHandle {
        match s {
            SetHandle::Empty => SetHandle::Single(x),
            SetHandle::Single(y) if y == x => s,
            SetHandle::Single(y) => {
                let v = if x < y { [x, y] } else { [y, x] };
                SetHandle::Array(self.arrays.intern(&v))
            }
            SetHandle::Array(a) => {
                let elems = self.arrays.get(a);
                let Err(pos) = elems.binary_search(&x) else {
                    return s;
                };
                let mut v = Vec::with_capacity(elems.len() + 1);
                v.extend_from_slice(&elems[..pos]);
                v.push(x);
                v.extend_from_slice(&elems[pos..]);
                self.canonical(v)
            }
            SetHandle::Trie(n) => {
                if self.trie_member(n, x) {
                    return s;
                }
                SetHandle::Trie(self.trie_insert_missing(n, &mut [x]))
            }
        }
    }

    pub fn remove(&mut self, s: SetHandle, x: Element) -> SetHandle {
        match s {
            SetHandle::Empty => s,
            SetHandle::Single(y) => {
                if x == y {
                    SetHandle::Empty
                } else {
                    s
                }
            }
            SetHandle::Array(a) => {
                let elems = self.arrays.get(a);
                let Ok(pos) = elems.binary_search(&x) else {
                    return s;
                };
                let mut v = elems.to_vec();
                v.remove(pos);
                self.canonical(v)
            }
            SetHandle::Trie(n) => {
                if !self.trie_member(n, x) {
                    return s;
                }
                let depth = self.trie.node(n).depth as usize;
                if depth - 1 <= ARRAY_MAX {
                    let mut v = self.trie.path_elements(n);
                    v.retain(|&e| e != x);
                    v.sort_unstable();
                    return self.canonical(v);
                }
                // Pop everything deeper than x, then re-append it.
                let mut popped = Vec::new();
                let mut cur = n;
                loop {
                    let node = self.trie.node(cur);
                    if node.elem == x {
                        cur = node.trie_parent;
                        break;
                    }
                    popped.push(node.elem);
                    cur = node.trie_parent;
                }
                for &e in popped.iter().rev() {
                    let k = self.keys[e as usize];
                    cur = self.trie.child(cur, e, k);
                }
                SetHandle::Trie(cur)
            }
        }
    }

    pub fn union(&mut self, a: SetHandle, b: SetHandle) -> SetHandle {
        if a == b || b.is_empty() {
            return a;
        }
        if a.is_empty() {
            return b;
        }
        match (a, b) {
            (SetHandle::Single(x), _) => self.insert(b, x),
            (_, SetHandle::Single(x)) => self.insert(a, x),
            (SetHandle::Array(x), SetHandle::Array(y)) => {
                let merged = merge_sorted(self.arrays.get(x), self.arrays.get(y));
                self.canonical(merged)
            }
            (SetHandle::Trie(n), SetHandle::Array(y)) | (SetHandle::Array(y), SetHandle::Trie(n)) => {
                let other = self.arrays.get(y).to_vec();
                self.trie_union(n, other)
            }
            (SetHandle::Trie(m), SetHandle::Trie(n)) => {
                let lca = self.trie.lca(m, n);
                if lca == m {
                    return b;
                }
                if lca == n {
                    return a;
                }
                let (big, small) = if self.trie.node(m).depth >= self.trie.node(n).depth { (m, n) } else { (n, m) };
                let other = self.trie.path_elements(small);
                self.trie_union(big, other)
            }
            (SetHandle::Empty, _) | (_, SetHandle::Empty) => unreachable!(),
        }
    }

    /// Set difference `a \ b`.
    pub fn difference(&mut self, a: SetHandle, b: SetHandle) -> SetHandle {
        if a.is_empty() || b.is_empty() {
            return a;
        }
        if a == b {
            return SetHandle::Empty;
        }
        let mut out = a;
        for x in self.elements(b) {
            out = self.remove(out, x);
        }
        out
    }

    pub fn intersects(&mut self, a: SetHandle, b: SetHandle) -> bool {
        if a.is_empty() || b.is_empty() {
            return false;
        }
        if a == b {
            return true;
        }
        match (a, b) {
            (SetHandle::Single(x), other) | (other, SetHandle::Single(x)) => self.member(other, x),
            (SetHandle::Array(x), SetHandle::Array(y)) => sorted_intersect(self.arrays.get(x), self.arrays.get(y)),
            (SetHandle::Trie(n), SetHandle::Array(y)) | (SetHandle::Array(y), SetHandle::Trie(n)) => {
                let len = self.arrays.get(y).len();
                (0..len).any(|i| {
                    let e = self.arrays.get(y)[i];
                    self.trie_member(n, e)
                })
            }
            (SetHandle::Trie(m), SetHandle::Trie(n)) => self.trie_intersects(m, n),
            (SetHandle::Empty, _) | (_, SetHandle::Empty) => unreachable!(),
        }
    }

    /// Total splay rotations performed so far.
    pub fn rotations(&self) -> u64 {
        self.trie.rotations
    }

    /// Number of trie nodes, including the root.
    pub fn trie_nodes(&self) -> usize {
        self.trie.nodes.len()
    }

    /// Number of interned arrays.
    pub fn array_count(&self) -> usize {
        self.arrays.len()
    }

    /// Sort key of `x`, if it has ever entered the trie.
    pub fn sort_key(&self, x: Element) -> Option<u32> {
        match self.keys.get(x as usize) {
            Some(&k) if k != 0 => Some(k),
            _ => None,
        }
    }

    /// Verifies the auxiliary splay forest: in-order of every auxiliary tree
    /// is a contiguous trie path, exactly the auxiliary root carries the
    /// path-parent, keys increase along paths and min-key-on-path is exact.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.trie.check()
    }

    /// Graphviz rendering of the trie: bold preferred edges, dashed
    /// path-parent pointers. Nodes are labelled `element#sort-key`.
    pub fn trie_dot(&self) -> String {
        self.trie.to_dot()
    }

    // ── internals ──────────────────────────────────────────────────────────

    fn key_of(&self, x: Element) -> u32 {
        self.keys.get(x as usize).copied().unwrap_or(0)
    }

    fn assign_key(&mut self, x: Element) -> u32 {
        let i = x as usize;
        if i >= self.keys.len() {
            self.keys.resize(i + 1, 0);
        }
        if self.keys[i] == 0 {
            self.next_key += 1;
            self.keys[i] = self.next_key;
        }
        self.keys[i]
    }

    /// Canonicalizes a strictly ascending id list into the right tier.
    fn canonical(&mut self, v: Vec<Element>) -> SetHandle {
        match v.len() {
            0 => SetHandle::Empty,
            1 => SetHandle::Single(v[0]),
            n if n <= ARRAY_MAX => SetHandle::Array(self.arrays.intern(&v)),
            _ => {
                // Unkeyed elements get keys in ascending id order.
                let mut keyed: Vec<(u32, Element)> = v.iter().map(|&e| (self.assign_key(e), e)).collect();
                keyed.sort_unstable();
                let mut cur = ROOT;
                for (k, e) in keyed {
                    cur = self.trie.child(cur, e, k);
                }
                SetHandle::Trie(cur)
            }
        }
    }

    fn trie_member(&mut self, n: u32, x: Element) -> bool {
        let k = self.key_of(x);
        if k == 0 {
            return false;
        }
        let node = self.trie.node(n);
        if k > node.key || k < node.min_key {
            return false;
        }
        if k == node.key {
            return true;
        }
        let found = self.trie.find_le(n, k);
        found != ROOT && self.trie.node(found).key == k
    }

    /// Adds elements known to be absent from trie set `n`.
    fn trie_insert_missing(&mut self, n: u32, missing: &mut [Element]) -> u32 {
        missing.sort_unstable();
        let mut keyed: Vec<(u32, Element)> = missing.iter().map(|&e| (self.assign_key(e), e)).collect();
        keyed.sort_unstable();
        let lowest = keyed[0].0;
        let mut cur = n;
        let mut popped = Vec::new();
        while cur != ROOT && self.trie.node(cur).key > lowest {
            let node = self.trie.node(cur);
            popped.push((node.key, node.elem));
            cur = node.trie_parent;
        }
        popped.reverse();
        let (mut i, mut j) = (0, 0);
        while i < popped.len() || j < keyed.len() {
            let next = if j == keyed.len() || (i < popped.len() && popped[i].0 < keyed[j].0) {
                i += 1;
                popped[i - 1]
            } else {
                j += 1;
                keyed[j - 1]
            };
            cur = self.trie.child(cur, next.1, next.0);
        }
        cur
    }

    fn trie_union(&mut self, n: u32, other: Vec<Element>) -> SetHandle {
        let mut missing: Vec<Element> = other.into_iter().filter(|&e| !self.trie_member(n, e)).collect();
        if missing.is_empty() {
            return SetHandle::Trie(n);
        }
        SetHandle::Trie(self.trie_insert_missing(n, &mut missing))
    }

    /// Alternating splay search. Paths are walked from their deepest
    /// (largest-key) node upwards; at each step the set whose current key is
    /// larger is moved to its deepest element not above the other's key.
    fn trie_intersects(&mut self, m: u32, n: u32) -> bool {
        // A common ancestor other than the root is a shared element.
        if self.trie.lca(m, n) != ROOT {
            return true;
        }
        let (mut a, mut b) = (m, n);
        loop {
            if a == ROOT || b == ROOT {
                return false;
            }
            let (na, nb) = (self.trie.node(a), self.trie.node(b));
            if na.key == nb.key {
                return true;
            }
            if na.key < nb.min_key || nb.key < na.min_key {
                return false;
            }
            if na.key < nb.key {
                b = self.trie.find_le(b, na.key);
            } else {
                a = self.trie.find_le(a, nb.key);
            }
        }
    }
}

fn merge_sorted(a: &[Element], b: &[Element]) -> Vec<Element> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn sorted_intersect(a: &[Element], b: &[Element]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}
