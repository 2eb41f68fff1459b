//! Ordered trie whose root paths are indexed by auxiliary splay trees.
//!
//! Every node denotes the set spelled by the path from the node up to
//! [`ROOT`]. Sort keys strictly increase with depth, so the deepest node of a
//! path carries the largest key. The trie is decomposed into preferred paths
//! the way a link-cut tree is: each preferred path lives in one splay tree
//! ordered by depth, and the root of that splay tree stores a path-parent
//! pointer to the trie parent of the path's topmost node. Because key order
//! and depth order coincide along a path, each auxiliary tree is also a
//! binary search tree over sort keys.

use std::fmt::Write as _;

use rustc_hash::FxHashMap;

pub(crate) const NIL: u32 = u32::MAX;
/// The trie root; denotes the empty path.
pub(crate) const ROOT: u32 = 0;

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub(crate) elem: u32,
    pub(crate) key: u32,
    pub(crate) min_key: u32,
    pub(crate) depth: u32,
    pub(crate) trie_parent: u32,
    left: u32,
    right: u32,
    /// Splay parent, or the path-parent when this node is an auxiliary root.
    parent: u32,
}

#[derive(Clone)]
pub(crate) struct Trie {
    pub(crate) nodes: Vec<Node>,
    children: FxHashMap<(u32, u32), u32>,
    pub(crate) rotations: u64,
}

impl Default for Trie {
    fn default() -> Self {
        Self {
            nodes: vec![Node {
                elem: NIL,
                key: 0,
                min_key: 0,
                depth: 0,
                trie_parent: NIL,
                left: NIL,
                right: NIL,
                parent: NIL,
            }],
            children: FxHashMap::default(),
            rotations: 0,
        }
    }
}

impl Trie {
    #[inline]
    pub(crate) fn node(&self, n: u32) -> &Node {
        &self.nodes[n as usize]
    }

    /// Returns the child of `parent` labelled `elem`, creating it if needed.
    /// A fresh node is linked as a one-node preferred path whose
    /// path-parent is `parent`.
    pub(crate) fn child(&mut self, parent: u32, elem: u32, key: u32) -> u32 {
        if let Some(&c) = self.children.get(&(parent, elem)) {
            return c;
        }
        let p = self.node(parent);
        debug_assert!(parent == ROOT || p.key < key);
        let id = self.nodes.len() as u32;
        let min_key = if parent == ROOT { key } else { p.min_key };
        let depth = p.depth + 1;
        self.nodes.push(Node { elem, key, min_key, depth, trie_parent: parent, left: NIL, right: NIL, parent });
        self.children.insert((parent, elem), id);
        id
    }

    /// Elements on the path from `n` up to the root, shallowest first.
    pub(crate) fn path_elements(&self, mut n: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.node(n).depth as usize);
        while n != ROOT {
            let node = self.node(n);
            out.push(node.elem);
            n = node.trie_parent;
        }
        out.reverse();
        out
    }

    #[inline]
    fn is_aux_root(&self, x: u32) -> bool {
        let p = self.node(x).parent;
        p == NIL || {
            let pn = self.node(p);
            pn.left != x && pn.right != x
        }
    }

    fn rotate(&mut self, x: u32) {
        self.rotations += 1;
        let y = self.node(x).parent;
        let z = self.node(y).parent;
        let y_is_root = self.is_aux_root(y);
        if self.node(y).left == x {
            let b = self.node(x).right;
            self.nodes[y as usize].left = b;
            if b != NIL {
                self.nodes[b as usize].parent = y;
            }
            self.nodes[x as usize].right = y;
        } else {
            let b = self.node(x).left;
            self.nodes[y as usize].right = b;
            if b != NIL {
                self.nodes[b as usize].parent = y;
            }
            self.nodes[x as usize].left = y;
        }
        self.nodes[y as usize].parent = x;
        self.nodes[x as usize].parent = z;
        if !y_is_root {
            let zn = &mut self.nodes[z as usize];
            if zn.left == y {
                zn.left = x;
            } else {
                zn.right = x;
            }
        }
    }

    fn splay(&mut self, x: u32) {
        while !self.is_aux_root(x) {
            let y = self.node(x).parent;
            if !self.is_aux_root(y) {
                let z = self.node(y).parent;
                let zig_zig = (self.node(z).left == y) == (self.node(y).left == x);
                if zig_zig {
                    self.rotate(y);
                } else {
                    self.rotate(x);
                }
            }
            self.rotate(x);
        }
    }

    /// Makes the root-to-`v` path preferred and splays `v` to the root of its
    /// auxiliary tree. Returns the last node at which the walk joined an
    /// existing preferred path, which is the LCA with the previously
    /// accessed node.
    pub(crate) fn access(&mut self, v: u32) -> u32 {
        let mut last = NIL;
        let mut u = v;
        while u != NIL {
            self.splay(u);
            self.nodes[u as usize].right = last;
            last = u;
            u = self.node(u).parent;
        }
        self.splay(v);
        last
    }

    pub(crate) fn lca(&mut self, a: u32, b: u32) -> u32 {
        self.access(a);
        self.access(b)
    }

    /// Deepest node on the root path of `n` whose key is `<= key`. Returns
    /// [`ROOT`] when no element qualifies.
    pub(crate) fn find_le(&mut self, n: u32, key: u32) -> u32 {
        self.access(n);
        let mut cur = n;
        let mut best = ROOT;
        let mut last = n;
        while cur != NIL {
            last = cur;
            let node = self.node(cur);
            if node.key <= key {
                best = cur;
                cur = node.right;
            } else {
                cur = node.left;
            }
        }
        // Splay the deepest visited node to pay for the search.
        self.splay(last);
        if best != last {
            self.splay(best);
        }
        best
    }

    /// Checks the auxiliary-forest invariants. Used by tests.
    pub(crate) fn check(&self) -> Result<(), String> {
        let mut seen = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            let i = i as u32;
            if i != ROOT {
                let p = self.node(n.trie_parent);
                if n.depth != p.depth + 1 {
                    return Err(format!("node {i}: depth mismatch"));
                }
                if n.trie_parent != ROOT && p.key >= n.key {
                    return Err(format!("node {i}: keys not increasing along path"));
                }
                let expect_min = if n.trie_parent == ROOT { n.key } else { p.min_key };
                if n.min_key != expect_min.min(n.key) {
                    return Err(format!("node {i}: bad min-key-on-path"));
                }
            }
            for c in [n.left, n.right] {
                if c != NIL && self.node(c).parent != i {
                    return Err(format!("node {i}: child {c} has wrong parent"));
                }
            }
            if !self.is_aux_root(i) {
                continue;
            }
            // In-order walk of this auxiliary tree must spell a contiguous
            // trie path ordered by depth.
            let mut order = Vec::new();
            let mut stack = Vec::new();
            let mut cur = i;
            while cur != NIL || !stack.is_empty() {
                while cur != NIL {
                    stack.push(cur);
                    cur = self.node(cur).left;
                }
                let top = stack.pop().unwrap();
                order.push(top);
                cur = self.node(top).right;
            }
            for w in order.windows(2) {
                if self.node(w[1]).trie_parent != w[0] {
                    return Err(format!("aux tree at {i}: in-order is not a trie path"));
                }
            }
            let top = order[0];
            let expected_pp = self.node(top).trie_parent;
            if n.parent != expected_pp {
                return Err(format!(
                    "aux tree at {i}: path-parent {} but topmost node's trie parent is {expected_pp}",
                    n.parent
                ));
            }
            for &o in &order {
                if std::mem::replace(&mut seen[o as usize], true) {
                    return Err(format!("node {o} in two auxiliary trees"));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(format!("node {missing} in no auxiliary tree"));
        }
        Ok(())
    }

    /// Topmost node of the preferred path containing `x`.
    fn path_top(&self, mut x: u32) -> u32 {
        while !self.is_aux_root(x) {
            x = self.node(x).parent;
        }
        while self.node(x).left != NIL {
            x = self.node(x).left;
        }
        x
    }

    pub(crate) fn to_dot(&self) -> String {
        let mut out = String::from("digraph trie {\n  node [shape=circle];\n  n0 [label=\"∅\"];\n");
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let _ = writeln!(out, "  n{i} [label=\"{}#{}\"];", n.elem, n.key);
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let i = i as u32;
            let preferred = self.path_top(i) != i;
            let style = if preferred { "bold" } else { "solid" };
            let _ = writeln!(out, "  n{} -> n{i} [style={style}];", n.trie_parent);
            if self.is_aux_root(i) && n.parent != NIL {
                let _ = writeln!(out, "  n{i} -> n{} [style=dashed, constraint=false];", n.parent);
            }
        }
        out.push_str("}\n");
        out
    }
}
