//! Nesting, well-formedness, nesting trees and the CFG overlay.
//!
//! `a` strictly nests `b` when `var(a)` is free in `b`, closed under
//! transitivity. A program is well-formed when this relation is acyclic.
//! The nesting tree hangs every function under its immediate nester;
//! sibling dependencies and their per-level SCCs recover loop and
//! recursion structure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::{dominators, tarjan_scc};
use petgraph::graph::{DiGraph, NodeIndex};
use rustc_hash::FxHashMap;

use crate::ir::{Label, Program};
use crate::Error;

/// One edge `(a, b)` per `var(a) ∈ FV(b)`.
pub fn strict_nest_edges(p: &mut Program) -> Vec<(Label, Label)> {
    let mut out = Vec::new();
    for l in p.labels().collect::<Vec<_>>() {
        let fv = p.free_vars(l).expect("label in range");
        for v in p.var_set(fv) {
            out.push((v, l));
        }
    }
    out.sort_unstable();
    out
}

/// `Ok` when nesting is acyclic; otherwise a witness cycle `[a, b, …]`
/// where each element strictly nests the next and the last nests the first.
pub fn well_formed(p: &mut Program) -> Result<(), Vec<Label>> {
    let mut succ: Vec<Vec<Label>> = vec![Vec::new(); p.len()];
    for (a, b) in strict_nest_edges(p) {
        succ[a.index()].push(b);
    }
    // 0 = white, 1 = on stack, 2 = done
    let mut color = vec![0u8; p.len()];
    for start in p.labels() {
        if color[start.index()] != 0 {
            continue;
        }
        let mut stack: Vec<(Label, usize)> = vec![(start, 0)];
        color[start.index()] = 1;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if let Some(&v) = succ[u.index()].get(*i) {
                *i += 1;
                match color[v.index()] {
                    0 => {
                        color[v.index()] = 1;
                        stack.push((v, 0));
                    }
                    1 => {
                        let from = stack.iter().position(|&(x, _)| x == v).unwrap();
                        return Err(stack[from..].iter().map(|&(x, _)| x).collect());
                    }
                    _ => {}
                }
            } else {
                color[u.index()] = 2;
                stack.pop();
            }
        }
    }
    Ok(())
}

/// Functions nested by `root`, root included.
pub fn nested_by(p: &mut Program, root: Label) -> BTreeSet<Label> {
    let mut succ: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
    for (a, b) in strict_nest_edges(p) {
        succ.entry(a).or_default().push(b);
    }
    let mut seen = BTreeSet::from([root]);
    let mut work = vec![root];
    while let Some(u) = work.pop() {
        for &v in succ.get(&u).map(|v| v.as_slice()).unwrap_or(&[]) {
            if seen.insert(v) {
                work.push(v);
            }
        }
    }
    seen
}

/// Control-flow view of the functions nested by a root, with its
/// dominator tree.
#[derive(Clone, Debug)]
pub struct CfgOverlay {
    pub root: Label,
    pub nodes: BTreeSet<Label>,
    pub edges: BTreeSet<(Label, Label)>,
    /// Immediate dominator of each node reachable from the root; the root
    /// maps to itself.
    pub idom: BTreeMap<Label, Label>,
}

impl CfgOverlay {
    /// Whether `a` dominates `b`. Nodes not reachable from the root are
    /// dominated by everything.
    pub fn dominates(&self, a: Label, b: Label) -> bool {
        if !self.idom.contains_key(&b) {
            return true;
        }
        let mut x = b;
        loop {
            if x == a {
                return true;
            }
            let d = self.idom[&x];
            if d == x {
                return false;
            }
            x = d;
        }
    }
}

pub fn cfg_overlay(p: &mut Program, root: Label) -> Result<CfgOverlay, Error> {
    if !p.contains(root) {
        return Err(Error::RootNotFound(format!("#{}", root.0)));
    }
    let nodes = nested_by(p, root);
    let mut g: DiGraph<Label, ()> = DiGraph::new();
    let mut ix: BTreeMap<Label, NodeIndex> = BTreeMap::new();
    for &n in &nodes {
        ix.insert(n, g.add_node(n));
    }
    let mut edges = BTreeSet::new();
    for &n in &nodes {
        for m in p.succs(n) {
            if nodes.contains(&m) && edges.insert((n, m)) {
                g.add_edge(ix[&n], ix[&m], ());
            }
        }
    }
    let doms = dominators::simple_fast(&g, ix[&root]);
    let mut idom = BTreeMap::new();
    for &n in &nodes {
        if n == root {
            idom.insert(n, n);
        } else if let Some(d) = doms.immediate_dominator(ix[&n]) {
            idom.insert(n, g[d]);
        }
    }
    Ok(CfgOverlay { root, nodes, edges, idom })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Root {
    Label(Label),
    /// Synthetic root that nests every function.
    Virtual,
}

#[derive(Clone, Debug)]
pub struct NestNode {
    /// `None` only for the virtual root.
    pub label: Option<Label>,
    pub parent: Option<usize>,
    /// In discovery order.
    pub children: Vec<usize>,
    pub level: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scc {
    /// Node indices ordered by label id.
    pub members: Vec<usize>,
    /// More than one member, or a sibling self-loop.
    pub recursive: bool,
}

/// Nesting tree with sibling dependencies and per-level SCCs. A snapshot:
/// later program mutations do not update it.
#[derive(Clone, Debug)]
pub struct NestTree {
    pub root: Root,
    /// Index 0 is the root.
    pub nodes: Vec<NestNode>,
    pos: FxHashMap<Label, usize>,
    /// Edges `a ⤳ b` between nodes with the same parent.
    pub sibling_deps: BTreeSet<(usize, usize)>,
    /// For each node, the SCCs of its children in topological order: an
    /// SCC comes before every SCC it depends on.
    pub sccs: Vec<Vec<Scc>>,
}

/// Builds the nesting tree below `root`, then its sibling dependencies and
/// SCCs. The program should be well-formed.
pub fn build_nest_tree(p: &mut Program, root: Root) -> Result<NestTree, Error> {
    let mut t = NestTree::build(p, root)?;
    t.compute_sibling_deps(p);
    t.compute_sccs();
    Ok(t)
}

impl NestTree {
    /// Worklist construction. Each newly discovered function is attached to
    /// the deepest ancestor of its discoverer whose variable it uses.
    pub fn build(p: &mut Program, root: Root) -> Result<NestTree, Error> {
        let mut t = NestTree {
            root,
            nodes: Vec::new(),
            pos: FxHashMap::default(),
            sibling_deps: BTreeSet::new(),
            sccs: Vec::new(),
        };
        let mut queue = VecDeque::new();
        match root {
            Root::Label(l) => {
                if !p.contains(l) {
                    return Err(Error::RootNotFound(format!("#{}", l.0)));
                }
                t.push(Some(l), None);
                queue.push_back(0);
            }
            Root::Virtual => {
                t.push(None, None);
                for l in p.labels().collect::<Vec<_>>() {
                    if p.free_vars(l)?.is_empty() {
                        queue.push_back(t.push(Some(l), Some(0)));
                    }
                }
            }
        }
        while let Some(n) = queue.pop_front() {
            let Some(nl) = t.nodes[n].label else { continue };
            for l in p.succs(nl) {
                if t.pos.contains_key(&l) {
                    continue;
                }
                let fv = p.free_vars(l)?;
                let mut a = n;
                while a != 0 {
                    let al = t.nodes[a].label.unwrap();
                    if p.var_universe().member(fv, al.0) {
                        break;
                    }
                    a = t.nodes[a].parent.unwrap();
                }
                queue.push_back(t.push(Some(l), Some(a)));
            }
        }
        Ok(t)
    }

    fn push(&mut self, label: Option<Label>, parent: Option<usize>) -> usize {
        let i = self.nodes.len();
        let level = parent.map_or(0, |q| self.nodes[q].level + 1);
        self.nodes.push(NestNode { label, parent, children: Vec::new(), level });
        if let Some(q) = parent {
            self.nodes[q].children.push(i);
        }
        if let Some(l) = label {
            self.pos.insert(l, i);
        }
        i
    }

    /// Sibling rule: for each call `u → v` inside the tree, the ancestor of
    /// `u` on `v`'s level depends on `v` if both share a parent.
    pub fn compute_sibling_deps(&mut self, p: &Program) {
        let mut deps = BTreeSet::new();
        for u in 0..self.nodes.len() {
            let Some(ul) = self.nodes[u].label else { continue };
            for l2 in p.succs(ul) {
                let Some(&v) = self.pos.get(&l2) else { continue };
                let lv = self.nodes[v].level;
                if self.nodes[u].level < lv {
                    continue;
                }
                let mut a = u;
                while self.nodes[a].level > lv {
                    a = self.nodes[a].parent.unwrap();
                }
                if self.nodes[a].parent == self.nodes[v].parent {
                    deps.insert((a, v));
                }
            }
        }
        self.sibling_deps = deps;
    }

    /// Tarjan on the sibling dependencies of each node's children.
    pub fn compute_sccs(&mut self) {
        let mut by_parent: FxHashMap<usize, Vec<(usize, usize)>> = FxHashMap::default();
        for &(a, b) in &self.sibling_deps {
            if let Some(q) = self.nodes[a].parent {
                by_parent.entry(q).or_default().push((a, b));
            }
        }
        let mut all = Vec::with_capacity(self.nodes.len());
        for n in 0..self.nodes.len() {
            let children = &self.nodes[n].children;
            if children.is_empty() {
                all.push(Vec::new());
                continue;
            }
            let mut g: DiGraph<usize, ()> = DiGraph::with_capacity(children.len(), 0);
            let mut ix = FxHashMap::default();
            for &c in children {
                ix.insert(c, g.add_node(c));
            }
            let mut self_loop = BTreeSet::new();
            for &(a, b) in by_parent.get(&n).map(|v| v.as_slice()).unwrap_or(&[]) {
                if a == b {
                    self_loop.insert(a);
                }
                g.add_edge(ix[&a], ix[&b], ());
            }
            // tarjan_scc yields dependencies first; reverse into topological order.
            let mut sccs: Vec<Scc> = tarjan_scc(&g)
                .into_iter()
                .map(|comp| {
                    let mut members: Vec<usize> = comp.into_iter().map(|i| g[i]).collect();
                    members.sort_by_key(|&m| self.nodes[m].label);
                    let recursive = members.len() > 1 || self_loop.contains(&members[0]);
                    Scc { members, recursive }
                })
                .collect();
            sccs.reverse();
            all.push(sccs);
        }
        self.sccs = all;
    }

    pub fn node_of(&self, l: Label) -> Option<usize> {
        self.pos.get(&l).copied()
    }

    pub fn contains(&self, l: Label) -> bool {
        self.pos.contains_key(&l)
    }

    pub fn label(&self, n: usize) -> Option<Label> {
        self.nodes[n].label
    }

    /// Parent label of `l`: `Some(None)` when the parent is the virtual root,
    /// `None` when `l` is not in the tree or is the root.
    pub fn parent_of(&self, l: Label) -> Option<Option<Label>> {
        let n = self.node_of(l)?;
        let q = self.nodes[n].parent?;
        Some(self.nodes[q].label)
    }

    pub fn children_of(&self, n: usize) -> Vec<Label> {
        self.nodes[n].children.iter().filter_map(|&c| self.nodes[c].label).collect()
    }

    pub fn level_of(&self, l: Label) -> Option<u32> {
        self.node_of(l).map(|n| self.nodes[n].level)
    }

    /// Sibling dependencies as label pairs.
    pub fn deps_labels(&self) -> BTreeSet<(Label, Label)> {
        self.sibling_deps.iter().filter_map(|&(a, b)| Some((self.nodes[a].label?, self.nodes[b].label?))).collect()
    }

    /// SCCs below `n` as label lists, topological order.
    pub fn sccs_labels(&self, n: usize) -> Vec<(Vec<Label>, bool)> {
        self.sccs[n]
            .iter()
            .map(|s| (s.members.iter().filter_map(|&m| self.nodes[m].label).collect(), s.recursive))
            .collect()
    }

    /// Node indices in depth-first pre-order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev().copied());
        }
        out
    }
}
