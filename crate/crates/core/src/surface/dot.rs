//! Graphviz rendering of a nesting tree. Tree edges are solid; sibling
//! dependencies are dotted.

use std::fmt::Write;

use crate::ir::Program;
use crate::nesting::NestTree;

pub fn emit_dot(p: &Program, t: &NestTree) -> String {
    let mut out = String::from("digraph nest {\n  node [shape=box];\n");
    for (i, n) in t.nodes.iter().enumerate() {
        let name = n.label.map_or("⊤".to_string(), |l| p.name(l).to_string());
        let _ = writeln!(out, "  n{i} [label={name:?}];");
    }
    for (i, n) in t.nodes.iter().enumerate() {
        for &c in &n.children {
            let _ = writeln!(out, "  n{i} -> n{c};");
        }
    }
    for &(a, b) in &t.sibling_deps {
        let _ = writeln!(out, "  n{a} -> n{b} [style=dotted, constraint=false];");
    }
    out.push_str("}\n");
    out
}
