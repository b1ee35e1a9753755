use std::fmt::Write;

use super::{Kind, PGraph};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: observation vertices are circles, action vertices
/// boxes, initial vertices get a double outline.
pub fn to_dot(g: &PGraph, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for (i, v) in g.vertices().iter().enumerate() {
        let shape = match v.kind {
            Kind::Action => "square",
            Kind::Observation => "circle",
        };
        let peripheries = if g.initial().contains(&i) { 2 } else { 1 };
        writeln!(
            out,
            "  {} [shape={shape}, peripheries={peripheries}];",
            quote(&v.id)
        )
        .unwrap();
    }
    for (a, b, labels) in g.edges() {
        let joined: Vec<&str> = labels.iter().map(String::as_str).collect();
        writeln!(
            out,
            "  {} -> {} [label={}];",
            quote(g.id(a)),
            quote(g.id(b)),
            quote(&joined.join(","))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
