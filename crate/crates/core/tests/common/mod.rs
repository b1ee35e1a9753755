//! Shared fixtures for the integration tests: random instance generators and
//! brute-force reference implementations.
#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use pgplan::{Kind, PGraph};

/// The four-vertex example with one nondeterministic observation.
pub fn forked() -> PGraph {
    let mut b = PGraph::builder();
    b.vertex("v0", Kind::Action, true)
        .observation_vertex("w1")
        .observation_vertex("w2")
        .action_vertex("w3")
        .action_vertex("w4")
        .edge("v0", "w1", ["a1"])
        .edge("v0", "w2", ["a2"])
        .edge("w1", "w3", ["o1"])
        .edge("w2", "w3", ["o1"])
        .edge("w2", "w4", ["o1"])
        .actions(["a1", "a2"])
        .observations(["o1"]);
    b.build().unwrap()
}

pub fn strings(
    set: &std::collections::BTreeSet<pgplan::Execution>,
) -> std::collections::BTreeSet<Vec<String>> {
    set.iter().map(|e| e.events().to_vec()).collect()
}
