use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{PGraph, Vertex, VertexSet};
use crate::error::{Error, Result};
use crate::labelmap::LabelMap;
use crate::pgraph::Kind;

/// The state-determined expansion of a graph.
///
/// `subsets[v]` is the set of original vertices that vertex `v` of `graph`
/// stands for. Vertex ids are `{a,b,...}` with member ids in sorted order.
#[derive(Clone, Debug)]
pub struct Sde {
    pub graph: PGraph,
    pub subsets: Vec<VertexSet>,
    lookup: BTreeMap<VertexSet, usize>,
}

impl Sde {
    /// The expansion vertex standing for exactly `subset`, if it is reachable.
    pub fn vertex_for(&self, subset: &VertexSet) -> Option<usize> {
        self.lookup.get(subset).copied()
    }
}

pub(crate) fn subset_id(g: &PGraph, set: &VertexSet) -> String {
    let ids: Vec<&str> = set.iter().map(|&v| g.id(v)).collect();
    format!("{{{}}}", ids.join(","))
}

/// Subset construction over the reachable subsets of `g`.
pub fn sde(g: &PGraph) -> Sde {
    let mut found: BTreeMap<VertexSet, usize> = BTreeMap::new();
    let mut order: Vec<VertexSet> = Vec::new();
    let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    if !g.initial().is_empty() {
        found.insert(g.initial().clone(), 0);
        order.push(g.initial().clone());
        queue.push_back(0);
    }
    while let Some(i) = queue.pop_front() {
        let set = order[i].clone();
        let labels: Vec<String> = g.labels_from(&set).into_iter().cloned().collect();
        for l in labels {
            let next = g.step(&set, &l);
            let j = *found.entry(next.clone()).or_insert_with(|| {
                order.push(next);
                queue.push_back(order.len() - 1);
                order.len() - 1
            });
            edges.entry((i, j)).or_default().insert(l);
        }
    }
    let vertices: Vec<Vertex> = order
        .iter()
        .map(|s| Vertex {
            id: subset_id(g, s),
            kind: s.iter().next().map(|&v| g.kind(v)).unwrap_or(Kind::Action),
        })
        .collect();
    let initial = if order.is_empty() {
        VertexSet::new()
    } else {
        VertexSet::from([0])
    };
    let graph = PGraph::from_parts(
        vertices,
        initial,
        edges,
        g.actions().clone(),
        g.observations().clone(),
    );
    let mut subsets = vec![VertexSet::new(); order.len()];
    let mut lookup = BTreeMap::new();
    for s in order {
        let v = graph
            .index_of(&subset_id(g, &s))
            .expect("subset vertex present");
        lookup.insert(s.clone(), v);
        subsets[v] = s;
    }
    Sde {
        graph,
        subsets,
        lookup,
    }
}

fn check_alphabets(g1: &PGraph, g2: &PGraph) -> Result<()> {
    let crossed = g1
        .actions()
        .intersection(g2.observations())
        .chain(g1.observations().intersection(g2.actions()))
        .next();
    if let Some(l) = crossed {
        return Err(Error::IncompatibleAlphabets(l.clone()));
    }
    Ok(())
}

/// The product of two graphs over their reachable vertex pairs. Vertex ids are
/// `(v1,v2)`; the alphabet is the intersection of the two alphabets.
pub fn tensor_product(g1: &PGraph, g2: &PGraph) -> Result<PGraph> {
    check_alphabets(g1, g2)?;
    let (k1, k2) = (g1.initial_kind(), g2.initial_kind());
    if k1.is_some() && k2.is_some() && k1 != k2 {
        return Err(Error::IncompatibleInitialKinds);
    }
    let mut found: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    for &a in g1.initial() {
        for &b in g2.initial() {
            found.insert((a, b), order.len());
            queue.push_back(order.len());
            order.push((a, b));
        }
    }
    let initial: VertexSet = (0..order.len()).collect();
    let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    while let Some(i) = queue.pop_front() {
        let (a, b) = order[i];
        for (l, next_a) in g1.transitions(a) {
            let Some(next_b) = g2.successors(b, l) else {
                continue;
            };
            for &na in next_a {
                for &nb in next_b {
                    let j = *found.entry((na, nb)).or_insert_with(|| {
                        order.push((na, nb));
                        queue.push_back(order.len() - 1);
                        order.len() - 1
                    });
                    edges.entry((i, j)).or_default().insert(l.clone());
                }
            }
        }
    }
    let vertices = order
        .iter()
        .map(|&(a, b)| Vertex {
            id: format!("({},{})", g1.id(a), g2.id(b)),
            kind: g1.kind(a),
        })
        .collect();
    Ok(PGraph::from_parts(
        vertices,
        initial,
        edges,
        g1.actions().intersection(g2.actions()).cloned().collect(),
        g1.observations()
            .intersection(g2.observations())
            .cloned()
            .collect(),
    ))
}

/// Relabelled edges, actions and observations.
type Relabelled = (
    BTreeMap<(usize, usize), BTreeSet<String>>,
    BTreeSet<String>,
    BTreeSet<String>,
);

fn relabel(g: &PGraph, mut f: impl FnMut(&str) -> Result<BTreeSet<String>>) -> Result<Relabelled> {
    let mut edges = BTreeMap::new();
    for (a, b, labels) in g.edges() {
        let mut out = BTreeSet::new();
        for l in labels {
            out.extend(f(l)?);
        }
        edges.insert((a, b), out);
    }
    let mut actions = BTreeSet::new();
    for l in g.actions() {
        actions.extend(f(l)?);
    }
    let mut observations = BTreeSet::new();
    for l in g.observations() {
        observations.extend(f(l)?);
    }
    Ok((edges, actions, observations))
}

/// Applies `h` to every edge label and to the alphabets.
pub fn image_graph(h: &LabelMap, g: &PGraph) -> Result<PGraph> {
    let (edges, actions, observations) =
        relabel(g, |l| Ok(BTreeSet::from([h.image(l)?.to_owned()])))?;
    Ok(PGraph::from_parts(
        g.vertices().to_vec(),
        g.initial().clone(),
        edges,
        actions,
        observations,
    ))
}

/// Replaces every image symbol on `ig` by its preimage under `h`.
pub fn preimage_graph(h: &LabelMap, ig: &PGraph) -> Result<PGraph> {
    let (edges, actions, observations) = relabel(ig, |x| Ok(h.preimage(x)?.clone()))?;
    Ok(PGraph::from_parts(
        ig.vertices().to_vec(),
        ig.initial().clone(),
        edges,
        actions,
        observations,
    ))
}
