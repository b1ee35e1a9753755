//! P-graphs: edge-labelled bipartite graphs alternating action and observation
//! vertices.
//!
//! Vertices are addressed by index inside a graph; indices follow the sorted
//! order of vertex ids, so two graphs built from the same data are identical
//! regardless of insertion order. Parallel edges between the same pair of
//! vertices are merged by unioning their label sets.

mod algebra;
mod dot;
mod json;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use algebra::{image_graph, preimage_graph, sde, tensor_product, Sde};
pub use dot::to_dot;
pub use json::{EdgeDoc, GraphDoc, VertexDoc};

/// A set of vertex indices of one graph.
pub type VertexSet = BTreeSet<usize>;

/// The set of vertices reached by an execution.
pub type ReachSet = VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Action,
    Observation,
}

impl Kind {
    pub fn flip(self) -> Kind {
        match self {
            Kind::Action => Kind::Observation,
            Kind::Observation => Kind::Action,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Action => "action",
            Kind::Observation => "observation",
        })
    }
}

/// An event name together with its kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventLabel {
    pub name: String,
    pub kind: Kind,
}

impl EventLabel {
    pub fn action(name: impl Into<String>) -> Self {
        EventLabel {
            name: name.into(),
            kind: Kind::Action,
        }
    }

    pub fn observation(name: impl Into<String>) -> Self {
        EventLabel {
            name: name.into(),
            kind: Kind::Observation,
        }
    }
}

/// A finite sequence of events.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Execution(Vec<String>);

impl Execution {
    pub fn empty() -> Self {
        Execution(Vec::new())
    }

    pub fn new<S: Into<String>>(events: impl IntoIterator<Item = S>) -> Self {
        Execution(events.into_iter().map(Into::into).collect())
    }

    /// Whitespace-separated event names; `ε` or the empty string is the empty execution.
    pub fn parse(text: &str) -> Self {
        Execution(
            text.split_whitespace()
                .filter(|t| *t != "ε")
                .map(str::to_owned)
                .collect(),
        )
    }

    pub fn events(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, event: impl Into<String>) {
        self.0.push(event.into());
    }

    pub fn extended(&self, event: &str) -> Execution {
        let mut next = self.clone();
        next.push(event);
        next
    }

    pub fn concat(&self, other: &Execution) -> Execution {
        let mut next = self.clone();
        next.0.extend(other.0.iter().cloned());
        next
    }

    pub fn is_prefix_of(&self, other: &Execution) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.0.join(" "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub id: String,
    pub kind: Kind,
}

/// A structural problem found by [`PGraph::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoInitial,
    MixedInitialKinds {
        action: String,
        observation: String,
    },
    EmptyLabelSet {
        from: String,
        to: String,
    },
    SameKindEdge {
        from: String,
        to: String,
    },
    LabelKindMismatch {
        from: String,
        to: String,
        label: String,
    },
    UndeclaredLabel {
        from: String,
        to: String,
        label: String,
    },
    LabelInBothAlphabets(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoInitial => write!(f, "no initial vertex"),
            Violation::MixedInitialKinds {
                action,
                observation,
            } => write!(
                f,
                "mixed initial kinds: action vertex `{action}` and observation vertex `{observation}`"
            ),
            Violation::EmptyLabelSet { from, to } => {
                write!(f, "edge `{from}` -> `{to}` bears no labels")
            }
            Violation::SameKindEdge { from, to } => {
                write!(f, "edge `{from}` -> `{to}` joins two vertices of the same kind")
            }
            Violation::LabelKindMismatch { from, to, label } => write!(
                f,
                "label-kind mismatch: edge `{from}` -> `{to}` bears `{label}` of the wrong kind"
            ),
            Violation::UndeclaredLabel { from, to, label } => {
                write!(f, "edge `{from}` -> `{to}` bears undeclared label `{label}`")
            }
            Violation::LabelInBothAlphabets(l) => {
                write!(f, "label `{l}` is declared both as action and as observation")
            }
        }
    }
}

/// Non-fatal remarks: conditions the definition permits but that are usually mistakes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    Unreachable(String),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Unreachable(v) => write!(f, "vertex `{v}` is unreachable"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PGraph {
    vertices: Vec<Vertex>,
    index: BTreeMap<String, usize>,
    initial: VertexSet,
    edges: BTreeMap<(usize, usize), BTreeSet<String>>,
    actions: BTreeSet<String>,
    observations: BTreeSet<String>,
    succ: Vec<BTreeMap<String, VertexSet>>,
}

/// Incremental construction of a [`PGraph`].
///
/// Only referential problems (duplicate ids, edges to unknown vertices) are
/// rejected by [`build`](GraphBuilder::build); everything else is reported by
/// [`PGraph::validate`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<(String, Kind, bool)>,
    edges: Vec<(String, String, Vec<String>)>,
    actions: BTreeSet<String>,
    observations: BTreeSet<String>,
}

impl GraphBuilder {
    pub fn vertex(&mut self, id: impl Into<String>, kind: Kind, initial: bool) -> &mut Self {
        self.vertices.push((id.into(), kind, initial));
        self
    }

    pub fn action_vertex(&mut self, id: impl Into<String>) -> &mut Self {
        self.vertex(id, Kind::Action, false)
    }

    pub fn observation_vertex(&mut self, id: impl Into<String>) -> &mut Self {
        self.vertex(id, Kind::Observation, false)
    }

    pub fn edge<S: Into<String>>(
        &mut self,
        from: impl Into<String>,
        to: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        self.edges.push((
            from.into(),
            to.into(),
            labels.into_iter().map(Into::into).collect(),
        ));
        self
    }

    pub fn actions<S: Into<String>>(&mut self, labels: impl IntoIterator<Item = S>) -> &mut Self {
        self.actions.extend(labels.into_iter().map(Into::into));
        self
    }

    pub fn observations<S: Into<String>>(
        &mut self,
        labels: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        self.observations.extend(labels.into_iter().map(Into::into));
        self
    }

    pub fn build(&self) -> Result<PGraph> {
        let mut sorted: Vec<&(String, Kind, bool)> = self.vertices.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut index = BTreeMap::new();
        let mut vertices = Vec::with_capacity(sorted.len());
        let mut initial = VertexSet::new();
        for (i, (id, kind, init)) in sorted.into_iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(id.clone()));
            }
            vertices.push(Vertex {
                id: id.clone(),
                kind: *kind,
            });
            if *init {
                initial.insert(i);
            }
        }
        let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
        for (from, to, labels) in &self.edges {
            let f = *index
                .get(from)
                .ok_or_else(|| Error::UnknownVertex(from.clone()))?;
            let t = *index
                .get(to)
                .ok_or_else(|| Error::UnknownVertex(to.clone()))?;
            edges
                .entry((f, t))
                .or_default()
                .extend(labels.iter().cloned());
        }
        Ok(PGraph::assemble(
            vertices,
            index,
            initial,
            edges,
            self.actions.clone(),
            self.observations.clone(),
        ))
    }
}

impl PGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    fn assemble(
        vertices: Vec<Vertex>,
        index: BTreeMap<String, usize>,
        initial: VertexSet,
        edges: BTreeMap<(usize, usize), BTreeSet<String>>,
        actions: BTreeSet<String>,
        observations: BTreeSet<String>,
    ) -> PGraph {
        let mut succ: Vec<BTreeMap<String, VertexSet>> = vec![BTreeMap::new(); vertices.len()];
        for (&(f, t), labels) in &edges {
            for l in labels {
                succ[f].entry(l.clone()).or_default().insert(t);
            }
        }
        PGraph {
            vertices,
            index,
            initial,
            edges,
            actions,
            observations,
            succ,
        }
    }

    /// Builds a graph from already-indexed parts. Vertex ids must be unique;
    /// they are re-sorted and all indices remapped accordingly.
    pub(crate) fn from_parts(
        vertices: Vec<Vertex>,
        initial: VertexSet,
        edges: BTreeMap<(usize, usize), BTreeSet<String>>,
        actions: BTreeSet<String>,
        observations: BTreeSet<String>,
    ) -> PGraph {
        let mut order: Vec<usize> = (0..vertices.len()).collect();
        order.sort_by(|&a, &b| vertices[a].id.cmp(&vertices[b].id));
        let mut remap = vec![0; vertices.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let sorted: Vec<Vertex> = order.iter().map(|&o| vertices[o].clone()).collect();
        let index = sorted
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), i))
            .collect();
        let initial = initial.into_iter().map(|v| remap[v]).collect();
        let mut remapped: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
        for ((f, t), labels) in edges {
            remapped
                .entry((remap[f], remap[t]))
                .or_default()
                .extend(labels);
        }
        PGraph::assemble(sorted, index, initial, remapped, actions, observations)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn id(&self, v: usize) -> &str {
        &self.vertices[v].id
    }

    pub fn kind(&self, v: usize) -> Kind {
        self.vertices[v].kind
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownVertex(id.to_owned()))
    }

    /// Resolves a list of vertex ids to an index set.
    pub fn set_of<S: AsRef<str>>(&self, ids: impl IntoIterator<Item = S>) -> Result<VertexSet> {
        ids.into_iter()
            .map(|id| self.require(id.as_ref()))
            .collect()
    }

    pub fn ids(&self, set: &VertexSet) -> BTreeSet<String> {
        set.iter().map(|&v| self.vertices[v].id.clone()).collect()
    }

    pub fn initial(&self) -> &VertexSet {
        &self.initial
    }

    /// Kind of the initial vertices, if the initial set is nonempty and uniform.
    pub fn initial_kind(&self) -> Option<Kind> {
        let mut kinds = self.initial.iter().map(|&v| self.kind(v));
        let first = kinds.next()?;
        kinds.all(|k| k == first).then_some(first)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &BTreeSet<String>)> {
        self.edges.iter().map(|(&(f, t), l)| (f, t, l))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn actions(&self) -> &BTreeSet<String> {
        &self.actions
    }

    pub fn observations(&self) -> &BTreeSet<String> {
        &self.observations
    }

    pub fn label_kind(&self, label: &str) -> Option<Kind> {
        if self.actions.contains(label) {
            Some(Kind::Action)
        } else if self.observations.contains(label) {
            Some(Kind::Observation)
        } else {
            None
        }
    }

    pub fn alphabet(&self) -> Vec<EventLabel> {
        self.actions
            .iter()
            .map(EventLabel::action)
            .chain(self.observations.iter().map(EventLabel::observation))
            .collect()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.label_kind(label).is_some()
    }

    /// Labels borne by edges leaving `v`, in sorted order.
    pub fn out_labels(&self, v: usize) -> impl Iterator<Item = &String> {
        self.succ[v].keys()
    }

    pub fn successors(&self, v: usize, label: &str) -> Option<&VertexSet> {
        self.succ[v].get(label)
    }

    /// Label → successor map of `v`.
    pub fn transitions(&self, v: usize) -> &BTreeMap<String, VertexSet> {
        &self.succ[v]
    }

    /// All vertices reached from some member of `from` by one `label` edge.
    pub fn step(&self, from: &VertexSet, label: &str) -> VertexSet {
        let mut out = VertexSet::new();
        for &v in from {
            if let Some(next) = self.succ[v].get(label) {
                out.extend(next.iter().copied());
            }
        }
        out
    }

    /// Union of the labels leaving any vertex of `set`.
    pub fn labels_from(&self, set: &VertexSet) -> BTreeSet<&String> {
        set.iter().flat_map(|&v| self.succ[v].keys()).collect()
    }

    /// Vertices reachable from the initial set.
    pub fn reachable(&self) -> VertexSet {
        let mut seen: VertexSet = self.initial.clone();
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for next in self.succ[v].values() {
                for &n in next {
                    if seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for l in self.actions.intersection(&self.observations) {
            out.push(Violation::LabelInBothAlphabets(l.clone()));
        }
        if self.initial.is_empty() {
            out.push(Violation::NoInitial);
        } else {
            let action = self.initial.iter().find(|&&v| self.kind(v) == Kind::Action);
            let observation = self
                .initial
                .iter()
                .find(|&&v| self.kind(v) == Kind::Observation);
            if let (Some(&a), Some(&o)) = (action, observation) {
                out.push(Violation::MixedInitialKinds {
                    action: self.id(a).to_owned(),
                    observation: self.id(o).to_owned(),
                });
            }
        }
        for (&(f, t), labels) in &self.edges {
            let from = self.id(f).to_owned();
            let to = self.id(t).to_owned();
            if labels.is_empty() {
                out.push(Violation::EmptyLabelSet {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            if self.kind(f) == self.kind(t) {
                out.push(Violation::SameKindEdge {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
            for l in labels {
                match self.label_kind(l) {
                    None => out.push(Violation::UndeclaredLabel {
                        from: from.clone(),
                        to: to.clone(),
                        label: l.clone(),
                    }),
                    Some(k) if k != self.kind(f) => out.push(Violation::LabelKindMismatch {
                        from: from.clone(),
                        to: to.clone(),
                        label: l.clone(),
                    }),
                    Some(_) => {}
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn warnings(&self) -> Vec<Warning> {
        let reach = self.reachable();
        (0..self.vertex_count())
            .filter(|v| !reach.contains(v))
            .map(|v| Warning::Unreachable(self.id(v).to_owned()))
            .collect()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        match self.validate().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Malformed(v.to_string())),
        }
    }

    fn check_labels(&self, s: &Execution) -> Result<()> {
        for e in s.events() {
            if !self.has_label(e) {
                return Err(Error::UnknownLabel(e.clone()));
            }
        }
        Ok(())
    }

    /// Whether `s` can be traced from `v` to `w`.
    pub fn transitions_to(&self, v: &str, s: &Execution, w: &str) -> Result<bool> {
        let v = self.require(v)?;
        let w = self.require(w)?;
        let mut current = VertexSet::from([v]);
        for e in s.events() {
            current = self.step(&current, e);
            if current.is_empty() {
                return Ok(false);
            }
        }
        Ok(current.contains(&w))
    }

    /// The vertices `s` transitions to from some initial vertex; empty iff
    /// `s` is not an execution of the graph.
    pub fn reached_vertices(&self, s: &Execution) -> Result<ReachSet> {
        self.check_labels(s)?;
        Ok(self.trace(s))
    }

    pub(crate) fn trace(&self, s: &Execution) -> ReachSet {
        let mut current = self.initial.clone();
        for e in s.events() {
            if current.is_empty() {
                break;
            }
            current = self.step(&current, e);
        }
        current
    }

    pub fn accepts(&self, s: &Execution) -> bool {
        !self.trace(s).is_empty()
    }

    /// All executions of length at most `k`.
    pub fn language_upto(&self, k: usize) -> BTreeSet<Execution> {
        let mut out = BTreeSet::new();
        if self.initial.is_empty() {
            return out;
        }
        let mut frontier = vec![(Execution::empty(), self.initial.clone())];
        while let Some((s, set)) = frontier.pop() {
            if s.len() < k {
                for l in self.labels_from(&set) {
                    let next = self.step(&set, l);
                    frontier.push((s.extended(l), next));
                }
            }
            out.insert(s);
        }
        out
    }

    /// Executions of length at most `k` that may end at `v`.
    pub fn reaching_executions(&self, v: &str, k: usize) -> Result<BTreeSet<Execution>> {
        let v = self.require(v)?;
        let mut out = BTreeSet::new();
        let mut frontier = vec![(Execution::empty(), self.initial.clone())];
        while let Some((s, set)) = frontier.pop() {
            if set.is_empty() {
                continue;
            }
            if s.len() < k {
                for l in self.labels_from(&set) {
                    frontier.push((s.extended(l), self.step(&set, l)));
                }
            }
            if set.contains(&v) {
                out.insert(s);
            }
        }
        Ok(out)
    }

    /// Executions of length at most `k` that reach exactly the vertex set `target`.
    ///
    /// Decided on the state-determined expansion: `s` reaches exactly `target`
    /// iff the expansion's unique vertex reached by `s` has `target` as its
    /// subset. A nonempty set that no execution reaches yields the empty set.
    pub fn exact_reaching_executions(
        &self,
        target: &VertexSet,
        k: usize,
    ) -> Result<BTreeSet<Execution>> {
        if target.is_empty() {
            return Err(Error::EmptyReachSet);
        }
        if let Some(&bad) = target.iter().find(|&&v| v >= self.vertex_count()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        let det = sde(self);
        let mut out = BTreeSet::new();
        let Some(goal) = det.vertex_for(target) else {
            return Ok(out);
        };
        let g = &det.graph;
        let mut frontier: Vec<(Execution, usize)> =
            g.initial.iter().map(|&v| (Execution::empty(), v)).collect();
        while let Some((s, v)) = frontier.pop() {
            if v == goal {
                out.insert(s.clone());
            }
            if s.len() < k {
                for (l, next) in &g.succ[v] {
                    for &n in next {
                        frontier.push((s.extended(l), n));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `true` iff every execution reaches exactly one vertex.
    pub fn is_state_determined(&self) -> bool {
        if self.initial.len() > 1 {
            return false;
        }
        let reach = self.reachable();
        reach
            .iter()
            .all(|&v| self.succ[v].values().all(|next| next.len() <= 1))
    }

    /// Whether any cycle is reachable from the initial set.
    pub fn has_reachable_cycle(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.vertex_count()];
        for &root in &self.initial {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, self.children(root))];
            state[root] = 1;
            while let Some((_, pending)) = stack.last_mut() {
                match pending.pop() {
                    Some(n) => match state[n] {
                        0 => {
                            state[n] = 1;
                            let kids = self.children(n);
                            stack.push((n, kids));
                        }
                        1 => return true,
                        _ => {}
                    },
                    None => {
                        let (v, _) = stack.pop().expect("nonempty stack");
                        state[v] = 2;
                    }
                }
            }
        }
        false
    }

    fn children(&self, v: usize) -> Vec<usize> {
        let set: VertexSet = self.succ[v].values().flatten().copied().collect();
        set.into_iter().collect()
    }

    /// Length of the longest execution, or `None` if a cycle is reachable.
    pub fn longest_execution(&self) -> Option<usize> {
        if self.has_reachable_cycle() {
            return None;
        }
        let mut memo: Vec<Option<usize>> = vec![None; self.vertex_count()];
        fn depth(g: &PGraph, v: usize, memo: &mut Vec<Option<usize>>) -> usize {
            if let Some(d) = memo[v] {
                return d;
            }
            let d = g
                .children(v)
                .into_iter()
                .map(|n| 1 + depth(g, n, memo))
                .max()
                .unwrap_or(0);
            memo[v] = Some(d);
            d
        }
        Some(
            self.initial
                .iter()
                .map(|&v| depth(self, v, &mut memo))
                .max()
                .unwrap_or(0),
        )
    }
}
