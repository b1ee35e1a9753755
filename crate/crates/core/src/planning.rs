//! Planning problems, plans and the "solves" relation.
//!
//! Entering a termination vertex halts the plan: joint executions are never
//! extended past it. The finite bound on joint executions is checked as
//! acyclicity of the reachable joint product before termination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::pgraph::{GraphDoc, Kind, PGraph, Vertex, VertexSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningProblem {
    pub world: PGraph,
    pub goal: VertexSet,
}

impl PlanningProblem {
    pub fn new(world: PGraph, goal: VertexSet) -> Result<Self> {
        if let Some(&bad) = goal.iter().find(|&&v| v >= world.vertex_count()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        Ok(PlanningProblem { world, goal })
    }

    pub fn from_ids<S: AsRef<str>>(
        world: PGraph,
        goal: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let goal = world.set_of(goal)?;
        Ok(PlanningProblem { world, goal })
    }

    /// Reads a graph document carrying a `goal` list.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc = GraphDoc::parse(text)?;
        let world = doc.to_graph()?;
        let goal = doc.goal.clone().unwrap_or_default();
        Self::from_ids(world, goal)
    }

    pub fn to_json(&self) -> String {
        let mut doc = GraphDoc::from_graph(&self.world);
        doc.goal = Some(self.world.ids(&self.goal).into_iter().collect());
        doc.to_json()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    pub graph: PGraph,
    pub term: VertexSet,
}

impl Plan {
    pub fn new(graph: PGraph, term: VertexSet) -> Result<Self> {
        if let Some(&bad) = term.iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        Ok(Plan { graph, term })
    }

    pub fn from_ids<S: AsRef<str>>(
        graph: PGraph,
        term: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let term = graph.set_of(term)?;
        Ok(Plan { graph, term })
    }

    /// Reads a graph document carrying a `term` list.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc = GraphDoc::parse(text)?;
        let graph = doc.to_graph()?;
        let term = doc.term.clone().unwrap_or_default();
        Self::from_ids(graph, term)
    }

    pub fn to_json(&self) -> String {
        let mut doc = GraphDoc::from_graph(&self.graph);
        doc.term = Some(self.graph.ids(&self.term).into_iter().collect());
        doc.to_json()
    }

    /// Whether every execution of the plan graph has length at most `c`.
    pub fn is_c_bounded(&self, c: usize) -> bool {
        self.graph.longest_execution().is_some_and(|n| n <= c)
    }

    /// Whether no vertex has two incoming edges and no initial vertex has any.
    pub fn is_tree(&self) -> bool {
        let mut indeg = vec![0usize; self.graph.vertex_count()];
        for (_, to, labels) in self.graph.edges() {
            indeg[to] += labels.len();
        }
        self.graph.initial().iter().all(|&v| indeg[v] == 0) && indeg.iter().all(|&d| d <= 1)
    }
}

pub fn is_c_bounded(plan: &Plan, c: usize) -> bool {
    plan.is_c_bounded(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Condition {
    /// The plan issues an action the world does not offer.
    ActionUnavailable = 1,
    /// The world emits an observation the plan does not handle.
    ObservationUnhandled = 2,
    /// The plan terminates outside the goal.
    TermOutsideGoal = 3,
    /// Some reached state cannot reach termination.
    NoTermination = 4,
    /// A cycle is reachable before termination.
    Unbounded = 5,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::ActionUnavailable => "condition 1: plan action not available in world",
            Condition::ObservationUnhandled => "condition 2: world observation not handled by plan",
            Condition::TermOutsideGoal => "condition 3: termination outside goal",
            Condition::NoTermination => "condition 4: termination unreachable",
            Condition::Unbounded => "unbounded: cycle before termination",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveViolation {
    pub condition: Condition,
    pub plan_vertex: String,
    pub world_vertex: String,
    pub label: Option<String>,
    /// Joint execution reaching the offending pair.
    pub witness: crate::pgraph::Execution,
}

impl fmt::Display for SolveViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at ({}, {})",
            self.condition, self.plan_vertex, self.world_vertex
        )?;
        if let Some(l) = &self.label {
            write!(f, " on `{l}`")?;
        }
        write!(f, " after {}", self.witness)
    }
}

/// Reachable joint product of a plan and a world, halting at termination.
pub(crate) struct Joint {
    pub pairs: Vec<(usize, usize)>,
    pub succ: Vec<Vec<(String, usize)>>,
    pub parent: Vec<Option<(usize, String)>>,
}

impl Joint {
    pub fn build(plan: &Plan, world: &PGraph) -> Joint {
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut pairs = Vec::new();
        let mut parent = Vec::new();
        let mut queue = VecDeque::new();
        for &p in plan.graph.initial() {
            for &w in world.initial() {
                index.insert((p, w), pairs.len());
                queue.push_back(pairs.len());
                pairs.push((p, w));
                parent.push(None);
            }
        }
        let mut succ: Vec<Vec<(String, usize)>> = vec![Vec::new(); pairs.len()];
        while let Some(k) = queue.pop_front() {
            let (p, w) = pairs[k];
            if plan.term.contains(&p) {
                continue;
            }
            let mut out = Vec::new();
            for (l, next_p) in plan.graph.transitions(p) {
                let Some(next_w) = world.successors(w, l) else {
                    continue;
                };
                for &np in next_p {
                    for &nw in next_w {
                        let j = *index.entry((np, nw)).or_insert_with(|| {
                            pairs.push((np, nw));
                            parent.push(Some((k, l.clone())));
                            succ.push(Vec::new());
                            queue.push_back(pairs.len() - 1);
                            pairs.len() - 1
                        });
                        out.push((l.clone(), j));
                    }
                }
            }
            succ[k] = out;
        }
        Joint {
            pairs,
            succ,
            parent,
        }
    }

    pub fn witness(&self, mut k: usize) -> crate::pgraph::Execution {
        let mut events = Vec::new();
        while let Some((p, l)) = &self.parent[k] {
            events.push(l.clone());
            k = *p;
        }
        events.reverse();
        crate::pgraph::Execution::new(events)
    }

    /// Whether any cycle is reachable.
    pub fn has_cycle(&self) -> Option<usize> {
        let n = self.pairs.len();
        let mut state = vec![0u8; n];
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            state[root] = 1;
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            while let Some(top) = stack.len().checked_sub(1) {
                let (v, at) = stack[top];
                match self.succ[v].get(at) {
                    Some(&(_, next)) => {
                        stack[top].1 += 1;
                        match state[next] {
                            0 => {
                                state[next] = 1;
                                stack.push((next, 0));
                            }
                            1 => return Some(next),
                            _ => {}
                        }
                    }
                    None => {
                        state[v] = 2;
                        stack.pop();
                    }
                }
            }
        }
        None
    }
}

/// `Ok(None)` iff the plan solves the problem; otherwise the first violation.
pub fn check_solves(plan: &Plan, problem: &PlanningProblem) -> Result<Option<SolveViolation>> {
    plan.graph.ensure_valid()?;
    problem.world.ensure_valid()?;
    let (kp, kw) = (plan.graph.initial_kind(), problem.world.initial_kind());
    if kp.is_some() && kw.is_some() && kp != kw {
        return Err(Error::IncompatibleInitialKinds);
    }
    let world = &problem.world;
    let joint = Joint::build(plan, world);
    let violation = |cond, k: usize, label: Option<&String>| {
        let (p, w) = joint.pairs[k];
        SolveViolation {
            condition: cond,
            plan_vertex: plan.graph.id(p).to_owned(),
            world_vertex: world.id(w).to_owned(),
            label: label.cloned(),
            witness: joint.witness(k),
        }
    };
    let mut first: Option<SolveViolation> = None;
    for (k, &(p, w)) in joint.pairs.iter().enumerate() {
        let found = if plan.term.contains(&p) {
            (!problem.goal.contains(&w)).then(|| violation(Condition::TermOutsideGoal, k, None))
        } else {
            match plan.graph.kind(p) {
                Kind::Action => plan
                    .graph
                    .out_labels(p)
                    .find(|l| world.successors(w, l).is_none())
                    .map(|l| violation(Condition::ActionUnavailable, k, Some(l))),
                Kind::Observation => world
                    .out_labels(w)
                    .find(|l| plan.graph.successors(p, l).is_none())
                    .map(|l| violation(Condition::ObservationUnhandled, k, Some(l))),
            }
        };
        if let Some(v) = found {
            if first.as_ref().is_none_or(|f| v.condition < f.condition) {
                first = Some(v);
            }
        }
    }
    if first.is_some() {
        return Ok(first);
    }
    // condition 4: backward reachability from terminated pairs
    let n = joint.pairs.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, out) in joint.succ.iter().enumerate() {
        for (_, j) in out {
            pred[*j].push(k);
        }
    }
    let mut live = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&k| plan.term.contains(&joint.pairs[k].0))
        .collect();
    for &k in &queue {
        live[k] = true;
    }
    while let Some(k) = queue.pop_front() {
        for &j in &pred[k] {
            if !live[j] {
                live[j] = true;
                queue.push_back(j);
            }
        }
    }
    if let Some(k) = (0..n).find(|&k| !live[k]) {
        return Ok(Some(violation(Condition::NoTermination, k, None)));
    }
    if let Some(k) = joint.has_cycle() {
        return Ok(Some(violation(Condition::Unbounded, k, None)));
    }
    Ok(None)
}

/// Unfolds `plan` into a tree of depth at most `k` by breadth-first search
/// over reach sets. Tree vertices are `t0, t1, ...` in BFS order; a vertex is
/// terminal iff its reach set meets the termination region.
pub fn congruent_tree(plan: &Plan, k: usize) -> Plan {
    let g = &plan.graph;
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    let mut term = VertexSet::new();
    let mut initial = VertexSet::new();
    let mut queue: VecDeque<(usize, VertexSet, usize)> = VecDeque::new();
    let push = |set: &VertexSet, vertices: &mut Vec<Vertex>, term: &mut VertexSet| {
        let id = vertices.len();
        let kind = set.iter().next().map_or(Kind::Action, |&v| g.kind(v));
        vertices.push(Vertex {
            id: format!("t{id}"),
            kind,
        });
        if set.iter().any(|v| plan.term.contains(v)) {
            term.insert(id);
        }
        id
    };
    if !g.initial().is_empty() {
        let root = push(g.initial(), &mut vertices, &mut term);
        initial.insert(root);
        queue.push_back((root, g.initial().clone(), 0));
    }
    while let Some((v, set, depth)) = queue.pop_front() {
        if depth >= k {
            continue;
        }
        let labels: Vec<String> = g.labels_from(&set).into_iter().cloned().collect();
        for l in labels {
            let next = g.step(&set, &l);
            let c = push(&next, &mut vertices, &mut term);
            edges.entry((v, c)).or_default().insert(l);
            queue.push_back((c, next, depth + 1));
        }
    }
    // BFS numbering: `t10` must sort after `t9`, so pad to a common width
    let width = vertices.len().saturating_sub(1).to_string().len();
    for (i, v) in vertices.iter_mut().enumerate() {
        v.id = format!("t{i:0width$}");
    }
    let graph = PGraph::from_parts(
        vertices,
        initial,
        edges,
        g.actions().clone(),
        g.observations().clone(),
    );
    Plan { graph, term }
}
