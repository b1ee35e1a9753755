//! Joint synthesis of a plan and a label map.
//!
//! The observer is the finest one, `h<W>`, and knows the plan exactly. A
//! search node is a group `V̂` of world states the observer cannot tell
//! apart; the robot itself knows its true state `w ∈ V̂`, so the plan acts at
//! the pairs `(node, w)`.
//!
//! At an action node every `w` either terminates (only when `V̂` lies inside
//! the goal) or picks a nonempty set of actions. The union of the picked
//! actions is then split into image blocks; each block yields one successor
//! group. At an observation node the world's observations are split the same
//! way. Every split is consolidated with the label-map commitments made so
//! far and a conflict moves on to the next split.
//!
//! The agenda of open nodes is processed depth first with chronological
//! backtracking. A complete candidate is finalized into a total label map and
//! verified with [`check`]; a rejected candidate is backtracked over like any
//! other dead end. This matters because the per-node groups only track one
//! image history each, whereas the observer merges image histories that lead
//! to the same I-state set.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::labelmap::{LabelMap, PartialLabelMap, Partitions};
use crate::par::Exec;
use crate::pgraph::{image_graph, Kind, PGraph, Vertex, VertexSet};
use crate::planning::{Plan, PlanningProblem};
use crate::seek_p::{check, Outcome};
use crate::stipulation::BoundFormula;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionOrder {
    CoarsestFirst,
    FinestFirst,
}

#[derive(Clone, Debug)]
pub struct SeekPlmConfig {
    /// Maximum number of events along any plan branch.
    pub max_depth: Option<usize>,
    /// Maximum number of node expansions.
    pub budget: Option<usize>,
    pub exec: Exec,
    pub action_order: PartitionOrder,
    pub observation_order: PartitionOrder,
    /// How often a group may occur on one branch before it is pruned.
    pub revisit_limit: usize,
}

impl Default for SeekPlmConfig {
    fn default() -> Self {
        SeekPlmConfig {
            max_depth: None,
            budget: None,
            exec: Exec::Sequential,
            action_order: PartitionOrder::CoarsestFirst,
            observation_order: PartitionOrder::FinestFirst,
            revisit_limit: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeekPlmStats {
    pub nodes_expanded: usize,
    pub partitions_tried: usize,
    pub conflicts: usize,
    pub beliefs_evaluated: usize,
    pub candidates_checked: usize,
    pub candidates_rejected: usize,
    pub depth_limited: bool,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct PlanAndMap {
    pub plan: Plan,
    pub map: LabelMap,
}

#[derive(Clone, Debug)]
pub struct SeekPlmResult {
    pub outcome: Outcome<PlanAndMap>,
    pub stats: SeekPlmStats,
}

#[derive(Default)]
struct Counters {
    nodes: AtomicUsize,
    partitions: AtomicUsize,
    conflicts: AtomicUsize,
    beliefs: AtomicUsize,
    checked: AtomicUsize,
    rejected: AtomicUsize,
    depth_limited: AtomicBool,
}

#[derive(Clone, Debug)]
struct Pending {
    id: String,
    belief: VertexSet,
    depth: usize,
    path: Vec<VertexSet>,
}

#[derive(Clone, Debug)]
struct Decision {
    node: String,
    belief: VertexSet,
    term: VertexSet,
    chosen: BTreeMap<usize, BTreeSet<String>>,
    children: Vec<(BTreeSet<String>, String)>,
}

#[derive(Clone, Debug, Default)]
struct Commit {
    map: PartialLabelMap,
    decisions: Vec<Decision>,
}

#[derive(Debug)]
enum Abort {
    Budget,
    Failed(Error),
}

type Flow = std::result::Result<Option<PlanAndMap>, Abort>;

struct Search<'a> {
    problem: &'a PlanningProblem,
    f: &'a BoundFormula,
    config: &'a SeekPlmConfig,
    counters: Counters,
}

/// One way to expand a node: the decision plus the children it opens.
struct Branch {
    commit: Commit,
    children: Vec<Pending>,
}

impl<'a> Search<'a> {
    fn world(&self) -> &PGraph {
        &self.problem.world
    }

    fn tick(&self) -> std::result::Result<(), Abort> {
        let n = self.counters.nodes.fetch_add(1, Ordering::Relaxed);
        match self.config.budget {
            Some(b) if n >= b => Err(Abort::Budget),
            _ => Ok(()),
        }
    }

    fn sat(&self, belief: &VertexSet) -> bool {
        self.counters.beliefs.fetch_add(1, Ordering::Relaxed);
        self.f.eval(belief)
    }

    fn ordered_partitions(
        &self,
        events: &BTreeSet<String>,
        order: PartitionOrder,
    ) -> Vec<PartialLabelMap> {
        let mut parts: Vec<PartialLabelMap> =
            Partitions::new(events.iter().cloned().collect()).collect();
        match order {
            PartitionOrder::CoarsestFirst => parts.sort_by_key(|p| p.blocks().len()),
            PartitionOrder::FinestFirst => {
                parts.sort_by_key(|p| std::cmp::Reverse(p.blocks().len()))
            }
        }
        parts
    }

    /// Per-state action choices, ordered by the total number of actions.
    /// `None` marks termination.
    fn action_tuples(&self, belief: &VertexSet) -> Vec<Vec<(usize, Option<BTreeSet<String>>)>> {
        let w = self.world();
        let may_stop = belief.iter().all(|v| self.problem.goal.contains(v));
        let mut options: Vec<(usize, Vec<Option<BTreeSet<String>>>)> = Vec::new();
        for &v in belief {
            let acts: Vec<&String> = w.out_labels(v).collect();
            let mut opts: Vec<Option<BTreeSet<String>>> = Vec::new();
            if may_stop {
                opts.push(None);
            }
            let mut subsets: Vec<BTreeSet<String>> = (1u64..(1u64 << acts.len()))
                .map(|mask| {
                    acts.iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, a)| (*a).clone())
                        .collect()
                })
                .collect();
            subsets.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
            opts.extend(subsets.into_iter().map(Some));
            if opts.is_empty() {
                return Vec::new();
            }
            options.push((v, opts));
        }
        let size = |o: &Option<BTreeSet<String>>| o.as_ref().map_or(0, BTreeSet::len);
        let mut tuples: Vec<Vec<(usize, Option<BTreeSet<String>>)>> = vec![Vec::new()];
        for (v, opts) in &options {
            let mut next = Vec::with_capacity(tuples.len() * opts.len());
            for t in &tuples {
                for o in opts {
                    let mut t2 = t.clone();
                    t2.push((*v, o.clone()));
                    next.push(t2);
                }
            }
            tuples = next;
        }
        tuples.sort_by_key(|t| t.iter().map(|(_, o)| size(o)).sum::<usize>());
        tuples
    }

    /// Successor group of `block` given each state's chosen events.
    fn step_block(
        &self,
        chosen: &BTreeMap<usize, BTreeSet<String>>,
        block: &BTreeSet<String>,
    ) -> VertexSet {
        let w = self.world();
        let mut out = VertexSet::new();
        for (&v, events) in chosen {
            for e in events.intersection(block) {
                if let Some(next) = w.successors(v, e) {
                    out.extend(next.iter().copied());
                }
            }
        }
        out
    }

    /// All ways to split `chosen`'s events that are consistent with `commit`
    /// and lead only to admissible children.
    fn branches(
        &self,
        node: &Pending,
        commit: &Commit,
        term: VertexSet,
        chosen: BTreeMap<usize, BTreeSet<String>>,
        order: PartitionOrder,
    ) -> Vec<Branch> {
        let events: BTreeSet<String> = chosen.values().flatten().cloned().collect();
        if events.is_empty() {
            let mut c = commit.clone();
            c.decisions.push(Decision {
                node: node.id.clone(),
                belief: node.belief.clone(),
                term,
                chosen,
                children: Vec::new(),
            });
            return vec![Branch {
                commit: c,
                children: Vec::new(),
            }];
        }
        let mut out = Vec::new();
        'parts: for part in self.ordered_partitions(&events, order) {
            self.counters.partitions.fetch_add(1, Ordering::Relaxed);
            let map = match commit.map.consolidate(&part) {
                Ok(m) => m,
                Err(_) => {
                    self.counters.conflicts.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
            };
            let mut children = Vec::new();
            let mut links = Vec::new();
            for (idx, block) in part.blocks().iter().enumerate() {
                let belief = self.step_block(&chosen, block);
                let seen = node.path.iter().filter(|b| **b == belief).count()
                    + usize::from(node.belief == belief);
                if seen >= self.config.revisit_limit {
                    continue 'parts;
                }
                if self.config.max_depth.is_some_and(|m| node.depth + 1 > m) {
                    self.counters.depth_limited.store(true, Ordering::Relaxed);
                    continue 'parts;
                }
                if !self.sat(&belief) {
                    continue 'parts;
                }
                let id = format!("{}.{idx}", node.id);
                let mut path = node.path.clone();
                path.push(node.belief.clone());
                links.push((block.clone(), id.clone()));
                children.push(Pending {
                    id,
                    belief,
                    depth: node.depth + 1,
                    path,
                });
            }
            let mut c = commit.clone();
            c.map = map;
            c.decisions.push(Decision {
                node: node.id.clone(),
                belief: node.belief.clone(),
                term: term.clone(),
                chosen: chosen.clone(),
                children: links,
            });
            out.push(Branch {
                commit: c,
                children,
            });
        }
        out
    }

    /// Every admissible expansion of `node`, in search order.
    fn expand(&self, node: &Pending, commit: &Commit) -> Vec<Branch> {
        let w = self.world();
        let kind = node
            .belief
            .iter()
            .next()
            .map_or(Kind::Action, |&v| w.kind(v));
        match kind {
            Kind::Action => {
                let mut out = Vec::new();
                for tuple in self.action_tuples(&node.belief) {
                    let mut term = VertexSet::new();
                    let mut chosen = BTreeMap::new();
                    for (v, o) in tuple {
                        match o {
                            None => {
                                term.insert(v);
                            }
                            Some(a) => {
                                chosen.insert(v, a);
                            }
                        }
                    }
                    out.extend(self.branches(node, commit, term, chosen, self.config.action_order));
                }
                out
            }
            Kind::Observation => {
                let mut chosen = BTreeMap::new();
                for &v in &node.belief {
                    let obs: BTreeSet<String> = w.out_labels(v).cloned().collect();
                    if obs.is_empty() {
                        return Vec::new();
                    }
                    chosen.insert(v, obs);
                }
                self.branches(
                    node,
                    commit,
                    VertexSet::new(),
                    chosen,
                    self.config.observation_order,
                )
            }
        }
    }

    fn search(&self, mut agenda: Vec<Pending>, commit: Commit) -> Flow {
        let Some(node) = agenda.pop() else {
            return self.finish(&commit);
        };
        self.tick()?;
        for branch in self.expand(&node, &commit) {
            let mut next = agenda.clone();
            next.extend(branch.children.into_iter().rev());
            if let Some(found) = self.search(next, branch.commit)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }

    fn finish(&self, commit: &Commit) -> Flow {
        let w = self.world();
        let plan = build_plan(w, &commit.decisions);
        let alphabet = w.alphabet();
        // the finest observer's I-states depend on events the plan never
        // commits, so every consistent completion is a separate candidate
        for map in commit.map.extensions(&alphabet) {
            let map = map.map_err(Abort::Failed)?;
            self.counters.checked.fetch_add(1, Ordering::Relaxed);
            let i = image_graph(&map, w).map_err(Abort::Failed)?;
            let report =
                check(self.problem, &plan, &plan.graph, &i, &map, self.f).map_err(Abort::Failed)?;
            if report.holds() {
                return Ok(Some(PlanAndMap { plan, map }));
            }
            self.counters.rejected.fetch_add(1, Ordering::Relaxed);
        }
        Ok(None)
    }
}

fn plan_vertex_id(node: &str, w: &PGraph, v: usize) -> String {
    format!("{node}@{}", w.id(v))
}

fn build_plan(w: &PGraph, decisions: &[Decision]) -> Plan {
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut vertex = |id: String, kind: Kind, vertices: &mut Vec<Vertex>| -> usize {
        *ids.entry(id.clone()).or_insert_with(|| {
            vertices.push(Vertex { id, kind });
            vertices.len() - 1
        })
    };
    let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    let mut term = VertexSet::new();
    let mut initial = VertexSet::new();
    for d in decisions {
        for &v in &d.belief {
            let from = vertex(plan_vertex_id(&d.node, w, v), w.kind(v), &mut vertices);
            if d.node == ROOT {
                initial.insert(from);
            }
            if d.term.contains(&v) {
                term.insert(from);
                continue;
            }
            let Some(events) = d.chosen.get(&v) else {
                continue;
            };
            for e in events {
                let Some((_, child)) = d.children.iter().find(|(b, _)| b.contains(e)) else {
                    continue;
                };
                for &nv in w.successors(v, e).into_iter().flatten() {
                    let to = vertex(plan_vertex_id(child, w, nv), w.kind(nv), &mut vertices);
                    edges.entry((from, to)).or_default().insert(e.clone());
                }
            }
        }
    }
    let term_ids: Vec<String> = term.iter().map(|&v| vertices[v].id.clone()).collect();
    let graph = PGraph::from_parts(
        vertices,
        initial,
        edges,
        w.actions().clone(),
        w.observations().clone(),
    );
    // vertex indices changed when the graph sorted its ids
    let term = term_ids
        .iter()
        .filter_map(|id| graph.index_of(id))
        .collect();
    Plan { graph, term }
}

const ROOT: &str = "n";

/// Searches for a plan and a label map such that the finest observer that
/// knows the plan never violates `f`.
pub fn seek_plan_and_map(
    problem: &PlanningProblem,
    f: &BoundFormula,
    config: &SeekPlmConfig,
) -> Result<SeekPlmResult> {
    let start = Instant::now();
    let w = &problem.world;
    w.ensure_valid()?;
    if !w.is_state_determined() {
        return Err(Error::NotStateDetermined("world"));
    }
    let search = Search {
        problem,
        f,
        config,
        counters: Counters::default(),
    };
    let root = Pending {
        id: ROOT.to_owned(),
        belief: w.initial().clone(),
        depth: 0,
        path: Vec::new(),
    };
    let flow: Flow = if root.belief.is_empty() || !search.sat(&root.belief) {
        Ok(None)
    } else {
        match search.tick() {
            Err(a) => Err(a),
            Ok(()) => {
                let branches = search.expand(&root, &Commit::default());
                config
                    .exec
                    .find_map_first(&branches, |b| {
                        let agenda: Vec<Pending> = b.children.iter().rev().cloned().collect();
                        match search.search(agenda, b.commit.clone()) {
                            Ok(None) => None,
                            other => Some(other),
                        }
                    })
                    .unwrap_or(Ok(None))
            }
        }
    };
    let c = &search.counters;
    let stats = SeekPlmStats {
        nodes_expanded: c.nodes.load(Ordering::Relaxed),
        partitions_tried: c.partitions.load(Ordering::Relaxed),
        conflicts: c.conflicts.load(Ordering::Relaxed),
        beliefs_evaluated: c.beliefs.load(Ordering::Relaxed),
        candidates_checked: c.checked.load(Ordering::Relaxed),
        candidates_rejected: c.rejected.load(Ordering::Relaxed),
        depth_limited: c.depth_limited.load(Ordering::Relaxed),
        elapsed_ms: start.elapsed().as_millis(),
    };
    let outcome = match flow {
        Ok(Some(found)) => Outcome::Found(found),
        Ok(None) if stats.depth_limited => Outcome::Inconclusive("depth cap reached".into()),
        Ok(None) => Outcome::NoneExists,
        Err(Abort::Budget) => Outcome::Inconclusive("budget exhausted".into()),
        Err(Abort::Failed(e)) => return Err(e),
    };
    Ok(SeekPlmResult { outcome, stats })
}
