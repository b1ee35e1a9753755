//! Plan synthesis for a fixed observer and label map.
//!
//! The search space is the reachable product of the world, the reach sets of
//! the divulged plan and the reach sets of the I-state graph (see
//! [`BeliefEngine`]). Action states are OR nodes, observation states AND
//! nodes. A state is usable only if the observer's estimate at its I-state
//! set satisfies the stipulation; the plan may terminate only at goal action
//! states.
//!
//! Instead of a depth-limited depth-first search the game is solved by a
//! backward attractor: every winning state gets the minimal number of events
//! needed to terminate from it, so "none" answers are exact and the extracted
//! tree plan is as shallow as possible.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::labelmap::LabelMap;
use crate::observer::BeliefEngine;
use crate::par::Exec;
use crate::pgraph::{sde, Execution, Kind, PGraph, Vertex, VertexSet};
use crate::planning::{check_solves, Plan, PlanningProblem, SolveViolation};
use crate::stipulation::BoundFormula;

#[derive(Clone, Debug, Default)]
pub struct SeekPConfig {
    /// Maximum plan depth; defaults to `|V(W)| * |V(sde D)| * |V(sde I)|`.
    pub depth_bound: Option<usize>,
    /// Cap on product states plus attractor expansions.
    pub budget: Option<usize>,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<T> {
    Found(T),
    NoneExists,
    Inconclusive(String),
}

impl<T> Outcome<T> {
    pub fn found(&self) -> Option<&T> {
        match self {
            Outcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Outcome::Found(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Found(_) => "found",
            Outcome::NoneExists => "none",
            Outcome::Inconclusive(_) => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeekPStats {
    pub triples: usize,
    pub beliefs_evaluated: usize,
    pub expansions: usize,
    pub depth_bound: usize,
    pub plan_depth: Option<usize>,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct SeekPResult {
    pub outcome: Outcome<Plan>,
    pub stats: SeekPStats,
}

/// Goal and stipulation marks for every product state.
#[derive(Clone, Debug)]
pub struct Annotation {
    pub goal: Vec<bool>,
    pub phi: Vec<bool>,
    pub beliefs_evaluated: usize,
}

pub fn annotate_triple(
    engine: &BeliefEngine,
    goal: &VertexSet,
    f: &BoundFormula,
    exec: Exec,
) -> Annotation {
    let world = engine.world();
    let isets: Vec<(&VertexSet, VertexSet)> = engine.istates().map(|(b, w)| (b, w.0)).collect();
    let values = exec.map(&isets, |(_, belief)| f.eval(belief));
    let sat: BTreeMap<&VertexSet, bool> = isets.iter().map(|(b, _)| *b).zip(values).collect();
    let states = engine.states();
    Annotation {
        goal: states
            .iter()
            .map(|t| world.kind(t.w) == Kind::Action && goal.contains(&t.w))
            .collect(),
        phi: states.iter().map(|t| sat[&t.i]).collect(),
        beliefs_evaluated: isets.len(),
    }
}

/// `|V(W)| * |V(sde D)| * |V(sde I)|`, saturating.
pub fn default_depth_bound(w: &PGraph, d: &PGraph, i: &PGraph) -> usize {
    let n = [
        w.vertex_count(),
        sde(d).graph.vertex_count(),
        sde(i).graph.vertex_count(),
    ];
    n.iter()
        .fold(1usize, |acc, &x| acc.saturating_mul(x.max(1)))
}

struct Attractor {
    rank: Vec<Option<usize>>,
    expansions: usize,
    exhausted: bool,
}

/// Per-label successor sets of product state `k`, or `None` when some
/// world successor has no product counterpart (the observer cannot follow).
fn option_successors(engine: &BeliefEngine, k: usize) -> Vec<(String, Option<BTreeSet<usize>>)> {
    let world = engine.world();
    let w = engine.states()[k].w;
    let mut by_label: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (l, j) in engine.successors(k) {
        by_label.entry(l.as_str()).or_default().insert(*j);
    }
    world
        .transitions(w)
        .iter()
        .map(|(l, next)| {
            let succ = by_label.get(l.as_str()).cloned().unwrap_or_default();
            let ok = succ.len() == next.len();
            (l.clone(), ok.then_some(succ))
        })
        .collect()
}

fn solve(engine: &BeliefEngine, ann: &Annotation, depth_bound: usize, budget: usize) -> Attractor {
    let n = engine.states().len();
    let world = engine.world();
    // counters[k][opt] = unresolved successors of option `opt` of state `k`
    let mut counters: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, ctr) in counters.iter_mut().enumerate() {
        if !ann.phi[k] {
            continue;
        }
        let opts = option_successors(engine, k);
        match world.kind(engine.states()[k].w) {
            Kind::Action => {
                for (_, succ) in opts {
                    let Some(succ) = succ else { continue };
                    let o = ctr.len();
                    ctr.push(succ.len());
                    for j in succ {
                        preds[j].push((k, o));
                    }
                }
            }
            Kind::Observation => {
                if opts.is_empty() || opts.iter().any(|(_, s)| s.is_none()) {
                    continue;
                }
                let all: BTreeSet<usize> = opts.into_iter().flat_map(|(_, s)| s.unwrap()).collect();
                ctr.push(all.len());
                for j in all {
                    preds[j].push((k, 0));
                }
            }
        }
    }
    let mut rank: Vec<Option<usize>> = vec![None; n];
    let mut queue = VecDeque::new();
    for (k, r) in rank.iter_mut().enumerate() {
        if ann.phi[k] && ann.goal[k] {
            *r = Some(0);
            queue.push_back(k);
        }
    }
    let mut expansions = 0;
    while let Some(j) = queue.pop_front() {
        if expansions >= budget {
            return Attractor {
                rank,
                expansions,
                exhausted: true,
            };
        }
        expansions += 1;
        let r = rank[j].expect("queued states are ranked");
        if r + 1 > depth_bound {
            continue;
        }
        for &(k, o) in &preds[j] {
            if rank[k].is_some() {
                continue;
            }
            counters[k][o] -= 1;
            if counters[k][o] == 0 {
                rank[k] = Some(r + 1);
                queue.push_back(k);
            }
        }
    }
    Attractor {
        rank,
        expansions,
        exhausted: false,
    }
}

fn extract_plan(engine: &BeliefEngine, rank: &[Option<usize>]) -> Plan {
    let world = engine.world();
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut edges: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    let mut term = VertexSet::new();
    let mut initial = VertexSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let new_vertex = |k: usize, vertices: &mut Vec<Vertex>| {
        let id = vertices.len();
        vertices.push(Vertex {
            id: String::new(),
            kind: world.kind(engine.states()[k].w),
        });
        id
    };
    for &k in engine.initial_states() {
        let v = new_vertex(k, &mut vertices);
        initial.insert(v);
        queue.push_back((v, k));
    }
    while let Some((v, k)) = queue.pop_front() {
        let r = rank[k].expect("plan states are winning");
        match world.kind(engine.states()[k].w) {
            Kind::Action => {
                if r == 0 {
                    term.insert(v);
                    continue;
                }
                let best = option_successors(engine, k)
                    .into_iter()
                    .filter_map(|(l, succ)| {
                        let succ = succ?;
                        let worst = succ
                            .iter()
                            .map(|&j| rank[j])
                            .collect::<Option<Vec<_>>>()?
                            .into_iter()
                            .max()
                            .unwrap_or(0);
                        Some((worst + 1, l, succ))
                    })
                    .min_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)))
                    .expect("winning action state has a winning option");
                let (_, label, succ) = best;
                for j in succ {
                    let c = new_vertex(j, &mut vertices);
                    edges.entry((v, c)).or_default().insert(label.clone());
                    queue.push_back((c, j));
                }
            }
            Kind::Observation => {
                for (l, j) in engine.successors(k) {
                    let c = new_vertex(*j, &mut vertices);
                    edges.entry((v, c)).or_default().insert(l.clone());
                    queue.push_back((c, *j));
                }
            }
        }
    }
    let width = vertices.len().saturating_sub(1).to_string().len();
    for (i, v) in vertices.iter_mut().enumerate() {
        v.id = format!("p{i:0width$}");
    }
    let graph = PGraph::from_parts(
        vertices,
        initial,
        edges,
        world.actions().clone(),
        world.observations().clone(),
    );
    Plan { graph, term }
}

/// Searches for a tree plan solving `problem` whose every prefix keeps the
/// observer `(i, d)` under `h` within the stipulation `f`.
pub fn seek_plan(
    problem: &PlanningProblem,
    i: &PGraph,
    d: &PGraph,
    h: &LabelMap,
    f: &BoundFormula,
    config: &SeekPConfig,
) -> Result<SeekPResult> {
    let start = Instant::now();
    let w = &problem.world;
    w.ensure_valid()?;
    if !w.is_state_determined() {
        return Err(Error::NotStateDetermined("world"));
    }
    let depth_bound = config
        .depth_bound
        .unwrap_or_else(|| default_depth_bound(w, d, i));
    let budget = config.budget.unwrap_or(usize::MAX);
    let mut stats = SeekPStats {
        depth_bound,
        ..SeekPStats::default()
    };
    let Some(engine) = BeliefEngine::with_budget(i, d, w, h, budget)? else {
        stats.triples = budget;
        stats.elapsed_ms = start.elapsed().as_millis();
        return Ok(SeekPResult {
            outcome: Outcome::Inconclusive("budget exhausted while building the product".into()),
            stats,
        });
    };
    stats.triples = engine.states().len();
    let ann = annotate_triple(&engine, &problem.goal, f, config.exec);
    stats.beliefs_evaluated = ann.beliefs_evaluated;
    let att = solve(
        &engine,
        &ann,
        depth_bound,
        budget.saturating_sub(stats.triples),
    );
    stats.expansions = att.expansions;
    let roots = engine.initial_states();
    let won = !roots.is_empty() && roots.iter().all(|&k| att.rank[k].is_some());
    let outcome = if won {
        stats.plan_depth = roots.iter().filter_map(|&k| att.rank[k]).max();
        Outcome::Found(extract_plan(&engine, &att.rank))
    } else if att.exhausted {
        Outcome::Inconclusive("budget exhausted during search".into())
    } else {
        Outcome::NoneExists
    };
    stats.elapsed_ms = start.elapsed().as_millis();
    Ok(SeekPResult { outcome, stats })
}

/// Why a plan fails [`check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckFailure {
    Solves(SolveViolation),
    /// A joint execution the divulged plan does not contain.
    NotDivulged(Execution),
    /// A joint execution after which the observer's estimate violates the
    /// stipulation.
    Stipulation {
        execution: Execution,
        belief: BTreeSet<String>,
    },
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckFailure::Solves(v) => write!(f, "plan does not solve the problem: {v}"),
            CheckFailure::NotDivulged(s) => {
                write!(f, "execution `{s}` is not in the divulged plan")
            }
            CheckFailure::Stipulation { execution, belief } => {
                let b: Vec<&str> = belief.iter().map(String::as_str).collect();
                write!(
                    f,
                    "stipulation fails after `{execution}` with estimate {{{}}}",
                    b.join(",")
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub failure: Option<CheckFailure>,
    /// Number of distinct joint states at which the stipulation was evaluated.
    pub evaluation_points: usize,
    /// Whether some evaluation point had an empty estimate.
    pub empty_estimate: bool,
}

impl CheckReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

pub fn check(
    problem: &PlanningProblem,
    plan: &Plan,
    d: &PGraph,
    i: &PGraph,
    h: &LabelMap,
    f: &BoundFormula,
) -> Result<CheckReport> {
    check_with(problem, plan, d, i, h, f, Exec::Sequential)
}

/// [`check`] with the stipulation evaluations spread over `exec`.
pub fn check_with(
    problem: &PlanningProblem,
    plan: &Plan,
    d: &PGraph,
    i: &PGraph,
    h: &LabelMap,
    f: &BoundFormula,
    exec: Exec,
) -> Result<CheckReport> {
    if let Some(v) = check_solves(plan, problem)? {
        return Ok(CheckReport {
            failure: Some(CheckFailure::Solves(v)),
            evaluation_points: 0,
            empty_estimate: false,
        });
    }
    let w = &problem.world;
    let engine = BeliefEngine::new(i, d, w, h)?;
    type State = (usize, usize, VertexSet, VertexSet);
    let mut index: BTreeMap<State, usize> = BTreeMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut parent: Vec<Option<(usize, String)>> = Vec::new();
    let mut queue = VecDeque::new();
    for &p in plan.graph.initial() {
        for &w0 in w.initial() {
            let s = (p, w0, d.initial().clone(), i.initial().clone());
            if index.insert(s.clone(), states.len()).is_none() {
                queue.push_back(states.len());
                states.push(s);
                parent.push(None);
            }
        }
    }
    let witness = |parent: &[Option<(usize, String)>], mut k: usize| {
        let mut ev = Vec::new();
        while let Some((p, l)) = &parent[k] {
            ev.push(l.clone());
            k = *p;
        }
        ev.reverse();
        Execution::new(ev)
    };
    while let Some(k) = queue.pop_front() {
        let (p, wv, ds, is) = states[k].clone();
        if ds.is_empty() {
            return Ok(CheckReport {
                failure: Some(CheckFailure::NotDivulged(witness(&parent, k))),
                evaluation_points: states.len(),
                empty_estimate: false,
            });
        }
        if plan.term.contains(&p) {
            continue;
        }
        for (l, next_p) in plan.graph.transitions(p) {
            let Some(next_w) = w.successors(wv, l) else {
                continue;
            };
            let nd = d.step(&ds, l);
            let ni = i.step(&is, h.image(l)?);
            for &np in next_p {
                for &nw in next_w {
                    let s = (np, nw, nd.clone(), ni.clone());
                    if !index.contains_key(&s) {
                        index.insert(s.clone(), states.len());
                        queue.push_back(states.len());
                        states.push(s);
                        parent.push(Some((k, l.clone())));
                    }
                }
            }
        }
    }
    let isets: Vec<VertexSet> = states
        .iter()
        .map(|s| s.3.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let beliefs = engine.estimate_many(&isets, exec)?;
    let verdicts = exec.map(&beliefs, |b| f.eval(&b.0));
    let empty_estimate = beliefs.iter().any(|b| b.is_empty());
    let by_iset: BTreeMap<&VertexSet, (bool, &VertexSet)> = isets
        .iter()
        .zip(verdicts.iter().zip(beliefs.iter()))
        .map(|(s, (&ok, b))| (s, (ok, &b.0)))
        .collect();
    for (k, s) in states.iter().enumerate() {
        let (ok, belief) = by_iset[&s.3];
        if !ok {
            return Ok(CheckReport {
                failure: Some(CheckFailure::Stipulation {
                    execution: witness(&parent, k),
                    belief: w.ids(belief),
                }),
                evaluation_points: states.len(),
                empty_estimate,
            });
        }
    }
    Ok(CheckReport {
        failure: None,
        evaluation_points: states.len(),
        empty_estimate,
    })
}
