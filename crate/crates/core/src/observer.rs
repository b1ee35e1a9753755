//! Observers and what they can infer.
//!
//! An observer is an I-state graph `I` over the image space together with a
//! divulged plan `D` over the robot's own events. [`BeliefEngine`] computes
//! the estimated world states for every I-state set the observer can be in.
//!
//! The engine explores the reachable product of single world vertices, the
//! set of `D` vertices reached so far, and the set of `I` vertices reached by
//! the image of the execution so far. An execution `s` reaches the product
//! state `(w, Ds, Is)` iff `s` reaches `w` in the world, `Ds` is the full
//! reach set of `s` in `D` and `Is` the full reach set of `h(s)` in `I`. The
//! belief at `B` is then every `w` appearing next to `Is == B`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::labelmap::LabelMap;
use crate::par::Exec;
use crate::pgraph::{image_graph, Execution, PGraph, VertexSet};

/// A set of world vertices: the observer's estimate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Belief(pub VertexSet);

impl Belief {
    pub fn ids(&self, world: &PGraph) -> BTreeSet<String> {
        world.ids(&self.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, w: usize) -> bool {
        self.0.contains(&w)
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("#{v}")).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// The observer I-state graph `h<W>`, which no other observer beats.
pub fn finest_observer(world: &PGraph, h: &LabelMap) -> Result<PGraph> {
    image_graph(h, world)
}

/// What the observer knows about the robot's plan.
#[derive(Clone, Debug)]
pub enum Divulged {
    /// The observer knows the exact plan.
    ExactPlan(PGraph),
    /// The plan is one of finitely many.
    PlanCollection(Vec<PGraph>),
    /// Nothing beyond the world itself.
    World(PGraph),
}

/// The graph `D` for a disclosure case. A collection becomes the disjoint
/// union of its members, whose vertex ids get a `p{i}:` prefix.
pub fn divulged_plan(case: &Divulged) -> Result<PGraph> {
    match case {
        Divulged::ExactPlan(p) | Divulged::World(p) => Ok(p.clone()),
        Divulged::PlanCollection(plans) => {
            if plans.is_empty() {
                return Err(Error::EmptyCollection);
            }
            if plans.len() == 1 {
                return Ok(plans[0].clone());
            }
            let kinds: BTreeSet<_> = plans.iter().filter_map(PGraph::initial_kind).collect();
            if kinds.len() > 1 {
                return Err(Error::IncompatibleInitialKinds);
            }
            let mut b = PGraph::builder();
            for (i, p) in plans.iter().enumerate() {
                for (v, vert) in p.vertices().iter().enumerate() {
                    b.vertex(
                        format!("p{i}:{}", vert.id),
                        vert.kind,
                        p.initial().contains(&v),
                    );
                }
                for (from, to, labels) in p.edges() {
                    b.edge(
                        format!("p{i}:{}", p.id(from)),
                        format!("p{i}:{}", p.id(to)),
                        labels.iter().cloned(),
                    );
                }
                b.actions(p.actions().iter().cloned())
                    .observations(p.observations().iter().cloned());
            }
            b.build()
        }
    }
}

/// One state of the world × divulged × I-state product.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub w: usize,
    pub d: VertexSet,
    pub i: VertexSet,
}

/// Reachable world × divulged × I-state product and the beliefs it induces.
#[derive(Clone, Debug)]
pub struct BeliefEngine {
    world: PGraph,
    istate: PGraph,
    h: LabelMap,
    states: Vec<Triple>,
    index: BTreeMap<Triple, usize>,
    initial: Vec<usize>,
    succ: Vec<Vec<(String, usize)>>,
    beliefs: BTreeMap<VertexSet, VertexSet>,
}

impl BeliefEngine {
    pub fn new(i: &PGraph, d: &PGraph, w: &PGraph, h: &LabelMap) -> Result<Self> {
        Self::with_budget(i, d, w, h, usize::MAX).map(|e| e.expect("unbounded budget"))
    }

    /// Like [`new`](Self::new), but gives up (returning `None`) once more
    /// than `budget` product states have been created.
    pub fn with_budget(
        i: &PGraph,
        d: &PGraph,
        w: &PGraph,
        h: &LabelMap,
        budget: usize,
    ) -> Result<Option<Self>> {
        for l in w.actions().iter().chain(w.observations()) {
            h.image(l)?;
        }
        let mut states: Vec<Triple> = Vec::new();
        let mut index: BTreeMap<Triple, usize> = BTreeMap::new();
        let mut succ: Vec<Vec<(String, usize)>> = Vec::new();
        let mut queue = VecDeque::new();
        let mut initial = Vec::new();
        if !d.initial().is_empty() && !i.initial().is_empty() {
            for &w0 in w.initial() {
                let t = Triple {
                    w: w0,
                    d: d.initial().clone(),
                    i: i.initial().clone(),
                };
                index.insert(t.clone(), states.len());
                initial.push(states.len());
                queue.push_back(states.len());
                states.push(t);
                succ.push(Vec::new());
            }
        }
        while let Some(k) = queue.pop_front() {
            let t = states[k].clone();
            let mut out = Vec::new();
            for (l, next_w) in w.transitions(t.w) {
                let nd = d.step(&t.d, l);
                if nd.is_empty() {
                    continue;
                }
                let ni = i.step(&t.i, h.image(l)?);
                if ni.is_empty() {
                    continue;
                }
                for &nw in next_w {
                    let nt = Triple {
                        w: nw,
                        d: nd.clone(),
                        i: ni.clone(),
                    };
                    let j = match index.get(&nt) {
                        Some(&j) => j,
                        None => {
                            if states.len() >= budget {
                                return Ok(None);
                            }
                            let j = states.len();
                            index.insert(nt.clone(), j);
                            states.push(nt);
                            succ.push(Vec::new());
                            queue.push_back(j);
                            j
                        }
                    };
                    out.push((l.clone(), j));
                }
            }
            succ[k] = out;
        }
        let mut beliefs: BTreeMap<VertexSet, VertexSet> = BTreeMap::new();
        for t in &states {
            beliefs.entry(t.i.clone()).or_default().insert(t.w);
        }
        Ok(Some(BeliefEngine {
            world: w.clone(),
            istate: i.clone(),
            h: h.clone(),
            states,
            index,
            initial,
            succ,
            beliefs,
        }))
    }

    /// The finest observer `h<W>` that knows `D`.
    pub fn finest(d: &PGraph, w: &PGraph, h: &LabelMap) -> Result<Self> {
        let i = finest_observer(w, h)?;
        Self::new(&i, d, w, h)
    }

    pub fn world(&self) -> &PGraph {
        &self.world
    }

    pub fn istate_graph(&self) -> &PGraph {
        &self.istate
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.h
    }

    /// Estimated world states at I-state set `b`. Sets no execution reaches
    /// exactly (including the empty set) give the empty belief.
    pub fn estimate(&self, b: &VertexSet) -> Result<Belief> {
        if let Some(&bad) = b.iter().find(|&&v| v >= self.istate.vertex_count()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        Ok(Belief(self.beliefs.get(b).cloned().unwrap_or_default()))
    }

    pub fn estimate_ids<S: AsRef<str>>(&self, b: impl IntoIterator<Item = S>) -> Result<Belief> {
        let set = self.istate.set_of(b)?;
        self.estimate(&set)
    }

    /// Whether `b` is the exact I-state set of some product state.
    pub fn is_witnessed(&self, b: &VertexSet) -> bool {
        self.beliefs.contains_key(b)
    }

    pub fn estimate_many(&self, sets: &[VertexSet], exec: Exec) -> Result<Vec<Belief>> {
        exec.map(sets, |b| self.estimate(b)).into_iter().collect()
    }

    /// The estimate after the robot executed `s`.
    pub fn belief_after(&self, s: &Execution) -> Result<Belief> {
        if self.world.reached_vertices(s)?.is_empty() {
            return Err(Error::NotInLanguage(s.to_string()));
        }
        let b = self.istate.trace(&self.h.apply(s)?);
        self.estimate(&b)
    }

    /// Every reachable I-state set with its belief.
    pub fn istates(&self) -> impl Iterator<Item = (&VertexSet, Belief)> {
        self.beliefs.iter().map(|(b, w)| (b, Belief(w.clone())))
    }

    pub fn states(&self) -> &[Triple] {
        &self.states
    }

    pub fn state_index(&self, t: &Triple) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn initial_states(&self) -> &[usize] {
        &self.initial
    }

    /// `(label, successor)` pairs of product state `k`, sorted by label.
    pub fn successors(&self, k: usize) -> &[(String, usize)] {
        &self.succ[k]
    }

    /// Belief attached to product state `k`.
    pub fn belief_of_state(&self, k: usize) -> &VertexSet {
        &self.beliefs[&self.states[k].i]
    }
}

/// Estimated world states at `b`, building a fresh engine.
pub fn estimated_world_states(
    i: &PGraph,
    d: &PGraph,
    w: &PGraph,
    h: &LabelMap,
    b: &VertexSet,
) -> Result<Belief> {
    BeliefEngine::new(i, d, w, h)?.estimate(b)
}

/// Searches for an execution of `w` of length at most `k` whose image `i`
/// cannot follow, i.e. a witness that `i` is not an I-state graph for `w`
/// under `h`.
pub fn observer_gap(i: &PGraph, w: &PGraph, h: &LabelMap, k: usize) -> Result<Option<Execution>> {
    let mut seen: BTreeSet<(VertexSet, VertexSet)> = BTreeSet::new();
    let mut queue =
        VecDeque::from([(w.initial().clone(), i.initial().clone(), Execution::empty())]);
    while let Some((ws, is, s)) = queue.pop_front() {
        if ws.is_empty() {
            continue;
        }
        if is.is_empty() {
            return Ok(Some(s));
        }
        if s.len() >= k || !seen.insert((ws.clone(), is.clone())) {
            continue;
        }
        for l in w.labels_from(&ws) {
            let nw = w.step(&ws, l);
            let ni = i.step(&is, h.image(l)?);
            queue.push_back((nw, ni, s.extended(l)));
        }
    }
    Ok(None)
}
