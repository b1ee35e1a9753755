//! Seeded random instances.

use std::collections::{BTreeMap, BTreeSet};

use pgplan::labelmap::LabelMap;
use pgplan::stipulation::{Clause, Formula, Literal};
use pgplan::{EventLabel, Kind, PGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn action_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

pub fn observation_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("o{i}")).collect()
}

fn labels_for(kind: Kind, acts: &[String], obs: &[String]) -> Vec<String> {
    match kind {
        Kind::Action => acts.to_vec(),
        Kind::Observation => obs.to_vec(),
    }
}

fn random_kinds(r: &mut Rand, n: usize) -> Vec<Kind> {
    (0..n)
        .map(|_| {
            if r.gen_bool(0.5) {
                Kind::Action
            } else {
                Kind::Observation
            }
        })
        .collect()
}

/// Arbitrary valid p-graph: `n` vertices, random edges between opposite
/// kinds, several initial vertices of one kind.
pub fn random_graph(r: &mut Rand, n: usize, n_act: usize, n_obs: usize) -> PGraph {
    let (acts, obs) = (action_names(n_act), observation_names(n_obs));
    let kinds = random_kinds(r, n);
    let init_kind = kinds[0];
    let mut b = PGraph::builder();
    for (i, &k) in kinds.iter().enumerate() {
        let initial = k == init_kind && (i == 0 || r.gen_bool(0.3));
        b.vertex(format!("v{i}"), k, initial);
    }
    for u in 0..n {
        for v in 0..n {
            if kinds[u] == kinds[v] || !r.gen_bool(0.35) {
                continue;
            }
            let pool = labels_for(kinds[u], &acts, &obs);
            let mut labels: Vec<String> =
                pool.iter().filter(|_| r.gen_bool(0.4)).cloned().collect();
            if labels.is_empty() {
                labels.push(pool.choose(r).unwrap().clone());
            }
            b.edge(format!("v{u}"), format!("v{v}"), labels);
        }
    }
    b.actions(acts).observations(obs);
    b.build().unwrap()
}

/// A state-determined world: one initial vertex `v0` and at most one
/// successor per label. With `acyclic`, edges only go to higher indices.
pub fn random_sde_world(
    r: &mut Rand,
    n: usize,
    n_act: usize,
    n_obs: usize,
    acyclic: bool,
) -> PGraph {
    let (acts, obs) = (action_names(n_act), observation_names(n_obs));
    let mut kinds = random_kinds(r, n);
    // keep the instance interesting: the start has somewhere to go
    if n > 1 && kinds[1..].iter().all(|&k| k == kinds[0]) {
        kinds[n - 1] = kinds[0].flip();
    }
    let mut b = PGraph::builder();
    for (i, &k) in kinds.iter().enumerate() {
        b.vertex(format!("v{i}"), k, i == 0);
    }
    for u in 0..n {
        let targets: Vec<usize> = (0..n)
            .filter(|&v| kinds[v] != kinds[u] && (!acyclic || v > u))
            .collect();
        if targets.is_empty() {
            continue;
        }
        for l in labels_for(kinds[u], &acts, &obs) {
            if r.gen_bool(0.55) {
                let v = *targets.choose(r).unwrap();
                b.edge(format!("v{u}"), format!("v{v}"), [l]);
            }
        }
    }
    b.actions(acts).observations(obs);
    b.build().unwrap()
}

/// Layered acyclic graph over the given alphabet whose initial layer has
/// kind `first`; every execution has at most `depth` events.
pub fn random_layered(
    r: &mut Rand,
    first: Kind,
    depth: usize,
    acts: &[String],
    obs: &[String],
) -> PGraph {
    let mut b = PGraph::builder();
    let mut layers: Vec<Vec<String>> = Vec::new();
    let mut kind = first;
    for l in 0..=depth {
        let width = r.gen_range(1..=2);
        let ids: Vec<String> = (0..width).map(|i| format!("d{l}_{i}")).collect();
        for id in &ids {
            b.vertex(id.clone(), kind, l == 0);
        }
        layers.push(ids);
        kind = kind.flip();
    }
    let mut kind = first;
    for l in 0..depth {
        let pool = labels_for(kind, acts, obs);
        for u in &layers[l] {
            for v in &layers[l + 1] {
                let labels: Vec<String> =
                    pool.iter().filter(|_| r.gen_bool(0.6)).cloned().collect();
                if !labels.is_empty() {
                    b.edge(u.clone(), v.clone(), labels);
                }
            }
        }
        kind = kind.flip();
    }
    b.actions(acts.iter().cloned())
        .observations(obs.iter().cloned());
    b.build().unwrap()
}

/// Random kind-preserving map as a plain table plus the library value.
pub fn random_map(r: &mut Rand, g: &PGraph) -> (BTreeMap<String, String>, LabelMap) {
    let mut table = BTreeMap::new();
    for (names, prefix) in [(g.actions(), "x"), (g.observations(), "y")] {
        let k = names.len().max(1);
        for n in names {
            table.insert(n.clone(), format!("{prefix}{}", r.gen_range(0..k)));
        }
    }
    let h = map_from_table(g, &table);
    (table, h)
}

pub fn map_from_table(g: &PGraph, table: &BTreeMap<String, String>) -> LabelMap {
    LabelMap::new(g.alphabet().into_iter().map(|e| {
        let image = table[&e.name].clone();
        (e, image)
    }))
    .unwrap()
}

pub fn identity_table(g: &PGraph) -> BTreeMap<String, String> {
    g.alphabet()
        .into_iter()
        .map(|EventLabel { name, .. }| (name.clone(), name))
        .collect()
}

/// Quotient of `g` by randomly merging same-kind vertices. Its language
/// contains that of `g`.
pub fn coarsen(r: &mut Rand, g: &PGraph, merges: usize) -> PGraph {
    let class = random_classes(r, g, merges);
    quotient(g, &class)
}

/// Class representative of every vertex after `merges` random merges of
/// same-kind vertices.
pub fn random_classes(r: &mut Rand, g: &PGraph, merges: usize) -> Vec<usize> {
    let n = g.vertex_count();
    let mut class: Vec<usize> = (0..n).collect();
    for _ in 0..merges {
        let u = r.gen_range(0..n);
        let same: Vec<usize> = (0..n)
            .filter(|&v| g.kind(v) == g.kind(u) && v != u)
            .collect();
        if let Some(&v) = same.choose(r) {
            let (keep, drop) = (class[u].min(class[v]), class[u].max(class[v]));
            for c in class.iter_mut() {
                if *c == drop {
                    *c = keep;
                }
            }
        }
    }
    class
}

/// Quotient of a state-determined `g` by a right congruence: starting from
/// random same-kind merges, classes are merged until every label sends a
/// class into a single class. The result is state-determined and every
/// image string reaches the class of the vertex it reached in `g`.
pub fn coarsen_congruent(r: &mut Rand, g: &PGraph, merges: usize) -> PGraph {
    let n = g.vertex_count();
    let mut class: Vec<usize> = (0..n).collect();
    let union = |class: &mut Vec<usize>, a: usize, b: usize| {
        let (keep, drop) = (class[a].min(class[b]), class[a].max(class[b]));
        if keep == drop {
            return false;
        }
        for c in class.iter_mut() {
            if *c == drop {
                *c = keep;
            }
        }
        true
    };
    for _ in 0..merges {
        let u = r.gen_range(0..n);
        let same: Vec<usize> = (0..n)
            .filter(|&v| g.kind(v) == g.kind(u) && v != u)
            .collect();
        if let Some(&v) = same.choose(r) {
            union(&mut class, u, v);
        }
    }
    loop {
        let mut changed = false;
        for p in 0..n {
            for q in p + 1..n {
                if class[p] != class[q] {
                    continue;
                }
                for (l, ps) in g.transitions(p) {
                    let (Some(&p2), Some(&q2)) =
                        (ps.first(), g.successors(q, l).and_then(|s| s.first()))
                    else {
                        continue;
                    };
                    changed |= union(&mut class, p2, q2);
                }
            }
        }
        if !changed {
            break;
        }
    }
    quotient(g, &class)
}

/// `g` with every vertex replaced by `q{class}`.
pub fn quotient(g: &PGraph, class: &[usize]) -> PGraph {
    let n = g.vertex_count();
    let mut b = PGraph::builder();
    let reps: BTreeSet<usize> = class.iter().copied().collect();
    for &c in &reps {
        let initial = (0..n).any(|v| class[v] == c && g.initial().contains(&v));
        b.vertex(format!("q{c}"), g.kind(c), initial);
    }
    for (f, t, labels) in g.edges() {
        b.edge(
            format!("q{}", class[f]),
            format!("q{}", class[t]),
            labels.iter().cloned(),
        );
    }
    b.actions(g.actions().iter().cloned())
        .observations(g.observations().iter().cloned());
    b.build().unwrap()
}

/// Random CNF over the vertex ids of `g`.
pub fn random_formula(r: &mut Rand, g: &PGraph, max_clauses: usize, max_lits: usize) -> Formula {
    let ids: Vec<String> = g.vertices().iter().map(|v| v.id.clone()).collect();
    let clauses = (0..r.gen_range(1..=max_clauses))
        .map(|_| Clause {
            literals: (0..r.gen_range(1..=max_lits))
                .map(|_| {
                    let s = ids.choose(r).unwrap().clone();
                    if r.gen_bool(0.5) {
                        Literal::neg(s)
                    } else {
                        Literal::pos(s)
                    }
                })
                .collect(),
        })
        .collect();
    Formula { clauses }
}

/// A random subset of action vertices of `g`.
pub fn random_goal(r: &mut Rand, g: &PGraph) -> BTreeSet<usize> {
    (0..g.vertex_count())
        .filter(|&v| g.kind(v) == Kind::Action && r.gen_bool(0.5))
        .collect()
}
