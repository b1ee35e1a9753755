//! Brute-force reference implementations.
//!
//! Nothing here calls into the library beyond reading a `PGraph`'s vertices,
//! kinds, initial set and edge list. Languages are enumerated explicitly and
//! the estimate, exact-reach and solving conditions are computed from their
//! set definitions. Every function refuses (`None`) rather than truncating
//! when its budget is too small to be exact.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use pgplan::stipulation::Formula;
use pgplan::{Kind, PGraph};

pub type Set = BTreeSet<usize>;
pub type Str = Vec<String>;
pub type Table = BTreeMap<String, String>;

#[derive(Clone, Copy, Debug)]
pub struct OracleBudget {
    pub max_len: usize,
    pub max_vertices: usize,
    pub max_events: usize,
    pub max_plans: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_len: 6,
            max_vertices: 8,
            max_events: 3,
            max_plans: 200_000,
        }
    }
}

impl OracleBudget {
    pub fn admits(&self, g: &PGraph) -> bool {
        g.vertex_count() <= self.max_vertices
            && g.actions().len() <= self.max_events
            && g.observations().len() <= self.max_events
    }
}

/// Plain adjacency lists copied out of a `PGraph`.
#[derive(Clone, Debug)]
pub struct Adj {
    pub ids: Vec<String>,
    pub kind: Vec<Kind>,
    pub init: Set,
    pub out: Vec<Vec<(String, usize)>>,
}

impl Adj {
    pub fn of(g: &PGraph) -> Adj {
        let n = g.vertex_count();
        let mut out = vec![Vec::new(); n];
        for (f, t, labels) in g.edges() {
            for l in labels {
                out[f].push((l.clone(), t));
            }
        }
        Adj {
            ids: (0..n).map(|v| g.id(v).to_owned()).collect(),
            kind: (0..n).map(|v| g.kind(v)).collect(),
            init: g.initial().iter().copied().collect(),
            out,
        }
    }

    pub fn step(&self, from: &Set, l: &str) -> Set {
        let mut next = Set::new();
        for &v in from {
            for (m, t) in &self.out[v] {
                if m == l {
                    next.insert(*t);
                }
            }
        }
        next
    }

    pub fn trace(&self, s: &[String]) -> Set {
        let mut cur = self.init.clone();
        for e in s {
            cur = self.step(&cur, e);
        }
        cur
    }

    pub fn labels(&self, from: &Set) -> BTreeSet<String> {
        from.iter()
            .flat_map(|&v| self.out[v].iter().map(|(l, _)| l.clone()))
            .collect()
    }

    pub fn names(&self, set: &Set) -> BTreeSet<String> {
        set.iter().map(|&v| self.ids[v].clone()).collect()
    }
}

/// Every execution of length at most `k`, by extending strings one event
/// at a time.
pub fn language(g: &Adj, k: usize) -> BTreeSet<Str> {
    let mut out = BTreeSet::new();
    if g.init.is_empty() {
        return out;
    }
    let mut layer: Vec<Str> = vec![Vec::new()];
    for _ in 0..=k {
        let mut next = Vec::new();
        for s in layer {
            let reach = g.trace(&s);
            if reach.is_empty() {
                continue;
            }
            if s.len() < k {
                for l in g.labels(&reach) {
                    let mut t = s.clone();
                    t.push(l);
                    next.push(t);
                }
            }
            out.insert(s);
        }
        layer = next;
    }
    out
}

/// Executions of length at most `k` reaching exactly `b`.
pub fn exact_reaching(g: &Adj, b: &Set, k: usize) -> BTreeSet<Str> {
    language(g, k)
        .into_iter()
        .filter(|s| g.trace(s) == *b)
        .collect()
}

/// Executions of length at most `k` that may end at `v`.
pub fn reaching(g: &Adj, v: usize, k: usize) -> BTreeSet<Str> {
    language(g, k)
        .into_iter()
        .filter(|s| g.trace(s).contains(&v))
        .collect()
}

pub fn apply(h: &Table, s: &[String]) -> Str {
    s.iter().map(|e| h[e].clone()).collect()
}

pub fn eval_cnf(f: &Formula, belief: &BTreeSet<String>) -> bool {
    f.clauses.iter().all(|c| {
        c.literals
            .iter()
            .any(|l| belief.contains(&l.symbol) != l.negated)
    })
}

/// Truth table of `f` over `symbols`: bit `m` is set iff `f` holds when
/// exactly the symbols whose bit is set in `m` are true.
pub fn truth_table(f: &Formula, symbols: &[String]) -> u64 {
    assert!(symbols.len() <= 6);
    let rows = 1u32 << symbols.len();
    let all = if rows == 64 {
        u64::MAX
    } else {
        (1u64 << rows) - 1
    };
    let column = |sym: &str| -> u64 {
        let Some(i) = symbols.iter().position(|s| s == sym) else {
            return 0;
        };
        (0..rows)
            .filter(|m| m & (1 << i) != 0)
            .fold(0, |acc, m| acc | 1 << m)
    };
    f.clauses.iter().fold(all, |acc, c| {
        let clause = c.literals.iter().fold(0, |cl, l| {
            let col = column(&l.symbol);
            cl | if l.negated { !col & all } else { col }
        });
        acc & clause
    })
}

/// Cap on enumerated strings before [`joint_language`] refuses.
pub const MAX_STRINGS: usize = 1 << 20;

/// Strings of both `a` and `b` up to `k`, or `None` if some string of
/// length `k` still continues in both or there are too many to list.
pub fn joint_language(a: &Adj, b: &Adj, k: usize) -> Option<BTreeSet<Str>> {
    let mut out = BTreeSet::new();
    if a.init.is_empty() || b.init.is_empty() {
        return Some(out);
    }
    let mut layer: Vec<(Str, Set, Set)> = vec![(Vec::new(), a.init.clone(), b.init.clone())];
    while !layer.is_empty() {
        let mut next = Vec::new();
        for (s, ra, rb) in layer {
            let common: Vec<String> = a
                .labels(&ra)
                .intersection(&b.labels(&rb))
                .cloned()
                .collect();
            if s.len() == k && !common.is_empty() {
                return None;
            }
            if s.len() < k {
                for l in common {
                    let mut t = s.clone();
                    t.push(l.clone());
                    next.push((t, a.step(&ra, &l), b.step(&rb, &l)));
                }
            }
            out.insert(s);
        }
        if out.len() + next.len() > MAX_STRINGS {
            return None;
        }
        layer = next;
    }
    Some(out)
}

/// The estimated world states at `b`, from the three execution sets of
/// the definition: those whose image reaches exactly `b` in `i`, the
/// divulged language and those reaching each world vertex.
pub fn belief_bruteforce(i: &Adj, d: &Adj, w: &Adj, h: &Table, b: &Set, k: usize) -> Option<Set> {
    joint_language(w, d, k)?;
    let lw = language(w, k);
    let exact: BTreeSet<&Str> = lw.iter().filter(|s| i.trace(&apply(h, s)) == *b).collect();
    let ld = language(d, k);
    let mut out = Set::new();
    for v in 0..w.ids.len() {
        let reach_v = reaching(w, v, k);
        if exact
            .iter()
            .any(|s| ld.contains(*s) && reach_v.contains(*s))
        {
            out.insert(v);
        }
    }
    Some(out)
}

/// Every nonempty I-state set reached by the image of a common execution
/// of `w` and `d`, with its estimate.
pub fn all_beliefs(i: &Adj, d: &Adj, w: &Adj, h: &Table, k: usize) -> Option<BTreeMap<Set, Set>> {
    let both = joint_language(w, d, k)?;
    let mut out: BTreeMap<Set, Set> = BTreeMap::new();
    for s in &both {
        let b = i.trace(&apply(h, s));
        if !b.is_empty() {
            out.entry(b).or_default().extend(w.trace(s));
        }
    }
    Some(out)
}

/// Where the finest observer `h<W>` stands after image string `x`: every
/// world vertex some execution with that image reaches.
pub fn finest_reach(w: &Adj, h: &Table, x: &[String]) -> Set {
    let mut cur = w.init.clone();
    for y in x {
        let mut next = Set::new();
        for &v in &cur {
            for (l, t) in &w.out[v] {
                if h[l] == *y {
                    next.insert(*t);
                }
            }
        }
        cur = next;
    }
    cur
}

/// Whether some tree plan solves `(w, goal)` while keeping every prefix
/// inside `L(d)`, its image inside `L(i)` and the estimate inside `f`.
pub fn seek_p_bruteforce(
    w: &Adj,
    goal: &Set,
    i: &Adj,
    d: &Adj,
    h: &Table,
    f: &Formula,
    budget: &OracleBudget,
) -> Option<bool> {
    let beliefs = all_beliefs(i, d, w, h, budget.max_len)?;
    let ok = |s: &Str| -> bool {
        if d.trace(s).is_empty() {
            return false;
        }
        let b = i.trace(&apply(h, s));
        if b.is_empty() {
            return false;
        }
        let est = beliefs.get(&b).cloned().unwrap_or_default();
        eval_cnf(f, &w.names(&est))
    };
    fn win(w: &Adj, goal: &Set, ok: &dyn Fn(&Str) -> bool, s: &Str, v: usize) -> bool {
        if !ok(s) {
            return false;
        }
        let labels = w.labels(&Set::from([v]));
        let outcome = |l: &String| {
            let mut t = s.clone();
            t.push(l.clone());
            w.step(&Set::from([v]), l)
                .into_iter()
                .all(|nv| win(w, goal, ok, &t, nv))
        };
        match w.kind[v] {
            Kind::Action => goal.contains(&v) || labels.iter().any(outcome),
            Kind::Observation => !labels.is_empty() && labels.iter().all(outcome),
        }
    }
    if w.init.is_empty() {
        return Some(false);
    }
    Some(w.init.iter().all(|&v| win(w, goal, &ok, &Vec::new(), v)))
}

/// What the observer's I-state graph is.
pub enum Observer<'a> {
    Graph(&'a Adj),
    /// `h<W>` for the world under test.
    Finest,
}

/// Whether `plan` (with termination set `term`) solves `(w, goal)` and the
/// observer, knowing `d` (the plan itself when `None`), never holds an
/// estimate outside `f`. Joint executions longer than `max_len` refuse.
#[allow(clippy::too_many_arguments)]
pub fn check_bruteforce(
    w: &Adj,
    goal: &Set,
    plan: &Adj,
    term: &Set,
    d: Option<&Adj>,
    obs: Observer<'_>,
    h: &Table,
    f: &Formula,
    max_len: usize,
) -> Option<bool> {
    // joint prefixes
    let mut prefixes: Vec<Str> = Vec::new();
    let mut stack: Vec<(usize, usize, Str)> = Vec::new();
    for &p in &plan.init {
        for &v in &w.init {
            stack.push((p, v, Vec::new()));
        }
    }
    let mut solves = !stack.is_empty();
    while let Some((p, v, s)) = stack.pop() {
        if s.len() > max_len {
            return None;
        }
        prefixes.push(s.clone());
        if term.contains(&p) {
            solves &= goal.contains(&v);
            continue;
        }
        let (driver, follower) = match plan.kind[p] {
            Kind::Action => (&plan.out[p], &w.out[v]),
            Kind::Observation => (&w.out[v], &plan.out[p]),
        };
        let mut moved = false;
        for (l, _) in driver {
            if !follower.iter().any(|(m, _)| m == l) {
                solves = false;
            }
        }
        for (l, np) in &plan.out[p] {
            for (m, nv) in &w.out[v] {
                if l == m {
                    moved = true;
                    let mut t = s.clone();
                    t.push(l.clone());
                    stack.push((*np, *nv, t));
                }
            }
        }
        solves &= moved;
    }
    if !solves {
        return Some(false);
    }
    let d = d.unwrap_or(plan);
    let both = joint_language(w, d, max_len)?;
    let reach = |x: &Str| match obs {
        Observer::Graph(i) => i.trace(x),
        Observer::Finest => finest_reach(w, h, x),
    };
    let mut beliefs: BTreeMap<Set, Set> = BTreeMap::new();
    for s in &both {
        let b = reach(&apply(h, s));
        if !b.is_empty() {
            beliefs.entry(b).or_default().extend(w.trace(s));
        }
    }
    Some(prefixes.iter().all(|s| {
        if d.trace(s).is_empty() {
            return false;
        }
        let b = reach(&apply(h, s));
        let est = beliefs.get(&b).cloned().unwrap_or_default();
        eval_cnf(f, &w.names(&est))
    }))
}

/// Every set partition of `items`.
pub fn partitions(items: &[String]) -> Vec<Vec<Vec<String>>> {
    let Some((first, rest)) = items.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for p in partitions(rest) {
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i].insert(0, first.clone());
            out.push(q);
        }
        let mut q = p;
        q.push(vec![first.clone()]);
        out.push(q);
    }
    out
}

/// A plan over observer groups: each state of the group terminates or
/// commits to events; children are keyed by image.
#[derive(Debug)]
struct Tree {
    term: Set,
    chosen: BTreeMap<usize, BTreeSet<String>>,
    children: BTreeMap<String, Rc<Tree>>,
}

struct PlmEnum<'a> {
    w: &'a Adj,
    goal: &'a Set,
    f: &'a Formula,
    h: &'a Table,
    made: usize,
    cap: usize,
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut acc: Vec<Vec<T>> = vec![Vec::new()];
    for l in lists {
        let mut next = Vec::new();
        for a in &acc {
            for x in l {
                let mut b = a.clone();
                b.push(x.clone());
                next.push(b);
            }
        }
        acc = next;
    }
    acc
}

impl PlmEnum<'_> {
    /// All plans rooted at `group` avoiding groups on `path`. `None` once the
    /// plan cap is exceeded.
    fn trees(&mut self, group: &Set, path: &[Set]) -> Option<Vec<Rc<Tree>>> {
        if !eval_cnf(self.f, &self.w.names(group)) {
            return Some(Vec::new());
        }
        let w = self.w;
        let Some(&first) = group.iter().next() else {
            return Some(Vec::new());
        };
        let may_stop = group.iter().all(|v| self.goal.contains(v));
        // per-state options: None = terminate
        let mut options: Vec<Vec<Option<BTreeSet<String>>>> = Vec::new();
        for &v in group {
            let labels: Vec<String> = w.labels(&Set::from([v])).into_iter().collect();
            let mut opts: Vec<Option<BTreeSet<String>>> = Vec::new();
            match w.kind[first] {
                Kind::Action => {
                    if may_stop {
                        opts.push(None);
                    }
                    for mask in 1u32..(1 << labels.len()) {
                        opts.push(Some(
                            (0..labels.len())
                                .filter(|i| mask & (1 << i) != 0)
                                .map(|i| labels[i].clone())
                                .collect(),
                        ));
                    }
                }
                Kind::Observation => {
                    if !labels.is_empty() {
                        opts.push(Some(labels.into_iter().collect()));
                    }
                }
            }
            options.push(opts);
        }
        let members: Vec<usize> = group.iter().copied().collect();
        let mut inner: Vec<Set> = path.to_vec();
        inner.push(group.clone());
        let mut out = Vec::new();
        for tuple in cartesian(&options) {
            let mut term = Set::new();
            let mut chosen = BTreeMap::new();
            for (&v, o) in members.iter().zip(tuple) {
                match o {
                    None => {
                        term.insert(v);
                    }
                    Some(a) => {
                        chosen.insert(v, a);
                    }
                }
            }
            let mut succ: BTreeMap<String, Set> = BTreeMap::new();
            for (&v, events) in &chosen {
                for e in events {
                    succ.entry(self.h[e].clone())
                        .or_default()
                        .extend(w.step(&Set::from([v]), e));
                }
            }
            if succ.values().any(|c| inner.contains(c)) {
                continue;
            }
            let mut alternatives: Vec<Vec<(String, Rc<Tree>)>> = Vec::new();
            for (image, child) in &succ {
                let subs = self.trees(child, &inner)?;
                alternatives.push(subs.into_iter().map(|t| (image.clone(), t)).collect());
            }
            for combo in cartesian(&alternatives) {
                self.made += 1;
                if self.made > self.cap {
                    return None;
                }
                out.push(Rc::new(Tree {
                    term: term.clone(),
                    chosen: chosen.clone(),
                    children: combo.into_iter().collect(),
                }));
            }
        }
        Some(out)
    }
}

/// Solving and stipulation check of a group plan with the finest observer
/// and the plan divulged.
fn tree_passes(w: &Adj, goal: &Set, h: &Table, f: &Formula, root: &Tree) -> bool {
    let mut visits: Vec<(Str, usize)> = Vec::new();
    let mut stack: Vec<(&Tree, usize, Str)> =
        w.init.iter().map(|&v| (root, v, Vec::new())).collect();
    while let Some((t, v, s)) = stack.pop() {
        visits.push((s.clone(), v));
        if t.term.contains(&v) {
            if !goal.contains(&v) || w.kind[v] != Kind::Action {
                return false;
            }
            continue;
        }
        let Some(events) = t.chosen.get(&v) else {
            return false;
        };
        let mut moved = false;
        for e in events {
            let child = &t.children[&h[e]];
            for nv in w.step(&Set::from([v]), e) {
                moved = true;
                let mut u = s.clone();
                u.push(e.clone());
                stack.push((child, nv, u));
            }
        }
        if !moved {
            return false;
        }
    }
    let mut beliefs: BTreeMap<Set, Set> = BTreeMap::new();
    let keyed: Vec<Set> = visits
        .iter()
        .map(|(s, _)| finest_reach(w, h, &apply(h, s)))
        .collect();
    for (b, (_, v)) in keyed.iter().zip(&visits) {
        beliefs.entry(b.clone()).or_default().insert(*v);
    }
    keyed.iter().all(|b| eval_cnf(f, &w.names(&beliefs[b])))
}

/// Whether some full label map and some group plan (every group nonempty,
/// satisfying `f`, not repeated along a branch; termination only for
/// groups inside the goal) pass the check with the finest observer and the
/// plan divulged.
pub fn seek_plm_bruteforce(
    w: &Adj,
    goal: &Set,
    f: &Formula,
    budget: &OracleBudget,
) -> Option<bool> {
    let mut acts = BTreeSet::new();
    let mut obs = BTreeSet::new();
    for (v, outs) in w.out.iter().enumerate() {
        for (l, _) in outs {
            match w.kind[v] {
                Kind::Action => acts.insert(l.clone()),
                Kind::Observation => obs.insert(l.clone()),
            };
        }
    }
    let acts: Vec<String> = acts.into_iter().collect();
    let obs: Vec<String> = obs.into_iter().collect();
    for pa in partitions(&acts) {
        for po in partitions(&obs) {
            let mut h = Table::new();
            for (i, block) in pa.iter().enumerate() {
                for e in block {
                    h.insert(e.clone(), format!("A{i}"));
                }
            }
            for (i, block) in po.iter().enumerate() {
                for e in block {
                    h.insert(e.clone(), format!("O{i}"));
                }
            }
            let mut en = PlmEnum {
                w,
                goal,
                f,
                h: &h,
                made: 0,
                cap: budget.max_plans,
            };
            let trees = en.trees(&w.init, &[])?;
            if trees.iter().any(|t| tree_passes(w, goal, &h, f, t)) {
                return Some(true);
            }
        }
    }
    Some(false)
}
