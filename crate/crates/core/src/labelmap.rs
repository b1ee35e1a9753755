//! Label maps (disclosure policies) and partial label maps.
//!
//! A [`LabelMap`] sends every event of a domain to an image symbol. Images are
//! kind-preserving: no symbol is shared by an action and an observation, so
//! the image of a p-graph is again a p-graph.
//!
//! A [`PartialLabelMap`] is what the joint search commits to while it runs:
//! some events are known to share an image (co-blocked) and some pairs are
//! known to be kept apart (separated). Everything else is still open.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgraph::{EventLabel, Execution, Kind, PGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    map: BTreeMap<String, String>,
    kinds: BTreeMap<String, Kind>,
    pre: BTreeMap<String, BTreeSet<String>>,
    image_kinds: BTreeMap<String, Kind>,
}

impl LabelMap {
    pub fn new(pairs: impl IntoIterator<Item = (EventLabel, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut kinds = BTreeMap::new();
        let mut pre: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut image_kinds: BTreeMap<String, Kind> = BTreeMap::new();
        let mut witness: BTreeMap<String, String> = BTreeMap::new();
        for (event, image) in pairs {
            if let Some(old) = map.get(&event.name) {
                if old != &image {
                    return Err(Error::Malformed(format!(
                        "event `{}` mapped to both `{old}` and `{image}`",
                        event.name
                    )));
                }
            }
            if let Some(prev) = kinds.insert(event.name.clone(), event.kind) {
                if prev != event.kind {
                    return Err(Error::MixedKinds(event.name.clone(), event.name));
                }
            }
            match image_kinds.get(&image) {
                Some(&k) if k != event.kind => {
                    let other = witness[&image].clone();
                    let (action, observation) = match event.kind {
                        Kind::Action => (event.name, other),
                        Kind::Observation => (other, event.name),
                    };
                    return Err(Error::MixedImage {
                        image,
                        action,
                        observation,
                    });
                }
                Some(_) => {}
                None => {
                    image_kinds.insert(image.clone(), event.kind);
                    witness.insert(image.clone(), event.name.clone());
                }
            }
            pre.entry(image.clone())
                .or_default()
                .insert(event.name.clone());
            map.insert(event.name, image);
        }
        Ok(LabelMap {
            map,
            kinds,
            pre,
            image_kinds,
        })
    }

    pub fn identity(domain: &[EventLabel]) -> Result<Self> {
        LabelMap::new(domain.iter().map(|e| (e.clone(), e.name.clone())))
    }

    /// The identity on the alphabet of `g`.
    pub fn identity_for(g: &PGraph) -> Self {
        LabelMap::identity(&g.alphabet()).expect("graph alphabets are disjoint")
    }

    pub fn image(&self, event: &str) -> Result<&str> {
        self.map
            .get(event)
            .map(String::as_str)
            .ok_or_else(|| Error::OutsideDomain(event.to_owned()))
    }

    pub fn preimage(&self, image: &str) -> Result<&BTreeSet<String>> {
        self.pre
            .get(image)
            .ok_or_else(|| Error::EmptyPreimage(image.to_owned()))
    }

    pub fn preimage_set<S: AsRef<str>>(
        &self,
        images: impl IntoIterator<Item = S>,
    ) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for x in images {
            out.extend(self.preimage(x.as_ref())?.iter().cloned());
        }
        Ok(out)
    }

    pub fn apply(&self, s: &Execution) -> Result<Execution> {
        s.events()
            .iter()
            .map(|e| self.image(e).map(str::to_owned))
            .collect::<Result<Vec<_>>>()
            .map(Execution::new)
    }

    pub fn domain(&self) -> Vec<EventLabel> {
        self.kinds
            .iter()
            .map(|(n, &k)| EventLabel {
                name: n.clone(),
                kind: k,
            })
            .collect()
    }

    pub fn images(&self) -> impl Iterator<Item = &String> {
        self.pre.keys()
    }

    pub fn image_kind(&self, image: &str) -> Option<Kind> {
        self.image_kinds.get(image).copied()
    }

    /// Preimage classes, i.e. the partition of the domain this map induces.
    pub fn blocks(&self) -> BTreeSet<BTreeSet<String>> {
        self.pre.values().cloned().collect()
    }

    pub fn co_blocked(&self, a: &str, b: &str) -> bool {
        matches!((self.map.get(a), self.map.get(b)), (Some(x), Some(y)) if x == y)
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(k, v)| k == v)
    }

    /// Loads `{"map": {...}}`; events of `g` not mentioned map to themselves.
    pub fn from_json(text: &str, g: &PGraph) -> Result<Self> {
        let doc: LabelMapDoc = serde_json::from_str(text)?;
        for e in doc.map.keys() {
            if !g.has_label(e) {
                return Err(Error::UnknownLabel(e.clone()));
            }
        }
        LabelMap::new(g.alphabet().into_iter().map(|e| {
            let image = doc
                .map
                .get(&e.name)
                .cloned()
                .unwrap_or_else(|| e.name.clone());
            (e, image)
        }))
    }

    pub fn to_json(&self) -> String {
        let doc = LabelMapDoc {
            map: self.map.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("label maps always serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelMapDoc {
    map: BTreeMap<String, String>,
}

/// Two events that one side wants co-blocked and the other wants separated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub first: String,
    pub second: String,
}

impl Conflict {
    fn new(a: &str, b: &str) -> Self {
        let (first, second) = if a <= b { (a, b) } else { (b, a) };
        Conflict {
            first: first.to_owned(),
            second: second.to_owned(),
        }
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conflict({}, {})", self.first, self.second)
    }
}

/// Commitments about which events share an image.
///
/// Every event in the support belongs to exactly one block. Pairs in
/// `apart` must end up in different blocks. A partition produced by
/// [`enumerate_partitions`] separates every pair of events in different
/// blocks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialLabelMap {
    blocks: BTreeSet<BTreeSet<String>>,
    apart: BTreeSet<(String, String)>,
}

fn pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

impl PartialLabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// A full partition of the union of `blocks`: events in one block are
    /// co-blocked, events in different blocks separated.
    pub fn from_blocks<S: AsRef<str>>(
        blocks: impl IntoIterator<Item = impl IntoIterator<Item = S>>,
    ) -> Self {
        let blocks: Vec<BTreeSet<String>> = blocks
            .into_iter()
            .map(|b| b.into_iter().map(|s| s.as_ref().to_owned()).collect())
            .filter(|b: &BTreeSet<String>| !b.is_empty())
            .collect();
        let mut apart = BTreeSet::new();
        for (i, x) in blocks.iter().enumerate() {
            for y in &blocks[i + 1..] {
                for a in x {
                    for b in y {
                        apart.insert(pair(a, b));
                    }
                }
            }
        }
        PartialLabelMap {
            blocks: blocks.into_iter().collect(),
            apart,
        }
    }

    /// Only co-blocking commitments, no separations.
    pub fn co_blocking<S: AsRef<str>>(
        blocks: impl IntoIterator<Item = impl IntoIterator<Item = S>>,
    ) -> Self {
        PartialLabelMap {
            blocks: blocks
                .into_iter()
                .map(|b| b.into_iter().map(|s| s.as_ref().to_owned()).collect())
                .filter(|b: &BTreeSet<String>| !b.is_empty())
                .collect(),
            apart: BTreeSet::new(),
        }
    }

    /// Adds a separation commitment between `a` and `b`.
    pub fn separate(&mut self, a: &str, b: &str) {
        for e in [a, b] {
            if self.block_of(e).is_none() {
                self.blocks.insert(BTreeSet::from([e.to_owned()]));
            }
        }
        self.apart.insert(pair(a, b));
    }

    pub fn blocks(&self) -> &BTreeSet<BTreeSet<String>> {
        &self.blocks
    }

    pub fn support(&self) -> BTreeSet<&String> {
        self.blocks.iter().flatten().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn block_of(&self, e: &str) -> Option<&BTreeSet<String>> {
        self.blocks.iter().find(|b| b.contains(e))
    }

    pub fn co_blocked(&self, a: &str, b: &str) -> bool {
        self.block_of(a).is_some_and(|x| x.contains(b))
    }

    pub fn separated(&self, a: &str, b: &str) -> bool {
        self.apart.contains(&pair(a, b))
    }

    /// Commitments involving only events of `events`.
    pub fn restrict(&self, events: &BTreeSet<String>) -> PartialLabelMap {
        PartialLabelMap {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.intersection(events).cloned().collect::<BTreeSet<_>>())
                .filter(|b| !b.is_empty())
                .collect(),
            apart: self
                .apart
                .iter()
                .filter(|(a, b)| events.contains(a) && events.contains(b))
                .cloned()
                .collect(),
        }
    }

    /// The finest partition coarser than both inputs, or the first separated
    /// pair that the merge would put into one block.
    pub fn consolidate(&self, other: &PartialLabelMap) -> Result<PartialLabelMap, Conflict> {
        let events: Vec<&String> = self
            .blocks
            .iter()
            .chain(other.blocks.iter())
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let idx: BTreeMap<&String, usize> =
            events.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut parent: Vec<usize> = (0..events.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for b in self.blocks.iter().chain(other.blocks.iter()) {
            let mut it = b.iter();
            if let Some(first) = it.next() {
                let r = find(&mut parent, idx[first]);
                for e in it {
                    let s = find(&mut parent, idx[e]);
                    if s != r {
                        parent[s] = r;
                    }
                }
            }
        }
        let apart: BTreeSet<(String, String)> = self.apart.union(&other.apart).cloned().collect();
        for (a, b) in &apart {
            let (ia, ib) = (idx[a], idx[b]);
            if find(&mut parent, ia) == find(&mut parent, ib) {
                return Err(Conflict::new(a, b));
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().insert((*e).clone());
        }
        Ok(PartialLabelMap {
            blocks: groups.into_values().collect(),
            apart,
        })
    }

    /// Extends to a total map on `domain`: unconstrained events get singleton
    /// images. A singleton block's image is its event; a larger block's image
    /// is its sorted events joined with `+`.
    pub fn finalize(&self, domain: &[EventLabel]) -> Result<LabelMap> {
        let kinds: BTreeMap<&str, Kind> =
            domain.iter().map(|e| (e.name.as_str(), e.kind)).collect();
        let mut blocks: Vec<Vec<String>> = Vec::new();
        let mut covered = BTreeSet::new();
        for b in &self.blocks {
            let members: Vec<String> = b
                .iter()
                .filter(|e| kinds.contains_key(e.as_str()))
                .cloned()
                .collect();
            covered.extend(members.iter().cloned());
            if !members.is_empty() {
                blocks.push(members);
            }
        }
        for e in domain {
            if !covered.contains(&e.name) {
                blocks.push(vec![e.name.clone()]);
            }
        }
        let mut names: BTreeSet<String> = BTreeSet::new();
        let mut pairs = Vec::new();
        // singletons first so that plain events keep their own names
        blocks.sort_by_key(|b| (b.len() > 1, b.clone()));
        for b in blocks {
            let mut name = b.join("+");
            while names.contains(&name) {
                name.push('\'');
            }
            names.insert(name.clone());
            for e in b {
                let kind = kinds[e.as_str()];
                pairs.push((EventLabel { name: e, kind }, name.clone()));
            }
        }
        LabelMap::new(pairs)
    }
}

impl PartialLabelMap {
    /// Every total map on `domain` that honours the commitments, finest
    /// first; the first item equals [`finalize`](Self::finalize).
    ///
    /// Unconstrained events (and whole blocks) may be merged with each other
    /// as long as no separated pair ends up in one block.
    pub fn extensions<'a>(
        &'a self,
        domain: &'a [EventLabel],
    ) -> impl Iterator<Item = Result<LabelMap>> + 'a {
        let per_kind = |kind: Kind| -> Vec<PartialLabelMap> {
            let names: BTreeSet<&str> = domain
                .iter()
                .filter(|e| e.kind == kind)
                .map(|e| e.name.as_str())
                .collect();
            let mut units: Vec<BTreeSet<String>> = self
                .blocks
                .iter()
                .map(|b| {
                    b.iter()
                        .filter(|e| names.contains(e.as_str()))
                        .cloned()
                        .collect::<BTreeSet<_>>()
                })
                .filter(|b| !b.is_empty())
                .collect();
            for n in &names {
                if self.block_of(n).is_none() {
                    units.push(BTreeSet::from([(*n).to_owned()]));
                }
            }
            let labels: Vec<String> = (0..units.len()).map(|i| format!("{i:04}")).collect();
            let mut out: Vec<PartialLabelMap> = Partitions::new(labels)
                .filter_map(|p| {
                    let merged: Vec<BTreeSet<String>> = p
                        .blocks()
                        .iter()
                        .map(|group| {
                            group
                                .iter()
                                .flat_map(|u| units[u.parse::<usize>().unwrap()].iter().cloned())
                                .collect()
                        })
                        .collect();
                    let clash = merged.iter().any(|b| {
                        self.apart
                            .iter()
                            .any(|(x, y)| b.contains(x) && b.contains(y))
                    });
                    (!clash).then(|| PartialLabelMap::co_blocking(merged))
                })
                .collect();
            out.sort_by_key(|m| std::cmp::Reverse(m.blocks.len()));
            out
        };
        let actions = per_kind(Kind::Action);
        let observations = per_kind(Kind::Observation);
        actions.into_iter().flat_map(move |a| {
            observations.clone().into_iter().map(move |o| {
                let mut blocks = a.blocks.clone();
                blocks.extend(o.blocks.iter().cloned());
                PartialLabelMap {
                    blocks,
                    apart: BTreeSet::new(),
                }
                .finalize(domain)
            })
        })
    }
}

impl fmt::Display for PartialLabelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .blocks
            .iter()
            .map(|b| format!("{{{}}}", b.iter().cloned().collect::<Vec<_>>().join(",")))
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Lazily enumerates every set partition of `events` via restricted growth
/// strings. Each item separates all pairs in different blocks.
pub fn enumerate_partitions(events: &[EventLabel]) -> Result<Partitions> {
    if let Some(first) = events.first() {
        if let Some(bad) = events.iter().find(|e| e.kind != first.kind) {
            return Err(Error::MixedKinds(first.name.clone(), bad.name.clone()));
        }
    }
    let mut names: Vec<String> = events.iter().map(|e| e.name.clone()).collect();
    names.sort();
    names.dedup();
    Ok(Partitions::new(names))
}

/// Iterator over the partitions of a list of names.
#[derive(Clone, Debug)]
pub struct Partitions {
    names: Vec<String>,
    rgs: Vec<usize>,
    done: bool,
}

impl Partitions {
    pub fn new(names: Vec<String>) -> Self {
        let n = names.len();
        Partitions {
            names,
            rgs: vec![0; n],
            done: false,
        }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        // rightmost position that can grow: rgs[i] <= max(rgs[..i])
        for i in (1..n).rev() {
            let max_before = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= max_before {
                self.rgs[i] += 1;
                for r in &mut self.rgs[i + 1..] {
                    *r = 0;
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Partitions {
    type Item = PartialLabelMap;

    fn next(&mut self) -> Option<PartialLabelMap> {
        if self.done {
            return None;
        }
        let k = self.rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks: Vec<Vec<&String>> = vec![Vec::new(); k];
        for (name, &r) in self.names.iter().zip(&self.rgs) {
            blocks[r].push(name);
        }
        let item = PartialLabelMap::from_blocks(blocks);
        self.advance();
        Some(item)
    }
}

/// Bell numbers by the binomial recurrence.
pub fn bell(n: usize) -> u128 {
    let mut b = vec![1u128];
    for m in 0..n {
        let mut c = 1u128;
        let mut s = 0u128;
        for (k, bk) in b.iter().enumerate() {
            s += c * bk;
            c = c * (m - k) as u128 / (k as u128 + 1);
        }
        b.push(s);
    }
    b[n]
}
