//! The two benchmark worlds: nuclear inspection on a 3×4 grid and the
//! pentagonal loop.

use std::collections::BTreeSet;

use crate::labelmap::LabelMap;
use crate::pgraph::{sde, EventLabel, Kind, PGraph, VertexSet};
use crate::planning::{Plan, PlanningProblem};
use crate::stipulation::{Clause, Formula, Literal};

pub type Cell = (usize, usize);

/// Layout of the inspection grid.
///
/// The facility is a pebble-bed (`P`) or breeder (`B`) reactor with high
/// (`H`) or low (`L`) radioactivity, unknown to the robot at the start. The
/// blue-light cell shows `blue` for a pebble-bed and `dark` otherwise. Each
/// facility type has its own measurement cell, which reports `high`/`low`
/// for that type and `dark` for the other. Reaching the exit cell yields
/// `exit` and ends all movement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuclearConfig {
    pub rows: usize,
    pub cols: usize,
    pub start: Cell,
    pub blue_light: Cell,
    pub measure_pebble: Cell,
    pub measure_breeder: Cell,
    pub exit: Cell,
}

impl Default for NuclearConfig {
    fn default() -> Self {
        NuclearConfig {
            rows: 3,
            cols: 4,
            start: (0, 0),
            blue_light: (0, 1),
            measure_pebble: (0, 3),
            measure_breeder: (2, 1),
            exit: (1, 2),
        }
    }
}

pub const CONFIGS: [&str; 4] = ["PH", "PL", "BH", "BL"];
pub const MOVES: [&str; 4] = ["down", "left", "right", "up"];
pub const NUCLEAR_OBSERVATIONS: [&str; 5] = ["blue", "dark", "exit", "high", "low"];

#[derive(Clone, Debug)]
pub struct NuclearScenario {
    pub config: NuclearConfig,
    /// The grid world before state-determined expansion.
    pub raw: PGraph,
    /// Planning problem over the expanded world.
    pub problem: PlanningProblem,
    pub map: LabelMap,
    pub formula: Formula,
}

fn action_id((r, c): Cell, cfg: &str) -> String {
    format!("u{r}{c}.{cfg}")
}

fn observation_id((r, c): Cell, cfg: &str) -> String {
    format!("y{r}{c}.{cfg}")
}

impl NuclearConfig {
    fn observe(&self, cell: Cell, cfg: &str) -> &'static str {
        let pebble = cfg.starts_with('P');
        let level = if cfg.ends_with('H') { "high" } else { "low" };
        if cell == self.blue_light {
            if pebble {
                "blue"
            } else {
                "dark"
            }
        } else if cell == self.measure_pebble {
            if pebble {
                level
            } else {
                "dark"
            }
        } else if cell == self.measure_breeder {
            if pebble {
                "dark"
            } else {
                level
            }
        } else if cell == self.exit {
            "exit"
        } else {
            "dark"
        }
    }

    fn neighbour(&self, (r, c): Cell, m: &str) -> Option<Cell> {
        match m {
            "up" => r.checked_sub(1).map(|r| (r, c)),
            "down" => (r + 1 < self.rows).then_some((r + 1, c)),
            "left" => c.checked_sub(1).map(|c| (r, c)),
            "right" => (c + 1 < self.cols).then_some((r, c + 1)),
            _ => None,
        }
    }

    /// The raw grid world: one action and one observation vertex per cell and
    /// hidden configuration.
    pub fn raw_world(&self) -> PGraph {
        let mut b = PGraph::builder();
        for r in 0..self.rows {
            for c in 0..self.cols {
                for cfg in CONFIGS {
                    let cell = (r, c);
                    b.vertex(action_id(cell, cfg), Kind::Action, cell == self.start);
                    b.observation_vertex(observation_id(cell, cfg));
                    b.edge(
                        observation_id(cell, cfg),
                        action_id(cell, cfg),
                        [self.observe(cell, cfg)],
                    );
                    if cell == self.exit {
                        continue;
                    }
                    for m in MOVES {
                        if let Some(n) = self.neighbour(cell, m) {
                            b.edge(action_id(cell, cfg), observation_id(n, cfg), [m]);
                        }
                    }
                }
            }
        }
        b.actions(MOVES).observations(NUCLEAR_OBSERVATIONS);
        b.build().expect("grid ids are unique")
    }
}

/// Configurations whose raw vertices make up expanded vertex `v`.
fn configs_of(raw: &PGraph, subset: &VertexSet) -> BTreeSet<String> {
    subset
        .iter()
        .map(|&v| raw.id(v).split('.').nth(1).unwrap_or_default().to_owned())
        .collect()
}

pub fn build_nuclear() -> NuclearScenario {
    build_nuclear_with(NuclearConfig::default())
}

pub fn build_nuclear_with(config: NuclearConfig) -> NuclearScenario {
    let raw = config.raw_world();
    let det = sde(&raw);
    let world = det.graph.clone();
    let exit_prefix = {
        let (r, c) = config.exit;
        format!("u{r}{c}.")
    };
    let mut goal = VertexSet::new();
    let mut high = Vec::new();
    let mut low = Vec::new();
    let mut pebble = Vec::new();
    let mut breeder = Vec::new();
    for v in 0..world.vertex_count() {
        let subset = &det.subsets[v];
        let cfgs = configs_of(&raw, subset);
        if cfgs.iter().any(|c| c.starts_with('P')) {
            pebble.push(Literal::pos(world.id(v)));
        }
        if cfgs.iter().any(|c| c.starts_with('B')) {
            breeder.push(Literal::pos(world.id(v)));
        }
        let at_exit = subset.iter().all(|&m| raw.id(m).starts_with(&exit_prefix));
        if !at_exit {
            continue;
        }
        if cfgs.iter().all(|c| c.ends_with('H')) {
            goal.insert(v);
            high.push(world.id(v).to_owned());
        } else if cfgs.iter().all(|c| c.ends_with('L')) {
            goal.insert(v);
            low.push(world.id(v).to_owned());
        }
    }
    let mut clauses = vec![Clause { literals: pebble }, Clause { literals: breeder }];
    for a in &high {
        for b in &low {
            clauses.push(Clause {
                literals: vec![Literal::neg(a.clone()), Literal::neg(b.clone())],
            });
        }
    }
    let formula = Formula { clauses };
    let map = LabelMap::new(
        MOVES
            .iter()
            .map(|m| (EventLabel::action(*m), "move".to_owned()))
            .chain(NUCLEAR_OBSERVATIONS.iter().map(|o| {
                let image = match *o {
                    "blue" | "dark" => "look",
                    other => other,
                };
                (EventLabel::observation(*o), image.to_owned())
            })),
    )
    .expect("nuclear map is kind-preserving");
    NuclearScenario {
        config,
        raw,
        problem: PlanningProblem { world, goal },
        map,
        formula,
    }
}

/// The pentagonal loop.
///
/// Loop positions `p0` (top left) to `p4` run clockwise; `a1` advances one
/// position and the robot then observes `o2`. Leaving `p2` the robot may
/// slip, staying at `p2` and observing `o4`; this can happen only once, so
/// every position also exists in a slipped copy (`p0s`...). From `p0` the
/// exit `a2` leads to the left charging station (`eL`, then `o1`, then `cL`);
/// from `p1` the exit `a3` leads to the right one (`eR`, `o3`, `cR`). The
/// robot starts at `p0`; the charging stations are the goal.
#[derive(Clone, Debug)]
pub struct PentagonScenario {
    pub problem: PlanningProblem,
    pub formula: Formula,
    /// Exit at the first step and stop at the left station.
    pub direct_exit: Plan,
}

pub const PENTAGON_SIZE: usize = 5;
pub const PENTAGON_SLIP_AT: usize = 2;

pub fn build_pentagon() -> PentagonScenario {
    let mut b = PGraph::builder();
    for flag in ["", "s"] {
        for k in 0..PENTAGON_SIZE {
            let here = format!("p{k}{flag}");
            let moving = format!("m{k}{flag}");
            b.vertex(here.clone(), Kind::Action, k == 0 && flag.is_empty());
            b.observation_vertex(moving.clone());
            b.edge(here.clone(), moving.clone(), ["a1"]);
            let next = (k + 1) % PENTAGON_SIZE;
            b.edge(moving.clone(), format!("p{next}{flag}"), ["o2"]);
            if k == PENTAGON_SLIP_AT && flag.is_empty() {
                b.edge(moving, format!("p{k}s"), ["o4"]);
            }
            match k {
                0 => {
                    b.edge(here, "eL", ["a2"]);
                }
                1 => {
                    b.edge(here, "eR", ["a3"]);
                }
                _ => {}
            }
        }
    }
    b.observation_vertex("eL")
        .observation_vertex("eR")
        .action_vertex("cL")
        .action_vertex("cR")
        .edge("eL", "cL", ["o1"])
        .edge("eR", "cR", ["o3"])
        .actions(["a1", "a2", "a3"])
        .observations(["o1", "o2", "o3", "o4"]);
    let world = b.build().expect("pentagon ids are unique");
    let problem = PlanningProblem::from_ids(world, ["cL", "cR"]).expect("goal ids exist");
    let pair = |x: &str, y: &str| Clause {
        literals: vec![Literal::neg(x), Literal::pos(y)],
    };
    let formula = Formula {
        clauses: vec![
            pair("eL", "eR"),
            pair("eR", "eL"),
            pair("cL", "cR"),
            pair("cR", "cL"),
        ],
    };
    let mut b = PGraph::builder();
    b.vertex("d0", Kind::Action, true)
        .observation_vertex("d1")
        .action_vertex("d2")
        .edge("d0", "d1", ["a2"])
        .edge("d1", "d2", ["o1"])
        .actions(["a1", "a2", "a3"])
        .observations(["o1", "o2", "o3", "o4"]);
    let direct_exit =
        Plan::from_ids(b.build().expect("plan ids are unique"), ["d2"]).expect("term id exists");
    PentagonScenario {
        problem,
        formula,
        direct_exit,
    }
}
