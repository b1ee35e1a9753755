mod common;

use std::collections::BTreeSet;

use common::gen::{self, Rand};
use common::oracle::{self, Adj, Observer};
use pgplan::labelmap::LabelMap;
use pgplan::observer::finest_observer;
use pgplan::planning::{check_solves, congruent_tree, Condition};
use pgplan::seek_p::{seek_plan, SeekPConfig};
use pgplan::stipulation::Formula;
use pgplan::{BoundFormula, Plan, PlanningProblem};
use proptest::prelude::*;
use rand::Rng;

/// A random problem and, when one exists, a solving tree plan.
fn solved(r: &mut Rand) -> Option<(PlanningProblem, Plan)> {
    let n = r.gen_range(2..=6);
    let (a, o) = (r.gen_range(1..=3), r.gen_range(1..=2));
    let acyclic = r.gen_bool(0.7);
    let w = gen::random_sde_world(r, n, a, o, acyclic);
    let goal = gen::random_goal(r, &w);
    let problem = PlanningProblem::new(w, goal).ok()?;
    let h = LabelMap::identity_for(&problem.world);
    let i = finest_observer(&problem.world, &h).ok()?;
    let res = seek_plan(
        &problem,
        &i,
        &problem.world,
        &h,
        &BoundFormula::truth(),
        &SeekPConfig::default(),
    )
    .ok()?;
    let plan = res.outcome.found()?.clone();
    Some((problem, plan))
}

/// `plan` with some same-kind vertices merged; a class is terminal iff one
/// of its members is.
fn merged(r: &mut Rand, plan: &Plan) -> Plan {
    let merges = r.gen_range(1..=3);
    let class = gen::random_classes(r, &plan.graph, merges);
    let graph = gen::quotient(&plan.graph, &class);
    let term: Vec<String> = plan
        .term
        .iter()
        .map(|&t| format!("q{}", class[t]))
        .collect();
    Plan::from_ids(graph, term).unwrap()
}

#[test]
fn term_outside_goal_is_reported_with_witness() {
    let w = common::forked();
    let problem = PlanningProblem::from_ids(w.clone(), ["w3"]).unwrap();
    let mut b = pgplan::PGraph::builder();
    b.vertex("p0", pgplan::Kind::Action, true)
        .observation_vertex("p1")
        .action_vertex("p2")
        .edge("p0", "p1", ["a2"])
        .edge("p1", "p2", ["o1"])
        .actions(["a2"])
        .observations(["o1"]);
    let plan = Plan::from_ids(b.build().unwrap(), ["p2"]).unwrap();
    let v = check_solves(&plan, &problem)
        .unwrap()
        .expect("w4 is not a goal");
    assert_eq!(v.condition, Condition::TermOutsideGoal);
    assert_eq!(v.world_vertex, "w4");
    assert_eq!(v.witness.to_string(), "a2 o1");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn found_plans_solve_and_agree_with_the_set_definition(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        if let Some((problem, plan)) = solved(&mut r) {
            prop_assert!(check_solves(&plan, &problem).unwrap().is_none());
            prop_assert!(plan.is_tree());
            let w = &problem.world;
            let table = gen::identity_table(w);
            let ok = oracle::check_bruteforce(
                &Adj::of(w),
                &problem.goal,
                &Adj::of(&plan.graph),
                &plan.term,
                None,
                Observer::Finest,
                &table,
                &Formula { clauses: Vec::new() },
                32,
            );
            prop_assert_eq!(ok, Some(true));
        }
    }

    #[test]
    fn tree_unfolding_keeps_language_and_solving(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let Some((problem, plan)) = solved(&mut r) else { return Ok(()) };
        let plan = merged(&mut r, &plan);
        let k = problem.world.vertex_count() * plan.graph.vertex_count() + 1;
        let tree = congruent_tree(&plan, k);
        prop_assert!(tree.is_tree());
        prop_assert_eq!(tree.graph.language_upto(k), plan.graph.language_upto(k));
        // distinct executions end at distinct tree vertices
        let mut ends = BTreeSet::new();
        for s in tree.graph.language_upto(k) {
            let reached = tree.graph.reached_vertices(&s).unwrap();
            prop_assert_eq!(reached.len(), 1);
            prop_assert!(ends.insert(reached));
        }
        if check_solves(&plan, &problem).unwrap().is_none() {
            prop_assert!(check_solves(&tree, &problem).unwrap().is_none());
        }
    }

    #[test]
    fn shrinking_term_keeps_a_bad_terminal_bad(seed in any::<u64>(), drop in any::<u64>()) {
        let mut r = gen::rng(seed);
        let Some((problem, plan)) = solved(&mut r) else { return Ok(()) };
        let plan = merged(&mut r, &plan);
        let Some(v) = check_solves(&plan, &problem).unwrap() else { return Ok(()) };
        if v.condition != Condition::TermOutsideGoal {
            return Ok(());
        }
        let bad = plan.graph.index_of(&v.plan_vertex).unwrap();
        let term: BTreeSet<usize> = plan
            .term
            .iter()
            .copied()
            .filter(|&t| t == bad || drop >> (t % 64) & 1 == 0)
            .collect();
        let smaller = Plan::new(plan.graph.clone(), term).unwrap();
        prop_assert!(check_solves(&smaller, &problem).unwrap().is_some());
    }

    #[test]
    fn c_bound_matches_longest_execution(seed in any::<u64>()) {
        let mut r = gen::rng(seed);
        let Some((_, plan)) = solved(&mut r) else { return Ok(()) };
        let longest = plan.graph.longest_execution().unwrap();
        prop_assert!(plan.is_c_bounded(longest));
        if longest > 0 {
            prop_assert!(!plan.is_c_bounded(longest - 1));
        }
    }
}
