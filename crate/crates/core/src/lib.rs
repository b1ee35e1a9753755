//! Planning in the presence of an observer.
//!
//! Worlds, plans, observer filters and divulged plans are all p-graphs:
//! bipartite labelled transition structures alternating action and
//! observation vertices. A disclosure policy is a label map from the robot's
//! events to the symbols the observer sees. A stipulation is a CNF formula over
//! world vertices, evaluated on the observer's estimated world states after
//! every prefix of the plan.
//!
//! The crate provides:
//!
//! * [`pgraph`]: the p-graph type, tracing, bounded languages, exact-reach
//!   sets, tensor products, state-determined expansion and label-map images.
//! * [`labelmap`]: total and partial label maps, set-partition enumeration and
//!   conflict-checked consolidation.
//! * [`planning`]: planning problems, the "solves" verifier, c-boundedness and
//!   tree unfolding of plans.
//! * [`observer`]: finest observers, divulged plans and estimated world states.
//! * [`stipulation`]: the CNF stipulation language.
//! * [`seek_p`]: plan synthesis for a fixed observer and label map, plus the
//!   standalone `check` verifier.
//! * [`seek_plm`]: joint synthesis of a plan and a label map for the finest
//!   observer that knows the plan.
//! * [`scenarios`]: the nuclear-inspection and pentagon worlds.

pub mod error;
pub mod labelmap;
pub mod observer;
pub mod par;
pub mod pgraph;
pub mod planning;
pub mod scenarios;
pub mod seek_p;
pub mod seek_plm;
pub mod stipulation;

pub use error::{Error, Result};
pub use labelmap::{LabelMap, PartialLabelMap};
pub use observer::{Belief, BeliefEngine};
pub use par::Exec;
pub use pgraph::{EventLabel, Execution, Kind, PGraph, VertexSet};
pub use planning::{Plan, PlanningProblem};
pub use stipulation::{BoundFormula, Formula};
