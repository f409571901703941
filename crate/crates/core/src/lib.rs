//! Perfect-graph modification: exact editing, completion, deletion and
//! sandwich solvers driven by lazily generated odd-hole and odd-antihole
//! constraints, a greedy flip heuristic, and expected hole counts for
//! Erdős–Rényi graphs.

pub mod expectation;
pub mod graph;
pub mod heuristic;
pub mod holes;
pub mod io;
pub mod master;
mod relax;
pub mod solve;

pub use graph::{generate_er, ErParams, Graph, VertexPair};
pub use holes::{find_odd_antiholes, find_odd_holes, find_odd_holes_through_pair, is_perfect, Hole, HoleKind};
pub use heuristic::{run_heuristic, HeuristicMode, HeuristicOutcome, HeuristicRun};
pub use solve::{
    solve_complete, solve_delete, solve_edit, solve_instance, solve_sandwich, Instance, ProblemKind,
    SolveResult, SolveStatus, StrategyConfig, Termination,
};
