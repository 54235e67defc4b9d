//! Swarm solver for n-queens and binary constraint satisfaction problems.
//!
//! A population of energy-bearing agents, each confined to one row of the
//! board, moves under a mix of random, least-conflict, and cooperative
//! strategies. Conflicts drain energy, starved agents die, and near-equal
//! neighbors on a cell merge, so the surviving population condenses onto
//! mutually consistent positions; a board whose rows each hold one
//! attack-free position is a solution.
//!
//! Module map:
//! - [`csp`]: problem definitions — queens rules, extensional instances,
//!   the JSON document format, and the cell-adjacency index.
//! - [`space`]: the shared board with incremental conflict counters.
//! - [`agents`]: agent state, behavior selection, and move resolution.
//! - [`engine`]: the tick scheduler, run sequencing, and restarts.
//! - [`verify`]: independent checkers and exhaustive enumerators, written
//!   against the problem rules rather than the solver.
//! - [`harness`]: parameter sweeps, CSV/report output, and the CLI.

pub mod agents;
pub mod csp;
pub mod engine;
pub mod harness;
pub mod space;
pub mod verify;
