//! Numerical laboratory for critical points and level sets of solutions to
//! linear elliptic Dirichlet problems on annuli and disks.

pub mod critical;
pub mod domain;
pub mod solver;
pub mod topology;
pub mod verify;

pub use domain::{Point, ScenarioSpec};
