//! Constrained school-choice mechanisms, blocking-student diagnostics,
//! manipulation and equilibrium analysis, and falsification sweeps over
//! instance families.

pub mod cli;
pub mod fairness;
pub mod io;
pub mod mechanisms;
pub mod model;
pub mod strategy;
pub mod verify;
