//! Solver for convex quadratic programs with piecewise-linear objective terms.

pub mod cli;
pub mod io;
pub mod linalg;
pub mod model;
pub mod problem;
pub mod prox;
pub mod pmm;
pub mod ssn;
pub mod warmstart;
