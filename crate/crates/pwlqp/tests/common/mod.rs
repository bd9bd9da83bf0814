//! Shared oracle machinery for the integration tests. Everything here is
//! written against the problem statement directly and avoids the solver's
//! own reduction and factorization paths.
#![allow(dead_code)]

pub mod dense;
pub mod gen;
pub mod kkt;
pub mod newton;
pub mod pdhg;
