//! Shared test support: deterministic dataset generators and independent
//! oracle computations for validating the solver against brute force.

pub mod gen;
pub mod oracle;
