//! Verification layer: distance-law oracles, convergence fits, statistical
//! checks and the named suites.

pub mod checks;
pub mod laws;
pub mod maxprinciple;
pub mod order;
pub mod report;
pub mod suites;
pub mod trajectory;
