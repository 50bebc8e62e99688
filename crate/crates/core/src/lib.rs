//! Best approximate solutions for generalized Nash games and quasi-optimization
//! problems whose constraint maps need not map into the strategy sets.

pub mod certify;
pub mod cli;
pub mod diagnostics;
pub mod examples;
pub mod expr;
pub mod geometry;
pub mod model;
pub mod oracle;
mod par;
pub mod response;
pub mod solver;
