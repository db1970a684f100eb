//! Sponsorship games between CPs.

pub mod continuous;
pub mod discrete;

pub use continuous::*;
pub use discrete::*;
