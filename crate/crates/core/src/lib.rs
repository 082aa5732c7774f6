//! Exact and certified computations for the group Russian roulette process:
//! every person alive shoots a uniformly random other person each round, and
//! `p_n` is the probability that a group of `n` ends with nobody alive.

pub mod bounds;
pub mod coupling;
pub mod decimal;
pub mod enclosure;
pub mod error;
pub mod intervals;
pub mod survivor;
pub mod tail;

pub use enclosure::{Real, RealEnclosure};
pub use error::{Error, Result};
