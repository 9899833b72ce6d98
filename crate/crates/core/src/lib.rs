//! Workbench for experiments with random restrictions, switching behaviour,
//! number-on-forehead communication, and hardness-based seed-stretching
//! generators over small circuit classes.
//!
//! Everything here runs at desk scale: truth tables are capped at 28
//! variables and the expensive searches considerably lower. The point is to
//! make the objects concrete and checkable, not to be asymptotically fast.

pub mod circuit;
pub mod design;
pub mod error;
pub mod hardfn;
pub mod harness;
pub mod nof;
pub mod nwgen;
pub mod poly;
pub mod restriction;
pub mod restrictlab;
pub mod rng;
pub mod stats;
pub mod truthtable;

pub use error::{Error, Result};
pub use restriction::{Cell, Restriction};
pub use truthtable::TruthTable;
