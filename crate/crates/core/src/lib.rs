//! Teleo-reactive programs: a small language for ordered condition -> action
//! rules, an interpreter that re-evaluates every condition on the activation
//! path each tick, static checks of the regression/completeness properties,
//! a compiler to threshold networks, and a deterministic 2D bar world to run
//! them in.

pub mod analysis;
pub mod botworld;
pub mod geom;
pub mod lang;
pub mod netcomp;
pub mod runtime;
pub mod sim;
