//! Safety-filtered reinforcement-learning infrastructure for a planar
//! avoidance task.
//!
//! Layers, bottom to top:
//! - [`env`]: deterministic point-mass environment and its vectorized form.
//! - [`safety`]: dual-barrier CBF filter with closed-form QP projection.
//! - [`pipeline`]: safety wrapper, algorithm contract, reference policies.
//! - [`ops`]: pre-registration, watchdogs, forensics, atomic writes, audits.
//!
//! [`campaign`] runs curriculum-biased data collection on top of these, and
//! [`cli`] is the command-line front end.

pub mod campaign;
pub mod cli;
pub mod env;
pub mod math;
pub mod ops;
pub mod pipeline;
pub mod safety;

pub use math::Vec2;
