//! Dual-barrier control-barrier-function safety filter.
//!
//! The plant is a single integrator: the action is a commanded planar
//! velocity, so both barriers have relative degree one and each barrier
//! condition `ḣ + α·h ≥ 0` is a half-space in action space. The filter
//! projects a nominal action onto the intersection of the two half-spaces
//! with a minimal-deviation objective and no shrinkage term.

mod filter;
mod projection;

pub use filter::{DualBarrierCbf, SafetyFilter, SafetyFilterResult};
pub use projection::{project_halfspace_box, project_two_halfspaces, HalfSpace, Projection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec2;

/// Slack used for feasibility and tightness checks, in SI units.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Below this relative distance (or determinant) the geometry is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum SafetyError {
    #[error("invalid safety state: {0}")]
    InvalidState(String),
    #[error("invalid barrier parameters: {0}")]
    InvalidParams(String),
    #[error("nominal action is not finite")]
    NonFiniteAction,
    #[error("degenerate geometry: drone is {distance:e} m from the obstacle center")]
    DegenerateGeometry { distance: f64 },
    #[error("barrier constraints are infeasible")]
    InfeasibleConstraints,
    #[error("batch length mismatch: {states} states, {nominals} nominal actions")]
    BatchLengthMismatch { states: usize, nominals: usize },
}

/// Relative obstacle geometry and velocities consumed by the filter.
///
/// `rel_position` is drone center minus obstacle center, so a growing norm
/// means the drone is receding from the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyState {
    pub rel_position: Vec2,
    pub drone_velocity: Vec2,
    pub obstacle_velocity: Vec2,
    pub drone_radius: f64,
    pub obstacle_radius: f64,
}

impl SafetyState {
    pub fn new(
        rel_position: Vec2,
        drone_velocity: Vec2,
        obstacle_velocity: Vec2,
        drone_radius: f64,
        obstacle_radius: f64,
    ) -> Result<Self, SafetyError> {
        let state = Self {
            rel_position,
            drone_velocity,
            obstacle_velocity,
            drone_radius,
            obstacle_radius,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), SafetyError> {
        if !(self.rel_position.is_finite()
            && self.drone_velocity.is_finite()
            && self.obstacle_velocity.is_finite()
            && self.drone_radius.is_finite()
            && self.obstacle_radius.is_finite())
        {
            return Err(SafetyError::InvalidState("non-finite component".into()));
        }
        if self.drone_radius <= 0.0 {
            return Err(SafetyError::InvalidState(format!(
                "drone_radius must be positive, got {}",
                self.drone_radius
            )));
        }
        if self.obstacle_radius <= 0.0 {
            return Err(SafetyError::InvalidState(format!(
                "obstacle_radius must be positive, got {}",
                self.obstacle_radius
            )));
        }
        Ok(())
    }
}

/// Barrier gains and actuator limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierParams {
    /// Class-K gain shared by both barrier conditions, 1/s.
    pub alpha: f64,
    /// Actuator-lag horizon, s.
    pub tau_lag: f64,
    /// Braking deceleration bound, m/s².
    pub a_max: f64,
    /// Speed command bound and half-extent of the action box, m/s.
    pub v_max: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            tau_lag: 0.1,
            a_max: 4.0,
            v_max: 5.0,
        }
    }
}

impl BarrierParams {
    pub fn validate(&self) -> Result<(), SafetyError> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.alpha) && self.alpha > 0.0) {
            return Err(SafetyError::InvalidParams(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(ok(self.tau_lag) && self.tau_lag >= 0.0) {
            return Err(SafetyError::InvalidParams(format!(
                "tau_lag must be >= 0, got {}",
                self.tau_lag
            )));
        }
        if !(ok(self.a_max) && self.a_max > 0.0) {
            return Err(SafetyError::InvalidParams(format!(
                "a_max must be > 0, got {}",
                self.a_max
            )));
        }
        if !(ok(self.v_max) && self.v_max > 0.0) {
            return Err(SafetyError::InvalidParams(format!(
                "v_max must be > 0, got {}",
                self.v_max
            )));
        }
        Ok(())
    }
}

/// Drone radius plus physical obstacle radius.
pub fn effective_radius(state: &SafetyState) -> f64 {
    state.drone_radius + state.obstacle_radius
}

/// Squared hard non-collision barrier `‖r‖² − R²`, in m².
pub fn h_hard(state: &SafetyState) -> f64 {
    let radius = effective_radius(state);
    state.rel_position.norm_sq() - radius * radius
}

/// Velocity-dependent margin covering actuator lag and braking distance:
/// `tau_lag·v + v²/(2·a_max)`.
pub fn predictive_margin(speed: f64, params: &BarrierParams) -> f64 {
    params.tau_lag * speed + speed * speed / (2.0 * params.a_max)
}

/// Linear predictive barrier `‖r‖ − R − D(‖v‖)`, in m.
pub fn h_soft(state: &SafetyState, params: &BarrierParams) -> f64 {
    state.rel_position.norm() - effective_radius(state) - predictive_margin(state.drone_velocity.norm(), params)
}

/// The two barrier conditions as half-spaces in commanded-velocity space.
///
/// With `u` the commanded velocity and `v_o` the obstacle velocity,
/// `ḣ_hard = 2r·(u − v_o)` and `ḣ_soft = r̂·(u − v_o)`; the predictive margin
/// is frozen at the measured speed over the step so the soft row stays affine.
pub fn constraint_rows(state: &SafetyState, params: &BarrierParams) -> Result<(HalfSpace, HalfSpace), SafetyError> {
    let r = state.rel_position;
    let dist = r.norm();
    if dist < DEGENERACY_TOL {
        return Err(SafetyError::DegenerateGeometry { distance: dist });
    }
    let v_o = state.obstacle_velocity;

    let hard_normal = r * 2.0;
    let hard = HalfSpace {
        normal: hard_normal,
        offset: -params.alpha * h_hard(state) + hard_normal.dot(v_o),
    };

    let unit = r * (1.0 / dist);
    let soft = HalfSpace {
        normal: unit,
        offset: -params.alpha * h_soft(state, params) + unit.dot(v_o),
    };
    Ok((hard, soft))
}
