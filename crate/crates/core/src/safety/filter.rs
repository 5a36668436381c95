use serde::{Deserialize, Serialize};

use super::{
    constraint_rows, h_hard, h_soft, project_halfspace_box, project_two_halfspaces, BarrierParams, SafetyError,
    SafetyState, FEASIBILITY_TOL,
};
use crate::math::Vec2;

/// Output of one filter evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyFilterResult {
    pub safe_action: Vec2,
    pub modified: bool,
    pub h_hard: f64,
    pub h_soft: f64,
    pub active_hard: bool,
    pub active_soft: bool,
    /// The projected action left the action box and was clipped.
    pub box_clipped: bool,
    /// Clipping broke the hard row, so the action was re-projected onto the
    /// hard half-space intersected with the box (the soft row is dropped).
    pub box_fallback: bool,
}

/// A component that maps a nominal action to a safe one.
pub trait SafetyFilter: Send + Sync {
    /// `observation` is available to learned filters; the reference filter ignores it.
    fn filter_action(
        &self,
        observation: &[f64],
        nominal_action: Vec2,
        state: &SafetyState,
    ) -> Result<SafetyFilterResult, SafetyError>;

    /// Evaluates each element independently. Element errors land in their own
    /// slot and never affect neighbours.
    fn filter_action_batch(
        &self,
        states: &[SafetyState],
        nominals: &[Vec2],
    ) -> Result<Vec<Result<SafetyFilterResult, SafetyError>>, SafetyError> {
        if states.len() != nominals.len() {
            return Err(SafetyError::BatchLengthMismatch {
                states: states.len(),
                nominals: nominals.len(),
            });
        }
        Ok(states
            .iter()
            .zip(nominals)
            .map(|(s, u)| self.filter_action(&[], *u, s))
            .collect())
    }
}

/// Reference closed-form filter over the squared hard barrier and the linear
/// predictive barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualBarrierCbf {
    params: BarrierParams,
}

impl DualBarrierCbf {
    pub fn new(params: BarrierParams) -> Result<Self, SafetyError> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &BarrierParams {
        &self.params
    }
}

impl SafetyFilter for DualBarrierCbf {
    fn filter_action(
        &self,
        _observation: &[f64],
        nominal_action: Vec2,
        state: &SafetyState,
    ) -> Result<SafetyFilterResult, SafetyError> {
        if !nominal_action.is_finite() {
            return Err(SafetyError::NonFiniteAction);
        }
        state.validate()?;
        let params = &self.params;
        let (hard, soft) = constraint_rows(state, params)?;
        let projection = project_two_halfspaces(nominal_action, &hard, &soft)?;

        let mut action = projection.point.clamp_box(params.v_max);
        let box_clipped = action != projection.point;
        let mut box_fallback = false;
        if box_clipped && !hard.contains(action) {
            action = project_halfspace_box(nominal_action, &hard, params.v_max).0;
            box_fallback = true;
        }

        Ok(SafetyFilterResult {
            safe_action: action,
            modified: (action - nominal_action).norm() > FEASIBILITY_TOL,
            h_hard: h_hard(state),
            h_soft: h_soft(state, params),
            active_hard: hard.is_tight(action),
            active_soft: soft.is_tight(action),
            box_clipped,
            box_fallback,
        })
    }
}
