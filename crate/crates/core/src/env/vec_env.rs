use std::collections::BTreeMap;

use super::{AvoidanceEnv, EnvConfig, EnvError, SafeEnv, StepResult};
use crate::math::Vec2;
use crate::safety::{BarrierParams, SafetyState};

/// `num_envs` independent environments stepped in lockstep.
///
/// Sub-environment `i` is seeded with `seed + i`. Finished sub-environments
/// are not reset automatically; stepping one yields a per-slot
/// `SteppedAfterTermination` without disturbing the others.
#[derive(Debug, Clone)]
pub struct VecAvoidanceEnv {
    envs: Vec<AvoidanceEnv>,
}

impl VecAvoidanceEnv {
    pub fn new(config: EnvConfig, num_envs: usize) -> Result<Self, EnvError> {
        if num_envs == 0 {
            return Err(EnvError::InvalidConfig("num_envs must be >= 1".into()));
        }
        let base = config.seed;
        let envs = (0..num_envs)
            .map(|i| {
                let mut c = config.clone();
                c.seed = base.wrapping_add(i as u64);
                AvoidanceEnv::new(c)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { envs })
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn envs(&self) -> &[AvoidanceEnv] {
        &self.envs
    }

    pub fn env_mut(&mut self, index: usize) -> &mut AvoidanceEnv {
        &mut self.envs[index]
    }

    pub fn set_metric_params(&mut self, params: BarrierParams) {
        for env in &mut self.envs {
            env.set_metric_params(params);
        }
    }

    pub fn vec_reset(&mut self, seed: u64) -> Result<Vec<(Vec<f64>, SafetyState)>, EnvError> {
        self.envs
            .iter_mut()
            .enumerate()
            .map(|(i, env)| env.reset(seed.wrapping_add(i as u64)))
            .collect()
    }

    pub fn vec_step(&mut self, actions: &[Vec2]) -> Result<Vec<Result<StepResult, EnvError>>, EnvError> {
        if actions.len() != self.envs.len() {
            return Err(EnvError::BatchShapeMismatch {
                expected: self.envs.len(),
                got: actions.len(),
            });
        }
        Ok(self.envs.iter_mut().zip(actions).map(|(env, a)| env.step(*a)).collect())
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        self.envs.iter().map(SafeEnv::observation).collect()
    }

    pub fn safety_states(&self) -> Vec<SafetyState> {
        self.envs.iter().map(SafeEnv::safety_state).collect()
    }

    pub fn safety_metrics(&self) -> Vec<BTreeMap<String, f64>> {
        self.envs.iter().map(SafeEnv::safety_metrics).collect()
    }

    pub fn dones(&self) -> Vec<bool> {
        self.envs.iter().map(SafeEnv::is_done).collect()
    }

    pub fn all_done(&self) -> bool {
        self.envs.iter().all(SafeEnv::is_done)
    }
}
