use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Algorithm, HiddenState, PipelineError, RolloutRecord, StepRecord};
use crate::env::{AvoidanceEnv, SafeEnv, TerminationReason, VecAvoidanceEnv};
use crate::math::Vec2;
use crate::safety::{SafetyError, SafetyFilter, SafetyFilterResult};

/// Filter errors that mean the geometry is already lost. The episode ends as
/// a collision instead of aborting the whole run.
fn is_terminal_geometry(e: &SafetyError) -> bool {
    matches!(
        e,
        SafetyError::DegenerateGeometry { .. } | SafetyError::InfeasibleConstraints
    )
}

fn unfiltered(env: &AvoidanceEnv, nominal: Vec2) -> SafetyFilterResult {
    let m = env.safety_metrics();
    SafetyFilterResult {
        safe_action: nominal,
        modified: false,
        h_hard: m["h_hard"],
        h_soft: m["h_soft"],
        active_hard: false,
        active_soft: false,
        box_clipped: false,
        box_fallback: false,
    }
}

/// Outcome of feeding one filter decision into one environment.
enum Advance {
    Continue,
    Done(TerminationReason),
}

fn advance(
    env: &mut AvoidanceEnv,
    observation: Vec<f64>,
    nominal: Vec2,
    filtered: Result<SafetyFilterResult, SafetyError>,
    steps: &mut Vec<StepRecord>,
) -> Result<Advance, PipelineError> {
    let f = match filtered {
        Ok(f) => f,
        Err(e) if is_terminal_geometry(&e) => return Ok(Advance::Done(TerminationReason::Collision)),
        Err(e) => return Err(e.into()),
    };
    let result = env.step(f.safe_action)?;
    steps.push(StepRecord {
        observation,
        nominal_action: nominal,
        safe_action: f.safe_action,
        modified: f.modified,
        h_hard: f.h_hard,
        h_soft: f.h_soft,
    });
    Ok(match result.termination_reason {
        Some(reason) => Advance::Done(reason),
        None => Advance::Continue,
    })
}

fn finish(env: &AvoidanceEnv, seed: u64, steps: Vec<StepRecord>, reason: TerminationReason) -> RolloutRecord {
    RolloutRecord {
        scene_type: env.scene_type(),
        seed,
        length: steps.len(),
        steps,
        termination_reason: reason,
    }
}

/// Resets `env` with `seed` and runs `policy` until the episode ends. With
/// `filter = None` nominal actions go straight to the environment.
pub fn run_episode(
    env: &mut AvoidanceEnv,
    filter: Option<&dyn SafetyFilter>,
    policy: &mut dyn Algorithm,
    seed: u64,
) -> Result<RolloutRecord, PipelineError> {
    env.reset(seed)?;
    let mut hidden: Option<HiddenState> = None;
    let mut steps = Vec::new();
    loop {
        let observation = env.observation();
        let (nominal, next_hidden) = policy.predict(&observation, hidden.take())?;
        hidden = next_hidden;
        let filtered = match filter {
            Some(f) => f.filter_action(&observation, nominal, &env.safety_state()),
            None => Ok(unfiltered(env, nominal)),
        };
        if let Advance::Done(reason) = advance(env, observation, nominal, filtered, &mut steps)? {
            return Ok(finish(env, seed, steps, reason));
        }
    }
}

/// Runs one episode per sub-environment in lockstep, filtering each step as a
/// batch. Slot `i` uses seed `seed + i` and `policies[i]`, and its record is
/// identical to `run_episode` with the same inputs.
pub fn run_episodes_vec(
    envs: &mut VecAvoidanceEnv,
    filter: Option<&dyn SafetyFilter>,
    policies: &mut [Box<dyn Algorithm>],
    seed: u64,
) -> Result<Vec<RolloutRecord>, PipelineError> {
    let n = envs.num_envs();
    if policies.len() != n {
        return Err(crate::env::EnvError::BatchShapeMismatch {
            expected: n,
            got: policies.len(),
        }
        .into());
    }
    envs.vec_reset(seed)?;
    let mut hidden: Vec<Option<HiddenState>> = vec![None; n];
    let mut steps: Vec<Vec<StepRecord>> = vec![Vec::new(); n];
    let mut outcome: Vec<Option<TerminationReason>> = vec![None; n];

    while outcome.iter().any(Option::is_none) {
        let active: Vec<usize> = (0..n).filter(|&i| outcome[i].is_none()).collect();
        let mut observations = Vec::with_capacity(active.len());
        let mut nominals = Vec::with_capacity(active.len());
        for &i in &active {
            let obs = envs.envs()[i].observation();
            let (u, h) = policies[i].predict(&obs, hidden[i].take())?;
            hidden[i] = h;
            observations.push(obs);
            nominals.push(u);
        }
        let filtered: Vec<Result<SafetyFilterResult, SafetyError>> = match filter {
            Some(f) => {
                let states: Vec<_> = active.iter().map(|&i| envs.envs()[i].safety_state()).collect();
                f.filter_action_batch(&states, &nominals)?
            }
            None => active
                .iter()
                .zip(&nominals)
                .map(|(&i, &u)| Ok(unfiltered(&envs.envs()[i], u)))
                .collect(),
        };
        for (((&i, obs), u), f) in active.iter().zip(observations).zip(nominals).zip(filtered) {
            if let Advance::Done(reason) = advance(envs.env_mut(i), obs, u, f, &mut steps[i])? {
                outcome[i] = Some(reason);
            }
        }
    }

    Ok(steps
        .into_iter()
        .zip(outcome)
        .enumerate()
        .map(|(i, (s, r))| finish(&envs.envs()[i], seed + i as u64, s, r.expect("all slots finished")))
        .collect())
}

/// Episode counts per termination reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TerminationBreakdown {
    pub episodes: usize,
    pub counts: BTreeMap<TerminationReason, usize>,
}

impl TerminationBreakdown {
    pub fn count(&self, reason: TerminationReason) -> usize {
        self.counts.get(&reason).copied().unwrap_or(0)
    }

    pub fn rate(&self, reason: TerminationReason) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.count(reason) as f64 / self.episodes as f64
        }
    }
}

pub fn termination_breakdown(records: &[RolloutRecord]) -> TerminationBreakdown {
    let mut counts: BTreeMap<TerminationReason, usize> = TerminationReason::ALL.iter().map(|&r| (r, 0)).collect();
    for r in records {
        *counts.entry(r.termination_reason).or_default() += 1;
    }
    TerminationBreakdown {
        episodes: records.len(),
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, SceneConfig, SceneType};
    use crate::pipeline::{RandomActionAlgorithm, ScriptedTeacher};
    use crate::safety::{BarrierParams, DualBarrierCbf};

    fn config(scene: SceneType) -> EnvConfig {
        EnvConfig::default().with_scene(SceneConfig::Generated { scene_type: scene })
    }

    #[test]
    fn lengths_match_step_counts() {
        let mut env = AvoidanceEnv::new(config(SceneType::SingleStatic)).unwrap();
        let filter = DualBarrierCbf::new(BarrierParams::default()).unwrap();
        let mut teacher = ScriptedTeacher::new(5.0);
        let rec = run_episode(&mut env, Some(&filter), &mut teacher, 3).unwrap();
        assert_eq!(rec.length, rec.steps.len());
        assert_eq!(rec.length as u32, env.steps());
        assert_eq!(rec.scene_type, SceneType::SingleStatic);
    }

    #[test]
    fn filtered_teacher_never_collides() {
        let filter = DualBarrierCbf::new(BarrierParams::default()).unwrap();
        for scene in [SceneType::SingleStatic, SceneType::DynamicObstacle] {
            let mut env = AvoidanceEnv::new(config(scene)).unwrap();
            for seed in 0..20 {
                let rec = run_episode(&mut env, Some(&filter), &mut ScriptedTeacher::new(5.0), seed).unwrap();
                assert_ne!(
                    rec.termination_reason,
                    TerminationReason::Collision,
                    "{scene} seed {seed}"
                );
                assert!(rec.steps.iter().all(|s| s.h_hard >= 0.0));
            }
        }
    }

    #[test]
    fn unfiltered_teacher_hits_static_obstacle() {
        let mut env = AvoidanceEnv::new(config(SceneType::SingleStatic)).unwrap();
        let rec = run_episode(&mut env, None, &mut ScriptedTeacher::new(5.0), 0).unwrap();
        assert_eq!(rec.termination_reason, TerminationReason::Collision);
        assert!(rec
            .steps
            .iter()
            .all(|s| !s.modified && s.safe_action == s.nominal_action));
    }

    #[test]
    fn vector_runner_matches_scalar_runner() {
        let cfg = config(SceneType::MultiObstacle);
        let filter = DualBarrierCbf::new(BarrierParams::default()).unwrap();
        let n = 4;
        let mut venv = VecAvoidanceEnv::new(cfg.clone(), n).unwrap();
        let mut policies: Vec<Box<dyn Algorithm>> = (0..n)
            .map(|i| Box::new(RandomActionAlgorithm::new(5.0, 100 + i as u64)) as Box<dyn Algorithm>)
            .collect();
        let batch = run_episodes_vec(&mut venv, Some(&filter), &mut policies, 11).unwrap();

        for (i, got) in batch.iter().enumerate() {
            let mut env = AvoidanceEnv::new(cfg.clone()).unwrap();
            let mut policy = RandomActionAlgorithm::new(5.0, 100 + i as u64);
            let want = run_episode(&mut env, Some(&filter), &mut policy, 11 + i as u64).unwrap();
            assert_eq!(*got, want);
        }
    }

    #[test]
    fn breakdown_counts_every_reason() {
        let mut env = AvoidanceEnv::new(config(SceneType::SingleStatic)).unwrap();
        let filter = DualBarrierCbf::new(BarrierParams::default()).unwrap();
        let recs: Vec<_> = (0..5)
            .map(|s| run_episode(&mut env, Some(&filter), &mut ScriptedTeacher::new(5.0), s).unwrap())
            .collect();
        let b = termination_breakdown(&recs);
        assert_eq!(b.episodes, 5);
        assert_eq!(b.counts.len(), 4);
        assert_eq!(b.counts.values().sum::<usize>(), 5);
        let total: f64 = TerminationReason::ALL.iter().map(|&r| b.rate(r)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
