//! Deterministic planar point-mass avoidance environment.
//!
//! The drone is a single integrator: each action is a commanded velocity,
//! clipped to the action box and integrated with one Euler step.

mod scene;
mod vec_env;

pub use scene::{corridor_coordinates, generate_scene};
pub use vec_env::VecAvoidanceEnv;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec2;
use crate::safety::{h_soft, BarrierParams, SafetyState};

/// Length of the flat observation vector.
pub const OBS_DIM: usize = 9;
/// Observation index of the goal offset (x, y).
pub const OBS_GOAL_OFFSET: usize = 4;
/// Distance at which the virtual obstacle of an obstacle-free scene sits.
pub const SENTINEL_DISTANCE: f64 = 1.0e6;
/// Radius of the virtual obstacle. Positive so the filter contract holds.
pub const SENTINEL_RADIUS: f64 = 1.0e-9;

pub const REWARD_SUCCESS: f64 = 10.0;
pub const REWARD_COLLISION: f64 = -10.0;
pub const REWARD_OUT_OF_ARENA: f64 = -5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("step called on a finished episode")]
    SteppedAfterTermination,
    #[error("action is not finite")]
    NonFiniteAction,
    #[error("batch shape mismatch: expected {expected} actions, got {got}")]
    BatchShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneType {
    Open,
    #[serde(alias = "single")]
    SingleStatic,
    #[serde(alias = "multi")]
    MultiObstacle,
    #[serde(alias = "dynamic")]
    DynamicObstacle,
}

impl SceneType {
    pub const ALL: [SceneType; 4] = [
        SceneType::Open,
        SceneType::SingleStatic,
        SceneType::MultiObstacle,
        SceneType::DynamicObstacle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SceneType::Open => "open",
            SceneType::SingleStatic => "single_static",
            SceneType::MultiObstacle => "multi_obstacle",
            SceneType::DynamicObstacle => "dynamic_obstacle",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SceneType::Open => "Open",
            SceneType::SingleStatic => "Single static",
            SceneType::MultiObstacle => "Multi-obstacle",
            SceneType::DynamicObstacle => "Dynamic obstacle",
        }
    }
}

impl std::fmt::Display for SceneType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    Success,
    Collision,
    OutOfArena,
    Timeout,
}

impl TerminationReason {
    pub const ALL: [TerminationReason; 4] = [
        TerminationReason::Success,
        TerminationReason::Collision,
        TerminationReason::OutOfArena,
        TerminationReason::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Success => "success",
            TerminationReason::Collision => "collision",
            TerminationReason::OutOfArena => "out_of_arena",
            TerminationReason::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
    #[serde(default)]
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDescriptor {
    pub obstacles: Vec<Obstacle>,
}

impl SceneDescriptor {
    /// Curriculum bucket a hand-written scene falls into.
    pub fn classify(obstacles: &[Obstacle]) -> SceneType {
        if obstacles.iter().any(|o| o.velocity != Vec2::ZERO) {
            SceneType::DynamicObstacle
        } else {
            match obstacles.len() {
                0 => SceneType::Open,
                1 => SceneType::SingleStatic,
                _ => SceneType::MultiObstacle,
            }
        }
    }
}

/// Where an episode's obstacles come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneConfig {
    Fixed {
        obstacles: Vec<Obstacle>,
    },
    Generated {
        scene_type: SceneType,
    },
    /// One of the listed types per episode, drawn from the episode seed.
    Mixed {
        scene_types: Vec<SceneType>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub arena_half_extent: f64,
    pub dt: f64,
    pub max_steps: u32,
    pub spawn_position: Vec2,
    pub goal_position: Vec2,
    pub goal_radius: f64,
    pub drone_radius: f64,
    pub v_max: f64,
    pub scene: SceneConfig,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            arena_half_extent: 50.0,
            dt: 0.05,
            max_steps: 400,
            spawn_position: Vec2::new(-20.0, 0.0),
            goal_position: Vec2::new(20.0, 0.0),
            goal_radius: 1.0,
            drone_radius: 0.3,
            v_max: 5.0,
            scene: SceneConfig::Generated {
                scene_type: SceneType::SingleStatic,
            },
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn with_scene(mut self, scene: SceneConfig) -> Self {
        self.scene = scene;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::InvalidConfig(msg));
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.arena_half_extent) {
            return bad(format!("arena_half_extent must be > 0, got {}", self.arena_half_extent));
        }
        if !positive(self.dt) {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if self.max_steps < 1 {
            return bad("max_steps must be >= 1".into());
        }
        if !positive(self.goal_radius) || !positive(self.drone_radius) || !positive(self.v_max) {
            return bad("goal_radius, drone_radius and v_max must be > 0".into());
        }
        for (name, p) in [
            ("spawn_position", self.spawn_position),
            ("goal_position", self.goal_position),
        ] {
            if !p.is_finite() || p.max_abs() > self.arena_half_extent {
                return bad(format!("{name} {:?} lies outside the arena", p.to_array()));
            }
        }
        match &self.scene {
            SceneConfig::Fixed { obstacles } => self.validate_obstacles(obstacles)?,
            SceneConfig::Mixed { scene_types } if scene_types.is_empty() => {
                return bad("mixed scene needs at least one scene type".into())
            }
            _ => {}
        }
        Ok(())
    }

    pub(crate) fn validate_obstacles(&self, obstacles: &[Obstacle]) -> Result<(), EnvError> {
        for (i, o) in obstacles.iter().enumerate() {
            if !(o.center.is_finite() && o.velocity.is_finite() && o.radius.is_finite() && o.radius > 0.0) {
                return Err(EnvError::InvalidConfig(format!("obstacle {i} is malformed")));
            }
            let reach = o.radius + self.drone_radius;
            if (self.spawn_position - o.center).norm_sq() < reach * reach {
                return Err(EnvError::InvalidConfig(format!(
                    "obstacle {i} overlaps the spawn point"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of a single environment step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub termination_reason: Option<TerminationReason>,
    pub safety_state: SafetyState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolations {
    /// Steps this episode that ended with `h_hard < 0`.
    pub count: u32,
    pub first_step: Option<u32>,
    pub min_h_hard: f64,
}

/// Environment contract consumed by the safety wrapper.
pub trait SafeEnv {
    fn reset(&mut self, seed: u64) -> Result<(Vec<f64>, SafetyState), EnvError>;
    fn step(&mut self, action: Vec2) -> Result<StepResult, EnvError>;
    fn observation(&self) -> Vec<f64>;
    fn safety_state(&self) -> SafetyState;
    fn safety_metrics(&self) -> BTreeMap<String, f64>;
    fn hard_constraint_violations(&self) -> ConstraintViolations;
    fn v_max(&self) -> f64;
    fn is_done(&self) -> bool;
}

/// Per-step upper bound on the magnitude of the reward.
pub fn reward_bound(config: &EnvConfig) -> f64 {
    REWARD_SUCCESS + config.v_max * std::f64::consts::SQRT_2 * config.dt
}

#[derive(Debug, Clone)]
pub struct AvoidanceEnv {
    config: EnvConfig,
    metric_params: BarrierParams,
    scene_type: SceneType,
    obstacles: Vec<Obstacle>,
    position: Vec2,
    velocity: Vec2,
    steps: u32,
    done: bool,
    violations: ConstraintViolations,
    min_h_soft: f64,
}

impl AvoidanceEnv {
    /// Builds the environment and resets it with `config.seed`.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let metric_params = BarrierParams {
            v_max: config.v_max,
            ..BarrierParams::default()
        };
        let seed = config.seed;
        let mut env = Self {
            config,
            metric_params,
            scene_type: SceneType::Open,
            obstacles: Vec::new(),
            position: Vec2::ZERO,
            velocity: Vec2::ZERO,
            steps: 0,
            done: false,
            violations: ConstraintViolations {
                count: 0,
                first_step: None,
                min_h_hard: f64::INFINITY,
            },
            min_h_soft: f64::INFINITY,
        };
        env.reset(seed)?;
        Ok(env)
    }

    /// Barrier parameters used when reporting `h_soft` metrics.
    pub fn set_metric_params(&mut self, params: BarrierParams) {
        self.metric_params = params;
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    /// Scene type of the current episode. Fixed scenes are classified by
    /// their obstacle layout.
    pub fn scene_type(&self) -> SceneType {
        self.scene_type
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn position(&self) -> Vec2 {
        self.position
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    fn hard_value(&self, o: &Obstacle) -> f64 {
        let reach = o.radius + self.config.drone_radius;
        (self.position - o.center).norm_sq() - reach * reach
    }

    /// Most-critical obstacle (minimum `h_hard`), or the virtual sentinel.
    fn critical_obstacle(&self) -> Obstacle {
        let mut best: Option<(f64, &Obstacle)> = None;
        for o in &self.obstacles {
            let h = self.hard_value(o);
            if best.is_none_or(|(bh, _)| h < bh) {
                best = Some((h, o));
            }
        }
        match best {
            Some((_, o)) => *o,
            None => Obstacle {
                center: self.position + Vec2::new(SENTINEL_DISTANCE, 0.0),
                radius: SENTINEL_RADIUS,
                velocity: Vec2::ZERO,
            },
        }
    }

    fn build_safety_state(&self) -> SafetyState {
        let o = self.critical_obstacle();
        SafetyState {
            rel_position: self.position - o.center,
            drone_velocity: self.velocity,
            obstacle_velocity: o.velocity,
            drone_radius: self.config.drone_radius,
            obstacle_radius: o.radius,
        }
    }

    fn build_observation(&self) -> Vec<f64> {
        let o = self.critical_obstacle();
        let goal = self.config.goal_position - self.position;
        let obs = o.center - self.position;
        vec![
            self.position.x,
            self.position.y,
            self.velocity.x,
            self.velocity.y,
            goal.x,
            goal.y,
            obs.x,
            obs.y,
            o.radius,
        ]
    }

    fn min_hard(&self) -> f64 {
        self.obstacles
            .iter()
            .map(|o| self.hard_value(o))
            .fold(f64::INFINITY, f64::min)
    }

    fn record_barriers(&mut self) {
        let hard = self.min_hard();
        if hard < self.violations.min_h_hard {
            self.violations.min_h_hard = hard;
        }
        if !self.obstacles.is_empty() {
            let soft = h_soft(&self.build_safety_state(), &self.metric_params);
            self.min_h_soft = self.min_h_soft.min(soft);
        }
    }

    fn advance_obstacles(&mut self) {
        let dt = self.config.dt;
        let extent = self.config.arena_half_extent;
        for o in &mut self.obstacles {
            if o.velocity == Vec2::ZERO {
                continue;
            }
            o.center += o.velocity * dt;
            let bound = extent - o.radius;
            if o.center.x.abs() > bound {
                o.center.x = 2.0 * bound.copysign(o.center.x) - o.center.x;
                o.velocity.x = -o.velocity.x;
            }
            if o.center.y.abs() > bound {
                o.center.y = 2.0 * bound.copysign(o.center.y) - o.center.y;
                o.velocity.y = -o.velocity.y;
            }
        }
    }
}

impl SafeEnv for AvoidanceEnv {
    fn reset(&mut self, seed: u64) -> Result<(Vec<f64>, SafetyState), EnvError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (scene_type, obstacles) = match &self.config.scene {
            SceneConfig::Fixed { obstacles } => (SceneDescriptor::classify(obstacles), obstacles.clone()),
            SceneConfig::Generated { scene_type } => (
                *scene_type,
                generate_scene(*scene_type, &self.config, &mut rng)?.obstacles,
            ),
            SceneConfig::Mixed { scene_types } => {
                let t = scene_types[rng.random_range(0..scene_types.len())];
                (t, generate_scene(t, &self.config, &mut rng)?.obstacles)
            }
        };
        self.config.validate_obstacles(&obstacles)?;
        self.scene_type = scene_type;
        self.obstacles = obstacles;
        self.position = self.config.spawn_position;
        self.velocity = Vec2::ZERO;
        self.steps = 0;
        self.done = false;
        self.violations = ConstraintViolations {
            count: 0,
            first_step: None,
            min_h_hard: f64::INFINITY,
        };
        self.min_h_soft = f64::INFINITY;
        self.record_barriers();
        Ok((self.build_observation(), self.build_safety_state()))
    }

    fn step(&mut self, action: Vec2) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::SteppedAfterTermination);
        }
        if !action.is_finite() {
            return Err(EnvError::NonFiniteAction);
        }
        let cfg = &self.config;
        let prev_distance = (cfg.goal_position - self.position).norm();
        self.velocity = action.clamp_box(cfg.v_max);
        self.position += self.velocity * cfg.dt;
        self.advance_obstacles();
        self.steps += 1;

        let cfg = &self.config;
        let hard = self.min_hard();
        let distance = (cfg.goal_position - self.position).norm();
        let mut reward = prev_distance - distance;
        let mut reason = None;
        if hard < 0.0 {
            reason = Some(TerminationReason::Collision);
            reward += REWARD_COLLISION;
        } else if self.position.max_abs() > cfg.arena_half_extent {
            reason = Some(TerminationReason::OutOfArena);
            reward += REWARD_OUT_OF_ARENA;
        } else if distance <= cfg.goal_radius {
            reason = Some(TerminationReason::Success);
            reward += REWARD_SUCCESS;
        }
        let terminated = reason.is_some();
        let truncated = !terminated && self.steps >= cfg.max_steps;
        if truncated {
            reason = Some(TerminationReason::Timeout);
        }

        if hard < 0.0 {
            self.violations.count += 1;
            self.violations.first_step.get_or_insert(self.steps);
        }
        self.record_barriers();
        self.done = terminated || truncated;

        Ok(StepResult {
            observation: self.build_observation(),
            reward,
            terminated,
            truncated,
            termination_reason: reason,
            safety_state: self.build_safety_state(),
        })
    }

    fn observation(&self) -> Vec<f64> {
        self.build_observation()
    }

    fn safety_state(&self) -> SafetyState {
        self.build_safety_state()
    }

    fn safety_metrics(&self) -> BTreeMap<String, f64> {
        let state = self.build_safety_state();
        let mut m = BTreeMap::new();
        m.insert("h_hard".to_string(), crate::safety::h_hard(&state));
        m.insert("h_soft".to_string(), h_soft(&state, &self.metric_params));
        m.insert("min_h_hard".to_string(), self.violations.min_h_hard);
        m.insert("min_h_soft".to_string(), self.min_h_soft);
        m.insert(
            "distance_to_goal".to_string(),
            (self.config.goal_position - self.position).norm(),
        );
        m.insert("steps".to_string(), f64::from(self.steps));
        m
    }

    fn hard_constraint_violations(&self) -> ConstraintViolations {
        self.violations
    }

    fn v_max(&self) -> f64 {
        self.config.v_max
    }

    fn is_done(&self) -> bool {
        self.done
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::safety::h_hard;

    fn fixed(obstacles: Vec<Obstacle>) -> EnvConfig {
        EnvConfig::default().with_scene(SceneConfig::Fixed { obstacles })
    }

    fn obstacle(x: f64, y: f64, r: f64) -> Obstacle {
        Obstacle {
            center: Vec2::new(x, y),
            radius: r,
            velocity: Vec2::ZERO,
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let mut a = AvoidanceEnv::new(EnvConfig::default()).unwrap();
        let mut b = AvoidanceEnv::new(EnvConfig::default()).unwrap();
        let ra = a.reset(17).unwrap();
        let rb = b.reset(17).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.obstacles(), b.obstacles());
    }

    #[test]
    fn seeds_change_obstacles() {
        let mut env = AvoidanceEnv::new(EnvConfig::default()).unwrap();
        env.reset(5).unwrap();
        let first = env.obstacles().to_vec();
        env.reset(6).unwrap();
        assert_ne!(first, env.obstacles());
    }

    #[test]
    fn open_scene_reports_sentinel() {
        let env = AvoidanceEnv::new(fixed(vec![])).unwrap();
        let s = env.safety_state();
        assert_eq!(s.rel_position, Vec2::new(-SENTINEL_DISTANCE, 0.0));
        assert_eq!(s.obstacle_radius, SENTINEL_RADIUS);
        assert!(s.validate().is_ok());
        assert!(h_hard(&s) > 1e11);
    }

    #[test]
    fn spawn_overlap_rejected() {
        let err = AvoidanceEnv::new(fixed(vec![obstacle(-20.5, 0.0, 1.0)])).unwrap_err();
        assert!(matches!(err, EnvError::InvalidConfig(_)));
    }

    #[test]
    fn success_at_goal() {
        let mut cfg = fixed(vec![]);
        cfg.spawn_position = Vec2::new(18.8, 0.0);
        let mut env = AvoidanceEnv::new(cfg).unwrap();
        let r = env.step(Vec2::new(5.0, 0.0)).unwrap();
        assert!(r.terminated && !r.truncated);
        assert_eq!(r.termination_reason, Some(TerminationReason::Success));
        assert!(r.reward > REWARD_SUCCESS);
    }

    #[test]
    fn arena_exit_is_not_collision() {
        let mut cfg = fixed(vec![obstacle(0.0, 0.0, 2.0)]);
        cfg.spawn_position = Vec2::new(-49.9, 0.0);
        let mut env = AvoidanceEnv::new(cfg).unwrap();
        let r = env.step(Vec2::new(-5.0, 0.0)).unwrap();
        assert_eq!(r.termination_reason, Some(TerminationReason::OutOfArena));
        assert!(h_hard(&r.safety_state) > 0.0);
        assert_eq!(env.hard_constraint_violations().count, 0);
    }

    #[test]
    fn zero_action_times_out() {
        let mut cfg = fixed(vec![]);
        cfg.max_steps = 7;
        let mut env = AvoidanceEnv::new(cfg).unwrap();
        for _ in 0..6 {
            let r = env.step(Vec2::ZERO).unwrap();
            assert!(r.termination_reason.is_none());
        }
        let r = env.step(Vec2::ZERO).unwrap();
        assert!(r.truncated && !r.terminated);
        assert_eq!(r.termination_reason, Some(TerminationReason::Timeout));
        assert_eq!(r.reward, 0.0);
        assert_eq!(env.step(Vec2::ZERO).unwrap_err(), EnvError::SteppedAfterTermination);
    }

    #[test]
    fn collision_is_detected_and_counted() {
        let mut env = AvoidanceEnv::new(fixed(vec![obstacle(-18.0, 0.0, 1.5)])).unwrap();
        let mut last = None;
        for _ in 0..10 {
            let r = env.step(Vec2::new(5.0, 0.0)).unwrap();
            if r.terminated {
                last = Some(r);
                break;
            }
        }
        let r = last.expect("drone should hit the obstacle");
        assert_eq!(r.termination_reason, Some(TerminationReason::Collision));
        assert!(h_hard(&r.safety_state) < 0.0);
        assert_eq!(env.hard_constraint_violations().count, 1);
    }

    #[test]
    fn nearest_obstacle_selected() {
        let env = AvoidanceEnv::new(fixed(vec![obstacle(10.0, 0.0, 1.0), obstacle(-15.0, 0.0, 1.0)])).unwrap();
        let s = env.safety_state();
        assert_eq!(s.rel_position, Vec2::new(-5.0, 0.0));
        assert_eq!(env.hard_constraint_violations().count, 0);
        let m = env.safety_metrics();
        assert!((m["distance_to_goal"] - 40.0).abs() < 1e-12);
        assert!(m.contains_key("min_h_soft"));
    }

    #[test]
    fn actions_are_clipped() {
        let mut env = AvoidanceEnv::new(fixed(vec![])).unwrap();
        let r = env.step(Vec2::new(100.0, -100.0)).unwrap();
        assert_eq!(&r.observation[2..4], &[5.0, -5.0]);
    }

    #[test]
    fn dynamic_obstacle_reflects() {
        let mut cfg = fixed(vec![Obstacle {
            center: Vec2::new(0.0, 47.5),
            radius: 2.0,
            velocity: Vec2::new(0.0, 20.0),
        }]);
        cfg.dt = 0.1;
        let mut env = AvoidanceEnv::new(cfg).unwrap();
        env.step(Vec2::ZERO).unwrap();
        let o = env.obstacles()[0];
        assert!(o.center.y <= 48.0);
        assert!(o.velocity.y < 0.0);
    }

    #[test]
    fn non_finite_action_rejected() {
        let mut env = AvoidanceEnv::new(fixed(vec![])).unwrap();
        assert_eq!(
            env.step(Vec2::new(f64::NAN, 0.0)).unwrap_err(),
            EnvError::NonFiniteAction
        );
    }

    #[test]
    fn config_validation() {
        let cfg = EnvConfig {
            dt: 0.0,
            ..EnvConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig {
            goal_position: Vec2::new(60.0, 0.0),
            ..EnvConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EnvConfig::default().with_scene(SceneConfig::Mixed { scene_types: vec![] });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip_and_strictness() {
        let cfg = EnvConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: EnvConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<EnvConfig>(v).is_err());

        let partial: EnvConfig = serde_json::from_str(r#"{"dt": 0.1}"#).unwrap();
        assert_eq!(
            partial,
            EnvConfig {
                dt: 0.1,
                ..EnvConfig::default()
            }
        );
    }
}
