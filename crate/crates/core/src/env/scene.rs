//! Scene generators for the four curriculum buckets.
//!
//! Geometry is expressed in corridor coordinates: `t` runs from spawn (0) to
//! goal (1) along the straight segment and `lateral` is the signed offset
//! perpendicular to it, in meters.

use rand::Rng;

use super::{EnvConfig, EnvError, Obstacle, SceneDescriptor, SceneType};
use crate::math::Vec2;

const MAX_ATTEMPTS: usize = 1000;
const CLEARANCE: f64 = 0.5;
const DYNAMIC_SPEED_FRACTION: f64 = 0.8;

/// Maps a point to `(t, lateral)` relative to the spawn→goal segment.
pub fn corridor_coordinates(config: &EnvConfig, p: Vec2) -> (f64, f64) {
    let axis = config.goal_position - config.spawn_position;
    let length = axis.norm();
    let dir = axis * (1.0 / length);
    let normal = Vec2::new(-dir.y, dir.x);
    let rel = p - config.spawn_position;
    (rel.dot(dir) / length, rel.dot(normal))
}

fn corridor_point(config: &EnvConfig, t: f64, lateral: f64) -> Vec2 {
    let axis = config.goal_position - config.spawn_position;
    let dir = axis * (1.0 / axis.norm());
    let normal = Vec2::new(-dir.y, dir.x);
    config.spawn_position + axis * t + normal * lateral
}

fn corridor_normal(config: &EnvConfig) -> Vec2 {
    let axis = config.goal_position - config.spawn_position;
    let dir = axis * (1.0 / axis.norm());
    Vec2::new(-dir.y, dir.x)
}

/// Keeps spawn, goal and arena walls clear of an obstacle.
fn placement_ok(config: &EnvConfig, o: &Obstacle) -> bool {
    let spawn_gap = (config.spawn_position - o.center).norm() - o.radius - config.drone_radius;
    let goal_gap = (config.goal_position - o.center).norm() - o.radius - config.drone_radius - config.goal_radius;
    spawn_gap > CLEARANCE && goal_gap > CLEARANCE && o.center.max_abs() + o.radius < config.arena_half_extent
}

/// Draws a scene of the requested type. Rejection-samples invalid draws and
/// gives up with `InvalidConfig` after a bounded number of tries.
pub fn generate_scene<R: Rng + ?Sized>(
    scene_type: SceneType,
    config: &EnvConfig,
    rng: &mut R,
) -> Result<SceneDescriptor, EnvError> {
    if (config.goal_position - config.spawn_position).norm() <= config.goal_radius {
        return Err(EnvError::InvalidConfig("spawn lies inside the goal region".into()));
    }
    for _ in 0..MAX_ATTEMPTS {
        let obstacles = match scene_type {
            SceneType::Open => return Ok(SceneDescriptor::default()),
            SceneType::SingleStatic => {
                let radius = rng.random_range(1.0..3.0);
                let t = rng.random_range(0.3..0.7);
                // Offset stays inside the radius so the straight path is blocked.
                let lateral = rng.random_range(-0.8..0.8) * radius;
                vec![Obstacle {
                    center: corridor_point(config, t, lateral),
                    radius,
                    velocity: Vec2::ZERO,
                }]
            }
            SceneType::MultiObstacle => {
                let count = rng.random_range(3..=5);
                let mut placed: Vec<Obstacle> = Vec::with_capacity(count);
                let mut tries = 0;
                while placed.len() < count && tries < MAX_ATTEMPTS {
                    tries += 1;
                    let o = Obstacle {
                        center: corridor_point(config, rng.random_range(0.15..0.85), rng.random_range(-8.0..8.0)),
                        radius: rng.random_range(1.0..2.5),
                        velocity: Vec2::ZERO,
                    };
                    let separated = placed.iter().all(|q| {
                        (q.center - o.center).norm() > q.radius + o.radius + 2.0 * config.drone_radius + CLEARANCE
                    });
                    if separated && placement_ok(config, &o) {
                        placed.push(o);
                    }
                }
                placed
            }
            SceneType::DynamicObstacle => {
                // Timed so the obstacle reaches the corridor roughly when a
                // full-speed drone would, capped below v_max so escape stays
                // feasible inside the action box.
                let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let t = rng.random_range(0.3..0.7);
                let offset = rng.random_range(6.0..10.0);
                let length = (config.goal_position - config.spawn_position).norm();
                let arrival = t * length / config.v_max * rng.random_range(0.8..1.2);
                let speed = (offset / arrival).min(DYNAMIC_SPEED_FRACTION * config.v_max);
                vec![Obstacle {
                    center: corridor_point(config, t, side * offset),
                    radius: rng.random_range(1.0..2.0),
                    velocity: corridor_normal(config) * (-side * speed),
                }]
            }
        };
        let expected_min = if scene_type == SceneType::MultiObstacle { 3 } else { 1 };
        if obstacles.len() >= expected_min && obstacles.iter().all(|o| placement_ok(config, o)) {
            return Ok(SceneDescriptor { obstacles });
        }
    }
    Err(EnvError::InvalidConfig(format!(
        "could not place a valid {scene_type} scene in {MAX_ATTEMPTS} attempts"
    )))
}
