use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::{json, Value};

use shieldrl::campaign::allocate_attempts;
use shieldrl::env::SceneType;
use shieldrl::ops::{canonical_json, Comparator, ForensicsBuffer, Metrics, Watchdog, WatchdogRegistry};
use shieldrl::safety::{
    h_hard, project_halfspace_box, BarrierParams, DualBarrierCbf, HalfSpace, SafetyError, SafetyFilter, SafetyState,
};
use shieldrl::Vec2;

fn params() -> impl Strategy<Value = BarrierParams> {
    (0.1f64..10.0, 0.0f64..0.5, 0.5f64..10.0, 0.5f64..8.0).prop_map(|(alpha, tau_lag, a_max, v_max)| BarrierParams {
        alpha,
        tau_lag,
        a_max,
        v_max,
    })
}

fn state(v_max: f64) -> impl Strategy<Value = SafetyState> {
    (
        0.0f64..std::f64::consts::TAU,
        0.0f64..10.0,
        (-v_max..=v_max, -v_max..=v_max),
        (0.0f64..std::f64::consts::TAU, 0.0..v_max),
        0.05f64..0.6,
        0.05f64..3.0,
    )
        .prop_map(|(theta, gap, (vx, vy), (phi, speed), dr, or)| SafetyState {
            rel_position: Vec2::new(theta.cos(), theta.sin()) * (dr + or + gap),
            drone_velocity: Vec2::new(vx, vy),
            obstacle_velocity: Vec2::new(phi.cos(), phi.sin()) * speed,
            drone_radius: dr,
            obstacle_radius: or,
        })
}

fn case() -> impl Strategy<Value = (BarrierParams, SafetyState, Vec2)> {
    params().prop_flat_map(|p| {
        let v = p.v_max;
        (
            Just(p),
            state(v),
            (-2.0 * v..2.0 * v, -2.0 * v..2.0 * v).prop_map(|(x, y)| Vec2::new(x, y)),
        )
    })
}

/// Residual of the hard row `2r·(u − v_o) + α·h_hard`, from first principles.
fn hard_residual(s: &SafetyState, p: &BarrierParams, u: Vec2) -> f64 {
    let r = s.rel_position;
    let reach = s.drone_radius + s.obstacle_radius;
    let h = r.x * r.x + r.y * r.y - reach * reach;
    2.0 * (r.x * (u.x - s.obstacle_velocity.x) + r.y * (u.y - s.obstacle_velocity.y)) + p.alpha * h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn filter_output_stays_in_box_and_satisfies_hard_row((p, s, u) in case()) {
        let filter = DualBarrierCbf::new(p).unwrap();
        match filter.filter_action(&[], u, &s) {
            Ok(r) => {
                prop_assert!(r.safe_action.max_abs() <= p.v_max);
                let scale = s.rel_position.norm() * (p.v_max + s.obstacle_velocity.norm()) + p.alpha * h_hard(&s).abs();
                prop_assert!(hard_residual(&s, &p, r.safe_action) >= -1e-9 * scale.max(1.0));
                prop_assert_eq!(r.modified, r.safe_action != u);
            }
            Err(SafetyError::InfeasibleConstraints) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn filtering_is_idempotent((p, s, u) in case()) {
        // Clipping to the box can leave the soft row violated, so a second
        // pass may move again; only unclipped outputs are fixed points.
        let filter = DualBarrierCbf::new(p).unwrap();
        if let Some(first) = filter.filter_action(&[], u, &s).ok().filter(|r| !r.box_clipped) {
            let second = filter.filter_action(&[], first.safe_action, &s).unwrap();
            prop_assert!((second.safe_action - first.safe_action).norm() <= 1e-6 * (1.0 + p.v_max));
        }
    }

    #[test]
    fn halfspace_box_projection_beats_coarse_grid(
        (theta, mag, slack, ax, ay) in (0.0f64..std::f64::consts::TAU, 0.1f64..10.0, 0.0f64..1.0, -0.9f64..0.9, -0.9f64..0.9),
        (ux, uy) in (-8.0f64..8.0, -8.0f64..8.0),
    ) {
        let limit = 4.0;
        let normal = Vec2::new(theta.cos(), theta.sin()) * mag;
        let anchor = Vec2::new(ax * limit, ay * limit);
        let h = HalfSpace { normal, offset: normal.dot(anchor) - slack * mag };
        let u = Vec2::new(ux, uy);
        let (point, feasible) = project_halfspace_box(u, &h, limit);
        prop_assert!(feasible);
        prop_assert!(point.max_abs() <= limit);
        prop_assert!(h.residual(point) >= -1e-9 * mag.max(1.0));

        let n = 201;
        let pitch = 2.0 * limit / (n - 1) as f64;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let v = Vec2::new(-limit + i as f64 * pitch, -limit + j as f64 * pitch);
                if normal.x * v.x + normal.y * v.y >= h.offset {
                    best = best.min((v - u).norm());
                }
            }
        }
        prop_assert!((point - u).norm() <= best + 1e-12);
    }

    #[test]
    fn batch_matches_scalar((p, s, u) in case(), (p2, s2, u2) in case()) {
        let filter = DualBarrierCbf::new(p).unwrap();
        let batch = filter.filter_action_batch(&[s, s2], &[u, u2]).unwrap();
        let _ = p2;
        for (b, (st, nom)) in batch.iter().zip([(s, u), (s2, u2)]) {
            let single = filter.filter_action(&[], nom, &st);
            prop_assert_eq!(format!("{b:?}"), format!("{single:?}"));
        }
    }

    #[test]
    fn canonical_json_ignores_key_order(entries in prop::collection::vec(("[a-z]{1,6}", -1e6f64..1e6), 0..12)) {
        let forward: serde_json::Map<String, Value> = entries.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let reverse: serde_json::Map<String, Value> = entries.iter().rev().map(|(k, v)| (k.clone(), json!(v))).collect();
        let unique: BTreeMap<&String, f64> = entries.iter().map(|(k, v)| (k, *v)).collect();
        let a = canonical_json(&Value::Object(forward)).unwrap();
        let b = canonical_json(&Value::Object(reverse.clone())).unwrap();
        let keys: Vec<&String> = unique.keys().copied().collect();
        let parsed: Value = serde_json::from_slice(&b).unwrap();
        prop_assert!(!a.contains(&b' ') && !a.contains(&b'\n'));
        prop_assert_eq!(parsed.as_object().unwrap().keys().collect::<Vec<_>>(), keys);
        // Either ordering collapses to the same bytes once duplicates resolve identically.
        if unique.len() == entries.len() {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(canonical_json(&parsed).unwrap(), canonical_json(&Value::Object(reverse)).unwrap());
    }

    #[test]
    fn allocation_sums_to_total(weights in prop::collection::vec(0.0f64..1.0, 4), total in 1u64..100_000) {
        let sum: f64 = weights.iter().sum();
        prop_assume!(sum > 1e-3);
        let distribution: BTreeMap<SceneType, f64> =
            SceneType::ALL.iter().zip(&weights).map(|(s, w)| (*s, w / sum)).collect();
        let counts = allocate_attempts(&distribution, total).unwrap();
        prop_assert_eq!(counts.values().sum::<u64>(), total);
        for (s, f) in &distribution {
            let exact = f * total as f64;
            prop_assert!((counts[s] as f64 - exact).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn forensics_keeps_the_newest_entries(capacity in 1usize..64, n in 0u64..200) {
        let mut buffer = ForensicsBuffer::new(capacity);
        for step in 0..n {
            buffer.record(step, Metrics::from([("x".to_string(), step as f64)])).unwrap();
        }
        let kept: Vec<u64> = buffer.entries().map(|e| e.step).collect();
        let expected: Vec<u64> = (n.saturating_sub(capacity as u64)..n).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn halt_latches_at_first_violation(values in prop::collection::vec(0.0f64..1.0, 1..60), threshold in 0.0f64..1.0) {
        let mut registry = WatchdogRegistry::new();
        registry.register(Watchdog::new("floor", "rate", Comparator::Lt, threshold).halting());
        for (step, v) in values.iter().enumerate() {
            registry.update(&Metrics::from([("rate".to_string(), *v)]), step as u64).unwrap();
        }
        let first = values.iter().position(|v| *v < threshold);
        prop_assert_eq!(registry.should_halt().map(|e| e.step as usize), first);
    }
}
