use std::ffi::{c_char, CStr, CString};

use shieldrl::env::{AvoidanceEnv, EnvConfig, SafeEnv, OBS_DIM};
use shieldrl::safety::{BarrierParams, DualBarrierCbf, SafetyFilter, SafetyState};
use shieldrl::Vec2;
use shieldrl_ffi::*;

fn params() -> ShieldrlBarrierParams {
    shieldrl_barrier_params_default()
}

fn new_filter() -> *mut ShieldrlFilter {
    let mut f = std::ptr::null_mut();
    assert_eq!(unsafe { shieldrl_filter_new(&params(), &mut f) }, ShieldrlStatus::Ok);
    assert!(!f.is_null());
    f
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { shieldrl_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn approaching(x: f64) -> ShieldrlSafetyState {
    ShieldrlSafetyState {
        rel_position: ShieldrlVec2 { x, y: 0.2 },
        drone_velocity: ShieldrlVec2 { x: -2.0, y: 0.0 },
        obstacle_velocity: ShieldrlVec2::default(),
        drone_radius: 0.3,
        obstacle_radius: 1.0,
    }
}

#[test]
fn filter_matches_core() {
    let f = new_filter();
    let core = DualBarrierCbf::new(BarrierParams::default()).unwrap();
    for (x, u) in [(3.0, -5.0), (1.5, -2.0), (10.0, 1.0), (1.31, 0.0)] {
        let s = approaching(x);
        let mut out = ShieldrlFilterResult::default();
        let nominal = ShieldrlVec2 { x: u, y: 0.5 };
        assert_eq!(
            unsafe { shieldrl_filter_action(f, &s, nominal, &mut out) },
            ShieldrlStatus::Ok
        );
        let cs = SafetyState::new(Vec2::new(x, 0.2), Vec2::new(-2.0, 0.0), Vec2::ZERO, 0.3, 1.0).unwrap();
        let want = core.filter_action(&[], Vec2::new(u, 0.5), &cs).unwrap();
        assert_eq!(out.safe_action.x.to_bits(), want.safe_action.x.to_bits());
        assert_eq!(out.safe_action.y.to_bits(), want.safe_action.y.to_bits());
        assert_eq!(out.modified, want.modified);
        assert_eq!(out.box_fallback, want.box_fallback);

        let (mut hh, mut hs) = (0.0, 0.0);
        assert_eq!(unsafe { shieldrl_h_hard(&s, &mut hh) }, ShieldrlStatus::Ok);
        assert_eq!(unsafe { shieldrl_h_soft(&s, &params(), &mut hs) }, ShieldrlStatus::Ok);
        assert_eq!(hh, want.h_hard);
        assert_eq!(hs, want.h_soft);
    }
    unsafe { shieldrl_filter_free(f) };
}

#[test]
fn batch_isolates_bad_elements() {
    let f = new_filter();
    let mut degenerate = approaching(0.0);
    degenerate.rel_position = ShieldrlVec2::default();
    let mut invalid = approaching(2.0);
    invalid.drone_radius = -1.0;
    let states = [approaching(3.0), degenerate, invalid, approaching(5.0)];
    let nominals = [ShieldrlVec2 { x: -1.0, y: 0.0 }; 4];
    let mut results = [ShieldrlFilterResult::default(); 4];
    let mut statuses = [ShieldrlStatus::Panic; 4];
    let rc = unsafe {
        shieldrl_filter_action_batch(
            f,
            states.as_ptr(),
            nominals.as_ptr(),
            4,
            results.as_mut_ptr(),
            statuses.as_mut_ptr(),
        )
    };
    assert_eq!(rc, ShieldrlStatus::Ok);
    assert_eq!(
        statuses,
        [
            ShieldrlStatus::Ok,
            ShieldrlStatus::DegenerateGeometry,
            ShieldrlStatus::InvalidState,
            ShieldrlStatus::Ok
        ]
    );
    for i in [0, 3] {
        let mut single = ShieldrlFilterResult::default();
        unsafe { shieldrl_filter_action(f, &states[i], nominals[i], &mut single) };
        assert_eq!(single, results[i]);
    }
    unsafe { shieldrl_filter_free(f) };
}

#[test]
fn invalid_params_rejected() {
    let mut p = params();
    p.alpha = -1.0;
    let mut f = std::ptr::null_mut();
    assert_eq!(
        unsafe { shieldrl_filter_new(&p, &mut f) },
        ShieldrlStatus::InvalidParams
    );
    assert!(f.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn env_episode_matches_core() {
    let json =
        CString::new(r#"{"scene": {"kind": "generated", "scene_type": "single_static"}, "max_steps": 50}"#).unwrap();
    let mut env = std::ptr::null_mut();
    assert_eq!(unsafe { shieldrl_env_new(json.as_ptr(), &mut env) }, ShieldrlStatus::Ok);
    assert_eq!(shieldrl_obs_dim(), OBS_DIM);

    let config: EnvConfig = serde_json::from_str(json.to_str().unwrap()).unwrap();
    let mut core = AvoidanceEnv::new(config).unwrap();
    let (core_obs, _) = core.reset(9).unwrap();

    let mut obs = [0.0; OBS_DIM];
    assert_eq!(
        unsafe { shieldrl_env_reset(env, 9, obs.as_mut_ptr(), obs.len()) },
        ShieldrlStatus::Ok
    );
    assert_eq!(obs.to_vec(), core_obs);

    let mut step = ShieldrlStepResult::default();
    loop {
        let rc = unsafe {
            shieldrl_env_step(
                env,
                ShieldrlVec2 { x: 0.5, y: 0.1 },
                obs.as_mut_ptr(),
                obs.len(),
                &mut step,
            )
        };
        assert_eq!(rc, ShieldrlStatus::Ok);
        let want = core.step(Vec2::new(0.5, 0.1)).unwrap();
        assert_eq!(obs.to_vec(), want.observation);
        assert_eq!(step.reward, want.reward);
        let mut s = ShieldrlSafetyState::default();
        assert_eq!(unsafe { shieldrl_env_safety_state(env, &mut s) }, ShieldrlStatus::Ok);
        assert_eq!(s.rel_position.x, core.safety_state().rel_position.x);
        if step.terminated || step.truncated {
            break;
        }
    }
    assert_eq!(step.termination_reason, 3);
    assert!(step.truncated);
    let rc = unsafe { shieldrl_env_step(env, ShieldrlVec2::default(), std::ptr::null_mut(), 0, &mut step) };
    assert_eq!(rc, ShieldrlStatus::EpisodeDone);
    unsafe { shieldrl_env_free(env) };
}

#[test]
fn env_config_errors() {
    let mut env = std::ptr::null_mut();
    for bad in [r#"{"bogus": 1}"#, r#"{"dt": -1}"#, "not json"] {
        let json = CString::new(bad).unwrap();
        assert_eq!(
            unsafe { shieldrl_env_new(json.as_ptr(), &mut env) },
            ShieldrlStatus::InvalidConfig,
            "{bad}"
        );
    }
    let json = CString::new("{}").unwrap();
    assert_eq!(unsafe { shieldrl_env_new(json.as_ptr(), &mut env) }, ShieldrlStatus::Ok);
    let mut small = [0.0; 3];
    assert_eq!(
        unsafe { shieldrl_env_reset(env, 0, small.as_mut_ptr(), small.len()) },
        ShieldrlStatus::BufferTooSmall
    );
    unsafe { shieldrl_env_free(env) };
}

#[test]
fn atomic_write_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("blob.bin").to_str().unwrap()).unwrap();
    let data = b"abc";
    assert_eq!(
        unsafe { shieldrl_atomic_write(path.as_ptr(), data.as_ptr(), data.len()) },
        ShieldrlStatus::Ok
    );
    let mut hex = [0 as c_char; 65];
    assert_eq!(
        unsafe { shieldrl_sha256_file(path.as_ptr(), hex.as_mut_ptr()) },
        ShieldrlStatus::Ok
    );
    let hex = unsafe { CStr::from_ptr(hex.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(hex, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    let missing = CString::new(dir.path().join("nope").to_str().unwrap()).unwrap();
    let mut buf = [0 as c_char; 65];
    assert_eq!(
        unsafe { shieldrl_sha256_file(missing.as_ptr(), buf.as_mut_ptr()) },
        ShieldrlStatus::Io
    );
}
