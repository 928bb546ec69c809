use graspbo::geometry::primitives::{cuboid, icosphere};
use graspbo::hand::{HandModel, HandState};
use graspbo::planner::*;
use graspbo::quality::objective;
use nalgebra::Vector3;
use serde_json::Value;

fn sphere_scene() -> Scene {
    Scene::from_mesh(&icosphere(0.05, 3), HandModel::barrett(), &SceneConfig::default()).unwrap()
}

fn box_scene() -> Scene {
    Scene::from_mesh(&cuboid(Vector3::new(0.06, 0.06, 0.12)), HandModel::barrett(), &SceneConfig::default()).unwrap()
}

fn small_config() -> PlannerConfig {
    let mut cfg = PlannerConfig::default();
    cfg.n_init = 8;
    cfg.n_iter = 4;
    cfg.n_cand = 128;
    cfg.atlas.n_seed = 2;
    cfg.admm.n_seed = 2;
    cfg.admm.max_iter = 3;
    cfg.admm.sub_budget = 6;
    cfg.admm.sub_candidates = 64;
    cfg
}

/// Serialized result with every `elapsed_ms` removed.
fn without_timing(result: &PlanResult) -> Value {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(map) => {
                map.remove("elapsed_ms");
                map.values_mut().for_each(strip);
            }
            Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(result).unwrap();
    strip(&mut v);
    v
}

fn assert_candidate_contract(scene: &Scene, c: &GraspCandidate) {
    let q = scene.quality.evaluate(&c.contacts).unwrap();
    assert_eq!((q.epsilon, q.volume), (c.epsilon, c.volume));
    assert_eq!(c.objective, objective(c.epsilon, c.volume, scene.quality.params.volume_weight));
    for contact in &c.contacts {
        let f = scene.gpis.value(&contact.point);
        assert!(f.abs() <= scene.contact.threshold, "contact |f| = {}", f.abs());
    }
    let state = HandState { q: c.q, breakaway: c.breakaway };
    let report = scene.hand.check_collision(&c.pose.isometry(), &state, &scene.gpis, &scene.contact).unwrap();
    assert!(!report.colliding, "candidate penetrates by {}", report.worst_penetration);
    let replay = scene.rescore(c).unwrap();
    assert!((replay - c.objective).abs() <= 1e-12, "replay {replay} vs logged {}", c.objective);
}

fn assert_top_list(scene: &Scene, r: &PlanResult, k: usize) {
    assert!(!r.top.is_empty() && r.top.len() <= k);
    assert_eq!(r.top[0], r.best);
    assert!(r.top.windows(2).all(|w| w[0].objective >= w[1].objective));
    for c in &r.top {
        assert_candidate_contract(scene, c);
    }
}

#[test]
fn sphere_default_budget_reaches_force_closure() {
    let scene = sphere_scene();
    let cfg = PlannerConfig::default();
    let r = hpp_opt(&scene, &cfg, 0).unwrap();
    assert!(r.best.epsilon > 0.0, "best epsilon {}", r.best.epsilon);
    assert!(r.evaluations <= cfg.hpp_evaluation_budget());
    assert_eq!(r.trace.len(), cfg.n_init + cfg.n_iter);
    assert_top_list(&scene, &r, 20);
}

#[test]
fn zero_iterations_returns_best_initial_design() {
    let scene = sphere_scene();
    let cfg = PlannerConfig { n_iter: 0, n_init: 12, ..small_config() };
    let r = hpp_opt(&scene, &cfg, 5).unwrap();
    assert_eq!(r.trace.len(), 12);
    assert_eq!(r.evaluations, 12);
    let best_logged = r.trace.records().iter().map(|t| t.objective).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best.objective, best_logged);
    assert!(r.trace.records().iter().all(|t| t.ei.is_none()));
}

#[test]
fn every_planner_is_deterministic_per_seed() {
    let scene = sphere_scene();
    let cfg = small_config();
    let runs: [fn(&Scene, &PlannerConfig, u64) -> Result<PlanResult, PlannerError>; 4] = [
        hpp_opt,
        integrate,
        |s, c, seed| baseline_random(s, c, 20, seed),
        |s, c, seed| baseline_sa(s, c, 20, seed),
    ];
    for run in runs {
        let a = run(&scene, &cfg, 3).unwrap();
        let b = run(&scene, &cfg, 3).unwrap();
        assert_eq!(serde_json::to_string(&without_timing(&a)).unwrap(), serde_json::to_string(&without_timing(&b)).unwrap());
    }
}

#[test]
fn returned_candidates_are_sorted_replayable_and_in_contact() {
    let scene = box_scene();
    let cfg = PlannerConfig { top_k: 5, ..small_config() };
    for r in [hpp_opt(&scene, &cfg, 1).unwrap(), integrate(&scene, &cfg, 1).unwrap()] {
        assert_top_list(&scene, &r, 5);
    }
    let r = baseline_sa(&scene, &PlannerConfig::default(), 30, 2).unwrap();
    assert_top_list(&scene, &r, 20);
}

#[test]
fn integrate_never_falls_below_its_hpp_stage() {
    let scene = box_scene();
    let cfg = small_config();
    for seed in 0..3 {
        let r = integrate(&scene, &cfg, seed).unwrap();
        let stage = r.hpp_stage_best.unwrap();
        assert!(r.best.objective >= stage, "seed {seed}: {} < {stage}", r.best.objective);
    }
}

#[test]
fn disabled_refinement_reproduces_hpp() {
    let scene = sphere_scene();
    let mut cfg = small_config();
    cfg.admm.enabled = false;
    let h = hpp_opt(&scene, &cfg, 4).unwrap();
    let mut i = integrate(&scene, &cfg, 4).unwrap();
    assert_eq!(i.planner, PlannerKind::Integrate);
    i.planner = PlannerKind::Hpp;
    assert_eq!(without_timing(&h), without_timing(&i));
}

#[test]
fn refinement_from_an_hpp_pose_never_loses() {
    let scene = sphere_scene();
    let cfg = small_config();
    let h = hpp_opt(&scene, &cfg, 2).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9);
    for input in h.top.iter().take(3) {
        let out = admm_cp_opt(&scene, input, &cfg.admm, cfg.xi, cfg.noise, &mut rng).unwrap();
        assert!(out.candidate.objective >= input.objective);
        assert_eq!(out.improved, out.candidate.objective > input.objective);
        if out.improved {
            assert_eq!(out.candidate.provenance, Provenance::Admm);
            assert_candidate_contract(&scene, &out.candidate);
        }
        let state = out.state.expect("seed 0 always runs");
        assert_eq!(state.primal_history.len(), state.iterations());
        if state.converged {
            let r = state.residuals().unwrap();
            assert!(r.primal <= cfg.admm.eps_primal && r.dual <= cfg.admm.eps_dual);
        } else {
            assert_eq!(state.iterations(), cfg.admm.max_iter);
        }
    }
}

#[test]
fn single_baseline_evaluation_is_that_sample() {
    let scene = sphere_scene();
    let cfg = PlannerConfig::default();
    for seed in 0..40 {
        match baseline_random(&scene, &cfg, 1, seed) {
            Ok(r) => {
                assert_eq!(r.evaluations, 1);
                assert_eq!(r.top.len(), 1);
                assert_eq!(r.trace.records()[0].candidate.as_ref(), Some(&r.best));
                return;
            }
            Err(PlannerError::NoFeasiblePose) => continue,
            Err(e) => panic!("{e}"),
        }
    }
    panic!("no feasible single-sample run in 40 seeds");
}

#[test]
fn annealing_beats_random_sampling_on_the_sphere() {
    let scene = sphere_scene();
    let cfg = PlannerConfig::default();
    let best = |r: Result<PlanResult, PlannerError>| r.map_or(0.0, |r| r.best.objective);
    let (mut random, mut sa) = (0.0, 0.0);
    for seed in 0..20 {
        random += best(baseline_random(&scene, &cfg, 58, seed));
        sa += best(baseline_sa(&scene, &cfg, 58, seed));
    }
    assert!(sa >= random, "mean SA {} < mean random {}", sa / 20.0, random / 20.0);
}
