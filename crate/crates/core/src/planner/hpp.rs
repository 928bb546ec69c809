use std::time::Instant;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    admm_cp_opt, gpis_atlas, GraspCandidate, PlanResult, PlannerConfig, PlannerError, PlannerKind, Provenance,
    RunTrace, Scene, TopList, TraceRecord,
};
use crate::posedomain::{PalmPose, PoseMetric};
use crate::surrogate::{argmax_ei, fit_hyperparams_rprop, lhs_sample, Dataset, GpPosterior, KernelParams};

/// Bayesian optimization over the palm pose with chart-based local adaption.
pub fn hpp_opt(scene: &Scene, cfg: &PlannerConfig, seed: u64) -> Result<PlanResult, PlannerError> {
    run(scene, cfg, seed, PlannerKind::Hpp)
}

/// HPP-Opt with ADMM contact refinement after each local adaption.
pub fn integrate(scene: &Scene, cfg: &PlannerConfig, seed: u64) -> Result<PlanResult, PlannerError> {
    run(scene, cfg, seed, PlannerKind::Integrate)
}

pub(super) fn location_of(c: &GraspCandidate) -> Vec<f64> {
    PalmPose::from_isometry(&c.pose.isometry()).location()
}

fn fit(data: &Dataset, params: KernelParams, metric: PoseMetric) -> Result<GpPosterior<PoseMetric>, PlannerError> {
    Ok(GpPosterior::fit_escalating(data.clone(), params, metric)?)
}

/// Tracks the top list, the HPP-stage best and the trace of one run.
pub(super) struct Ledger {
    pub top: TopList,
    pub trace: RunTrace,
    pub hpp_best: Option<f64>,
    pub evaluations: usize,
    started: Instant,
    budget: Option<f64>,
}

impl Ledger {
    pub fn new(cfg: &PlannerConfig) -> Self {
        Self {
            top: TopList::new(cfg.top_k),
            trace: RunTrace::default(),
            hpp_best: None,
            evaluations: 0,
            started: Instant::now(),
            budget: cfg.time_budget,
        }
    }

    pub fn add(&mut self, c: &GraspCandidate) {
        if c.provenance != Provenance::Admm {
            self.hpp_best = Some(self.hpp_best.map_or(c.objective, |b| b.max(c.objective)));
        }
        self.top.insert(c.clone());
    }

    pub fn out_of_time(&self) -> bool {
        self.budget.is_some_and(|b| self.started.elapsed().as_secs_f64() > b)
    }

    pub fn record(
        &mut self,
        iteration: usize,
        candidate: Option<GraspCandidate>,
        ei: Option<f64>,
        objective: f64,
        residuals: Option<super::Residuals>,
    ) -> Result<(), PlannerError> {
        let elapsed_ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.trace.push(TraceRecord { iteration, candidate, ei, objective, residuals, elapsed_ms })
    }

    pub fn finish(self, planner: PlannerKind, seed: u64, admm_unconverged: usize) -> Result<PlanResult, PlannerError> {
        let Some(best) = self.top.best().cloned() else {
            tracing::warn!(planner = planner.name(), seed, evaluations = self.evaluations, "no feasible pose");
            return Err(PlannerError::NoFeasiblePose);
        };
        tracing::info!(
            planner = planner.name(),
            seed,
            evaluations = self.evaluations,
            objective = best.objective,
            epsilon = best.epsilon,
            "run finished"
        );
        Ok(PlanResult {
            planner,
            seed,
            best,
            top: self.top.into_vec(),
            hpp_stage_best: self.hpp_best,
            evaluations: self.evaluations,
            admm_unconverged,
            trace: self.trace,
        })
    }
}

fn run(scene: &Scene, cfg: &PlannerConfig, seed: u64, kind: PlannerKind) -> Result<PlanResult, PlannerError> {
    cfg.validate()?;
    let use_admm = kind == PlannerKind::Integrate && cfg.admm.enabled;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut admm_rng = ChaCha8Rng::seed_from_u64(seed);
    admm_rng.set_stream(1);
    let metric = PoseMetric { w_rot: cfg.w_rot };
    let mut ledger = Ledger::new(cfg);
    let mut data = Dataset::new();
    let mut unconverged = 0;

    for (i, u) in lhs_sample(cfg.n_init, 6, rng.gen()).iter().enumerate() {
        let pose = scene.domain.pose_from_unit(u);
        let cand = scene.evaluate(&pose.isometry(), None, Provenance::Hpp)?;
        ledger.evaluations += 1;
        let y = cand.as_ref().map_or(0.0, |c| c.objective);
        if let Some(c) = &cand {
            ledger.add(c);
        }
        data.push(pose.location(), y);
        ledger.record(i, cand, None, y, None)?;
    }

    let mut params = KernelParams::new(data.std().max(1e-3), scene.aabb.diagonal(), cfg.noise);
    let mut gp = fit(&data, params, metric)?;
    if data.len() >= 3 {
        params = fit_hyperparams_rprop(&gp, cfg.rprop_iters)?.params;
        gp = fit(&data, params, metric)?;
    }

    for t in 0..cfg.n_iter {
        if ledger.out_of_time() {
            break;
        }
        let cands: Vec<Vec<f64>> = (0..cfg.n_cand)
            .map(|_| {
                let u: Vec<f64> = (0..6).map(|_| rng.gen()).collect();
                scene.domain.pose_from_unit(&u).location()
            })
            .collect();
        let f_best = data.best().map_or(0.0, |b| b.1);
        let pick = argmax_ei(&gp, cands, f_best, cfg.xi, |_| 0.0).expect("n_cand ≥ 1");
        let palm = PalmPose::from_location(&pick.location).isometry();

        let mut set: Vec<GraspCandidate> = Vec::new();
        if !scene.open_hand_collides(&palm)? {
            ledger.evaluations += 1;
            set.extend(scene.evaluate(&palm, None, Provenance::Hpp)?);
        }
        match gpis_atlas(scene, &Point3::from(palm.translation.vector), &cfg.atlas, &mut rng) {
            Ok(out) => {
                ledger.evaluations += out.evaluations();
                set.extend(out.candidates().cloned());
            }
            Err(PlannerError::AdaptionFailed { .. }) => {}
            Err(e) => return Err(e),
        }
        for c in &set {
            ledger.add(c);
        }
        let set_best = set.into_iter().reduce(|a, b| if b.objective > a.objective { b } else { a });

        let (location, y, chosen, residuals) = match set_best {
            Some(c) if use_admm => {
                let out = admm_cp_opt(scene, &c, &cfg.admm, cfg.xi, cfg.noise, &mut admm_rng)?;
                ledger.evaluations += out.evaluations;
                if out.state.as_ref().is_some_and(|s| !s.converged) {
                    unconverged += 1;
                }
                if out.improved {
                    ledger.add(&out.candidate);
                }
                let residuals = out.state.as_ref().and_then(|s| s.residuals());
                (location_of(&out.candidate), out.candidate.objective, Some(out.candidate), residuals)
            }
            Some(c) => (location_of(&c), c.objective, Some(c), None),
            None => (pick.location.clone(), 0.0, None, None),
        };
        data.push(location, y);
        if cfg.refit_every > 0 && (t + 1) % cfg.refit_every == 0 {
            let current = fit(&data, params, metric)?;
            params = fit_hyperparams_rprop(&current, cfg.rprop_iters)?.params;
        }
        gp = fit(&data, params, metric)?;
        tracing::debug!(planner = kind.name(), seed, iteration = t, ei = pick.ei, objective = y, "iteration done");
        ledger.record(cfg.n_init + t, chosen, Some(pick.ei), y, residuals)?;
    }
    ledger.finish(kind, seed, unconverged)
}
