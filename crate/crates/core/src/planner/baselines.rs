use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::hpp::Ledger;
use super::{PlanResult, PlannerConfig, PlannerError, PlannerKind, Provenance, Scene};

/// Geometric cooling: `T ← α·T` after every evaluation. Proposals are
/// Gaussian in the unit pose cube with standard deviation
/// `max(step·T/T₀, min_step)`, so the walk narrows as it cools.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaParams {
    pub t0: f64,
    pub alpha: f64,
    /// Proposal standard deviation at `T₀`.
    pub step: f64,
    pub min_step: f64,
}

impl Default for SaParams {
    fn default() -> Self {
        Self { t0: 1.0, alpha: 0.95, step: 0.3, min_step: 0.01 }
    }
}

impl SaParams {
    pub fn proposal_std(&self, temperature: f64) -> f64 {
        let scale = if self.t0 > 0.0 { temperature / self.t0 } else { 0.0 };
        (self.step * scale).max(self.min_step)
    }
}

/// Coordinates of the unit pose cube that are angles with period 1.
const PERIODIC: [bool; 6] = [false, true, false, false, false, true];

fn random_unit(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..6).map(|_| rng.gen()).collect()
}

/// Uniform poses from the planner domain, each closed with AutoGrasp.
pub fn baseline_random(scene: &Scene, cfg: &PlannerConfig, n_evals: usize, seed: u64) -> Result<PlanResult, PlannerError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = Ledger::new(cfg);
    for i in 0..n_evals {
        if ledger.out_of_time() {
            break;
        }
        let palm = scene.domain.pose_from_unit(&random_unit(&mut rng)).isometry();
        let cand = scene.evaluate(&palm, None, Provenance::Baseline)?;
        ledger.evaluations += 1;
        let y = cand.as_ref().map_or(0.0, |c| c.objective);
        if let Some(c) = &cand {
            ledger.add(c);
        }
        ledger.record(i, cand, None, y, None)?;
    }
    ledger.finish(PlannerKind::Random, seed, 0)
}

/// Metropolis acceptance for maximizing: improvements always, a drop `Δ < 0`
/// with probability `exp(Δ/T)`; at `T = 0` only strict improvements.
pub fn metropolis_accept(delta: f64, temperature: f64, draw: f64) -> bool {
    if delta > 0.0 {
        return true;
    }
    temperature > 0.0 && draw < (delta / temperature).exp()
}

/// Simulated annealing over the unit pose cube with energy `−f_obj`.
pub fn baseline_sa(scene: &Scene, cfg: &PlannerConfig, n_evals: usize, seed: u64) -> Result<PlanResult, PlannerError> {
    cfg.validate()?;
    let sa = cfg.sa;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = Ledger::new(cfg);
    let mut current: Option<(Vec<f64>, f64)> = None;
    let mut temperature = sa.t0;
    for i in 0..n_evals {
        if ledger.out_of_time() {
            break;
        }
        let u = match &current {
            None => random_unit(&mut rng),
            Some((u, _)) => {
                let step = Normal::new(0.0, sa.proposal_std(temperature)).expect("validated step");
                u.iter()
                .zip(PERIODIC)
                .map(|(x, periodic)| {
                    let v = x + step.sample(&mut rng);
                    if periodic {
                        v.rem_euclid(1.0)
                    } else {
                        reflect_unit(v)
                    }
                })
                .collect()
            }
        };
        let palm = scene.domain.pose_from_unit(&u).isometry();
        let cand = scene.evaluate(&palm, None, Provenance::Baseline)?;
        ledger.evaluations += 1;
        let y = cand.as_ref().map_or(0.0, |c| c.objective);
        if let Some(c) = &cand {
            ledger.add(c);
        }
        let accept = match &current {
            None => true,
            Some((_, f)) => metropolis_accept(y - f, temperature, rng.gen()),
        };
        if accept {
            current = Some((u, y));
        }
        temperature *= sa.alpha;
        ledger.record(i, cand, None, y, None)?;
    }
    ledger.finish(PlannerKind::Sa, seed, 0)
}

fn reflect_unit(v: f64) -> f64 {
    let m = v.rem_euclid(2.0);
    if m > 1.0 {
        2.0 - m
    } else {
        m
    }
}
