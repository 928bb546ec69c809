//! Resilient propagation (iRprop−) on the GP log marginal likelihood.

use serde::{Deserialize, Serialize};

use super::gp::{GpPosterior, Metric};
use super::kernel::KernelParams;
use super::SurrogateError;

pub const ETA_PLUS: f64 = 1.2;
pub const ETA_MINUS: f64 = 0.5;
pub const STEP_MIN: f64 = 1e-6;
pub const STEP_MAX: f64 = 10.0;
const STEP_INIT: f64 = 0.1;

/// Box on the log-parameters (σ, ρ, noise) keeping the kernel sane.
const LOG_BOUNDS: [(f64, f64); 3] = [(-13.8, 6.9), (-9.2, 6.9), (-13.8, 0.0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpropReport {
    pub params: KernelParams,
    pub initial_lml: f64,
    pub final_lml: f64,
    /// LML after each accepted step.
    pub accepted: Vec<f64>,
    pub rejected: usize,
}

/// Maximizes the log marginal likelihood over (log σ, log ρ, log noise) using
/// only gradient signs. A step is accepted only if the likelihood does not
/// decrease; failing or worse proposals are rejected and all steps halve.
pub fn fit_hyperparams_rprop<M: Metric + Clone>(
    gp: &GpPosterior<M>,
    iters: usize,
) -> Result<RpropReport, SurrogateError> {
    if gp.dataset().len() < 3 {
        return Err(SurrogateError::TooFewPoints { have: gp.dataset().len(), need: 3 });
    }
    let mut current = gp.clone();
    let mut lml = current.log_marginal_likelihood();
    let initial_lml = lml;
    let mut logp = current.params().to_log();
    let mut step = [STEP_INIT; 3];
    let mut prev = [0.0f64; 3];
    let mut accepted = Vec::new();
    let mut rejected = 0;

    for _ in 0..iters {
        let mut g = current.lml_gradient();
        let mut proposal = logp;
        for k in 0..3 {
            let s = g[k] * prev[k];
            if s > 0.0 {
                step[k] = (step[k] * ETA_PLUS).min(STEP_MAX);
            } else if s < 0.0 {
                step[k] = (step[k] * ETA_MINUS).max(STEP_MIN);
                g[k] = 0.0;
            }
            let (lo, hi) = LOG_BOUNDS[k];
            proposal[k] = (logp[k] + g[k].signum() * step[k] * f64::from(g[k] != 0.0)).clamp(lo, hi);
        }
        if proposal == logp {
            if step.iter().all(|&s| s <= STEP_MIN) {
                break;
            }
            prev = g;
            continue;
        }
        match current.refit(KernelParams::from_log(proposal)) {
            Ok(next) => {
                let next_lml = next.log_marginal_likelihood();
                if next_lml.is_finite() && next_lml >= lml {
                    current = next;
                    lml = next_lml;
                    logp = proposal;
                    prev = g;
                    accepted.push(lml);
                    continue;
                }
            }
            Err(SurrogateError::NonPdKernel { .. }) => {}
            Err(e) => return Err(e),
        }
        rejected += 1;
        step = step.map(|s| (s * ETA_MINUS).max(STEP_MIN));
        prev = [0.0; 3];
    }
    Ok(RpropReport {
        params: current.params(),
        initial_lml,
        final_lml: lml,
        accepted,
        rejected,
    })
}
