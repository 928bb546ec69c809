use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gp::{GpPosterior, Metric};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Closed-form expected improvement of a Gaussian N(μ, σ²) over `f_best + xi`.
///
/// The indicator on σ makes EI vanish wherever the posterior is certain.
pub fn expected_improvement(mu: f64, sigma: f64, f_best: f64, xi: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let gain = mu - f_best - xi;
    let z = gain / sigma;
    (gain * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionPick {
    pub location: Vec<f64>,
    pub ei: f64,
    pub mean: f64,
    pub std: f64,
    /// Index of the winning candidate in draw order.
    pub index: usize,
}

/// EI-argmax over an explicit candidate list. `offset(x)` is a known
/// deterministic term added to the posterior mean (zero for plain BO).
/// Ties keep the earliest candidate.
pub fn argmax_ei<M: Metric>(
    gp: &GpPosterior<M>,
    candidates: Vec<Vec<f64>>,
    f_best: f64,
    xi: f64,
    offset: impl Fn(&[f64]) -> f64,
) -> Option<AcquisitionPick> {
    let mut best: Option<AcquisitionPick> = None;
    for (index, location) in candidates.into_iter().enumerate() {
        let (mu, sd) = gp.posterior(&location);
        let mean = mu + offset(&location);
        let ei = expected_improvement(mean, sd, f_best, xi);
        if best.as_ref().is_none_or(|b| ei > b.ei) {
            best = Some(AcquisitionPick { location, ei, mean, std: sd, index });
        }
    }
    best
}

/// Draws `n_cand` locations from `sampler` with a seeded generator and
/// returns the EI maximizer among them.
pub fn maximize_acquisition<M: Metric>(
    gp: &GpPosterior<M>,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    n_cand: usize,
    seed: u64,
    f_best: f64,
    xi: f64,
) -> AcquisitionPick {
    assert!(n_cand >= 1, "need at least one candidate");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vec<f64>> = (0..n_cand).map(|_| sampler(&mut rng)).collect();
    argmax_ei(gp, candidates, f_best, xi, |_| 0.0).expect("non-empty candidate list")
}
