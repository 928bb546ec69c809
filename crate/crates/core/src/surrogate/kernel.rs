use serde::{Deserialize, Serialize};

const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn 5/2 hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Signal standard deviation σ.
    pub sigma: f64,
    /// Length-scale ρ.
    pub length: f64,
    /// Observation noise standard deviation.
    pub noise: f64,
}

impl KernelParams {
    pub fn new(sigma: f64, length: f64, noise: f64) -> Self {
        Self { sigma, length, noise }
    }

    pub fn is_valid(&self) -> bool {
        [self.sigma, self.length, self.noise].iter().all(|v| v.is_finite() && *v > 0.0)
    }

    pub(crate) fn to_log(self) -> [f64; 3] {
        [self.sigma.ln(), self.length.ln(), self.noise.ln()]
    }

    pub(crate) fn from_log(l: [f64; 3]) -> Self {
        Self { sigma: l[0].exp(), length: l[1].exp(), noise: l[2].exp() }
    }
}

/// K(d) = σ²(1 + √5 d/ρ + 5d²/3ρ²) exp(−√5 d/ρ)
pub fn matern52(d: f64, p: &KernelParams) -> f64 {
    let r = SQRT5 * d / p.length;
    p.sigma * p.sigma * (1.0 + r + r * r / 3.0) * (-r).exp()
}

/// ∂K/∂x for K(|x − x'|) expressed as a factor of (x − x'):
/// ∇ₓK = matern52_grad_factor(d) · (x − x').
///
/// The factor is finite at d = 0, so no division by the distance occurs.
pub fn matern52_grad_factor(d: f64, p: &KernelParams) -> f64 {
    let r = SQRT5 * d / p.length;
    -p.sigma * p.sigma * 5.0 / (3.0 * p.length * p.length) * (1.0 + r) * (-r).exp()
}

/// ∂K/∂(log ρ) at distance d.
pub(crate) fn matern52_dlog_length(d: f64, p: &KernelParams) -> f64 {
    let r = SQRT5 * d / p.length;
    p.sigma * p.sigma * r * r * (1.0 + r) / 3.0 * (-r).exp()
}
