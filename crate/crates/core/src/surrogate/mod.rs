//! Gaussian-process surrogate and Bayesian-optimization primitives.

mod acquisition;
mod gp;
mod kernel;
mod lhs;
mod rprop;
mod se3;

pub use acquisition::{
    argmax_ei, expected_improvement, maximize_acquisition, normal_cdf, normal_pdf, AcquisitionPick,
};
pub use gp::{Dataset, Euclidean, GpPosterior, Metric, DUPLICATE_TOL};
pub use kernel::{matern52, matern52_grad_factor, KernelParams};
pub use lhs::lhs_sample;
pub use rprop::{fit_hyperparams_rprop, RpropReport, ETA_MINUS, ETA_PLUS, STEP_MAX, STEP_MIN};
pub use se3::{isometry_distance, quaternion_angle, rotation_angle, se3_distance};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurrogateError {
    #[error("kernel matrix of size {size} is not positive definite even after jitter")]
    NonPdKernel { size: usize },
    #[error("invalid kernel parameters {0:?}")]
    InvalidParams(KernelParams),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("need at least {need} observations, have {have}")]
    TooFewPoints { have: usize, need: usize },
    #[error("matrix is not a rotation (‖RᵀR − I‖∞ = {orthogonality_error:e}, det = {determinant})")]
    NotARotation { orthogonality_error: f64, determinant: f64 },
}
