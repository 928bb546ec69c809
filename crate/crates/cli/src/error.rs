use graspbo::planner::PlannerError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config, missing or malformed files.
    #[error("{0}")]
    Input(String),
    /// No seed produced a feasible grasp.
    #[error("{0}")]
    Infeasible(String),
    /// Bundles to compare do not cover the same objects.
    #[error("bundles cover different objects: {0}")]
    ObjectMismatch(String),
    /// A numerical or internal invariant failed.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 1,
            CliError::Input(_) | CliError::ObjectMismatch(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        match e {
            PlannerError::NoFeasiblePose | PlannerError::AdaptionFailed { .. } => CliError::Infeasible(e.to_string()),
            PlannerError::InvalidConfig(_) | PlannerError::Geometry(_) | PlannerError::Pose(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
