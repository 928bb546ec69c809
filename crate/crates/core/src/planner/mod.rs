//! Grasp planners: Bayesian palm-pose optimization with chart-based local
//! adaption, ADMM contact refinement, their integration, and random and
//! simulated-annealing baselines.

mod admm;
mod atlas;
mod baselines;
mod hpp;
mod scene;

use serde::{Deserialize, Serialize};

pub use admm::{
    admm_consensus, admm_cp_opt, fingertip_penalty, virtual_objective, AdmmOutcome, AdmmParams, AdmmState,
    PenaltyForm,
};
pub use atlas::{gpis_atlas, AtlasOutcome, AtlasParams, AtlasSeed};
pub use baselines::{baseline_random, baseline_sa, metropolis_accept, SaParams};
pub use hpp::{hpp_opt, integrate};
pub use scene::{Scene, SceneConfig};

use crate::geometry::GeometryError;
use crate::gpis::GpisError;
use crate::hand::{Contact, HandError};
use crate::posedomain::{PoseError, PoseRecord};
use crate::quality::QualityError;
use crate::surrogate::SurrogateError;

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("no collision-free palm pose was found within the budget")]
    NoFeasiblePose,
    #[error("local adaption failed for all {seeds} seeds")]
    AdaptionFailed { seeds: usize },
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("trace iteration {got} does not follow {last}")]
    TraceOrder { last: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Gpis(#[from] GpisError),
    #[error(transparent)]
    Hand(#[from] HandError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Hpp,
    Admm,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Hpp,
    Integrate,
    Random,
    Sa,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Hpp => "hpp",
            PlannerKind::Integrate => "integrate",
            PlannerKind::Random => "random",
            PlannerKind::Sa => "sa",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hpp" => Ok(Self::Hpp),
            "integrate" => Ok(Self::Integrate),
            "random" => Ok(Self::Random),
            "sa" => Ok(Self::Sa),
            other => Err(format!("unknown planner '{other}' (expected hpp, integrate, random or sa)")),
        }
    }
}

/// One executed grasp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspCandidate {
    pub pose: PoseRecord,
    /// `[spread, θ₁, θ₂, θ₃]`.
    pub q: [f64; 4],
    pub breakaway: [f64; 3],
    pub contacts: Vec<Contact>,
    pub epsilon: f64,
    pub volume: f64,
    pub objective: f64,
    pub provenance: Provenance,
}

/// Planner settings; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub n_init: usize,
    pub n_iter: usize,
    /// EI candidates per iteration.
    pub n_cand: usize,
    pub xi: f64,
    pub w_rot: f64,
    pub noise: f64,
    /// Hyperparameters are re-fitted every this many iterations.
    pub refit_every: usize,
    pub rprop_iters: usize,
    pub top_k: usize,
    /// Optional wall-clock cap in seconds; runs stop early once exceeded.
    pub time_budget: Option<f64>,
    pub atlas: AtlasParams,
    pub admm: AdmmParams,
    pub sa: SaParams,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_init: 20,
            n_iter: 40,
            n_cand: 512,
            xi: 0.01,
            w_rot: 0.1,
            noise: 1e-4,
            refit_every: 10,
            rprop_iters: 30,
            top_k: 20,
            time_budget: None,
            atlas: AtlasParams::default(),
            admm: AdmmParams::default(),
            sa: SaParams::default(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::InvalidConfig(m.to_string()));
        if self.n_init == 0 {
            return bad("n_init must be ≥ 1");
        }
        if self.n_cand == 0 || self.top_k == 0 {
            return bad("n_cand and top_k must be ≥ 1");
        }
        if !(self.xi >= 0.0 && self.w_rot >= 0.0 && self.noise > 0.0) {
            return bad("xi and w_rot must be ≥ 0 and noise > 0");
        }
        let a = &self.atlas;
        if !(a.lambda_step > 0.0 && a.lambda_max >= 0.0 && a.theta_step > 0.0 && a.chart_radius > 0.0) {
            return bad("atlas steps and chart radius must be positive");
        }
        let m = &self.admm;
        if !(m.rho > 0.0 && m.mu_pen >= 0.0 && m.eps_primal > 0.0 && m.eps_dual > 0.0) {
            return bad("admm rho and tolerances must be positive");
        }
        if m.sub_budget == 0 || m.sub_candidates == 0 {
            return bad("admm sub-budgets must be ≥ 1");
        }
        let sa = &self.sa;
        if !(sa.t0 >= 0.0 && sa.alpha > 0.0 && sa.alpha <= 1.0 && sa.step > 0.0 && sa.min_step > 0.0) {
            return bad("sa needs t0 ≥ 0, alpha in (0, 1] and positive steps");
        }
        Ok(())
    }

    /// Pose evaluations spent by one HPP run at most; baselines get the same.
    pub fn hpp_evaluation_budget(&self) -> usize {
        self.n_init + self.n_iter * (1 + self.atlas.n_seed)
    }
}

/// ADMM residuals of one refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Best grasp of this iteration, if any pose was collision-free.
    pub candidate: Option<GraspCandidate>,
    pub ei: Option<f64>,
    /// Objective fed back to the surrogate (0 when nothing was feasible).
    pub objective: f64,
    pub residuals: Option<Residuals>,
    /// Milliseconds since the run started.
    pub elapsed_ms: f64,
}

/// Append-only log with strictly increasing iteration numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) -> Result<(), PlannerError> {
        if let Some(last) = self.records.last() {
            if record.iteration <= last.iteration {
                return Err(PlannerError::TraceOrder { last: last.iteration, got: record.iteration });
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// The best `k` candidates, sorted by nonincreasing objective; ties keep
/// insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopList {
    capacity: usize,
    items: Vec<GraspCandidate>,
}

impl TopList {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), items: Vec::new() }
    }

    pub fn insert(&mut self, candidate: GraspCandidate) {
        let at = self.items.partition_point(|c| c.objective >= candidate.objective);
        if at < self.capacity {
            self.items.insert(at, candidate);
            self.items.truncate(self.capacity);
        }
    }

    pub fn items(&self) -> &[GraspCandidate] {
        &self.items
    }

    pub fn best(&self) -> Option<&GraspCandidate> {
        self.items.first()
    }

    pub fn into_vec(self) -> Vec<GraspCandidate> {
        self.items
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub planner: PlannerKind,
    pub seed: u64,
    pub best: GraspCandidate,
    pub top: Vec<GraspCandidate>,
    /// Best objective among the non-ADMM evaluations of the run.
    pub hpp_stage_best: Option<f64>,
    /// Grasp executions at distinct palm poses (ADMM settles included).
    pub evaluations: usize,
    /// ADMM refinements that stopped at `max_iter` without meeting both tolerances.
    pub admm_unconverged: usize,
    pub trace: RunTrace,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(objective: f64, tag: f64) -> GraspCandidate {
        GraspCandidate {
            pose: PoseRecord { translation: [tag, 0.0, 0.0], quaternion: [1.0, 0.0, 0.0, 0.0] },
            q: [0.0; 4],
            breakaway: [0.0; 3],
            contacts: vec![],
            epsilon: 0.0,
            volume: objective,
            objective,
            provenance: Provenance::Hpp,
        }
    }

    #[test]
    fn top_list_keeps_best_in_order() {
        let mut top = TopList::new(3);
        for (i, v) in [0.1, 0.5, 0.3, 0.5, 0.05, 0.7].into_iter().enumerate() {
            top.insert(cand(v, i as f64));
        }
        let got: Vec<(f64, f64)> = top.items().iter().map(|c| (c.objective, c.pose.translation[0])).collect();
        assert_eq!(got, vec![(0.7, 5.0), (0.5, 1.0), (0.5, 3.0)]);
    }

    #[test]
    fn trace_rejects_non_increasing_iterations() {
        let rec = |iteration| TraceRecord {
            iteration,
            candidate: None,
            ei: None,
            objective: 0.0,
            residuals: None,
            elapsed_ms: 0.0,
        };
        let mut t = RunTrace::default();
        t.push(rec(0)).unwrap();
        t.push(rec(2)).unwrap();
        assert!(matches!(t.push(rec(2)), Err(PlannerError::TraceOrder { last: 2, got: 2 })));
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg: PlannerConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, PlannerConfig::default());
        assert_eq!(cfg.hpp_evaluation_budget(), 20 + 40 * 6);
        assert!(serde_json::from_str::<PlannerConfig>(r#"{"n_inti": 3}"#).is_err());
        let cfg: PlannerConfig = serde_json::from_str(r#"{"atlas": {"n_seed": 2}}"#).unwrap();
        assert_eq!(cfg.atlas.n_seed, 2);
        assert_eq!(cfg.atlas.lambda_max, AtlasParams::default().lambda_max);
    }

    #[test]
    fn planner_names_round_trip() {
        for k in [PlannerKind::Hpp, PlannerKind::Integrate, PlannerKind::Random, PlannerKind::Sa] {
            assert_eq!(k.name().parse::<PlannerKind>().unwrap(), k);
        }
        assert!("annealing".parse::<PlannerKind>().is_err());
    }
}
