//! Consensus ADMM over the joint vector, with each subproblem solved by a
//! small Bayesian optimization whose dataset persists across iterations.

use nalgebra::{Isometry3, Point3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{GraspCandidate, PlannerError, Provenance, Residuals, Scene};
use crate::gpis::{chart_from_gradient, chart_point};
use crate::hand::{Contact, HandState, LinkKind};
use crate::surrogate::{argmax_ei, Dataset, Euclidean, GpPosterior, KernelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyForm {
    /// `cᵢ²`: penalizes tips both off and inside the surface.
    Squared,
    /// `max(cᵢ, 0)²`.
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmParams {
    pub enabled: bool,
    pub rho: f64,
    pub mu_pen: f64,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub max_iter: usize,
    pub n_seed: usize,
    /// Evaluations per subproblem over one refinement, spread evenly across
    /// the outer iterations.
    pub sub_budget: usize,
    /// EI candidates per subproblem step.
    pub sub_candidates: usize,
    /// Radius of the palm shift on the chart, as a fraction of the box diagonal.
    pub shift_radius: f64,
    pub penalty: PenaltyForm,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            enabled: true,
            rho: 1.0,
            mu_pen: 100.0,
            eps_primal: 1e-3,
            eps_dual: 1e-3,
            max_iter: 10,
            n_seed: 5,
            sub_budget: 30,
            sub_candidates: 256,
            shift_radius: 0.05,
            penalty: PenaltyForm::Squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub q: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub rho: f64,
    pub mu_pen: f64,
    pub primal_history: Vec<f64>,
    pub dual_history: Vec<f64>,
    pub converged: bool,
}

impl AdmmState {
    pub fn new(start: Vec<f64>, rho: f64, mu_pen: f64) -> Self {
        assert!(rho > 0.0, "ρ must be positive");
        let n = start.len();
        Self {
            z: start.clone(),
            q: start,
            y: vec![0.0; n],
            rho,
            mu_pen,
            primal_history: Vec::new(),
            dual_history: Vec::new(),
            converged: false,
        }
    }

    pub fn iterations(&self) -> usize {
        self.primal_history.len()
    }

    pub fn residuals(&self) -> Option<Residuals> {
        Some(Residuals { primal: *self.primal_history.last()?, dual: *self.dual_history.last()? })
    }
}

/// `−(ρ/2)‖a − b + y/ρ‖²`.
fn augmented(a: &[f64], b: &[f64], y: &[f64], rho: f64) -> f64 {
    let s: f64 = a.iter().zip(b).zip(y).map(|((a, b), y)| (a - b + y / rho).powi(2)).sum();
    -0.5 * rho * s
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Maximizes `f(q) + g(z)` subject to `q = z`. `solve_q(z, y, ρ)` must return
/// an argmax of `f(q) − (ρ/2)‖q − z + y/ρ‖²` and `solve_z(q, y, ρ)` one of
/// `g(z) − (ρ/2)‖q − z + y/ρ‖²`. `on_iterate` sees every new state.
pub fn admm_consensus(
    mut state: AdmmState,
    eps_primal: f64,
    eps_dual: f64,
    max_iter: usize,
    mut solve_q: impl FnMut(&[f64], &[f64], f64) -> Result<Vec<f64>, PlannerError>,
    mut solve_z: impl FnMut(&[f64], &[f64], f64) -> Result<Vec<f64>, PlannerError>,
    mut on_iterate: impl FnMut(&AdmmState) -> Result<(), PlannerError>,
) -> Result<AdmmState, PlannerError> {
    let rho = state.rho;
    for _ in 0..max_iter {
        let q = solve_q(&state.z, &state.y, rho)?;
        let z = solve_z(&q, &state.y, rho)?;
        for ((yk, qk), zk) in state.y.iter_mut().zip(&q).zip(&z) {
            *yk += rho * (qk - zk);
        }
        let primal = dist(&q, &z);
        let dual = rho * dist(&z, &state.z);
        state.q = q;
        state.z = z;
        state.primal_history.push(primal);
        state.dual_history.push(dual);
        on_iterate(&state)?;
        if primal <= eps_primal && dual <= eps_dual {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Box-bounded BO maximizing `objective(x) + offset(x)`, where the known
/// `offset` changes between solves and only `objective` is modelled.
struct BoSubproblem {
    lo: Vec<f64>,
    hi: Vec<f64>,
    data: Dataset,
    budget: usize,
    n_cand: usize,
    xi: f64,
    noise: f64,
}

impl BoSubproblem {
    fn solve(
        &mut self,
        rng: &mut ChaCha8Rng,
        anchor: &[f64],
        objective: &mut impl FnMut(&[f64]) -> Result<f64, PlannerError>,
        offset: impl Fn(&[f64]) -> f64,
    ) -> Result<Vec<f64>, PlannerError> {
        let dims = self.lo.len();
        let span: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect();
        let diag = span.iter().map(|s| s * s).sum::<f64>().sqrt();
        let clamp = |x: Vec<f64>| -> Vec<f64> {
            x.into_iter().enumerate().map(|(k, v)| v.clamp(self.lo[k], self.hi[k])).collect()
        };
        for step in 0..self.budget {
            let x = if step == 0 && !self.data.locations.iter().any(|l| dist(l, anchor) <= 1e-12) {
                clamp(anchor.to_vec())
            } else if self.data.len() < 2 {
                (0..dims).map(|k| self.lo[k] + span[k] * rng.gen::<f64>()).collect()
            } else {
                let sd = self.data.std().max(1e-6);
                let params = KernelParams::new(sd, 0.25 * diag, self.noise.max(1e-3 * sd));
                let gp = GpPosterior::fit_escalating(self.data.clone(), params, Euclidean)?;
                let f_best = self.best(&offset).1;
                let local: Vec<Normal<f64>> = span.iter().map(|s| Normal::new(0.0, 0.1 * s).unwrap()).collect();
                let cands: Vec<Vec<f64>> = (0..self.n_cand)
                    .map(|c| {
                        if c % 2 == 0 {
                            (0..dims).map(|k| self.lo[k] + span[k] * rng.gen::<f64>()).collect()
                        } else {
                            clamp(anchor.iter().zip(&local).map(|(a, n)| a + n.sample(rng)).collect())
                        }
                    })
                    .collect();
                match argmax_ei(&gp, cands, f_best, self.xi, &offset) {
                    Some(pick) => pick.location,
                    None => anchor.to_vec(),
                }
            };
            let value = objective(&x)?;
            self.data.push(x, value);
        }
        Ok(self.best(&offset).0)
    }

    fn best(&self, offset: &impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for (x, y) in self.data.locations.iter().zip(&self.data.values) {
            let v = y + offset(x);
            if v > best.1 {
                best = (x.clone(), v);
            }
        }
        best
    }
}

/// Objective of the grasp whose contacts are the fingertips projected onto
/// the surface (one Newton step along the gradient).
pub fn virtual_objective(scene: &Scene, palm: &Isometry3<f64>, q: &[f64]) -> Result<f64, PlannerError> {
    let state = HandState::from_q([q[0], q[1], q[2], q[3]]);
    let kin = scene.hand.forward_kinematics(palm, &state)?;
    let tips = kin.tip_surface_points(scene.hand.capsule_radius);
    let mut contacts = Vec::with_capacity(3);
    for (i, p) in tips.iter().enumerate() {
        let (f, g) = scene.gpis.query(p);
        let gn2 = g.norm_squared();
        if !(gn2 > 1e-16) {
            continue;
        }
        let point: Point3<f64> = p - g * (f / gn2);
        let normal = g / gn2.sqrt();
        let link = &kin.links[i][1];
        let axis = link.end - link.start;
        let t = axis - normal * axis.dot(&normal);
        contacts.push(Contact {
            point,
            normal,
            link: LinkKind::Distal,
            finger: Some(i),
            value: f,
            tangent: (t.norm() > 1e-9).then(|| t.normalize()),
        });
    }
    let quality = scene.quality.evaluate(&contacts)?;
    Ok(scene.quality.objective(&quality))
}

/// `g_c(q) = −μ Σ cᵢ²` with `cᵢ = |f(tipᵢ)| − ε_c` (hinged when requested).
pub fn fingertip_penalty(
    scene: &Scene,
    palm: &Isometry3<f64>,
    q: &[f64],
    mu_pen: f64,
    form: PenaltyForm,
) -> Result<f64, PlannerError> {
    let state = HandState::from_q([q[0], q[1], q[2], q[3]]);
    let c = scene.hand.fingertip_constraint_residual(palm, &state, &scene.gpis, scene.contact.threshold)?;
    let sum: f64 = c
        .iter()
        .map(|&ci| match form {
            PenaltyForm::Squared => ci * ci,
            PenaltyForm::Hinge => ci.max(0.0).powi(2),
        })
        .sum();
    Ok(-mu_pen * sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmOutcome {
    /// Never worse than the input grasp.
    pub candidate: GraspCandidate,
    /// The input was beaten by a refined grasp.
    pub improved: bool,
    /// State of the seed that produced the best refined grasp, if any.
    pub state: Option<AdmmState>,
    pub evaluations: usize,
}

/// Contact-point refinement around `input`: the palm is shifted on the chart
/// parallel to the surface (the first seed keeps it in place), the joints are
/// optimized by consensus ADMM, and the hand is settled with AutoGrasp from
/// the optimized joints.
pub fn admm_cp_opt(
    scene: &Scene,
    input: &GraspCandidate,
    params: &AdmmParams,
    xi: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<AdmmOutcome, PlannerError> {
    let palm0 = input.pose.isometry();
    let t0 = Point3::from(palm0.translation.vector);
    let hit = scene.tree.nearest(&t0);
    let (_, grad) = scene.gpis.query(&hit.point);
    let shift = params.shift_radius * scene.aabb.diagonal();
    let chart = chart_from_gradient(&t0, &grad, shift)?;
    let hand = &scene.hand;
    let lo = vec![hand.spread.min, hand.proximal.min, hand.proximal.min, hand.proximal.min];
    let hi = vec![hand.spread.max, hand.proximal.max, hand.proximal.max, hand.proximal.max];

    let mut best: Option<(GraspCandidate, AdmmState)> = None;
    let mut evaluations = 0;
    for seed in 0..params.n_seed {
        let u = if seed == 0 {
            Vector2::zeros()
        } else {
            let r = shift * rng.gen::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.gen::<f64>();
            Vector2::new(r * a.cos(), r * a.sin())
        };
        let t = chart_point(&chart, &u)?;
        let palm = Isometry3::from_parts(nalgebra::Translation3::from(t.coords), palm0.rotation);
        let start = if seed == 0 {
            input.q.to_vec()
        } else {
            evaluations += 1;
            match scene.evaluate(&palm, None, Provenance::Admm)? {
                Some(c) => c.q.to_vec(),
                None => continue,
            }
        };

        let mut sub_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let make = || BoSubproblem {
            lo: lo.clone(),
            hi: hi.clone(),
            data: Dataset::new(),
            budget: params.sub_budget.div_ceil(params.max_iter.max(1)).max(1),
            n_cand: params.sub_candidates,
            xi,
            noise,
        };
        let (mut bo_q, mut bo_z) = (make(), make());
        let mut f_eval = |q: &[f64]| virtual_objective(scene, &palm, q);
        let mut g_eval = |z: &[f64]| fingertip_penalty(scene, &palm, z, params.mu_pen, params.penalty);
        let rng_cell = std::cell::RefCell::new(&mut sub_rng);
        let mut best_iterate: (Vec<f64>, f64) = (start.clone(), f64::NEG_INFINITY);

        let state = admm_consensus(
            AdmmState::new(start.clone(), params.rho, params.mu_pen),
            params.eps_primal,
            params.eps_dual,
            params.max_iter,
            |z, y, rho| {
                let (z, y) = (z.to_vec(), y.to_vec());
                bo_q.solve(&mut rng_cell.borrow_mut(), &z, &mut f_eval, |q| augmented(q, &z, &y, rho))
            },
            |q, y, rho| {
                let (q, y) = (q.to_vec(), y.to_vec());
                bo_z.solve(&mut rng_cell.borrow_mut(), &q, &mut g_eval, |z| augmented(&q, z, &y, rho))
            },
            |s| {
                let merit = virtual_objective(scene, &palm, &s.q)?
                    + fingertip_penalty(scene, &palm, &s.q, params.mu_pen, params.penalty)?;
                if merit > best_iterate.1 {
                    best_iterate = (s.q.clone(), merit);
                }
                Ok(())
            },
        )?;

        if !state.converged {
            tracing::debug!(seed, iterations = state.iterations(), "admm stopped at max_iter");
        }
        let q = if state.converged { state.q.clone() } else { best_iterate.0 };
        let settle = HandState::from_q([q[0], q[1], q[2], q[3]]);
        evaluations += 1;
        if let Some(c) = scene.evaluate(&palm, Some(&settle), Provenance::Admm)? {
            if best.as_ref().is_none_or(|(b, _)| c.objective > b.objective) {
                best = Some((c, state));
            }
        }
    }

    Ok(match best {
        Some((c, s)) if c.objective > input.objective => {
            AdmmOutcome { candidate: c, improved: true, state: Some(s), evaluations }
        }
        other => AdmmOutcome { candidate: input.clone(), improved: false, state: other.map(|(_, s)| s), evaluations },
    })
}
