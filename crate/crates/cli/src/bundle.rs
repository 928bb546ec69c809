use std::path::{Path, PathBuf};
use std::time::Instant;

use graspbo::planner::{
    baseline_random, baseline_sa, hpp_opt, integrate, GraspCandidate, PlanResult, PlannerError, PlannerKind, Scene,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{check_format, read_json, write_json, write_text};
use crate::model::build_scene;

pub const BUNDLE_FORMAT: &str = "graspbo-result-bundle";
pub const BUNDLE_VERSION: u32 = 1;

/// Outcome of one seed. `result` is absent when no feasible pose was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub result: Option<PlanResult>,
    pub error: Option<String>,
    pub wall_ms: f64,
}

/// Entry of the merged candidate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub seed: u64,
    pub candidate: GraspCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: usize,
    pub feasible_runs: usize,
    pub force_closure_runs: usize,
    pub best_epsilon: f64,
    pub best_volume: f64,
    pub best_objective: f64,
    /// Means of the per-seed best candidates (infeasible seeds count as 0).
    pub mean_best_epsilon: f64,
    pub mean_best_volume: f64,
    pub mean_best_objective: f64,
    /// Means over the merged top list.
    pub top_count: usize,
    pub top_mean_epsilon: f64,
    pub top_mean_volume: f64,
    pub wall_ms: f64,
}

/// Everything a `plan` invocation produced, with the config needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub format: String,
    pub version: u32,
    pub object: String,
    pub planner: PlannerKind,
    pub mesh_fingerprint: u64,
    pub config: RunConfig,
    pub runs: Vec<SeedRun>,
    /// Best candidates over all seeds, nonincreasing in objective.
    pub top: Vec<RankedCandidate>,
    pub summary: Summary,
}

impl ResultBundle {
    pub fn load(path: &Path) -> Result<Self> {
        let bundle: ResultBundle = read_json(path)?;
        check_format(path, &bundle.format, bundle.version, BUNDLE_FORMAT, BUNDLE_VERSION)?;
        Ok(bundle)
    }

    /// Mean ε and volume over the first `k` merged candidates.
    pub fn top_means(&self, k: usize) -> Option<(f64, f64)> {
        let top = &self.top[..k.min(self.top.len())];
        if top.is_empty() {
            return None;
        }
        let n = top.len() as f64;
        Some((
            top.iter().map(|c| c.candidate.epsilon).sum::<f64>() / n,
            top.iter().map(|c| c.candidate.volume).sum::<f64>() / n,
        ))
    }

    pub fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        w.write_record([
            "object",
            "planner",
            "seed",
            "status",
            "best_epsilon",
            "best_volume",
            "best_objective",
            "force_closure",
            "evaluations",
            "top_count",
            "top_mean_epsilon",
            "top_mean_volume",
            "wall_ms",
        ])
        .map_err(internal)?;
        for run in &self.runs {
            let mut row = vec![self.object.clone(), self.planner.name().to_string(), run.seed.to_string()];
            match &run.result {
                Some(r) => {
                    let n = r.top.len() as f64;
                    row.extend([
                        "ok".to_string(),
                        r.best.epsilon.to_string(),
                        r.best.volume.to_string(),
                        r.best.objective.to_string(),
                        (r.best.epsilon > 0.0).to_string(),
                        r.evaluations.to_string(),
                        r.top.len().to_string(),
                        (r.top.iter().map(|c| c.epsilon).sum::<f64>() / n).to_string(),
                        (r.top.iter().map(|c| c.volume).sum::<f64>() / n).to_string(),
                    ]);
                }
                None => {
                    row.push("infeasible".into());
                    row.extend(["0", "0", "0", "false", "", "0", "", ""].map(String::from));
                }
            }
            row.push(format!("{:.3}", run.wall_ms));
            w.write_record(&row).map_err(internal)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)
            .map_err(|e| CliError::Internal(e.to_string()))
    }

    /// `<output_dir>/<object>_<planner>.json` and `.csv`.
    pub fn paths(&self, output_dir: &Path) -> (PathBuf, PathBuf) {
        let stem = format!("{}_{}", self.object, self.planner.name());
        (output_dir.join(format!("{stem}.json")), output_dir.join(format!("{stem}.csv")))
    }

    pub fn write(&self, output_dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let (json, csv) = self.paths(output_dir);
        write_json(&json, self)?;
        write_text(&csv, &self.csv()?)?;
        Ok((json, csv))
    }
}

pub fn run_planner(scene: &Scene, cfg: &RunConfig, seed: u64) -> std::result::Result<PlanResult, PlannerError> {
    let pc = &cfg.planner_config;
    match cfg.planner {
        PlannerKind::Hpp => hpp_opt(scene, pc, seed),
        PlannerKind::Integrate => integrate(scene, pc, seed),
        PlannerKind::Random => baseline_random(scene, pc, cfg.baseline_evals(), seed),
        PlannerKind::Sa => baseline_sa(scene, pc, cfg.baseline_evals(), seed),
    }
}

/// Runs every seed in order. Infeasible seeds are recorded; other errors abort.
pub fn plan(cfg: &RunConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let start = Instant::now();
    let (object, scene) = build_scene(cfg)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let t = Instant::now();
        let outcome = run_planner(&scene, cfg, seed);
        let wall_ms = t.elapsed().as_secs_f64() * 1e3;
        let run = match outcome {
            Ok(result) => {
                tracing::info!(seed, objective = result.best.objective, epsilon = result.best.epsilon, "seed finished");
                SeedRun { seed, result: Some(result), error: None, wall_ms }
            }
            Err(e @ (PlannerError::NoFeasiblePose | PlannerError::AdaptionFailed { .. })) => {
                tracing::warn!(seed, "{e}");
                SeedRun { seed, result: None, error: Some(e.to_string()), wall_ms }
            }
            Err(e) => return Err(e.into()),
        };
        runs.push(run);
    }
    let top = merge_top(&runs, cfg.planner_config.top_k);
    let summary = summarize(&runs, &top, start.elapsed().as_secs_f64() * 1e3);
    Ok(ResultBundle {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        object: object.label,
        planner: cfg.planner,
        mesh_fingerprint: object.fingerprint,
        config: cfg.clone(),
        runs,
        top,
        summary,
    })
}

fn merge_top(runs: &[SeedRun], k: usize) -> Vec<RankedCandidate> {
    let mut all: Vec<RankedCandidate> = runs
        .iter()
        .filter_map(|r| r.result.as_ref().map(|res| (r.seed, res)))
        .flat_map(|(seed, res)| res.top.iter().map(move |c| RankedCandidate { seed, candidate: c.clone() }))
        .collect();
    // stable: ties keep seed order
    all.sort_by(|a, b| b.candidate.objective.total_cmp(&a.candidate.objective));
    all.truncate(k);
    all
}

fn summarize(runs: &[SeedRun], top: &[RankedCandidate], wall_ms: f64) -> Summary {
    let bests: Vec<&GraspCandidate> = runs.iter().filter_map(|r| r.result.as_ref().map(|r| &r.best)).collect();
    let n = runs.len().max(1) as f64;
    let mean = |f: fn(&GraspCandidate) -> f64| bests.iter().map(|c| f(c)).sum::<f64>() / n;
    let max = |f: fn(&GraspCandidate) -> f64| bests.iter().map(|c| f(c)).fold(0.0, f64::max);
    let m = top.len().max(1) as f64;
    Summary {
        seeds: runs.len(),
        feasible_runs: bests.len(),
        force_closure_runs: bests.iter().filter(|c| c.epsilon > 0.0).count(),
        best_epsilon: max(|c| c.epsilon),
        best_volume: max(|c| c.volume),
        best_objective: max(|c| c.objective),
        mean_best_epsilon: mean(|c| c.epsilon),
        mean_best_volume: mean(|c| c.volume),
        mean_best_objective: mean(|c| c.objective),
        top_count: top.len(),
        top_mean_epsilon: top.iter().map(|c| c.candidate.epsilon).sum::<f64>() / m,
        top_mean_volume: top.iter().map(|c| c.candidate.volume).sum::<f64>() / m,
        wall_ms,
    }
}

/// JSON of a bundle with every timing field removed.
pub fn without_timing(bundle: &ResultBundle) -> serde_json::Value {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.remove("elapsed_ms");
                map.remove("wall_ms");
                map.values_mut().for_each(strip);
            }
            serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v = serde_json::to_value(bundle).unwrap_or(serde_json::Value::Null);
    strip(&mut v);
    v
}
