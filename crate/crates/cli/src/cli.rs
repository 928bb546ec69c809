use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use graspbo::planner::PlannerKind;

use crate::bundle::{plan, ResultBundle};
use crate::compare::{compare, Averaging, TableFormat};
use crate::config::{parse_seeds, MeshSource, ObjectSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::export::export_scene;
use crate::io::{write_json, write_text};
use crate::model::fit_model;

#[derive(Debug, Parser)]
#[command(name = "graspbo", version, about = "Bayesian-optimization grasp planning over implicit surfaces")]
pub struct Cli {
    /// Log verbosity on stderr.
    #[arg(long, global = true, env = "GRASPBO_LOG", value_enum, default_value = "info")]
    pub log_level: LogLevel,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogLevel {
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn filter(self) -> tracing::Level {
        match self {
            LogLevel::Info => tracing::Level::INFO,
            LogLevel::Debug => tracing::Level::DEBUG,
            LogLevel::Trace => tracing::Level::TRACE,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the implicit surface of an object and write it with a fit report.
    FitGpis(FitArgs),
    /// Run a planner over one or more seeds and write a result bundle.
    Plan(PlanArgs),
    /// Tabulate result bundles per object and planner.
    Compare(CompareArgs),
    /// Write one grasp of a bundle as a scene file for external viewers.
    ExportScene(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerArg {
    Hpp,
    Integrate,
    Random,
    Sa,
}

impl From<PlannerArg> for PlannerKind {
    fn from(p: PlannerArg) -> Self {
        match p {
            PlannerArg::Hpp => PlannerKind::Hpp,
            PlannerArg::Integrate => PlannerKind::Integrate,
            PlannerArg::Random => PlannerKind::Random,
            PlannerArg::Sa => PlannerKind::Sa,
        }
    }
}

#[derive(Debug, Args)]
pub struct ObjectArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Object mesh (OFF or OBJ); replaces the config's object.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Uniform mesh scale, e.g. 0.001 for millimeter models.
    #[arg(long)]
    pub mesh_scale: Option<f64>,
    /// Object label used in file names and tables.
    #[arg(long)]
    pub name: Option<String>,
    /// Hand description (JSON).
    #[arg(long)]
    pub hand: Option<PathBuf>,
    #[arg(long)]
    pub surface_samples: Option<usize>,
    #[arg(long, env = "GRASPBO_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
}

impl ObjectArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.mesh) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(mesh)) => {
                RunConfig::for_object(ObjectSpec { name: None, mesh: MeshSource::Path(mesh.clone()), scale: 1.0 })
            }
            (None, None) => return Err(CliError::Input("either --config or --mesh is required".into())),
        };
        if let Some(mesh) = &self.mesh {
            cfg.object.mesh = MeshSource::Path(mesh.clone());
        }
        if let Some(s) = self.mesh_scale {
            cfg.object.scale = s;
        }
        if let Some(n) = &self.name {
            cfg.object.name = Some(n.clone());
        }
        if let Some(h) = &self.hand {
            cfg.hand = Some(h.clone());
        }
        if let Some(n) = self.surface_samples {
            cfg.scene.surface_samples = n;
        }
        if let Some(d) = &self.output_dir {
            cfg.output_dir = d.clone();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    /// Model file; `<output-dir>/<object>_gpis.json` by default. The report goes next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parsed `--seeds` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(text: &str) -> std::result::Result<SeedList, String> {
    parse_seeds(text).map(SeedList)
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub object: ObjectArgs,
    /// Rerun the config snapshot stored in a result bundle.
    #[arg(long, conflicts_with_all = ["config", "mesh"])]
    pub rerun: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub planner: Option<PlannerArg>,
    /// Seeds as `0..19` (inclusive) or `1,4,9`.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    /// Evaluation count for the random and annealing baselines.
    #[arg(long)]
    pub evals: Option<usize>,
    /// Model written by `fit-gpis`.
    #[arg(long)]
    pub gpis_model: Option<PathBuf>,
    #[arg(long)]
    pub n_init: Option<usize>,
    #[arg(long)]
    pub n_iter: Option<usize>,
    /// Wall-clock cap per seed in seconds; results then depend on machine speed.
    #[arg(long)]
    pub time_budget: Option<f64>,
}

impl PlanArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.rerun {
            Some(path) => {
                let mut cfg = ResultBundle::load(path)?.config;
                if let Some(d) = &self.object.output_dir {
                    cfg.output_dir = d.clone();
                }
                cfg
            }
            None => self.object.resolve()?,
        };
        if let Some(p) = self.planner {
            cfg.planner = p.into();
        }
        if let Some(SeedList(s)) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(e) = self.evals {
            cfg.evals = Some(e);
        }
        if let Some(m) = &self.gpis_model {
            cfg.gpis_model = Some(m.clone());
        }
        if let Some(n) = self.n_init {
            cfg.planner_config.n_init = n;
        }
        if let Some(n) = self.n_iter {
            cfg.planner_config.n_iter = n;
        }
        if let Some(t) = self.time_budget {
            cfg.planner_config.time_budget = Some(t);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Result bundles written by `plan`.
    #[arg(required = true, num_args = 2..)]
    pub bundles: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: TableFormat,
    #[arg(long, value_enum, default_value = "top20")]
    pub averaging: Averaging,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Rank in the bundle's merged candidate list.
    #[arg(long, default_value_t = 0)]
    pub candidate: usize,
    /// Scene file; `<bundle>_scene<rank>.json` next to the bundle by default.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}{suffix}.json"))
}

/// Runs one subcommand; human-readable progress goes to stdout.
pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::FitGpis(args) => {
            let cfg = args.object.resolve()?;
            let (file, report) = fit_model(&cfg)?;
            let model_path = args.output.clone().unwrap_or_else(|| cfg.output_dir.join(format!("{}_gpis.json", file.object)));
            let report_path = sibling(&model_path, "_report");
            write_json(&model_path, &file)?;
            write_json(&report_path, &report)?;
            println!(
                "{}: {} training points, held-out mean |f| = {:.3e} ({:.2e} of diagonal)",
                file.object, report.training_points, report.heldout.mean_abs, report.heldout.mean_abs_relative
            );
            println!("wrote {} and {}", model_path.display(), report_path.display());
            Ok(())
        }
        Command::Plan(args) => {
            let cfg = args.resolve()?;
            let bundle = plan(&cfg)?;
            let (json, csv) = bundle.write(&cfg.output_dir)?;
            let s = &bundle.summary;
            println!(
                "{} / {}: {} of {} seeds feasible, {} in force closure, best objective {:.4}",
                bundle.object,
                bundle.planner.name(),
                s.feasible_runs,
                s.seeds,
                s.force_closure_runs,
                s.best_objective
            );
            println!("wrote {} and {}", json.display(), csv.display());
            if s.feasible_runs == 0 {
                return Err(CliError::Infeasible("no seed found a collision-free grasp".into()));
            }
            Ok(())
        }
        Command::Compare(args) => {
            let bundles = args.bundles.iter().map(|p| ResultBundle::load(p)).collect::<Result<Vec<_>>>()?;
            let table = compare(&bundles, args.averaging)?.render(args.format)?;
            match &args.output {
                Some(path) => write_text(path, &table),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
        Command::ExportScene(args) => {
            let bundle = ResultBundle::load(&args.bundle)?;
            let scene = export_scene(&bundle, args.candidate)?;
            let path = args.output.clone().unwrap_or_else(|| sibling(&args.bundle, &format!("_scene{}", args.candidate)));
            write_json(&path, &scene)?;
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
