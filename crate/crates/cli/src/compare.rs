use std::collections::{BTreeMap, BTreeSet};

use clap::ValueEnum;
use graspbo::planner::PlannerKind;
use serde::Serialize;

use crate::bundle::ResultBundle;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Averaging {
    /// Mean over the first 20 best candidates of each bundle.
    Top20,
    /// Mean of the per-seed best candidates.
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub epsilon: f64,
    pub volume: f64,
}

/// Rows are objects, columns planners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub planners: Vec<PlannerKind>,
    pub rows: Vec<(String, Vec<Cell>)>,
}

fn cell(bundle: &ResultBundle, mode: Averaging) -> Cell {
    match mode {
        Averaging::Top20 => {
            let (epsilon, volume) = bundle.top_means(20).unwrap_or((0.0, 0.0));
            Cell { epsilon, volume }
        }
        Averaging::Best => Cell { epsilon: bundle.summary.mean_best_epsilon, volume: bundle.summary.mean_best_volume },
    }
}

/// Column order: baselines first, then the BO planners.
fn column(p: PlannerKind) -> usize {
    match p {
        PlannerKind::Random => 0,
        PlannerKind::Sa => 1,
        PlannerKind::Hpp => 2,
        PlannerKind::Integrate => 3,
    }
}

pub fn compare(bundles: &[ResultBundle], mode: Averaging) -> Result<Comparison> {
    if bundles.len() < 2 {
        return Err(CliError::Input("compare needs at least two bundles".into()));
    }
    let mut table: BTreeMap<usize, (PlannerKind, BTreeMap<String, Cell>)> = BTreeMap::new();
    let mut fingerprints: BTreeMap<&str, u64> = BTreeMap::new();
    for b in bundles {
        if *fingerprints.entry(&b.object).or_insert(b.mesh_fingerprint) != b.mesh_fingerprint {
            return Err(CliError::ObjectMismatch(format!("two different meshes are both named {}", b.object)));
        }
        let (_, per_object) = table.entry(column(b.planner)).or_insert_with(|| (b.planner, BTreeMap::new()));
        if per_object.insert(b.object.clone(), cell(b, mode)).is_some() {
            return Err(CliError::Input(format!("more than one {} bundle for {}", b.planner.name(), b.object)));
        }
    }
    let objects: BTreeSet<String> = table.values().flat_map(|(_, m)| m.keys().cloned()).collect();
    for (planner, per_object) in table.values() {
        let missing: Vec<&String> = objects.iter().filter(|o| !per_object.contains_key(*o)).collect();
        if !missing.is_empty() {
            return Err(CliError::ObjectMismatch(format!("{} has no bundle for {missing:?}", planner.name())));
        }
    }
    let planners: Vec<PlannerKind> = table.values().map(|(p, _)| *p).collect();
    let rows = objects.into_iter().map(|o| {
        let cells = table.values().map(|(_, m)| m[&o]).collect();
        (o, cells)
    });
    Ok(Comparison { planners, rows: rows.collect() })
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

impl Comparison {
    pub fn render(&self, format: TableFormat) -> Result<String> {
        match format {
            TableFormat::Csv => self.csv(),
            TableFormat::Markdown => Ok(self.markdown()),
        }
    }

    fn best_indices(cells: &[Cell]) -> (usize, usize) {
        (argmax(cells.iter().map(|c| c.epsilon)), argmax(cells.iter().map(|c| c.volume)))
    }

    fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let internal = |e: csv::Error| CliError::Internal(e.to_string());
        let mut header = vec!["object".to_string()];
        for p in &self.planners {
            header.push(format!("{}_epsilon", p.name()));
            header.push(format!("{}_volume", p.name()));
        }
        header.extend(["best_epsilon".into(), "best_volume".into()]);
        w.write_record(&header).map_err(internal)?;
        for (object, cells) in &self.rows {
            let (be, bv) = Self::best_indices(cells);
            let mut row = vec![object.clone()];
            for c in cells {
                row.push(c.epsilon.to_string());
                row.push(c.volume.to_string());
            }
            row.push(self.planners[be].name().into());
            row.push(self.planners[bv].name().into());
            w.write_record(&row).map_err(internal)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)
            .map_err(|e| CliError::Internal(e.to_string()))
    }

    fn markdown(&self) -> String {
        let mut out = String::from("| object |");
        for p in &self.planners {
            out += &format!(" {} ε | {} vol |", p.name(), p.name());
        }
        out += "\n|---|";
        out += &"---:|---:|".repeat(self.planners.len());
        out.push('\n');
        for (object, cells) in &self.rows {
            let (be, bv) = Self::best_indices(cells);
            out += &format!("| {object} |");
            for (i, c) in cells.iter().enumerate() {
                let mark = |best: bool, v: f64| if best { format!(" **{v:.4}** |") } else { format!(" {v:.4} |") };
                out += &mark(i == be, c.epsilon);
                out += &mark(i == bv, c.volume);
            }
            out.push('\n');
        }
        out
    }
}
