use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use suhnpf_core::manifold::Checkpoint;
use suhnpf_core::problem::{case2_with_dims, BenchmarkCase, BenchmarkId};
use suhnpf_core::solver::{
    self, evenly_spaced_weights, ls_baseline, query_by_tradeoff, SolveReport, SolverConfig,
    TradeoffQuery,
};

use crate::manifest::RunManifest;
use crate::tables::{self, Table};

/// Looks up a catalog case; `dims` resizes case2 only.
pub fn resolve_case(name: &str, dims: Option<usize>) -> Result<BenchmarkCase> {
    let id: BenchmarkId = name.parse()?;
    match (id, dims) {
        (_, None) => Ok(id.build()),
        (BenchmarkId::CaseII, Some(n)) => Ok(case2_with_dims(n)?),
        (_, Some(_)) => bail!("--dims only applies to case2"),
    }
}

fn fjc_label(constrained: bool) -> &'static str {
    if constrained {
        "constrained"
    } else {
        "unconstrained"
    }
}

/// One row per catalog case.
pub fn list() -> String {
    let mut out = String::new();
    for c in suhnpf_core::catalog() {
        let p = &c.problem;
        let _ = writeln!(
            out,
            "{:<6} n={} k={} m={} {:<13} {}",
            c.id.as_str(),
            p.n(),
            p.k(),
            p.m(),
            fjc_label(c.constrained_fjc),
            c.front.description
        );
    }
    out
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}

/// `report.json`: the solve report plus the manifest hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    #[serde(default)]
    pub manifest: String,
    #[serde(flatten)]
    pub report: SolveReport,
}

/// `checkpoint.json`: the trained indicator plus the manifest hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub manifest: String,
    #[serde(flatten)]
    pub checkpoint: Checkpoint,
}

pub const SOLVE_FILES: [&str; 8] = [
    "manifest.json",
    "trajectory.csv",
    "front.csv",
    "strong_front.csv",
    "loss.csv",
    "report.json",
    "checkpoint.json",
    "summary.txt",
];

/// Runs the solver and writes every artifact into `out`.
pub fn solve(case: &BenchmarkCase, cfg: &SolverConfig, out: &Path) -> Result<SolveReport> {
    cfg.validate()?;
    create_dir(out)?;
    let mut manifest = RunManifest::new("solve", case.id.as_str(), case.problem.n(), cfg, out)?;
    manifest.write(out)?;
    let hash = manifest.hash.clone();

    let solution = solver::solve(case, cfg)?;
    let r = &solution.report;
    let mu = if r.constrained_fjc { r.m } else { 0 };
    tables::trajectory_table(&hash, r).write(&out.join("trajectory.csv"))?;
    tables::front_table(&hash, r.n, r.k, mu, &r.front).write(&out.join("front.csv"))?;
    tables::front_table(&hash, r.n, r.k, mu, &r.strong_front)
        .write(&out.join("strong_front.csv"))?;
    tables::loss_table(&hash, r).write(&out.join("loss.csv"))?;
    write_json(
        &out.join("report.json"),
        &ReportFile {
            manifest: hash.clone(),
            report: r.clone(),
        },
    )?;
    write_json(
        &out.join("checkpoint.json"),
        &CheckpointFile {
            manifest: hash.clone(),
            checkpoint: solution.classifier.to_checkpoint(),
        },
    )?;
    std::fs::write(out.join("summary.txt"), solve_summary(r, &hash))?;
    manifest.finish();
    manifest.write(out)?;
    Ok(solution.report)
}

pub fn solve_summary(r: &SolveReport, hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "manifest      {hash}");
    let _ = writeln!(s, "case          {}", r.case.as_deref().unwrap_or("-"));
    let _ = writeln!(s, "converged     {}", r.converged);
    let _ = writeln!(s, "iterations    {}", r.iterations);
    let _ = writeln!(s, "evaluations   {}", r.evaluations);
    let _ = writeln!(s, "front         {}", r.front.len());
    let _ = writeln!(s, "strong front  {}", r.strong_front.len());
    if let Some(e) = r.front_error {
        let _ = writeln!(s, "avg err       {:.3e}", e.avg);
        let _ = writeln!(s, "max err       {:.3e}", e.max);
    }
    let _ = writeln!(s, "wall time     {:.2} s", r.wall_time);
    s
}

/// Scores of a front table against a catalog case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub case: String,
    pub rows: usize,
    pub feasible: usize,
    pub points_found_pct: f64,
    pub avg_error: Option<f64>,
    pub max_error: Option<f64>,
    /// `‖f‖₂` per row, for two objectives.
    pub ideal_distance: Option<Vec<f64>>,
}

fn required_columns(table: &Table, prefix: &str, count: usize) -> Result<Vec<usize>> {
    (1..=count)
        .map(|i| {
            let name = format!("{prefix}{i}");
            table
                .column(&name)
                .with_context(|| format!("header has no '{name}' column"))
        })
        .collect()
}

fn row_values(table: &Table, row: usize, cols: &[usize]) -> Result<Vec<f64>> {
    cols.iter()
        .map(|&c| {
            table.rows[row][c].with_context(|| {
                // Header is line 1, or line 2 after the manifest comment.
                let line = row + 2 + usize::from(table.manifest.is_some());
                format!("line {line}: column '{}' is empty", table.header[c])
            })
        })
        .collect()
}

pub fn eval(case: &BenchmarkCase, table: &Table) -> Result<EvalSummary> {
    let p = &case.problem;
    let xs = required_columns(table, "x", p.n())?;
    let fs = required_columns(table, "f", p.k())?;
    let mut points = Vec::with_capacity(table.rows.len());
    let mut objectives = Vec::with_capacity(table.rows.len());
    for row in 0..table.rows.len() {
        points.push(row_values(table, row, &xs)?);
        objectives.push(row_values(table, row, &fs)?);
    }
    let feasible = points
        .iter()
        .map(|x| p.is_feasible(x))
        .collect::<suhnpf_core::Result<Vec<bool>>>()?
        .into_iter()
        .filter(|f| *f)
        .count();
    let errors = if points.is_empty() {
        None
    } else {
        Some(case.front_errors(&points)?)
    };
    let ideal_distance = (p.k() == 2).then(|| {
        objectives
            .iter()
            .map(|f| f[0].hypot(f[1]))
            .collect::<Vec<f64>>()
    });
    Ok(EvalSummary {
        case: case.id.as_str().to_string(),
        rows: points.len(),
        feasible,
        points_found_pct: if points.is_empty() {
            0.0
        } else {
            100.0 * feasible as f64 / points.len() as f64
        },
        avg_error: errors.map(|e| e.avg),
        max_error: errors.map(|e| e.max),
        ideal_distance,
    })
}

pub fn eval_text(s: &EvalSummary) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"));
    let mut out = String::new();
    let _ = writeln!(out, "case          {}", s.case);
    let _ = writeln!(out, "rows          {}", s.rows);
    let _ = writeln!(
        out,
        "points found  {:.1}% ({} feasible)",
        s.points_found_pct, s.feasible
    );
    let _ = writeln!(out, "avg err       {}", opt(s.avg_error));
    let _ = writeln!(out, "max err       {}", opt(s.max_error));
    if let Some(d) = &s.ideal_distance {
        let _ = writeln!(out, "ideal distance per row");
        for (i, v) in d.iter().enumerate() {
            let _ = writeln!(out, "  {i:>4}  {}", tables::fmt_float(*v));
        }
    }
    out
}

pub fn eval_file(case: &BenchmarkCase, front: &Path, json: Option<&Path>) -> Result<String> {
    let summary =
        eval(case, &Table::read(front)?).with_context(|| format!("{}", front.display()))?;
    if let Some(path) = json {
        write_json(path, &summary)?;
    }
    Ok(eval_text(&summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub alphas: usize,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

/// Writes `ls_front.csv` and a manifest into `out`; returns the row count.
pub fn baseline(case: &BenchmarkCase, cfg: &BaselineConfig, out: &Path) -> Result<usize> {
    let p = &case.problem;
    ensure!(p.k() == 2, "evenly spaced weights need two objectives");
    ensure!(cfg.alphas >= 1, "--alphas must be at least 1");
    create_dir(out)?;
    let mut manifest = RunManifest::new("baseline", case.id.as_str(), p.n(), cfg, out)?;
    manifest.write(out)?;
    let points = ls_baseline(
        p,
        &evenly_spaced_weights(cfg.alphas),
        cfg.steps,
        cfg.lr,
        cfg.seed,
    )?;
    let mu = if case.constrained_fjc { p.m() } else { 0 };
    tables::baseline_table(&manifest.hash, p.n(), p.k(), mu, &points)
        .write(&out.join("ls_front.csv"))?;
    manifest.finish();
    manifest.write(out)?;
    Ok(points.len())
}

pub fn read_report(path: &Path) -> Result<SolveReport> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: ReportFile = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a report", path.display()))?;
    Ok(file.report)
}

pub fn query(report: &Path, alpha: &[f64]) -> Result<TradeoffQuery> {
    Ok(query_by_tradeoff(&read_report(report)?, alpha)?)
}

/// Default output directory for a command and case.
pub fn default_out(command: &str, case: &str) -> PathBuf {
    PathBuf::from("runs").join(format!("{command}-{case}"))
}
