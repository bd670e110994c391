//! Run directory layout:
//!
//! ```text
//! spec.json      case and solver settings, defaults included
//! model.lp       the assembled model
//! solution.txt   status, objective, then `name value` in canonical order
//! report.json    RunReport
//! costs.csv  capacity.csv  inertia.csv  reactive.csv
//! cones.csv  voltages.csv  (AC cases)
//! timing.txt     wall-clock solve time, kept apart so the rest is reproducible
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CaseRun, CaseSpec, RunMode};
use crate::model::ModelInstance;
use crate::error::{Error, Result};
use crate::socp::recover_voltages;
use crate::solver::{emit_lp, fmt_num, parse_solution, Solution, SolverId, SolverRequest};
use crate::system::SystemData;
use crate::temporal::TemporalStructure;

#[derive(Clone, Debug, PartialEq)]
pub struct RunFiles {
    pub dir: PathBuf,
    pub model: PathBuf,
    pub solution: PathBuf,
    pub report: PathBuf,
}

/// Contents of `spec.json`: everything needed to repeat the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: Option<String>,
    pub spec: CaseSpec,
    pub mode: RunMode,
    pub solver: SolverId,
    pub time_limit_s: Option<f64>,
    pub mip_gap: f64,
    pub threads: Option<u32>,
}

impl RunSpec {
    pub fn new(dataset: Option<String>, spec: &CaseSpec, mode: RunMode, request: &SolverRequest) -> Self {
        RunSpec {
            dataset,
            spec: spec.clone(),
            mode,
            solver: request.solver,
            time_limit_s: request.time_limit.map(|t| t.as_secs_f64()),
            mip_gap: request.mip_gap,
            threads: request.threads,
        }
    }
}

pub fn read_run_spec(dir: impl AsRef<Path>) -> Result<RunSpec> {
    let path = dir.as_ref().join("spec.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Write `spec.json` and `model.lp` only.
pub fn write_model_only(dir: impl AsRef<Path>, model: &ModelInstance, spec: &RunSpec) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("spec.json"), to_json(spec)?)?;
    let path = dir.join("model.lp");
    write(&path, emit_lp(model)?)?;
    Ok(path)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Solution text: `status`, `objective`, then one `name value` line per
/// variable in the model's canonical order.
pub fn write_solution(path: &Path, run: &CaseRun) -> Result<()> {
    let mut out = format!("status {}\n", run.solution.status);
    if run.solution.status.has_solution() {
        out.push_str(&format!("objective {}\n", fmt_num(run.solution.objective)));
        for id in run.model.canonical_order() {
            let name = &run.model.variable(id).name;
            let v = run.solution.values.get(name).copied().unwrap_or(0.0);
            out.push_str(&format!("{name} {}\n", fmt_num(v)));
        }
    }
    write(path, out)
}

/// Load `solution.txt` from a run directory (or a direct file path).
pub fn read_solution(path: impl AsRef<Path>) -> Result<Solution> {
    let p = path.as_ref();
    let file = if p.is_dir() { p.join("solution.txt") } else { p.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let (status, objective, values) = parse_solution(&text)?;
    Ok(Solution {
        status,
        objective,
        values,
        wall_time: Duration::ZERO,
        solver: SolverId::Auto,
    })
}

#[derive(Serialize)]
struct CostRow<'a> {
    group: &'a str,
    cost: f64,
}

#[derive(Serialize)]
struct ReactiveRow<'a> {
    tech: &'a str,
    energy: f64,
}

#[derive(Serialize)]
struct VoltageRow<'a> {
    rp: usize,
    k: usize,
    bus: &'a str,
    magnitude: f64,
    angle: f64,
}

pub fn write_run(
    dir: impl AsRef<Path>,
    run: &CaseRun,
    system: &SystemData,
    temporal: &TemporalStructure,
    request: &SolverRequest,
    dataset: Option<&str>,
) -> Result<RunFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let echo = RunSpec::new(dataset.map(str::to_string), &run.spec, run.mode, request);
    write(&dir.join("spec.json"), to_json(&echo)?)?;
    let files = RunFiles {
        dir: dir.to_path_buf(),
        model: dir.join("model.lp"),
        solution: dir.join("solution.txt"),
        report: dir.join("report.json"),
    };
    write(&files.model, emit_lp(&run.model)?)?;
    write_solution(&files.solution, run)?;
    write(&files.report, to_json(&run.report)?)?;
    write(
        &dir.join("timing.txt"),
        format!("solve_seconds {:.3}\n", run.solution.wall_time.as_secs_f64()),
    )?;

    if let Some(m) = &run.report.metrics {
        let costs: Vec<CostRow> = m
            .cost_breakdown
            .iter()
            .map(|(g, &c)| CostRow { group: g.label(), cost: c })
            .collect();
        write_csv(&dir.join("costs.csv"), &costs)?;
        write_csv(&dir.join("capacity.csv"), &m.capacity)?;
        write_csv(&dir.join("inertia.csv"), &m.inertia)?;
        if !m.cones.is_empty() {
            let reactive: Vec<ReactiveRow> = m
                .reactive_by_tech
                .iter()
                .map(|(t, &e)| ReactiveRow { tech: t, energy: e })
                .collect();
            write_csv(&dir.join("reactive.csv"), &reactive)?;
            write_csv(&dir.join("cones.csv"), &m.cones)?;
            let rec = recover_voltages(&run.solution.values, system, temporal, 1e-6)?;
            let rows: Vec<VoltageRow> = rec
                .buses
                .iter()
                .map(|b| VoltageRow {
                    rp: b.rp,
                    k: b.k,
                    bus: &b.bus,
                    magnitude: b.magnitude,
                    angle: b.angle,
                })
                .collect();
            write_csv(&dir.join("voltages.csv"), &rows)?;
        }
    }
    Ok(files)
}
