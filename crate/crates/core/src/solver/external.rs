//! File-exchange adapter: write the model as LP plus a parameter file, run
//! an external command, read back `status`, `objective` and `name value`
//! lines.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use super::{emit_lp, named_values, Solution, SolverId, SolverRequest, Status};
use crate::error::{Error, Result};
use crate::model::ModelInstance;

/// Command used to run SCIP: whitespace-separated program and leading arguments.
/// It is invoked as `<cmd> model.lp params.set solution.txt`.
pub const SCIP_ENV: &str = "GEP_SCIP";

pub fn scip_command() -> Vec<String> {
    if let Ok(cmd) = std::env::var(SCIP_ENV) {
        let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if !parts.is_empty() {
            return parts;
        }
    }
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/scip_solve.py");
    vec!["python3".into(), script.to_string_lossy().into_owned()]
}

fn params(request: &SolverRequest) -> String {
    let mut s = String::new();
    s.push_str(&format!("limits/gap = {}\n", request.mip_gap));
    if let Some(t) = request.time_limit {
        s.push_str(&format!("limits/time = {}\n", t.as_secs_f64()));
    }
    s.push_str("randomization/randomseedshift = 0\n");
    s.push_str("numerics/feastol = 1e-09\n");
    s.push_str("display/verblevel = 0\n");
    s
}

fn tail(text: &str, n: usize) -> String {
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(n)..].join("\n")
}

pub(crate) fn parse_solution(text: &str) -> Result<(Status, f64, BTreeMap<String, f64>)> {
    let mut status = None;
    let mut objective = f64::NAN;
    let mut values = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let ln = n + 1;
        let mut it = line.split_whitespace();
        let (Some(key), Some(val)) = (it.next(), it.next()) else {
            continue;
        };
        let num = |v: &str| {
            v.parse::<f64>().map_err(|_| Error::Parse {
                line: ln,
                message: format!("bad number '{v}'"),
            })
        };
        match key {
            "status" => status = Some(val.parse::<Status>()?),
            "objective" => objective = num(val)?,
            name => {
                values.insert(name.to_string(), num(val)?);
            }
        }
    }
    let status = status.ok_or_else(|| Error::Parse {
        line: 1,
        message: "solution file has no status line".into(),
    })?;
    Ok((status, objective, values))
}

pub(super) fn solve(model: &ModelInstance, request: &SolverRequest) -> Result<Solution> {
    #[cfg(not(target_arch = "wasm32"))]
    let tmp;
    let dir = match &request.work_dir {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
            d.as_path()
        }
        #[cfg(target_arch = "wasm32")]
        None => {
            return Err(Error::Solver {
                message: "external solvers need a work directory on this target".into(),
                log_tail: String::new(),
            });
        }
        #[cfg(not(target_arch = "wasm32"))]
        None => {
            tmp = tempfile::Builder::new()
                .prefix("gep-solve-")
                .tempdir()
                .map_err(|e| Error::io(std::env::temp_dir(), e))?;
            tmp.path()
        }
    };
    let model_path = dir.join("model.lp");
    let params_path = dir.join("params.set");
    let sol_path = dir.join("solution.txt");
    fs::write(&model_path, emit_lp(model)?).map_err(|e| Error::io(&model_path, e))?;
    fs::write(&params_path, params(request)).map_err(|e| Error::io(&params_path, e))?;
    let _ = fs::remove_file(&sol_path);

    let cmd = scip_command();
    let start = Instant::now();
    let out = Command::new(&cmd[0])
        .args(&cmd[1..])
        .arg(&model_path)
        .arg(&params_path)
        .arg(&sol_path)
        .output()
        .map_err(|e| Error::Solver {
            message: format!("cannot start '{}' (set {SCIP_ENV}): {e}", cmd.join(" ")),
            log_tail: String::new(),
        })?;
    let wall_time = start.elapsed();
    let log = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    if !out.status.success() {
        return Err(Error::Solver {
            message: format!("external solver exited with {}", out.status),
            log_tail: tail(&log, 30),
        });
    }
    let text = fs::read_to_string(&sol_path).map_err(|e| Error::Solver {
        message: format!("no solution file: {e}"),
        log_tail: tail(&log, 30),
    })?;
    let (status, objective, raw) = parse_solution(&text)?;
    if !status.has_solution() {
        return Ok(Solution::empty(status, SolverId::Scip, wall_time));
    }
    let dense: Vec<f64> = model
        .variables()
        .iter()
        .map(|v| raw.get(&v.name).copied().unwrap_or(0.0))
        .collect();
    Ok(Solution {
        status,
        objective: objective + model.objective().constant_term(),
        values: named_values(model, &dense),
        wall_time,
        solver: SolverId::Scip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_file_parses() {
        let (s, obj, v) = parse_solution("status optimal\nobjective 3.5\nx(g) 2\nu(rp1,k1,g) 1\n").unwrap();
        assert_eq!(s, Status::Optimal);
        assert_eq!(obj, 3.5);
        assert_eq!(v["x(g)"], 2.0);
        assert!(parse_solution("x 1\n").is_err());
    }

    #[test]
    fn param_file_carries_limits() {
        let r = SolverRequest {
            time_limit: Some(std::time::Duration::from_secs(120)),
            mip_gap: 0.01,
            ..SolverRequest::default()
        };
        let p = params(&r);
        assert!(p.contains("limits/time = 120"));
        assert!(p.contains("limits/gap = 0.01"));
    }
}
