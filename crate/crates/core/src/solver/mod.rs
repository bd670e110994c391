//! Export to LP / free-MPS, solver adapters and solution handling.
//!
//! Three adapters are available: HiGHS in-process for MILPs, Clarabel
//! in-process for continuous LP/SOCP, and an external process (SCIP by
//! default) fed through an LP file for mixed-integer cone programs.

mod external;
mod lp;
mod mps;

#[cfg(feature = "clarabel")]
mod conic;
#[cfg(feature = "highs")]
mod milp;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelInstance, VarKind};

pub use external::{scip_command, SCIP_ENV};
pub(crate) use external::parse_solution;
pub use lp::{emit_lp, parse_lp};
pub use mps::{emit_mps, parse_mps};

/// Values within this distance of an integer are snapped for discrete variables.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Longest name accepted by the exporters.
pub const MAX_NAME_LEN: usize = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverId {
    /// HiGHS for models without cones, Clarabel for continuous cone
    /// models, SCIP for mixed-integer cone models.
    Auto,
    Highs,
    Clarabel,
    Scip,
}

impl SolverId {
    pub fn resolve(self, model: &ModelInstance) -> SolverId {
        match self {
            SolverId::Auto if !model.cones().is_empty() && has_free_integers(model) => SolverId::Scip,
            SolverId::Auto if !model.cones().is_empty() => SolverId::Clarabel,
            SolverId::Auto => SolverId::Highs,
            other => other,
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverId::Auto => "auto",
            SolverId::Highs => "highs",
            SolverId::Clarabel => "clarabel",
            SolverId::Scip => "scip",
        })
    }
}

impl FromStr for SolverId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(SolverId::Auto),
            "highs" => Ok(SolverId::Highs),
            "clarabel" => Ok(SolverId::Clarabel),
            "scip" => Ok(SolverId::Scip),
            other => Err(Error::Solver {
                message: format!("no adapter registered for solver '{other}'"),
                log_tail: String::new(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverRequest {
    pub solver: SolverId,
    pub time_limit: Option<Duration>,
    pub mip_gap: f64,
    pub threads: Option<u32>,
    /// Working directory for file-based adapters; a temporary one if unset.
    pub work_dir: Option<PathBuf>,
}

impl Default for SolverRequest {
    fn default() -> Self {
        Self {
            solver: SolverId::Auto,
            time_limit: None,
            mip_gap: 0.0,
            threads: Some(1),
            work_dir: None,
        }
    }
}

impl SolverRequest {
    pub fn with_solver(solver: SolverId) -> Self {
        Self {
            solver,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mip_gap >= 0.0) {
            return Err(Error::Solver {
                message: format!("mip gap {} must be ≥ 0", self.mip_gap),
                log_tail: String::new(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Limit,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::Limit => "limit",
        })
    }
}

impl FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => Status::Optimal,
            "feasible" => Status::Feasible,
            "infeasible" => Status::Infeasible,
            "unbounded" => Status::Unbounded,
            "limit" => Status::Limit,
            other => return Err(Error::Parse { line: 1, message: format!("unknown status '{other}'") }),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub values: BTreeMap<String, f64>,
    pub wall_time: Duration,
    pub solver: SolverId,
}

impl Solution {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    /// Sum of values whose name belongs to `family`.
    pub fn family_values<'a>(&'a self, family: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.values
            .iter()
            .filter(move |(n, _)| crate::model::family_of(n) == family)
            .map(|(n, &v)| (n.as_str(), v))
    }

    /// Objective re-evaluated from the stored values.
    pub fn recomputed_objective(&self, model: &ModelInstance) -> f64 {
        model.objective().evaluate(&model.dense_values(&self.values))
    }

    fn empty(status: Status, solver: SolverId, wall_time: Duration) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: BTreeMap::new(),
            wall_time,
            solver,
        }
    }
}

fn has_free_integers(model: &ModelInstance) -> bool {
    model
        .variables()
        .iter()
        .any(|v| v.kind.is_discrete() && v.lower != v.upper)
}

/// Map a dense solver vector to names, snapping discrete values to integers.
pub(crate) fn named_values(model: &ModelInstance, x: &[f64]) -> BTreeMap<String, f64> {
    model
        .variables()
        .iter()
        .zip(x)
        .map(|(v, &val)| {
            let r = val.round();
            let val = if v.kind.is_discrete() && (val - r).abs() <= INTEGRALITY_TOL {
                r
            } else {
                val
            };
            (v.name.clone(), val)
        })
        .collect()
}

pub fn solve(model: &ModelInstance, request: &SolverRequest) -> Result<Solution> {
    request.validate()?;
    match request.solver.resolve(model) {
        #[cfg(feature = "highs")]
        SolverId::Highs => milp::solve(model, request),
        #[cfg(feature = "clarabel")]
        SolverId::Clarabel => conic::solve(model, request),
        SolverId::Scip => external::solve(model, request),
        #[allow(unreachable_patterns)]
        other => Err(Error::Solver {
            message: format!("adapter '{other}' not compiled in"),
            log_tail: String::new(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixMode {
    Fix,
    LowerBound,
}

/// Copy of `model` with the named variables fixed or lower-bounded.
pub fn fix_variables(model: &ModelInstance, assignments: &BTreeMap<String, f64>, mode: FixMode) -> Result<ModelInstance> {
    let mut out = model.clone();
    for (name, &value) in assignments {
        let id = out.var(name).ok_or_else(|| Error::Build(format!("cannot fix unknown variable {name}")))?;
        let v = out.variable(id);
        let (lo, hi) = (v.lower, v.upper);
        let value = if v.kind.is_discrete() && (value - value.round()).abs() <= INTEGRALITY_TOL {
            value.round()
        } else {
            value
        };
        if value < lo - INTEGRALITY_TOL || value > hi + INTEGRALITY_TOL {
            return Err(Error::Build(format!("value {value} for {name} outside bounds [{lo}, {hi}]")));
        }
        let value = value.clamp(lo, hi);
        match mode {
            FixMode::Fix => out.set_bounds(id, value, value)?,
            FixMode::LowerBound => out.set_bounds(id, value, hi)?,
        }
    }
    Ok(out)
}

/// Integer-valued variables of `family` from a solution, for fixing.
pub fn family_assignment(solution: &Solution, family: &str) -> BTreeMap<String, f64> {
    solution
        .family_values(family)
        .map(|(n, v)| (n.to_string(), v))
        .collect()
}

/// Turn binaries and integers into continuous variables with the same bounds.
pub fn relax_integrality(model: &ModelInstance) -> ModelInstance {
    let mut out = model.clone();
    for i in 0..out.num_vars() {
        out.set_kind(crate::model::VarId(i), VarKind::Continuous);
    }
    out
}

/// Shortest round-tripping decimal text for a finite float.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub(crate) fn check_name(name: &str) -> Result<()> {
    if name.len() > MAX_NAME_LEN {
        return Err(Error::Format(format!("name exceeds {MAX_NAME_LEN} characters: {name}")));
    }
    if name.is_empty() || name.contains(char::is_whitespace) || name.contains(':') {
        return Err(Error::Format(format!("name not representable in exchange formats: '{name}'")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, LinearExpr, RowSense};

    fn one_var() -> ModelInstance {
        let mut m = ModelInstance::new();
        let x = m.add_var("x(wind)", VarKind::Integer, 0.0, 99.0).unwrap();
        m.add_row("cap", Block::General, LinearExpr::new().with(x, 1.0), RowSense::Ge, 3.0)
            .unwrap();
        m.set_objective(LinearExpr::new().with(x, 1.0));
        m
    }

    #[test]
    fn fix_and_lower_bound() {
        let m = one_var();
        let a: BTreeMap<String, f64> = [("x(wind)".to_string(), 25.0)].into_iter().collect();
        let f = fix_variables(&m, &a, FixMode::Fix).unwrap();
        let v = f.variable(f.require("x(wind)").unwrap());
        assert_eq!((v.lower, v.upper), (25.0, 25.0));
        let a5: BTreeMap<String, f64> = [("x(wind)".to_string(), 5.0)].into_iter().collect();
        let l = fix_variables(&m, &a5, FixMode::LowerBound).unwrap();
        let v = l.variable(l.require("x(wind)").unwrap());
        assert_eq!((v.lower, v.upper), (5.0, 99.0));
        let bad: BTreeMap<String, f64> = [("x(wind)".to_string(), 100.0)].into_iter().collect();
        assert!(fix_variables(&m, &bad, FixMode::Fix).is_err());
    }

    #[test]
    fn fixing_is_idempotent() {
        let m = one_var();
        let a: BTreeMap<String, f64> = [("x(wind)".to_string(), 7.0)].into_iter().collect();
        let once = fix_variables(&m, &a, FixMode::Fix).unwrap();
        let twice = fix_variables(&once, &a, FixMode::Fix).unwrap();
        assert_eq!(emit_lp(&once).unwrap(), emit_lp(&twice).unwrap());
    }

    #[test]
    fn number_text_round_trips() {
        for v in [1.0, -0.1, 1e-7, 123456.789, 2.0f64.sqrt(), 1e20, -3.5e-12] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }

    #[test]
    fn unknown_solver_rejected() {
        assert!("gurobi".parse::<SolverId>().is_err());
        assert_eq!("HiGHS".parse::<SolverId>().unwrap(), SolverId::Highs);
    }

    #[test]
    fn negative_gap_rejected() {
        let r = SolverRequest {
            mip_gap: -0.1,
            ..SolverRequest::default()
        };
        assert!(solve(&one_var(), &r).is_err());
    }
}
