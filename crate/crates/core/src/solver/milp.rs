use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense};

use super::{named_values, Solution, SolverId, SolverRequest, Status};
use crate::error::{Error, Result};
use crate::model::{ModelInstance, RowSense};

pub(super) fn solve(model: &ModelInstance, request: &SolverRequest) -> Result<Solution> {
    if !model.cones().is_empty() {
        return Err(Error::Solver {
            message: format!("HiGHS cannot handle {} cone constraints", model.cones().len()),
            log_tail: String::new(),
        });
    }
    let start = Instant::now();
    let mut obj = vec![0.0; model.num_vars()];
    for &(v, c) in model.objective().terms() {
        obj[v.0] += c;
    }
    let mut p = RowProblem::default();
    let cols: Vec<_> = model
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.kind.is_discrete() {
                p.add_integer_column(obj[i], v.lower..=v.upper)
            } else {
                p.add_column(obj[i], v.lower..=v.upper)
            }
        })
        .collect();
    for r in model.rows() {
        let factors = r.expr.terms().iter().map(|&(v, c)| (cols[v.0], c));
        match r.sense {
            RowSense::Le => p.add_row(..=r.rhs, factors),
            RowSense::Ge => p.add_row(r.rhs.., factors),
            RowSense::Eq => p.add_row(r.rhs..=r.rhs, factors),
        };
    }
    let mut m = p.optimise(Sense::Minimise);
    m.make_quiet();
    m.set_option("mip_rel_gap", request.mip_gap);
    m.set_option("mip_abs_gap", if request.mip_gap == 0.0 { 0.0 } else { 1e-6 });
    m.set_option("threads", request.threads.unwrap_or(1) as i32);
    m.set_option("random_seed", 0);
    if let Some(t) = request.time_limit {
        m.set_option("time_limit", t.as_secs_f64());
    }
    let solved = m.solve();
    let wall_time = start.elapsed();
    let raw = solved.status();
    let has_primal = matches!(solved.primal_solution_status(), highs::HighsSolutionStatus::Feasible);
    let status = match raw {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => Status::Optimal,
        HighsModelStatus::Infeasible => Status::Infeasible,
        HighsModelStatus::Unbounded => Status::Unbounded,
        HighsModelStatus::UnboundedOrInfeasible => Status::Infeasible,
        HighsModelStatus::ReachedTimeLimit
        | HighsModelStatus::ReachedIterationLimit
        | HighsModelStatus::ReachedSolutionLimit
        | HighsModelStatus::ReachedInterrupt
        | HighsModelStatus::ReachedMemoryLimit
        | HighsModelStatus::ObjectiveBound
        | HighsModelStatus::ObjectiveTarget => {
            if has_primal {
                Status::Feasible
            } else {
                Status::Limit
            }
        }
        other => {
            return Err(Error::Solver {
                message: format!("HiGHS terminated with {other:?}"),
                log_tail: String::new(),
            })
        }
    };
    if !status.has_solution() {
        return Ok(Solution::empty(status, SolverId::Highs, wall_time));
    }
    let x = solved.get_solution().columns().to_vec();
    Ok(Solution {
        status,
        objective: solved.objective_value() + model.objective().constant_term(),
        values: named_values(model, &x),
        wall_time,
        solver: SolverId::Highs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, LinearExpr, VarKind};

    #[test]
    fn lower_bounded_lp() {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_row("lb", Block::General, LinearExpr::new().with(x, 1.0), RowSense::Ge, 3.0)
            .unwrap();
        m.set_objective(LinearExpr::new().with(x, 1.0));
        let s = solve(&m, &SolverRequest::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_row("a", Block::General, LinearExpr::new().with(x, 1.0), RowSense::Ge, 1.0)
            .unwrap();
        m.add_row("b", Block::General, LinearExpr::new().with(x, 1.0), RowSense::Le, 0.0)
            .unwrap();
        m.set_objective(LinearExpr::new().with(x, 1.0));
        assert_eq!(solve(&m, &SolverRequest::default()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn integers_are_snapped() {
        let mut m = ModelInstance::new();
        let n = m.add_var("n", VarKind::Integer, 0.0, 10.0).unwrap();
        m.add_row("r", Block::General, LinearExpr::new().with(n, 2.0), RowSense::Ge, 5.0)
            .unwrap();
        m.set_objective(LinearExpr::new().with(n, 1.0));
        let s = solve(&m, &SolverRequest::default()).unwrap();
        assert_eq!(s.value("n"), Some(3.0));
    }
}
