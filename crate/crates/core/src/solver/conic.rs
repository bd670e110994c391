use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{named_values, Solution, SolverId, SolverRequest, Status};
use crate::error::{Error, Result};
use crate::model::{ModelInstance, RowSense};

/// Triplet rows of `A x + s = b` grouped by cone type.
#[derive(Default)]
struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, rhs: f64) {
        let r = self.b.len();
        for (j, v) in terms {
            self.i.push(r);
            self.j.push(j);
            self.v.push(v);
        }
        self.b.push(rhs);
    }

    fn append(&mut self, other: Rows) {
        let off = self.b.len();
        self.i.extend(other.i.iter().map(|r| r + off));
        self.j.extend(other.j);
        self.v.extend(other.v);
        self.b.extend(other.b);
    }
}

pub(super) fn solve(model: &ModelInstance, request: &SolverRequest) -> Result<Solution> {
    if let Some(v) = model
        .variables()
        .iter()
        .find(|v| v.kind.is_discrete() && v.lower != v.upper)
    {
        return Err(Error::Solver {
            message: format!("Clarabel is continuous only; {} is an unfixed integer", v.name),
            log_tail: String::new(),
        });
    }
    let start = Instant::now();
    let n = model.num_vars();
    let mut zero = Rows::default();
    let mut nonneg = Rows::default();
    let mut soc = Rows::default();
    let mut soc_dims = Vec::new();

    for r in model.rows() {
        let t = r.expr.terms().iter().map(|&(v, c)| (v.0, c));
        match r.sense {
            RowSense::Eq => zero.push(t, r.rhs),
            RowSense::Le => nonneg.push(t, r.rhs),
            RowSense::Ge => nonneg.push(t.map(|(j, c)| (j, -c)), -r.rhs),
        }
    }
    for (j, v) in model.variables().iter().enumerate() {
        if v.lower == v.upper {
            zero.push([(j, 1.0)], v.lower);
            continue;
        }
        if v.lower.is_finite() {
            nonneg.push([(j, -1.0)], -v.lower);
        }
        if v.upper.is_finite() {
            nonneg.push([(j, 1.0)], v.upper);
        }
    }
    // Σx² ≤ y·z with y, z ≥ 0  ⇔  ‖(y − z, 2x)‖ ≤ y + z
    for c in model.cones() {
        let (y, z) = (c.product.0 .0, c.product.1 .0);
        soc.push([(y, -1.0), (z, -1.0)], 0.0);
        soc.push([(y, -1.0), (z, 1.0)], 0.0);
        for x in &c.squares {
            soc.push([(x.0, -2.0)], 0.0);
        }
        soc_dims.push(2 + c.squares.len());
    }

    let mut cones = Vec::new();
    let (nz, nn) = (zero.b.len(), nonneg.b.len());
    let mut a = zero;
    a.append(nonneg);
    a.append(soc);
    if nz > 0 {
        cones.push(SupportedConeT::ZeroConeT(nz));
    }
    if nn > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nn));
    }
    cones.extend(soc_dims.into_iter().map(SupportedConeT::SecondOrderConeT));

    let m = a.b.len();
    let amat = CscMatrix::new_from_triplets(m, n, a.i, a.j, a.v);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for &(v, c) in model.objective().terms() {
        q[v.0] += c;
    }
    let mut settings = DefaultSettingsBuilder::default();
    settings
        .verbose(false)
        .tol_gap_abs(1e-9)
        .tol_gap_rel(1e-9)
        .tol_feas(1e-9)
        .max_iter(500)
        .max_threads(request.threads.unwrap_or(1));
    if let Some(t) = request.time_limit {
        settings.time_limit(t.as_secs_f64());
    }
    let settings = settings.build().map_err(|e| Error::Solver {
        message: format!("Clarabel settings: {e}"),
        log_tail: String::new(),
    })?;
    let mut solver = DefaultSolver::new(&p, &q, &amat, &a.b, &cones, settings).map_err(|e| Error::Solver {
        message: format!("Clarabel setup: {e}"),
        log_tail: String::new(),
    })?;
    solver.solve();
    let wall_time = start.elapsed();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved => Status::Optimal,
        SolverStatus::AlmostSolved => Status::Feasible,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Status::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => Status::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => Status::Limit,
        other => {
            return Err(Error::Solver {
                message: format!("Clarabel terminated with {other:?}"),
                log_tail: format!("iterations {}, r_prim {:e}, r_dual {:e}", sol.iterations, sol.r_prim, sol.r_dual),
            })
        }
    };
    if !status.has_solution() {
        return Ok(Solution::empty(status, SolverId::Clarabel, wall_time));
    }
    Ok(Solution {
        status,
        objective: sol.obj_val + model.objective().constant_term(),
        values: named_values(model, &sol.x),
        wall_time,
        solver: SolverId::Clarabel,
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
        assert!((s.objective - 3.0).abs() < 1e-7);
    }

    #[test]
    fn rotated_cone_binds() {
        // max x s.t. x² ≤ y·z, y = 2, z = 8  →  x = 4
        let mut m = ModelInstance::new();
        let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.continuous("y", 2.0, 2.0).unwrap();
        let z = m.continuous("z", 0.0, 8.0).unwrap();
        m.add_cone("k", Block::General, vec![x], (y, z)).unwrap();
        m.set_objective(LinearExpr::new().with(x, -1.0));
        let s = solve(&m, &SolverRequest::default()).unwrap();
        assert!((s.value("x").unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_detected() {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", 0.0, 1.0).unwrap();
        m.add_row("a", Block::General, LinearExpr::new().with(x, 1.0), RowSense::Ge, 2.0)
            .unwrap();
        assert_eq!(solve(&m, &SolverRequest::default()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn free_integers_refused() {
        let mut m = ModelInstance::new();
        m.add_var("n", VarKind::Integer, 0.0, 3.0).unwrap();
        assert!(solve(&m, &SolverRequest::default()).is_err());
    }
}
