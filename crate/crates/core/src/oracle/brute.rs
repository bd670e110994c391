use std::collections::BTreeMap;

use crate::blocks::{at, names, x_name};
use crate::error::{Error, Result};
use crate::inertia::bit_count;
use crate::model::{family_of, ModelInstance};
use crate::solver::{fix_variables, solve, FixMode, SolverId, SolverRequest, Status};
use crate::system::SystemData;
use crate::temporal::TemporalStructure;

/// Enumerations larger than this are refused.
pub const MAX_ENUMERATION: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForce {
    /// Best objective over all feasible assignments; `None` if none is feasible.
    pub objective: Option<f64>,
    /// Discrete assignment reaching it (free and derived variables).
    pub assignment: BTreeMap<String, f64>,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Number of assignments of the free discrete decisions: commitments,
/// charge/discharge flags and investments.
pub fn enumeration_size(system: &SystemData) -> usize {
    let steps = system.temporal_structure().map(|t| t.steps().count()).unwrap_or(0);
    let flags = steps * (system.thermal.len() + system.storage.len());
    let builds = system
        .thermal
        .iter()
        .map(|t| t.build_max)
        .chain(system.renewable.iter().map(|r| r.build_max))
        .chain(system.storage.iter().map(|s| s.build_max))
        .chain(system.facts.iter().map(|f| f.build_max))
        .fold(1usize, |acc, m| acc.saturating_mul(m as usize + 1));
    if flags >= usize::BITS as usize {
        return usize::MAX;
    }
    builds.saturating_mul(1usize << flags)
}

/// Optimum of `model` by enumerating every commitment, storage flag and
/// investment level. Startups and shutdowns follow from the commitments and
/// investment bits from the investment levels; each fixed problem is solved
/// by the interior-point solver.
pub fn brute_force_optimum(
    model: &ModelInstance,
    system: &SystemData,
    temporal: &TemporalStructure,
) -> Result<BruteForce> {
    let size = enumeration_size(system);
    if size > MAX_ENUMERATION {
        return Err(Error::Case(format!("{size} assignments exceed the enumeration limit {MAX_ENUMERATION}")));
    }

    let mut free: Vec<(String, u32)> = Vec::new();
    for s in temporal.steps() {
        for t in &system.thermal {
            free.push((at(names::U, s, &[&t.id]), 1));
        }
        for st in &system.storage {
            free.push((at(names::BCHD, s, &[&st.id]), 1));
        }
    }
    for v in model.variables() {
        if family_of(&v.name) == names::X {
            free.push((v.name.clone(), v.upper.round() as u32));
        }
    }
    let derived_families = [names::Y, names::Z, "xb"];
    for v in model.variables().iter().filter(|v| v.kind.is_discrete()) {
        let f = family_of(&v.name);
        if !derived_families.contains(&f) && !free.iter().any(|(n, _)| n == &v.name) {
            return Err(Error::Case(format!("cannot enumerate discrete variable {}", v.name)));
        }
    }

    let request = SolverRequest::with_solver(SolverId::Clarabel);
    let mut best = BruteForce {
        objective: None,
        assignment: BTreeMap::new(),
        evaluated: 0,
        feasible: 0,
    };
    let mut digits = vec![0u32; free.len()];
    loop {
        let mut fix: BTreeMap<String, f64> = free
            .iter()
            .zip(&digits)
            .filter(|((n, _), _)| model.var(n).is_some())
            .map(|((n, _), &d)| (n.clone(), f64::from(d)))
            .collect();
        derive(&mut fix, model, system, temporal);
        let fixed = fix_variables(model, &fix, FixMode::Fix)?;
        let sol = solve(&fixed, &request)?;
        best.evaluated += 1;
        match sol.status {
            Status::Optimal | Status::Feasible => {
                best.feasible += 1;
                if best.objective.is_none_or(|o| sol.objective < o) {
                    best.objective = Some(sol.objective);
                    best.assignment = fix;
                }
            }
            Status::Infeasible => {}
            other => {
                return Err(Error::Solver {
                    message: format!("fixed subproblem ended with status {other}"),
                    log_tail: String::new(),
                })
            }
        }
        if !advance(&mut digits, &free) {
            break;
        }
    }
    Ok(best)
}

fn advance(digits: &mut [u32], free: &[(String, u32)]) -> bool {
    for (d, (_, max)) in digits.iter_mut().zip(free) {
        if *d < *max {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

fn derive(fix: &mut BTreeMap<String, f64>, model: &ModelInstance, system: &SystemData, temporal: &TemporalStructure) {
    let mut extra = BTreeMap::new();
    for s in temporal.steps() {
        let prev = temporal.prev_cyclic(s);
        for t in &system.thermal {
            let u = fix[&at(names::U, s, &[&t.id])];
            let up = fix[&at(names::U, prev, &[&t.id])];
            extra.insert(at(names::Y, s, &[&t.id]), (u - up).max(0.0));
            extra.insert(at(names::Z, s, &[&t.id]), (up - u).max(0.0));
        }
    }
    for v in system.virtual_inertia_units() {
        let x = fix[&x_name(v.id())] as u32;
        for b in 0..bit_count(v.build_max()) {
            let name = crate::model::ident("xb", &[v.id(), &format!("b{b}")]);
            if model.var(&name).is_some() {
                extra.insert(name, f64::from((x >> b) & 1));
            }
        }
    }
    fix.extend(extra);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolverRequest;
    use crate::workflows::{assemble_case, CaseKind, CaseSpec};

    #[test]
    fn matches_milp_on_a_few_instances() {
        for seed in 0..4 {
            let s = super::super::random_tiny(seed);
            let tm = s.temporal_structure().unwrap();
            let spec = CaseSpec::new(CaseKind::Bc, None);
            let m = assemble_case(&spec, &s, &tm).unwrap();
            let bf = brute_force_optimum(&m, &s, &tm).unwrap();
            let milp = solve(&m, &SolverRequest::with_solver(SolverId::Highs)).unwrap();
            match bf.objective {
                Some(o) => assert!(
                    (o - milp.objective).abs() <= 1e-6 * o.abs().max(1.0),
                    "seed {seed}: {o} vs {}",
                    milp.objective
                ),
                None => assert_eq!(milp.status, Status::Infeasible),
            }
        }
    }

    #[test]
    fn counts_assignments() {
        let s = super::super::random_tiny(7);
        let tm = s.temporal_structure().unwrap();
        let m = assemble_case(&CaseSpec::new(CaseKind::Bc, None), &s, &tm).unwrap();
        let bf = brute_force_optimum(&m, &s, &tm).unwrap();
        assert_eq!(bf.evaluated, enumeration_size(&s));
    }
}
