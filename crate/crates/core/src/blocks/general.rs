use serde::Serialize;

use super::{at, names, p_name, x_name};
use crate::error::Result;
use crate::model::{LinearExpr, ModelInstance, VarKind};
use crate::system::SystemData;
use crate::temporal::TemporalStructure;

/// Term groups of the total cost, as reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostGroup {
    Startup,
    Commitment,
    Variable,
    OperationMaintenance,
    NonServed,
    Reserves,
    Investment,
}

impl CostGroup {
    pub const ALL: [CostGroup; 7] = [
        CostGroup::Startup,
        CostGroup::Commitment,
        CostGroup::Variable,
        CostGroup::OperationMaintenance,
        CostGroup::NonServed,
        CostGroup::Reserves,
        CostGroup::Investment,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostGroup::Startup => "startup",
            CostGroup::Commitment => "commitment",
            CostGroup::Variable => "variable",
            CostGroup::OperationMaintenance => "om",
            CostGroup::NonServed => "ens",
            CostGroup::Reserves => "reserves",
            CostGroup::Investment => "investment",
        }
    }
}

/// Every objective coefficient as (group, variable name, coefficient).
pub fn cost_terms(system: &SystemData, temporal: &TemporalStructure) -> Vec<(CostGroup, String, f64)> {
    let sc = &system.scalars;
    let mut out = Vec::new();
    for s in temporal.steps() {
        let w = temporal.weight(s);
        for t in &system.thermal {
            let id = t.id.as_str();
            out.push((CostGroup::Startup, at(names::Y, s, &[id]), w * t.c_startup));
            out.push((CostGroup::Commitment, at(names::U, s, &[id]), w * t.c_commit));
            out.push((CostGroup::Variable, p_name(s, id), w * t.c_var));
            out.push((CostGroup::Reserves, at(names::RES_UP, s, &[id]), w * t.c_var * sc.reserve_cost_up));
            out.push((CostGroup::Reserves, at(names::RES_DN, s, &[id]), w * t.c_var * sc.reserve_cost_down));
        }
        for r in &system.renewable {
            out.push((CostGroup::OperationMaintenance, p_name(s, &r.id), w * r.c_om));
        }
        for st in &system.storage {
            let id = st.id.as_str();
            out.push((CostGroup::OperationMaintenance, p_name(s, id), w * st.c_om));
            out.push((CostGroup::Reserves, at(names::RES_UP, s, &[id]), w * st.c_om * sc.reserve_cost_up));
            out.push((CostGroup::Reserves, at(names::RES_DN, s, &[id]), w * st.c_om * sc.reserve_cost_down));
        }
        for b in &system.buses {
            out.push((CostGroup::NonServed, at(names::PNS, s, &[&b.id]), w * sc.ens_cost));
        }
    }
    // investment costs are per GW-year, so scale by unit size
    for t in &system.thermal {
        out.push((CostGroup::Investment, x_name(&t.id), t.c_inv * t.p_max));
    }
    for r in &system.renewable {
        out.push((CostGroup::Investment, x_name(&r.id), r.c_inv * r.unit_size));
    }
    for st in &system.storage {
        out.push((CostGroup::Investment, x_name(&st.id), st.c_inv * st.unit_size));
    }
    for f in &system.facts {
        out.push((CostGroup::Investment, x_name(&f.id), f.c_inv));
    }
    out
}

pub fn build_objective(system: &SystemData, temporal: &TemporalStructure, model: &mut ModelInstance) -> Result<()> {
    let mut obj = LinearExpr::new();
    for (_, name, c) in cost_terms(system, temporal) {
        obj.add(model.require(&name)?, c);
    }
    model.set_objective(obj);
    Ok(())
}

/// Non-served energy bounds and investment variables for every unit.
pub fn build_general_bounds(system: &SystemData, temporal: &TemporalStructure, model: &mut ModelInstance) -> Result<()> {
    for s in temporal.steps() {
        for b in &system.buses {
            let d = system.active_demand(s.rp, s.k, &b.id);
            model.continuous(at(names::PNS, s, &[&b.id]), 0.0, d)?;
        }
    }
    let builds = system
        .thermal
        .iter()
        .map(|t| (&t.id, t.build_max))
        .chain(system.renewable.iter().map(|r| (&r.id, r.build_max)))
        .chain(system.storage.iter().map(|s| (&s.id, s.build_max)))
        .chain(system.facts.iter().map(|f| (&f.id, f.build_max)));
    for (id, max) in builds {
        model.add_var(x_name(id), VarKind::Integer, 0.0, f64::from(max))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::*;

    #[test]
    fn investment_scales_with_unit_size() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        let mut t = thermal("CCGT", "B1", 0.134, 0.668);
        t.c_inv = 45.5;
        s.thermal.push(t);
        let tm = s.temporal_structure().unwrap();
        let terms = cost_terms(&s, &tm);
        let inv = terms
            .iter()
            .find(|(g, n, _)| *g == CostGroup::Investment && n == "x(CCGT)")
            .unwrap();
        assert!((inv.2 - 30.394).abs() < 1e-12);
    }

    #[test]
    fn variable_cost_per_gwh() {
        // 15 EUR/MWh is 0.015 MEUR/GWh
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        let mut t = thermal("NUC", "B1", 0.772, 0.772);
        t.c_var = 0.015;
        s.thermal.push(t);
        let tm = s.temporal_structure().unwrap();
        let terms = cost_terms(&s, &tm);
        let var = terms.iter().find(|(g, _, _)| *g == CostGroup::Variable).unwrap();
        assert_eq!(var.1, "p(rp1,k1,NUC)");
        assert!((var.2 * 1.0 - 0.015).abs() < 1e-15);
    }

    #[test]
    fn zero_demand_fixes_pns() {
        let s = system(vec![bus("B1", true)], vec![], 2);
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        let v = m.variable(m.require("pns(rp1,k2,B1)").unwrap());
        assert_eq!((v.lower, v.upper), (0.0, 0.0));
    }

    #[test]
    fn objective_needs_its_variables() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.thermal.push(thermal("T", "B1", 0.0, 1.0));
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        let err = build_objective(&s, &tm, &mut m).unwrap_err().to_string();
        assert!(err.contains("missing variable"), "{err}");
    }
}
