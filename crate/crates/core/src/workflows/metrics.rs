use std::collections::BTreeMap;

use serde::Serialize;

use super::{CaseKind, CaseSpec, RunMode};
use crate::blocks::{cost_terms, names, p_name, x_name, CostGroup};
use crate::blocks::at;
use crate::inertia::{evaluate_inertia, InertiaRecord};
use crate::model::ModelInstance;
use crate::socp::{cone_residual, ConeResidual};
use crate::solver::{Solution, SolverId, Status};
use crate::system::{InertiaConfig, SystemData};
use crate::temporal::TemporalStructure;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityRow {
    pub unit: String,
    pub tech: String,
    pub bus: String,
    pub existing: f64,
    pub built: f64,
    /// GW of active power (GVar for FACTS).
    pub capacity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    /// Sum of the cost groups, recomputed from variable values.
    pub total_cost: f64,
    pub cost_breakdown: BTreeMap<CostGroup, f64>,
    pub clean_share: f64,
    /// Weighted mean of the re-evaluated system inertia, s.
    pub average_inertia: f64,
    /// Steps where the re-evaluated inertia violates the RoCoF limit.
    pub rocof_violations: usize,
    /// Weighted non-served energy, GWh.
    pub ens_total: f64,
    pub capacity: Vec<CapacityRow>,
    /// Weighted reactive energy by technology, GVArh (AC cases only).
    pub reactive_by_tech: BTreeMap<String, f64>,
    pub facts_built: f64,
    /// Smallest cone residual `cii·cjj − cij² − sij²` (AC cases only).
    pub min_cone_residual: Option<f64>,
    #[serde(skip)]
    pub inertia: Vec<InertiaRecord>,
    #[serde(skip)]
    pub cones: Vec<ConeResidual>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub version: u32,
    pub case: CaseKind,
    pub mode: RunMode,
    pub kappa: Option<f64>,
    pub solver: SolverId,
    pub status: Status,
    pub objective: Option<f64>,
    pub base_cost: Option<f64>,
    pub cost_delta: Option<f64>,
    /// Whether the achieved clean share reaches κ (when κ is set).
    pub clean_target_met: Option<bool>,
    pub metrics: Option<Metrics>,
}

impl RunReport {
    pub(crate) fn new(
        spec: &CaseSpec,
        mode: RunMode,
        _model: &ModelInstance,
        solution: &Solution,
        system: &SystemData,
        temporal: &TemporalStructure,
        base_cost: Option<f64>,
    ) -> Self {
        let solved = solution.status.has_solution();
        let metrics = solved.then(|| compute_metrics(solution, system, temporal, &spec.inertia));
        let objective = solved.then_some(solution.objective);
        RunReport {
            version: REPORT_VERSION,
            case: spec.kind,
            mode,
            kappa: spec.kappa,
            solver: solution.solver,
            status: solution.status,
            objective,
            base_cost,
            cost_delta: objective.zip(base_cost).map(|(o, b)| o - b),
            clean_target_met: metrics
                .as_ref()
                .zip(spec.kappa)
                .map(|(m, k)| m.clean_share >= k - 1e-6),
            metrics,
        }
    }
}

pub fn compute_metrics(
    solution: &Solution,
    system: &SystemData,
    temporal: &TemporalStructure,
    config: &InertiaConfig,
) -> Metrics {
    let values = &solution.values;
    let get = |n: &str| values.get(n).copied().unwrap_or(0.0);

    let mut cost_breakdown: BTreeMap<CostGroup, f64> = CostGroup::ALL.iter().map(|&g| (g, 0.0)).collect();
    for (g, name, c) in cost_terms(system, temporal) {
        *cost_breakdown.get_mut(&g).expect("all groups present") += c * get(&name);
    }
    let total_cost = cost_breakdown.values().sum();

    let mut thermal_energy = 0.0;
    let mut demand = 0.0;
    let mut ens_total = 0.0;
    let mut weight_sum = 0.0;
    let mut reactive_by_tech: BTreeMap<String, f64> = BTreeMap::new();
    let techs: Vec<(&str, &str)> = system
        .thermal
        .iter()
        .map(|t| (t.id.as_str(), t.tech.as_str()))
        .chain(system.renewable.iter().map(|r| (r.id.as_str(), r.tech.as_str())))
        .chain(system.storage.iter().map(|s| (s.id.as_str(), s.tech.as_str())))
        .chain(system.facts.iter().map(|f| (f.id.as_str(), "facts")))
        .collect();
    for s in temporal.steps() {
        let w = temporal.weight(s);
        weight_sum += w;
        for t in &system.thermal {
            thermal_energy += w * get(&p_name(s, &t.id));
        }
        demand += w * system.total_demand(s.rp, s.k);
        for b in &system.buses {
            ens_total += w * get(&at(names::PNS, s, &[&b.id]));
        }
        for (id, tech) in &techs {
            if let Some(q) = values.get(&at(names::Q, s, &[id])) {
                *reactive_by_tech.entry(tech.to_string()).or_insert(0.0) += w * q;
            }
        }
    }
    let clean_share = if demand > 0.0 { 1.0 - thermal_energy / demand } else { 1.0 };

    let inertia = evaluate_inertia(values, system, temporal, config);
    let mut average_inertia = 0.0;
    for (r, s) in inertia.iter().zip(temporal.steps()) {
        average_inertia += temporal.weight(s) * r.m;
    }
    if weight_sum > 0.0 {
        average_inertia /= weight_sum;
    }
    let rocof_violations = inertia.iter().filter(|r| !r.rocof_ok).count();

    let mut capacity = Vec::new();
    let mut row = |unit: &str, tech: &str, bus: &str, existing: u32, size: f64| {
        let built = get(&x_name(unit));
        capacity.push(CapacityRow {
            unit: unit.to_string(),
            tech: tech.to_string(),
            bus: bus.to_string(),
            existing: f64::from(existing),
            built,
            capacity: (f64::from(existing) + built) * size,
        });
    };
    for t in &system.thermal {
        row(&t.id, &t.tech, &t.bus, t.existing, t.p_max);
    }
    for r in &system.renewable {
        row(&r.id, &r.tech, &r.bus, r.existing, r.unit_size);
    }
    for s in &system.storage {
        row(&s.id, &s.tech, &s.bus, s.existing, s.unit_size);
    }
    for f in &system.facts {
        row(&f.id, "facts", &f.bus, 0, f.q_max);
    }
    let facts_built = system.facts.iter().map(|f| get(&x_name(&f.id))).sum();

    let has_ac = values.keys().any(|n| n.starts_with("cii("));
    let cones = if has_ac { cone_residual(values, system, temporal) } else { Vec::new() };
    let min_cone_residual = cones.iter().map(|c| c.residual).reduce(f64::min);

    Metrics {
        total_cost,
        cost_breakdown,
        clean_share,
        average_inertia,
        rocof_violations,
        ens_total,
        capacity,
        reactive_by_tech,
        facts_built,
        min_cone_residual,
        inertia,
        cones,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::*;
    use std::time::Duration;

    fn solution(values: &[(&str, f64)]) -> Solution {
        Solution {
            status: Status::Optimal,
            objective: 0.0,
            values: values.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
            wall_time: Duration::ZERO,
            solver: SolverId::Highs,
        }
    }

    fn one_bus() -> SystemData {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        let mut t = thermal("T", "B1", 0.0, 1.0);
        t.c_var = 50.0;
        s.thermal.push(t);
        s.demand.insert((1, 1, "B1".into()), (0.4, 0.0));
        s
    }

    #[test]
    fn thermal_only_supply_is_not_clean() {
        let s = one_bus();
        let tm = s.temporal_structure().unwrap();
        let m = compute_metrics(
            &solution(&[("p(rp1,k1,T)", 0.4), ("u(rp1,k1,T)", 1.0)]),
            &s,
            &tm,
            &InertiaConfig::default(),
        );
        assert_eq!(m.clean_share, 0.0);
        assert!((m.cost_breakdown[&CostGroup::Variable] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn no_thermal_output_is_fully_clean() {
        let s = one_bus();
        let tm = s.temporal_structure().unwrap();
        let m = compute_metrics(&solution(&[("pns(rp1,k1,B1)", 0.4)]), &s, &tm, &InertiaConfig::default());
        assert_eq!(m.clean_share, 1.0);
        assert!((m.ens_total - 0.4).abs() < 1e-12);
    }
}
