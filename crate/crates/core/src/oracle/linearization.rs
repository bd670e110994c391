use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{at, build_general_bounds, names, p_name, x_name};
use crate::error::{Error, Result};
use crate::inertia::{bit_count, build_inertia, families as f, inertia_of, inputs_at};
use crate::model::{ident, LinearExpr, ModelInstance};
use crate::solver::{fix_variables, relax_integrality, solve, FixMode, SolverId, SolverRequest, Status};
use crate::system::{InertiaConfig, RenewableUnit, StorageUnit, SystemData, TemporalLayout};

use super::bus;

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub variable: String,
    pub expected: f64,
    pub min: f64,
    pub max: f64,
    /// Commitments, investments and outputs of the failing point.
    pub point: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationReport {
    /// Integer points visited.
    pub points: usize,
    /// Projections compared, each by one minimisation and one maximisation.
    pub checked: usize,
    /// Largest distance between an LP bound and the nonlinear value.
    pub max_error: f64,
    pub mismatches: Vec<Mismatch>,
}

fn base_model(system: &SystemData, config: &InertiaConfig) -> Result<(ModelInstance, InertiaConfig)> {
    let temporal = system.temporal_structure()?;
    let mut config = config.clone();
    config.disturbance = 0.0;
    config.disturbance_overrides.clear();

    let mut m = ModelInstance::new();
    build_general_bounds(system, &temporal, &mut m)?;
    for s in temporal.steps() {
        for t in &system.thermal {
            m.binary(at(names::U, s, &[&t.id]))?;
        }
        for v in &system.virtual_inertia_units() {
            let cap = v.unit_size() * f64::from(v.existing() + v.build_max());
            m.continuous(p_name(s, v.id()), 0.0, cap)?;
        }
    }
    build_inertia(system, &temporal, &mut m, &config)?;
    Ok((m, config))
}

fn check_point(
    base: &ModelInstance,
    system: &SystemData,
    config: &InertiaConfig,
    point: &BTreeMap<String, f64>,
    tol: f64,
    report: &mut LinearizationReport,
) -> Result<()> {
    let temporal = system.temporal_structure()?;
    let vis = system.virtual_inertia_units();
    let mut fix = point.clone();
    for v in &vis {
        let x = point.get(&x_name(v.id())).copied().unwrap_or(0.0).round() as u32;
        for b in 0..bit_count(v.build_max()) {
            fix.insert(ident("xb", &[v.id(), &format!("b{b}")]), f64::from((x >> b) & 1));
        }
    }
    let fixed = relax_integrality(&fix_variables(base, &fix, FixMode::Fix)?);
    let request = SolverRequest::with_solver(SolverId::Highs);

    for s in temporal.steps() {
        let (sync, virt) = inputs_at(point, system, s);
        let pt = inertia_of(&sync, &virt, config.virtual_gain);
        let mut targets: Vec<(String, f64)> = Vec::new();
        for (t, &k) in system.thermal.iter().zip(&pt.k_sync) {
            targets.push((at(f::KT, s, &[&t.id]), k));
        }
        for (v, &k) in vis.iter().zip(&pt.k_virtual) {
            targets.push((at(f::KV, s, &[v.id()]), k));
        }
        targets.push((at(f::MSG, s, &[]), pt.m_sg));
        targets.push((at(f::MVI, s, &[]), pt.m_vi));
        targets.push((at(f::M, s, &[]), pt.m));

        for (name, expected) in targets {
            let id = fixed.require(&name)?;
            let mut range = [0.0; 2];
            for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                let mut lp = fixed.clone();
                lp.set_objective(LinearExpr::new().with(id, sign));
                let sol = solve(&lp, &request)?;
                if sol.status != Status::Optimal {
                    return Err(Error::Case(format!("projection on {name} ended with status {}", sol.status)));
                }
                range[slot] = sol.value(&name).unwrap_or(0.0);
            }
            let err = (range[0] - expected).abs().max((range[1] - expected).abs());
            report.checked += 1;
            report.max_error = report.max_error.max(err);
            if err > tol {
                report.mismatches.push(Mismatch {
                    variable: name,
                    expected,
                    min: range[0],
                    max: range[1],
                    point: point.clone(),
                });
            }
        }
    }
    report.points += 1;
    Ok(())
}

fn empty_report() -> LinearizationReport {
    LinearizationReport {
        points: 0,
        checked: 0,
        max_error: 0.0,
        mismatches: Vec::new(),
    }
}

/// Fix commitments, investments and virtual-inertia outputs at `point`, then
/// minimise and maximise every gain and inertia variable of the linearized
/// block. Each range must collapse onto the value from the nonlinear
/// definitions. The RoCoF row is disabled by a zero disturbance.
pub fn check_linearization(
    system: &SystemData,
    config: &InertiaConfig,
    point: &BTreeMap<String, f64>,
    tol: f64,
) -> Result<LinearizationReport> {
    let (base, config) = base_model(system, config)?;
    let mut report = empty_report();
    check_point(&base, system, &config, point, tol, &mut report)?;
    Ok(report)
}

/// [`check_linearization`] at every commitment and investment assignment of
/// a single-step system. Virtual-inertia outputs are drawn from `seed` as
/// fractions of the available capacity, with the extremes 0 and 1 included.
pub fn check_linearization_enumerated(
    system: &SystemData,
    config: &InertiaConfig,
    seed: u64,
    tol: f64,
) -> Result<LinearizationReport> {
    let temporal = system.temporal_structure()?;
    if temporal.num_steps() != 1 || temporal.num_rep_periods() != 1 {
        return Err(Error::Case("enumerated linearization check needs a single step".into()));
    }
    let s = crate::temporal::StepRef::new(1, 1);
    let (base, config) = base_model(system, config)?;
    let vis = system.virtual_inertia_units();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = empty_report();
    let n_th = system.thermal.len();
    for mask in 0..(1u32 << n_th) {
        let mut levels = vec![0u32; vis.len()];
        loop {
            let mut point = BTreeMap::new();
            for (i, t) in system.thermal.iter().enumerate() {
                point.insert(at(names::U, s, &[&t.id]), f64::from((mask >> i) & 1));
                point.insert(x_name(&t.id), 0.0);
            }
            for (v, &x) in vis.iter().zip(&levels) {
                point.insert(x_name(v.id()), f64::from(x));
                let avail = v.availability(system, 1, 1).unwrap_or(0.0);
                let cap = v.unit_size() * f64::from(x + v.existing()) * avail;
                let frac = match rng.random_range(0..5) {
                    0 => 0.0,
                    1 => 1.0,
                    _ => rng.random_range(0.0..1.0),
                };
                point.insert(p_name(s, v.id()), frac * cap);
            }
            check_point(&base, system, &config, &point, tol, &mut report)?;
            let mut carry = true;
            for (l, v) in levels.iter_mut().zip(&vis) {
                if *l < v.build_max() {
                    *l += 1;
                    carry = false;
                    break;
                }
                *l = 0;
            }
            if carry {
                break;
            }
        }
    }
    Ok(report)
}

/// One-step instance with up to two synchronous units and up to two
/// virtual-inertia units, plus a random point inside their bounds.
/// Inertia constants are kept low enough that every value stays under the cap.
pub fn random_inertia_point(seed: u64) -> (SystemData, BTreeMap<String, f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sys = SystemData {
        buses: vec![bus("B1".into(), true)],
        lines: vec![],
        thermal: vec![],
        renewable: vec![],
        storage: vec![],
        facts: vec![],
        demand: BTreeMap::new(),
        profiles: BTreeMap::new(),
        inflows: BTreeMap::new(),
        scalars: crate::system::Scalars {
            base_power: 100.0,
            max_angle_diff: 0.5,
            reserve_up: 0.0,
            reserve_down: 0.0,
            reserve_cost_up: 0.0,
            reserve_cost_down: 0.0,
            ens_cost: 1.0,
            kappa: 0.0,
        },
        inertia: InertiaConfig::default(),
        layout: TemporalLayout::Hourly {
            hours: 1,
            moving_window: 1,
        },
    };
    let mut point = BTreeMap::new();
    let s = crate::temporal::StepRef::new(1, 1);
    for i in 0..rng.random_range(0..=2) {
        let p_max = rng.random_range(0.1..1.0);
        let id = format!("T{i}");
        sys.thermal.push(crate::system::ThermalUnit {
            id: id.clone(),
            tech: "ccgt".into(),
            bus: "B1".into(),
            p_min: 0.0,
            p_max,
            q_min: 0.0,
            q_max: 0.0,
            inertia: rng.random_range(1.0..10.0),
            c_startup: 0.0,
            c_commit: 0.0,
            c_var: 0.01,
            c_inv: 0.0,
            ramp_up: p_max,
            ramp_down: p_max,
            existing: 1,
            build_max: 0,
        });
        point.insert(at(names::U, s, &[&id]), f64::from(rng.random_bool(0.6) as u8));
    }
    let n_vi = rng.random_range(0..=2);
    for i in 0..n_vi {
        let id = format!("V{i}");
        let size = rng.random_range(0.05..0.5);
        let existing = rng.random_range(0..=1);
        let build_max = rng.random_range(0..=3);
        let inertia = rng.random_range(0.5..4.5);
        let avail = if i == 0 || rng.random_bool(0.5) {
            let a = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..1.0) };
            sys.renewable.push(RenewableUnit {
                id: id.clone(),
                tech: "wind".into(),
                bus: "B1".into(),
                unit_size: size,
                inertia,
                c_om: 0.0,
                c_inv: 0.0,
                existing,
                build_max,
                profile_key: id.clone(),
                q_min: 0.0,
                q_max: 0.0,
            });
            sys.profiles.insert((id.clone(), 1, 1), a);
            a
        } else {
            sys.storage.push(StorageUnit {
                id: id.clone(),
                tech: "bess".into(),
                bus: "B1".into(),
                unit_size: size,
                energy_to_power: 2.0,
                eff_charge: 0.9,
                eff_discharge: 0.9,
                min_soc_frac: 0.0,
                max_soc_frac: 1.0,
                inertia,
                c_om: 0.0,
                c_inv: 0.0,
                existing,
                build_max,
                initial_reserve: 0.0,
                is_hydro: false,
                q_min: 0.0,
                q_max: 0.0,
            });
            1.0
        };
        let x = rng.random_range(0..=build_max);
        point.insert(x_name(&id), f64::from(x));
        let available = size * f64::from(x + existing) * avail;
        let out = if rng.random_bool(0.2) { available } else { rng.random_range(0.0..=1.0) * available };
        point.insert(p_name(s, &id), out);
    }
    for t in &sys.thermal {
        point.insert(x_name(&t.id), 0.0);
    }
    (sys, point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_assignment_collapses() {
        for seed in 0..3 {
            let (sys, _) = random_inertia_point(seed);
            let r = check_linearization_enumerated(&sys, &InertiaConfig::default(), seed, 1e-6).unwrap();
            assert!(r.mismatches.is_empty(), "seed {seed}: {:?}", r.mismatches);
        }
    }

    #[test]
    fn projections_collapse() {
        for seed in 0..6 {
            let (sys, point) = random_inertia_point(seed);
            let r = check_linearization(&sys, &InertiaConfig::default(), &point, 1e-6).unwrap();
            assert!(r.mismatches.is_empty(), "seed {seed}: {:?}", r.mismatches);
            assert!(r.checked >= 3);
        }
    }
}
