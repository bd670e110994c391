//! Independent checks for the model builders on tiny instances: exhaustive
//! enumeration of the discrete decisions, exactness of the inertia
//! linearization, and a Newton–Raphson AC power flow.

mod brute;
mod linearization;
mod powerflow;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::system::{
    Bus, InertiaConfig, Line, RenewableUnit, Scalars, StorageUnit, SystemData, TemporalLayout, ThermalUnit,
};

pub use brute::{brute_force_optimum, enumeration_size, BruteForce, MAX_ENUMERATION};
pub use linearization::{check_linearization, check_linearization_enumerated, random_inertia_point, LinearizationReport, Mismatch};
pub use powerflow::{
    ac_operating_point, check_relaxation, newton_power_flow, random_ac_case, AcPoint, PowerFlow, PowerFlowBus,
    RelaxationCheck,
};

/// Largest enumeration a generated instance may need.
const TINY_BUDGET: usize = 256;

fn bus(id: String, slack: bool) -> Bus {
    Bus {
        id,
        g_shunt: 0.0,
        b_shunt: 0.0,
        reactive_ratio: 0.0,
        v_min: 0.9,
        v_max: 1.1,
        is_slack: slack,
    }
}

fn line(from: &str, to: &str, x: f64, limit: f64) -> Line {
    Line {
        from: from.into(),
        to: to.into(),
        circuit: "c1".into(),
        conductance: 0.0,
        susceptance: -1.0 / x,
        charging: 0.0,
        flow_limit: limit,
        apparent_limit: 1000.0 * limit,
        reactance: x,
    }
}

/// Random instance with ≤ 3 buses, ≤ 3 units and ≤ 3 hourly steps whose
/// discrete decisions enumerate in at most a few hundred assignments.
pub fn random_tiny(seed: u64) -> SystemData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = draw(&mut rng);
        if enumeration_size(&s) <= TINY_BUDGET {
            return s;
        }
    }
}

fn draw(rng: &mut ChaCha8Rng) -> SystemData {
    let n_bus = rng.random_range(1..=3);
    let hours = rng.random_range(1..=3);
    let ids: Vec<String> = (1..=n_bus).map(|i| format!("B{i}")).collect();
    let buses: Vec<Bus> = ids.iter().enumerate().map(|(i, id)| bus(id.clone(), i == 0)).collect();
    let mut lines = Vec::new();
    for i in 1..n_bus {
        let from = rng.random_range(0..i);
        lines.push(line(&ids[from], &ids[i], rng.random_range(0.05..0.3), rng.random_range(0.2..1.0)));
    }
    if n_bus == 3 && rng.random_bool(0.5) {
        let (a, b) = if lines.iter().any(|l| l.from == "B2" && l.to == "B3") { ("B1", "B3") } else { ("B2", "B3") };
        lines.push(line(a, b, rng.random_range(0.05..0.3), rng.random_range(0.2..1.0)));
    }
    let pick = |rng: &mut ChaCha8Rng| ids[rng.random_range(0..n_bus)].clone();

    let n_th = rng.random_range(1..=2);
    let mut thermal = Vec::new();
    for t in 0..n_th {
        let p_max = rng.random_range(0.3..1.0);
        let existing = rng.random_range(0..=1);
        thermal.push(ThermalUnit {
            id: format!("T{t}"),
            tech: if t == 0 { "nuclear".into() } else { "ccgt".into() },
            bus: pick(rng),
            p_min: p_max * rng.random_range(0.0..0.25),
            p_max,
            q_min: -0.3 * p_max,
            q_max: 0.5 * p_max,
            inertia: rng.random_range(2.0..8.0),
            c_startup: rng.random_range(0.0..0.02),
            c_commit: rng.random_range(0.0..0.005),
            c_var: rng.random_range(0.02..0.08),
            c_inv: rng.random_range(0.01..0.05),
            ramp_up: p_max * rng.random_range(0.3..1.0),
            ramp_down: p_max * rng.random_range(0.3..1.0),
            existing,
            build_max: 1 - existing,
        });
    }
    let mut renewable = Vec::new();
    let mut profiles = BTreeMap::new();
    if rng.random_bool(0.7) {
        renewable.push(RenewableUnit {
            id: "W".into(),
            tech: "wind".into(),
            bus: pick(rng),
            unit_size: rng.random_range(0.1..0.5),
            inertia: if rng.random_bool(0.5) { rng.random_range(1.0..6.0) } else { 0.0 },
            c_om: rng.random_range(0.0..0.002),
            c_inv: rng.random_range(0.005..0.02),
            existing: rng.random_range(0..=1),
            build_max: rng.random_range(0..=2),
            profile_key: "wind".into(),
            q_min: 0.0,
            q_max: 0.0,
        });
        for k in 1..=hours {
            profiles.insert(("wind".to_string(), 1, k), rng.random_range(0.0..1.0));
        }
    }
    let mut storage = Vec::new();
    if rng.random_bool(0.4) {
        storage.push(StorageUnit {
            id: "S".into(),
            tech: "bess".into(),
            bus: pick(rng),
            unit_size: rng.random_range(0.05..0.3),
            energy_to_power: rng.random_range(1.0..4.0),
            eff_charge: 0.95,
            eff_discharge: 0.95,
            min_soc_frac: 0.0,
            max_soc_frac: 1.0,
            inertia: if rng.random_bool(0.5) { rng.random_range(1.0..6.0) } else { 0.0 },
            c_om: rng.random_range(0.0..0.002),
            c_inv: rng.random_range(0.005..0.03),
            existing: rng.random_range(0..=1),
            build_max: rng.random_range(0..=1),
            initial_reserve: 0.0,
            is_hydro: false,
            q_min: 0.0,
            q_max: 0.0,
        });
    }
    let mut demand = BTreeMap::new();
    for k in 1..=hours {
        for id in &ids {
            let d = rng.random_range(0.1..0.8) / n_bus as f64;
            demand.insert((1, k, id.clone()), (d, 0.3 * d));
        }
    }
    let inertia = InertiaConfig {
        disturbance: rng.random_range(0.0..0.1),
        ..InertiaConfig::default()
    };
    SystemData {
        buses,
        lines,
        thermal,
        renewable,
        storage,
        facts: vec![],
        demand,
        profiles,
        inflows: BTreeMap::new(),
        scalars: Scalars {
            base_power: 100.0,
            max_angle_diff: 0.5,
            reserve_up: if rng.random_bool(0.5) { rng.random_range(0.0..0.1) } else { 0.0 },
            reserve_down: if rng.random_bool(0.3) { rng.random_range(0.0..0.05) } else { 0.0 },
            reserve_cost_up: 0.1,
            reserve_cost_down: 0.1,
            ens_cost: rng.random_range(0.5..2.0),
            kappa: 0.0,
        },
        inertia,
        layout: TemporalLayout::Hourly {
            hours,
            moving_window: hours,
        },
    }
}
