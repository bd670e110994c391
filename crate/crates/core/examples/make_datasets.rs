//! Regenerates the shipped datasets under `data/`.
//!
//! ```text
//! cargo run -p gep-core --example make_datasets -- data
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gep_core::system::{
    write_system, Bus, FactsDevice, InertiaConfig, Line, RenewableUnit, Scalars, StorageUnit, SystemData,
    TemporalLayout, ThermalUnit,
};

fn bus(id: &str, slack: bool, reactive_ratio: f64) -> Bus {
    Bus {
        id: id.into(),
        g_shunt: 0.0,
        b_shunt: 0.0,
        reactive_ratio,
        v_min: 0.9,
        v_max: 1.1,
        is_slack: slack,
    }
}

fn line(from: &str, to: &str, r: f64, x: f64, bc: f64, limit_mva: f64) -> Line {
    let z2 = r * r + x * x;
    Line {
        from: from.into(),
        to: to.into(),
        circuit: "c1".into(),
        conductance: r / z2,
        susceptance: -x / z2,
        charging: bc,
        flow_limit: limit_mva / 1000.0,
        apparent_limit: limit_mva,
        reactance: x,
    }
}

#[allow(clippy::too_many_arguments)]
fn thermal(
    id: &str,
    tech: &str,
    bus: &str,
    p: (f64, f64),
    q: f64,
    h: f64,
    c_su: f64,
    c_var_eur_mwh: f64,
    c_up: f64,
    c_inv: f64,
    existing: u32,
) -> ThermalUnit {
    ThermalUnit {
        id: id.into(),
        tech: tech.into(),
        bus: bus.into(),
        p_min: p.0,
        p_max: p.1,
        q_min: -q,
        q_max: q,
        inertia: h,
        c_startup: c_su,
        c_commit: c_up,
        c_var: c_var_eur_mwh / 1000.0,
        c_inv,
        ramp_up: p.1,
        ramp_down: p.1,
        existing,
        build_max: 1 - existing,
    }
}

#[allow(clippy::too_many_arguments)]
fn renewable(id: &str, tech: &str, bus: &str, h: f64, c_om: f64, c_inv: f64, build_max: u32, key: &str) -> RenewableUnit {
    RenewableUnit {
        id: id.into(),
        tech: tech.into(),
        bus: bus.into(),
        unit_size: 0.1,
        inertia: h,
        c_om: c_om / 1000.0,
        c_inv,
        existing: 0,
        build_max,
        profile_key: key.into(),
        q_min: 0.0,
        q_max: 0.0,
    }
}

fn bess(id: &str, bus: &str, h: f64, c_om: f64, c_inv: f64, build_max: u32) -> StorageUnit {
    StorageUnit {
        id: id.into(),
        tech: if h > 0.0 { "bess_vi".into() } else { "bess".into() },
        bus: bus.into(),
        unit_size: 0.1,
        energy_to_power: 4.0,
        eff_charge: 0.95,
        eff_discharge: 0.95,
        min_soc_frac: 0.0,
        max_soc_frac: 1.0,
        inertia: h,
        c_om: c_om / 1000.0,
        c_inv,
        existing: 0,
        build_max,
        initial_reserve: 0.0,
        is_hydro: false,
        q_min: 0.0,
        q_max: 0.0,
    }
}

fn solar_shape(hour: usize, peak: f64) -> f64 {
    let h = hour as f64 + 0.5;
    if (6.0..=20.0).contains(&h) {
        peak * (PI * (h - 6.0) / 14.0).sin().powi(2)
    } else {
        0.0
    }
}

fn nine_bus() -> SystemData {
    let share = [0.10, 0.08, 0.12, 0.15, 0.02, 0.30, 0.10, 0.03, 0.10];
    let ids: Vec<String> = (1..=9).map(|i| format!("B{i}")).collect();
    let buses = ids.iter().enumerate().map(|(i, id)| bus(id, i == 0, 0.2)).collect();
    let topo = [
        (1, 2, 0.060),
        (1, 3, 0.080),
        (2, 4, 0.070),
        (3, 4, 0.050),
        (3, 6, 0.090),
        (4, 5, 0.110),
        (4, 6, 0.060),
        (5, 7, 0.100),
        (6, 7, 0.070),
        (6, 8, 0.080),
        (7, 8, 0.060),
        (7, 9, 0.090),
        (8, 9, 0.070),
    ];
    let lines = topo
        .iter()
        .map(|&(a, b, x)| line(&ids[a - 1], &ids[b - 1], 0.1 * x, x, 0.02, 800.0))
        .collect();

    let mut th = vec![thermal("NUC7", "nuclear", "B7", (0.772, 0.772), 0.0, 8.0, 0.0, 15.0, 0.0, 0.0, 1)];
    th.push(thermal("CCGT1", "ccgt", "B1", (0.134, 0.668), 0.2, 4.0, 0.03, 28.0, 0.009, 45.5, 0));
    for b in [3, 4, 6] {
        th.push(thermal(&format!("CCGT{b}"), "ccgt", &format!("B{b}"), (0.1, 0.5), 0.267, 4.0, 0.03, 39.0, 0.009, 20.1, 0));
    }
    for b in [2, 4, 6] {
        th.push(thermal(&format!("OCGT{b}"), "ocgt", &format!("B{b}"), (0.04, 0.4), 0.18, 2.5, 0.06, 64.0, 0.003, 9.9, 0));
    }
    for b in 1..=4 {
        th.push(thermal(&format!("COAL{b}"), "coal", &format!("B{b}"), (0.15, 0.5), 0.2, 5.0, 0.05, 45.0, 0.006, 60.0, 0));
    }
    th.push(thermal("OIL9", "fueloil", "B9", (0.05, 0.3), 0.12, 3.0, 0.02, 90.0, 0.004, 30.0, 0));

    let re = vec![
        renewable("WIND5", "wind", "B5", 0.0, 2.0, 7.3, 40, "wind"),
        renewable("WINDVI5", "wind_vi", "B5", 2.0, 5.0, 8.0, 40, "wind"),
        renewable("SOLAR6", "solar", "B6", 0.0, 0.0, 8.4, 40, "solar"),
        renewable("SOLAR8", "solar", "B8", 0.0, 0.0, 8.4, 40, "solar"),
    ];
    let mut st = vec![StorageUnit {
        id: "HYD3".into(),
        tech: "hydro".into(),
        bus: "B3".into(),
        unit_size: 0.6,
        energy_to_power: 8.0,
        eff_charge: 0.85,
        eff_discharge: 0.85,
        min_soc_frac: 0.1,
        max_soc_frac: 1.0,
        inertia: 0.0,
        c_om: 0.0,
        c_inv: 0.0,
        existing: 1,
        build_max: 0,
        initial_reserve: 2.4,
        is_hydro: true,
        q_min: -0.3,
        q_max: 0.3,
    }];
    for b in [1, 4, 5, 6] {
        st.push(bess(&format!("BESS{b}"), &format!("B{b}"), 0.0, 4.0, 3.2, 20));
        st.push(bess(&format!("BESSVI{b}"), &format!("B{b}"), 10.0, 10.0, 3.4, 20));
    }
    let facts = ids
        .iter()
        .map(|b| FactsDevice {
            id: format!("F{}", &b[1..]),
            bus: b.clone(),
            q_min: -0.1,
            q_max: 0.1,
            c_inv: 2.0,
            build_max: 3,
        })
        .collect();

    // seven day types: winter/spring/summer/autumn weekdays plus three weekend types
    let n_rp = 7;
    let mut rng = ChaCha8Rng::seed_from_u64(2021);
    let mut demand = BTreeMap::new();
    let mut profiles = BTreeMap::new();
    let mut inflows = BTreeMap::new();
    for rp in 1..=n_rp {
        let season = (rp - 1) % 4;
        let level = [3.0, 2.5, 2.8, 2.6][season] * if rp > 4 { 0.85 } else { 1.0 };
        let solar_peak = [0.45, 0.7, 0.85, 0.55][season];
        let wind_mean: f64 = [0.5, 0.4, 0.3, 0.45][season];
        let mut wind = wind_mean;
        for k in 1..=24 {
            let h = (k - 1) as f64;
            let shape = 0.7 + 0.2 * (PI * (h - 4.0) / 12.0).sin().max(-0.5) + 0.1 * (2.0 * PI * (h - 18.0) / 24.0).cos();
            let total = level * shape;
            for (b, s) in ids.iter().zip(share) {
                let d = (total * s * 1e6).round() / 1e6;
                demand.insert((rp, k, b.clone()), (d, (0.2 * d * 1e6).round() / 1e6));
            }
            wind = (wind + rng.random_range(-0.08..0.08) + 0.1 * (wind_mean - wind)).clamp(0.05, 0.95);
            profiles.insert(("wind".to_string(), rp, k), (wind * 1e4).round() / 1e4);
            profiles.insert(("solar".to_string(), rp, k), (solar_shape(k - 1, solar_peak) * 1e4).round() / 1e4);
            inflows.insert(("HYD3".to_string(), rp, k), 0.05);
        }
    }
    // day → representative period: season by quarter, weekends to types 5–7
    let assignments: Vec<usize> = (0..364)
        .map(|d| {
            let season = (d / 91).min(3);
            if d % 7 >= 5 {
                5 + season.min(2)
            } else {
                season + 1
            }
        })
        .collect();

    SystemData {
        buses,
        lines,
        thermal: th,
        renewable: re,
        storage: st,
        facts,
        demand,
        profiles,
        inflows,
        scalars: Scalars {
            base_power: 100.0,
            max_angle_diff: 0.5,
            reserve_up: 0.05,
            reserve_down: 0.02,
            reserve_cost_up: 0.2,
            reserve_cost_down: 0.2,
            ens_cost: 10.0,
            kappa: 0.33,
        },
        inertia: InertiaConfig::default(),
        layout: TemporalLayout::Representative {
            steps_per_rp: 24,
            moving_window: 168,
            assignments,
        },
    }
}

/// Three buses, eight hours: one synchronous candidate with a positive
/// minimum output, a virtual-inertia wind candidate, a plain solar
/// candidate, a plain battery and cheap FACTS. Renewables and storage carry
/// no reactive capability, so a thermal-free system needs FACTS.
fn mini3() -> SystemData {
    let buses = vec![bus("N1", true, 0.0), bus("N2", false, 0.0), bus("N3", false, 0.0)];
    let lines = vec![
        line("N1", "N2", 0.0, 0.08, 0.0, 600.0),
        line("N2", "N3", 0.0, 0.10, 0.0, 600.0),
        line("N1", "N3", 0.0, 0.12, 0.0, 600.0),
    ];
    let mut gas = thermal("GAS1", "ccgt", "N1", (0.08, 0.4), 0.3, 4.0, 0.003, 40.0, 0.0005, 0.2, 0);
    gas.ramp_up = 0.4;
    gas.ramp_down = 0.4;
    let mut wind = renewable("WINDVI2", "wind_vi", "N2", 3.0, 1.0, 3.0, 8, "wind");
    wind.unit_size = 0.05;
    let mut solar = renewable("SOLAR3", "solar", "N3", 0.0, 0.0, 0.6, 16, "solar");
    solar.unit_size = 0.05;
    let mut batt = bess("BESS3", "N3", 0.0, 1.0, 0.5, 6);
    batt.unit_size = 0.05;
    let facts = (1..=3)
        .map(|i| FactsDevice {
            id: format!("F{i}"),
            bus: format!("N{i}"),
            q_min: -0.05,
            q_max: 0.05,
            c_inv: 0.001,
            build_max: 2,
        })
        .collect();

    let hours = 8;
    let mut demand = BTreeMap::new();
    let mut profiles = BTreeMap::new();
    let load = [0.16, 0.15, 0.17, 0.2, 0.22, 0.21, 0.19, 0.18];
    let wind_av = [0.6, 0.55, 0.5, 0.4, 0.35, 0.45, 0.5, 0.6];
    let solar_av = [0.0, 0.1, 0.4, 0.8, 0.9, 0.6, 0.2, 0.0];
    for k in 1..=hours {
        let d = load[k - 1];
        for (b, s) in [("N1", 0.3), ("N2", 0.2), ("N3", 0.5)] {
            let p: f64 = d * s;
            demand.insert((1, k, b.to_string()), ((p * 1e6).round() / 1e6, (0.25 * p * 1e6).round() / 1e6));
        }
        profiles.insert(("wind".to_string(), 1, k), wind_av[k - 1]);
        profiles.insert(("solar".to_string(), 1, k), solar_av[k - 1]);
    }

    SystemData {
        buses,
        lines,
        thermal: vec![gas],
        renewable: vec![wind, solar],
        storage: vec![batt],
        facts,
        demand,
        profiles,
        inflows: BTreeMap::new(),
        scalars: Scalars {
            base_power: 100.0,
            max_angle_diff: 0.5,
            reserve_up: 0.0,
            reserve_down: 0.0,
            reserve_cost_up: 0.0,
            reserve_cost_down: 0.0,
            ens_cost: 10.0,
            kappa: 0.0,
        },
        inertia: InertiaConfig {
            disturbance: 0.05,
            ..InertiaConfig::default()
        },
        layout: TemporalLayout::Hourly {
            hours,
            moving_window: hours,
        },
    }
}

fn main() -> gep_core::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    for (name, sys) in [("nine_bus", nine_bus()), ("mini3", mini3())] {
        sys.validate()?;
        write_system(&sys, root.join(name))?;
        println!("{name}: {} buses, {} lines", sys.buses.len(), sys.lines.len());
    }
    Ok(())
}
