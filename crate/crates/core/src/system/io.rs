//! Dataset directory reader/writer.
//!
//! Every CSV starts with a `# units: ...` comment line followed by a header
//! row. `system.toml` holds the scalars, the temporal layout and the inertia
//! settings.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::*;

const BUSES: &str = "buses.csv";
const LINES: &str = "lines.csv";
const THERMAL: &str = "thermal.csv";
const RENEWABLE: &str = "renewable.csv";
const STORAGE: &str = "storage.csv";
const FACTS: &str = "facts.csv";
const DEMAND: &str = "demand.csv";
const PROFILES: &str = "profiles.csv";
const INFLOWS: &str = "inflows.csv";
const DISTURBANCE: &str = "disturbance.csv";
const ASSIGNMENTS: &str = "assignments.csv";
const SYSTEM: &str = "system.toml";

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("expected 0/1, got {other:?}"))),
    }
}

fn write_flag<S: Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

fn one() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct BusRow {
    id: String,
    g_shunt: f64,
    b_shunt: f64,
    #[serde(default)]
    reactive_ratio: f64,
    v_min: f64,
    v_max: f64,
    #[serde(deserialize_with = "flag", serialize_with = "write_flag")]
    is_slack: bool,
}

#[derive(Serialize, Deserialize)]
struct LineRow {
    from_bus: String,
    to_bus: String,
    circuit: String,
    g: f64,
    b: f64,
    bc: f64,
    flow_limit: f64,
    apparent_limit: f64,
    reactance: f64,
}

#[derive(Serialize, Deserialize)]
struct ThermalRow {
    id: String,
    tech: String,
    bus: String,
    p_min: f64,
    p_max: f64,
    q_min: f64,
    q_max: f64,
    inertia: f64,
    c_startup: f64,
    c_commit: f64,
    c_var: f64,
    c_inv: f64,
    ramp_up: f64,
    ramp_down: f64,
    existing: u32,
    build_max: u32,
}

#[derive(Serialize, Deserialize)]
struct RenewableRow {
    id: String,
    tech: String,
    bus: String,
    unit_size: f64,
    inertia: f64,
    c_om: f64,
    c_inv: f64,
    existing: u32,
    build_max: u32,
    profile_key: String,
    #[serde(default)]
    q_min: f64,
    #[serde(default)]
    q_max: f64,
}

#[derive(Serialize, Deserialize)]
struct StorageRow {
    id: String,
    tech: String,
    bus: String,
    unit_size: f64,
    energy_to_power: f64,
    eff_charge: f64,
    eff_discharge: f64,
    min_soc_frac: f64,
    #[serde(default = "one")]
    max_soc_frac: f64,
    inertia: f64,
    c_om: f64,
    c_inv: f64,
    existing: u32,
    build_max: u32,
    initial_reserve: f64,
    #[serde(deserialize_with = "flag", serialize_with = "write_flag")]
    is_hydro: bool,
    #[serde(default)]
    q_min: f64,
    #[serde(default)]
    q_max: f64,
}

#[derive(Serialize, Deserialize)]
struct FactsRow {
    id: String,
    bus: String,
    q_min: f64,
    q_max: f64,
    c_inv: f64,
    build_max: u32,
}

#[derive(Serialize, Deserialize)]
struct DemandRow {
    rp: usize,
    k: usize,
    bus: String,
    #[serde(rename = "dP")]
    dp: f64,
    #[serde(rename = "dQ")]
    dq: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    rp: usize,
    k: usize,
    profile_key: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct InflowRow {
    rp: usize,
    k: usize,
    storage: String,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct DisturbanceRow {
    rp: usize,
    k: usize,
    #[serde(rename = "dP_pu")]
    dp: f64,
}

#[derive(Serialize, Deserialize)]
struct AssignmentRow {
    day: usize,
    rp: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    base_power_mva: f64,
    max_angle_diff_rad: f64,
    reserve_up: f64,
    reserve_down: f64,
    reserve_cost_up: f64,
    reserve_cost_down: f64,
    ens_cost_meur_per_gwh: f64,
    #[serde(default)]
    kappa: f64,
    temporal: TemporalFile,
    #[serde(default)]
    inertia: InertiaConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemporalFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hours: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps_per_rp: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moving_window: Option<usize>,
}

fn read_csv<T: DeserializeOwned>(root: &Path, file: &str, required: bool) -> Result<Option<Vec<T>>> {
    let path = root.join(file);
    if !path.exists() {
        if required {
            return Err(Error::load(file, "missing file"));
        }
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec.map_err(|e| Error::load(file, e.to_string()))?);
    }
    Ok(Some(out))
}

fn write_csv<T: Serialize>(root: &Path, file: &str, units: &str, header: &[&str], rows: &[T]) -> Result<()> {
    let path = root.join(file);
    let mut buf = Vec::new();
    writeln!(buf, "# units: {units}").expect("write to Vec");
    {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut buf);
        w.write_record(header).map_err(|e| Error::load(file, e.to_string()))?;
        for r in rows {
            w.serialize(r).map_err(|e| Error::load(file, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    fs::write(&path, buf).map_err(|e| Error::io(&path, e))
}

/// Load and validate a dataset directory.
pub fn load_system(root: impl AsRef<Path>) -> Result<SystemData> {
    let root = root.as_ref();
    let sys_path = root.join(SYSTEM);
    if !sys_path.exists() {
        return Err(Error::load(SYSTEM, "missing file"));
    }
    let text = fs::read_to_string(&sys_path).map_err(|e| Error::io(&sys_path, e))?;
    let sys: SystemFile = toml::from_str(&text).map_err(|e| Error::load(SYSTEM, e.message().to_string()))?;

    let buses = read_csv::<BusRow>(root, BUSES, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| Bus {
            id: r.id,
            g_shunt: r.g_shunt,
            b_shunt: r.b_shunt,
            reactive_ratio: r.reactive_ratio,
            v_min: r.v_min,
            v_max: r.v_max,
            is_slack: r.is_slack,
        })
        .collect();
    let lines = read_csv::<LineRow>(root, LINES, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| Line {
            from: r.from_bus,
            to: r.to_bus,
            circuit: r.circuit,
            conductance: r.g,
            susceptance: r.b,
            charging: r.bc,
            flow_limit: r.flow_limit,
            apparent_limit: r.apparent_limit,
            reactance: r.reactance,
        })
        .collect();
    let thermal = read_csv::<ThermalRow>(root, THERMAL, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| ThermalUnit {
            id: r.id,
            tech: r.tech,
            bus: r.bus,
            p_min: r.p_min,
            p_max: r.p_max,
            q_min: r.q_min,
            q_max: r.q_max,
            inertia: r.inertia,
            c_startup: r.c_startup,
            c_commit: r.c_commit,
            c_var: r.c_var,
            c_inv: r.c_inv,
            ramp_up: r.ramp_up,
            ramp_down: r.ramp_down,
            existing: r.existing,
            build_max: r.build_max,
        })
        .collect();
    let renewable = read_csv::<RenewableRow>(root, RENEWABLE, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| RenewableUnit {
            id: r.id,
            tech: r.tech,
            bus: r.bus,
            unit_size: r.unit_size,
            inertia: r.inertia,
            c_om: r.c_om,
            c_inv: r.c_inv,
            existing: r.existing,
            build_max: r.build_max,
            profile_key: r.profile_key,
            q_min: r.q_min,
            q_max: r.q_max,
        })
        .collect();
    let storage = read_csv::<StorageRow>(root, STORAGE, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| StorageUnit {
            id: r.id,
            tech: r.tech,
            bus: r.bus,
            unit_size: r.unit_size,
            energy_to_power: r.energy_to_power,
            eff_charge: r.eff_charge,
            eff_discharge: r.eff_discharge,
            min_soc_frac: r.min_soc_frac,
            max_soc_frac: r.max_soc_frac,
            inertia: r.inertia,
            c_om: r.c_om,
            c_inv: r.c_inv,
            existing: r.existing,
            build_max: r.build_max,
            initial_reserve: r.initial_reserve,
            is_hydro: r.is_hydro,
            q_min: r.q_min,
            q_max: r.q_max,
        })
        .collect();
    let facts = read_csv::<FactsRow>(root, FACTS, true)?
        .unwrap_or_default()
        .into_iter()
        .map(|r| FactsDevice {
            id: r.id,
            bus: r.bus,
            q_min: r.q_min,
            q_max: r.q_max,
            c_inv: r.c_inv,
            build_max: r.build_max,
        })
        .collect();

    let mut demand = BTreeMap::new();
    for r in read_csv::<DemandRow>(root, DEMAND, true)?.unwrap_or_default() {
        if demand.insert((r.rp, r.k, r.bus.clone()), (r.dp, r.dq)).is_some() {
            return Err(Error::validation(
                format!("demand rp {}, k {}, bus {}", r.rp, r.k, r.bus),
                "duplicate entry",
            ));
        }
    }
    let mut profiles = BTreeMap::new();
    for r in read_csv::<ProfileRow>(root, PROFILES, true)?.unwrap_or_default() {
        if profiles.insert((r.profile_key.clone(), r.rp, r.k), r.value).is_some() {
            return Err(Error::validation(
                format!("profile {} rp {}, k {}", r.profile_key, r.rp, r.k),
                "duplicate entry",
            ));
        }
    }
    let mut inflows = BTreeMap::new();
    for r in read_csv::<InflowRow>(root, INFLOWS, false)?.unwrap_or_default() {
        inflows.insert((r.storage, r.rp, r.k), r.value);
    }

    let mut inertia = sys.inertia;
    for r in read_csv::<DisturbanceRow>(root, DISTURBANCE, false)?.unwrap_or_default() {
        inertia.disturbance_overrides.insert((r.rp, r.k), r.dp);
    }

    let assignments = read_csv::<AssignmentRow>(root, ASSIGNMENTS, false)?;
    let layout = match assignments {
        Some(mut rows) => {
            rows.sort_by_key(|r| r.day);
            for (i, r) in rows.iter().enumerate() {
                if r.day != i + 1 {
                    return Err(Error::load(ASSIGNMENTS, format!("day {} is not assigned", i + 1)));
                }
            }
            let steps = sys
                .temporal
                .steps_per_rp
                .ok_or_else(|| Error::load(SYSTEM, "temporal.steps_per_rp required with assignments.csv"))?;
            TemporalLayout::Representative {
                steps_per_rp: steps,
                moving_window: sys.temporal.moving_window.unwrap_or(steps),
                assignments: rows.iter().map(|r| r.rp).collect(),
            }
        }
        None => {
            let hours = sys
                .temporal
                .hours
                .ok_or_else(|| Error::load(SYSTEM, "temporal.hours required without assignments.csv"))?;
            TemporalLayout::Hourly {
                hours,
                moving_window: sys.temporal.moving_window.unwrap_or(hours),
            }
        }
    };

    let system = SystemData {
        buses,
        lines,
        thermal,
        renewable,
        storage,
        facts,
        demand,
        profiles,
        inflows,
        scalars: Scalars {
            base_power: sys.base_power_mva,
            max_angle_diff: sys.max_angle_diff_rad,
            reserve_up: sys.reserve_up,
            reserve_down: sys.reserve_down,
            reserve_cost_up: sys.reserve_cost_up,
            reserve_cost_down: sys.reserve_cost_down,
            ens_cost: sys.ens_cost_meur_per_gwh,
            kappa: sys.kappa,
        },
        inertia,
        layout,
    };
    system.validate()?;
    Ok(system)
}

/// Write a dataset directory that `load_system` reads back identically.
pub fn write_system(system: &SystemData, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let buses: Vec<BusRow> = system
        .buses
        .iter()
        .map(|b| BusRow {
            id: b.id.clone(),
            g_shunt: b.g_shunt,
            b_shunt: b.b_shunt,
            reactive_ratio: b.reactive_ratio,
            v_min: b.v_min,
            v_max: b.v_max,
            is_slack: b.is_slack,
        })
        .collect();
    write_csv(
        root,
        BUSES,
        "g_shunt,b_shunt pu; reactive_ratio pu; v_min,v_max pu",
        &["id", "g_shunt", "b_shunt", "reactive_ratio", "v_min", "v_max", "is_slack"],
        &buses,
    )?;

    let lines: Vec<LineRow> = system
        .lines
        .iter()
        .map(|l| LineRow {
            from_bus: l.from.clone(),
            to_bus: l.to.clone(),
            circuit: l.circuit.clone(),
            g: l.conductance,
            b: l.susceptance,
            bc: l.charging,
            flow_limit: l.flow_limit,
            apparent_limit: l.apparent_limit,
            reactance: l.reactance,
        })
        .collect();
    write_csv(
        root,
        LINES,
        "g,b,bc,reactance pu; flow_limit GW; apparent_limit MVA",
        &["from_bus", "to_bus", "circuit", "g", "b", "bc", "flow_limit", "apparent_limit", "reactance"],
        &lines,
    )?;

    let thermal: Vec<ThermalRow> = system
        .thermal
        .iter()
        .map(|t| ThermalRow {
            id: t.id.clone(),
            tech: t.tech.clone(),
            bus: t.bus.clone(),
            p_min: t.p_min,
            p_max: t.p_max,
            q_min: t.q_min,
            q_max: t.q_max,
            inertia: t.inertia,
            c_startup: t.c_startup,
            c_commit: t.c_commit,
            c_var: t.c_var,
            c_inv: t.c_inv,
            ramp_up: t.ramp_up,
            ramp_down: t.ramp_down,
            existing: t.existing,
            build_max: t.build_max,
        })
        .collect();
    write_csv(
        root,
        THERMAL,
        "p GW; q GVar; inertia s; c_startup MEUR; c_commit MEUR/h; c_var MEUR/GWh; c_inv MEUR/GW/y; ramps GW",
        &[
            "id", "tech", "bus", "p_min", "p_max", "q_min", "q_max", "inertia", "c_startup", "c_commit", "c_var",
            "c_inv", "ramp_up", "ramp_down", "existing", "build_max",
        ],
        &thermal,
    )?;

    let renewable: Vec<RenewableRow> = system
        .renewable
        .iter()
        .map(|r| RenewableRow {
            id: r.id.clone(),
            tech: r.tech.clone(),
            bus: r.bus.clone(),
            unit_size: r.unit_size,
            inertia: r.inertia,
            c_om: r.c_om,
            c_inv: r.c_inv,
            existing: r.existing,
            build_max: r.build_max,
            profile_key: r.profile_key.clone(),
            q_min: r.q_min,
            q_max: r.q_max,
        })
        .collect();
    write_csv(
        root,
        RENEWABLE,
        "unit_size GW; inertia s; c_om MEUR/GWh; c_inv MEUR/GW/y; q GVar",
        &[
            "id", "tech", "bus", "unit_size", "inertia", "c_om", "c_inv", "existing", "build_max", "profile_key",
            "q_min", "q_max",
        ],
        &renewable,
    )?;

    let storage: Vec<StorageRow> = system
        .storage
        .iter()
        .map(|s| StorageRow {
            id: s.id.clone(),
            tech: s.tech.clone(),
            bus: s.bus.clone(),
            unit_size: s.unit_size,
            energy_to_power: s.energy_to_power,
            eff_charge: s.eff_charge,
            eff_discharge: s.eff_discharge,
            min_soc_frac: s.min_soc_frac,
            max_soc_frac: s.max_soc_frac,
            inertia: s.inertia,
            c_om: s.c_om,
            c_inv: s.c_inv,
            existing: s.existing,
            build_max: s.build_max,
            initial_reserve: s.initial_reserve,
            is_hydro: s.is_hydro,
            q_min: s.q_min,
            q_max: s.q_max,
        })
        .collect();
    write_csv(
        root,
        STORAGE,
        "unit_size GW; energy_to_power h; eff fraction; soc fractions; inertia s; c_om MEUR/GWh; c_inv MEUR/GW/y; initial_reserve GWh; q GVar",
        &[
            "id", "tech", "bus", "unit_size", "energy_to_power", "eff_charge", "eff_discharge", "min_soc_frac",
            "max_soc_frac", "inertia", "c_om", "c_inv", "existing", "build_max", "initial_reserve", "is_hydro",
            "q_min", "q_max",
        ],
        &storage,
    )?;

    let facts: Vec<FactsRow> = system
        .facts
        .iter()
        .map(|f| FactsRow {
            id: f.id.clone(),
            bus: f.bus.clone(),
            q_min: f.q_min,
            q_max: f.q_max,
            c_inv: f.c_inv,
            build_max: f.build_max,
        })
        .collect();
    write_csv(
        root,
        FACTS,
        "q GVar; c_inv MEUR/device/y",
        &["id", "bus", "q_min", "q_max", "c_inv", "build_max"],
        &facts,
    )?;

    let demand: Vec<DemandRow> = system
        .demand
        .iter()
        .map(|((rp, k, bus), (dp, dq))| DemandRow {
            rp: *rp,
            k: *k,
            bus: bus.clone(),
            dp: *dp,
            dq: *dq,
        })
        .collect();
    write_csv(root, DEMAND, "dP GW; dQ GVar", &["rp", "k", "bus", "dP", "dQ"], &demand)?;

    let profiles: Vec<ProfileRow> = system
        .profiles
        .iter()
        .map(|((key, rp, k), v)| ProfileRow {
            rp: *rp,
            k: *k,
            profile_key: key.clone(),
            value: *v,
        })
        .collect();
    write_csv(root, PROFILES, "value fraction", &["rp", "k", "profile_key", "value"], &profiles)?;

    if !system.inflows.is_empty() {
        let inflows: Vec<InflowRow> = system
            .inflows
            .iter()
            .map(|((s, rp, k), v)| InflowRow {
                rp: *rp,
                k: *k,
                storage: s.clone(),
                value: *v,
            })
            .collect();
        write_csv(root, INFLOWS, "value GWh per step", &["rp", "k", "storage", "value"], &inflows)?;
    }

    if !system.inertia.disturbance_overrides.is_empty() {
        let rows: Vec<DisturbanceRow> = system
            .inertia
            .disturbance_overrides
            .iter()
            .map(|(&(rp, k), &dp)| DisturbanceRow { rp, k, dp })
            .collect();
        write_csv(root, DISTURBANCE, "dP_pu per-unit", &["rp", "k", "dP_pu"], &rows)?;
    }

    let temporal = match &system.layout {
        TemporalLayout::Hourly { hours, moving_window } => TemporalFile {
            hours: Some(*hours),
            steps_per_rp: None,
            moving_window: Some(*moving_window),
        },
        TemporalLayout::Representative {
            steps_per_rp,
            moving_window,
            assignments,
        } => {
            let rows: Vec<AssignmentRow> = assignments
                .iter()
                .enumerate()
                .map(|(i, &rp)| AssignmentRow { day: i + 1, rp })
                .collect();
            write_csv(root, ASSIGNMENTS, "day and rp are 1-based indices", &["day", "rp"], &rows)?;
            TemporalFile {
                hours: None,
                steps_per_rp: Some(*steps_per_rp),
                moving_window: Some(*moving_window),
            }
        }
    };

    let sc = &system.scalars;
    let file = SystemFile {
        base_power_mva: sc.base_power,
        max_angle_diff_rad: sc.max_angle_diff,
        reserve_up: sc.reserve_up,
        reserve_down: sc.reserve_down,
        reserve_cost_up: sc.reserve_cost_up,
        reserve_cost_down: sc.reserve_cost_down,
        ens_cost_meur_per_gwh: sc.ens_cost,
        kappa: sc.kappa,
        temporal,
        inertia: system.inertia.clone(),
    };
    let text = toml::to_string(&file).map_err(|e| Error::Format(e.to_string()))?;
    let path = root.join(SYSTEM);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn round_trip_small_system() {
        let mut s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B2", 0.1)], 2);
        s.thermal.push(thermal("T1", "B1", 0.1, 0.5));
        s.demand.insert((1, 1, "B2".into()), (0.3, 0.05));
        s.demand.insert((1, 2, "B2".into()), (0.1 + 0.2, 0.0));
        s.inertia.disturbance_overrides.insert((1, 2), 0.05);
        let dir = tempfile::tempdir().unwrap();
        write_system(&s, dir.path()).unwrap();
        let back = load_system(dir.path()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_file_is_named() {
        let s = system(vec![bus("B1", true)], vec![], 1);
        let dir = tempfile::tempdir().unwrap();
        write_system(&s, dir.path()).unwrap();
        fs::remove_file(dir.path().join(LINES)).unwrap();
        let err = load_system(dir.path()).unwrap_err().to_string();
        assert!(err.contains("lines.csv"), "{err}");
    }

    #[test]
    fn unit_header_comment_written() {
        let s = system(vec![bus("B1", true)], vec![], 1);
        let dir = tempfile::tempdir().unwrap();
        write_system(&s, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(THERMAL)).unwrap();
        assert!(text.starts_with("# units:"));
    }
}
