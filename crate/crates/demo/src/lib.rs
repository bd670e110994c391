//! Browser demo: DC flows from shift factors, the inertia mix of a unit
//! fleet, and the lifted AC variables of a Newton power flow.
//!
//! Networks are plain text, one line per branch: `from to x [r] [bc]`.
//! The first bus mentioned is the slack. Injections are `bus p [q]` in p.u.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use gep_core::inertia::{inertia_of, SyncInput, VirtualInput};
use gep_core::oracle::{ac_operating_point, newton_power_flow};
use gep_core::socp::{cone_residual, recover_voltages};
use gep_core::system::{compute_isf, Bus, InertiaConfig, Line, Scalars, SystemData, TemporalLayout, VirtualGainReading};
use gep_core::temporal::StepRef;

fn number(tok: &str, line: usize) -> Result<f64, String> {
    tok.parse().map_err(|_| format!("line {line}: '{tok}' is not a number"))
}

pub fn parse_network(text: &str) -> Result<SystemData, String> {
    let mut buses: Vec<String> = Vec::new();
    let mut lines = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let t: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        if t.len() < 3 {
            return Err(format!("line {}: expected 'from to x [r] [bc]'", n + 1));
        }
        let x = number(t[2], n + 1)?;
        let r = t.get(3).map(|v| number(v, n + 1)).transpose()?.unwrap_or(0.0);
        let bc = t.get(4).map(|v| number(v, n + 1)).transpose()?.unwrap_or(0.0);
        if x <= 0.0 {
            return Err(format!("line {}: reactance must be positive", n + 1));
        }
        for b in &t[..2] {
            if !buses.iter().any(|x| x == b) {
                buses.push(b.to_string());
            }
        }
        let circuit = format!("c{}", lines.iter().filter(|l: &&Line| l.from == t[0] && l.to == t[1]).count() + 1);
        let z2 = r * r + x * x;
        lines.push(Line {
            from: t[0].into(),
            to: t[1].into(),
            circuit,
            conductance: r / z2,
            susceptance: -x / z2,
            charging: bc,
            flow_limit: 1e3,
            apparent_limit: 1e6,
            reactance: x,
        });
    }
    if lines.is_empty() {
        return Err("no lines".into());
    }
    let system = SystemData {
        buses: buses
            .iter()
            .enumerate()
            .map(|(i, id)| Bus {
                id: id.clone(),
                g_shunt: 0.0,
                b_shunt: 0.0,
                reactive_ratio: 0.0,
                v_min: 0.0,
                v_max: 2.0,
                is_slack: i == 0,
            })
            .collect(),
        lines,
        thermal: vec![],
        renewable: vec![],
        storage: vec![],
        facts: vec![],
        demand: BTreeMap::new(),
        profiles: BTreeMap::new(),
        inflows: BTreeMap::new(),
        scalars: Scalars {
            base_power: 100.0,
            max_angle_diff: std::f64::consts::PI,
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
    Ok(system)
}

/// Per-bus (p, q) in system bus order; unlisted buses get zero.
pub fn parse_injections(system: &SystemData, text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = vec![(0.0, 0.0); system.buses.len()];
    for (n, raw) in text.lines().enumerate() {
        let t: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        let i = system.bus_index(t[0]).ok_or_else(|| format!("line {}: unknown bus '{}'", n + 1, t[0]))?;
        let p = t.get(1).map(|v| number(v, n + 1)).transpose()?.unwrap_or(0.0);
        let q = t.get(2).map(|v| number(v, n + 1)).transpose()?.unwrap_or(0.0);
        out[i] = (p, q);
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct DcFlows {
    pub buses: Vec<String>,
    pub lines: Vec<String>,
    /// Rows are lines, columns non-slack buses.
    pub isf: Vec<Vec<f64>>,
    pub flows: Vec<f64>,
    /// Injection picked up by the slack.
    pub slack_injection: f64,
}

pub fn dc_flows(network: &str, injections: &str) -> Result<DcFlows, String> {
    let system = parse_network(network)?;
    let inj = parse_injections(&system, injections)?;
    let isf = compute_isf(&system).map_err(|e| e.to_string())?;
    let p: Vec<f64> = inj.iter().map(|&(p, _)| p).collect();
    let flows = isf.flows(&system, &p);
    let slack = system.bus_index(&system.slack().id).unwrap_or(0);
    let slack_injection = -p.iter().enumerate().filter(|&(i, _)| i != slack).map(|(_, v)| v).sum::<f64>();
    Ok(DcFlows {
        buses: isf.buses.clone(),
        lines: isf.lines.clone(),
        isf: (0..isf.matrix.nrows()).map(|r| isf.matrix.row(r).iter().copied().collect()).collect(),
        flows,
        slack_injection,
    })
}

#[derive(Deserialize)]
pub struct SyncSpec {
    pub p_max: f64,
    pub h: f64,
    #[serde(default = "yes")]
    pub on: bool,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
pub struct VirtualSpec {
    pub size: f64,
    pub h: f64,
    pub built: f64,
    #[serde(default)]
    pub existing: f64,
    #[serde(default = "one")]
    pub availability: f64,
    pub output: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
pub struct Fleet {
    #[serde(default)]
    pub sync: Vec<SyncSpec>,
    #[serde(default)]
    pub virt: Vec<VirtualSpec>,
    #[serde(default)]
    pub config: Option<InertiaConfig>,
    #[serde(default)]
    pub reading: VirtualGainReading,
}

#[derive(Serialize)]
pub struct InertiaMix {
    pub k_sync: Vec<f64>,
    pub k_virtual: Vec<f64>,
    pub m_sg: f64,
    pub m_vi: f64,
    pub m: f64,
    pub required: f64,
    /// Frequency derivative after the disturbance, Hz/s.
    pub rocof: f64,
    pub ok: bool,
}

pub fn inertia_mix(fleet_json: &str) -> Result<InertiaMix, String> {
    let fleet: Fleet = serde_json::from_str(fleet_json).map_err(|e| e.to_string())?;
    let config = fleet.config.unwrap_or_default();
    config.validate().map_err(|e| e.to_string())?;
    let sync: Vec<SyncInput> = fleet
        .sync
        .iter()
        .map(|s| SyncInput {
            p_max: s.p_max,
            inertia: s.h,
            committed: s.on,
        })
        .collect();
    let virt: Vec<VirtualInput> = fleet
        .virt
        .iter()
        .map(|v| VirtualInput {
            unit_size: v.size,
            inertia: v.h,
            built: v.built,
            existing: v.existing,
            availability: v.availability,
            output: v.output,
        })
        .collect();
    let pt = inertia_of(&sync, &virt, fleet.reading);
    let m = pt.m.min(config.inertia_cap);
    let required = config.required_inertia(1, 1);
    let rocof = if m > 0.0 { config.disturbance * config.f_base / m } else { f64::INFINITY };
    Ok(InertiaMix {
        k_sync: pt.k_sync,
        k_virtual: pt.k_virtual,
        m_sg: pt.m_sg,
        m_vi: pt.m_vi + 0.0,
        m,
        required,
        rocof,
        ok: m >= required,
    })
}

#[derive(Serialize)]
pub struct AcBus {
    pub bus: String,
    pub magnitude: f64,
    pub angle: f64,
    pub recovered_magnitude: f64,
    pub recovered_angle: f64,
}

#[derive(Serialize)]
pub struct AcPair {
    pub from: String,
    pub to: String,
    pub cij: f64,
    pub sij: f64,
    pub residual: f64,
}

#[derive(Serialize)]
pub struct AcLift {
    pub iterations: usize,
    pub buses: Vec<AcBus>,
    pub pairs: Vec<AcPair>,
    pub cycle_error: f64,
}

/// Solve the AC power flow, lift it to (cii, cij, sij), report every cone
/// residual, then recover magnitudes and angles from the lifted values alone.
pub fn ac_lift(network: &str, injections: &str, slack_voltage: f64) -> Result<AcLift, String> {
    let system = parse_network(network)?;
    let inj = parse_injections(&system, injections)?;
    let pf = newton_power_flow(&system, slack_voltage, &inj).map_err(|e| e.to_string())?;
    let s = StepRef::new(1, 1);
    let point = ac_operating_point(&system, &pf, s);
    let temporal = system.temporal_structure().map_err(|e| e.to_string())?;
    let rec = recover_voltages(&point.values, &system, &temporal, 1e-9).map_err(|e| e.to_string())?;
    let residuals = cone_residual(&point.values, &system, &temporal);
    let pairs = residuals
        .iter()
        .zip(&rec.pairs)
        .map(|(r, a)| {
            let mag = |id: &str| rec.buses.iter().find(|b| b.bus == id).map_or(0.0, |b| b.magnitude);
            let vv = mag(&r.from) * mag(&r.to);
            AcPair {
                from: r.from.clone(),
                to: r.to.clone(),
                cij: vv * a.angle.cos(),
                sij: vv * a.angle.sin(),
                residual: r.residual,
            }
        })
        .collect();
    Ok(AcLift {
        iterations: pf.iterations,
        buses: pf
            .buses
            .iter()
            .zip(&rec.buses)
            .map(|(b, r)| AcBus {
                bus: b.id.clone(),
                magnitude: b.magnitude,
                angle: b.angle,
                recovered_magnitude: r.magnitude,
                recovered_angle: r.angle,
            })
            .collect(),
        pairs,
        cycle_error: rec.cycle_error.iter().map(|c| c.2).fold(0.0, f64::max),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = dcFlows)]
pub fn js_dc_flows(network: &str, injections: &str) -> Result<String, JsError> {
    to_js(dc_flows(network, injections))
}

#[wasm_bindgen(js_name = inertiaMix)]
pub fn js_inertia_mix(fleet_json: &str) -> Result<String, JsError> {
    to_js(inertia_mix(fleet_json))
}

#[wasm_bindgen(js_name = acLift)]
pub fn js_ac_lift(network: &str, injections: &str, slack_voltage: f64) -> Result<String, JsError> {
    to_js(ac_lift(network, injections, slack_voltage))
}
