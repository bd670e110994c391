use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{at, build_general_bounds, names};
use crate::error::{Error, Result};
use crate::model::{family_of, ModelInstance};
use crate::socp::{build_socp, bus_pairs, cii_name, cij_name, sij_name, SocpOptions};
use crate::system::{InertiaConfig, Scalars, SystemData, TemporalLayout};
use crate::temporal::StepRef;

use super::{bus, line};

type C = Complex<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlowBus {
    pub id: String,
    pub magnitude: f64,
    pub angle: f64,
    /// Net injection, p.u.
    pub p: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlow {
    pub buses: Vec<PowerFlowBus>,
    pub iterations: usize,
}

fn ybus(system: &SystemData) -> DMatrix<C> {
    let n = system.buses.len();
    let mut y = DMatrix::from_element(n, n, C::new(0.0, 0.0));
    for (i, b) in system.buses.iter().enumerate() {
        y[(i, i)] += C::new(b.g_shunt, b.b_shunt);
    }
    for l in &system.lines {
        let i = system.bus_index(&l.from).expect("validated");
        let j = system.bus_index(&l.to).expect("validated");
        let ys = C::new(l.conductance, l.susceptance);
        let sh = C::new(0.0, l.charging / 2.0);
        y[(i, i)] += ys + sh;
        y[(j, j)] += ys + sh;
        y[(i, j)] -= ys;
        y[(j, i)] -= ys;
    }
    y
}

fn injections(y: &DMatrix<C>, v: &[f64], th: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let (g, b) = (y[(i, j)].re, y[(i, j)].im);
            let (s, c) = (th[i] - th[j]).sin_cos();
            p[i] += v[i] * v[j] * (g * c + b * s);
            q[i] += v[i] * v[j] * (g * s - b * c);
        }
    }
    (p, q)
}

/// Polar Newton–Raphson power flow. The slack bus holds `slack_voltage` at
/// angle zero; every other bus is PQ with the given net injection (p.u.).
pub fn newton_power_flow(system: &SystemData, slack_voltage: f64, spec: &[(f64, f64)]) -> Result<PowerFlow> {
    let n = system.buses.len();
    if spec.len() != n {
        return Err(Error::Case(format!("{} injections for {n} buses", spec.len())));
    }
    let slack = system.buses.iter().position(|b| b.is_slack).ok_or_else(|| Error::Case("no slack bus".into()))?;
    let pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = pq.len();
    let y = ybus(system);
    let mut v = vec![1.0; n];
    v[slack] = slack_voltage;
    let mut th = vec![0.0; n];

    for it in 0..30 {
        let (p, q) = injections(&y, &v, &th);
        let mut f = DVector::zeros(2 * m);
        for (r, &i) in pq.iter().enumerate() {
            f[r] = p[i] - spec[i].0;
            f[m + r] = q[i] - spec[i].1;
        }
        if f.amax() < 1e-12 {
            let buses = system
                .buses
                .iter()
                .enumerate()
                .map(|(i, b)| PowerFlowBus {
                    id: b.id.clone(),
                    magnitude: v[i],
                    angle: th[i],
                    p: p[i],
                    q: q[i],
                })
                .collect();
            return Ok(PowerFlow { buses, iterations: it });
        }
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for (r, &i) in pq.iter().enumerate() {
            for (c, &j) in pq.iter().enumerate() {
                let (g, b) = (y[(i, j)].re, y[(i, j)].im);
                if i == j {
                    jac[(r, c)] = -q[i] - b * v[i] * v[i];
                    jac[(r, m + c)] = p[i] / v[i] + g * v[i];
                    jac[(m + r, c)] = p[i] - g * v[i] * v[i];
                    jac[(m + r, m + c)] = q[i] / v[i] - b * v[i];
                } else {
                    let (s, co) = (th[i] - th[j]).sin_cos();
                    jac[(r, c)] = v[i] * v[j] * (g * s - b * co);
                    jac[(r, m + c)] = v[i] * (g * co + b * s);
                    jac[(m + r, c)] = -v[i] * v[j] * (g * co + b * s);
                    jac[(m + r, m + c)] = v[i] * (g * s - b * co);
                }
            }
        }
        let dx = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Case("singular power-flow Jacobian".into()))?;
        for (r, &i) in pq.iter().enumerate() {
            th[i] += dx[r];
            v[i] += dx[m + r];
        }
        if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            break;
        }
    }
    Err(Error::Case("power flow did not converge".into()))
}

/// Lifted variables of a power-flow solution at one step: squared
/// magnitudes, pair products and the directed line flows (GW, GVAr).
#[derive(Clone, Debug, PartialEq)]
pub struct AcPoint {
    pub values: BTreeMap<String, f64>,
}

pub fn ac_operating_point(system: &SystemData, pf: &PowerFlow, s: StepRef) -> AcPoint {
    let sb = system.scalars.base_power_gva();
    let volt: Vec<C> = pf.buses.iter().map(|b| C::from_polar(b.magnitude, b.angle)).collect();
    let mut values = BTreeMap::new();
    for (b, v) in system.buses.iter().zip(&volt) {
        values.insert(cii_name(s, &b.id), v.norm_sqr());
    }
    for (a, b) in bus_pairs(system) {
        // Va·conj(Vb) = VaVb (cos(θa−θb) + j sin(θa−θb))
        let w = volt[a] * volt[b].conj();
        let (na, nb) = (&system.buses[a].id, &system.buses[b].id);
        values.insert(cij_name(s, na, nb), w.re);
        values.insert(sij_name(s, na, nb), -w.im);
    }
    for l in &system.lines {
        let i = system.bus_index(&l.from).expect("validated");
        let j = system.bus_index(&l.to).expect("validated");
        let ys = C::new(l.conductance, l.susceptance);
        let sh = C::new(0.0, l.charging / 2.0);
        for (a, b, from, to) in [(i, j, &l.from, &l.to), (j, i, &l.to, &l.from)] {
            let cur = (ys + sh) * volt[a] - ys * volt[b];
            let flow = volt[a] * cur.conj() * sb;
            values.insert(at(names::FP, s, &[from, to, &l.circuit]), flow.re);
            values.insert(at(names::FQ, s, &[from, to, &l.circuit]), flow.im);
        }
    }
    AcPoint { values }
}

/// How an AC point sits against the relaxation built for its system.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationCheck {
    /// Worst violation of the flow-definition and angle rows.
    pub row_violation: f64,
    pub worst_row: String,
    /// Smallest `cii·cjj − cij² − sij²`.
    pub min_cone_slack: f64,
    /// Worst violation of the lifted variables' boxes.
    pub bound_violation: f64,
}

pub fn check_relaxation(system: &SystemData, point: &AcPoint) -> Result<RelaxationCheck> {
    let temporal = system.temporal_structure()?;
    let mut m = ModelInstance::new();
    build_general_bounds(system, &temporal, &mut m)?;
    build_socp(system, &temporal, &mut m, SocpOptions::default())?;
    let x = m.dense_values(&point.values);
    let mut out = RelaxationCheck {
        row_violation: 0.0,
        worst_row: String::new(),
        min_cone_slack: f64::INFINITY,
        bound_violation: 0.0,
    };
    for r in m.rows() {
        if r.family().starts_with("ac_fp") || r.family().starts_with("ac_fq") || r.family().starts_with("ac_ang") {
            let v = r.violation(&x);
            if v > out.row_violation {
                out.row_violation = v;
                out.worst_row = r.name.clone();
            }
        }
    }
    for c in m.cones().iter().filter(|c| c.family() == "ac_cone") {
        out.min_cone_slack = out.min_cone_slack.min(c.slack(&x));
    }
    for (v, &val) in m.variables().iter().zip(&x) {
        if point.values.contains_key(&v.name) && ["cii", "cij", "sij"].contains(&family_of(&v.name)) {
            out.bound_violation = out.bound_violation.max(v.lower - val).max(val - v.upper);
        }
    }
    Ok(out)
}

/// Two- or three-bus system with lossy lines, line charging, bus shunts and
/// possibly a parallel circuit, solved at a random operating point that
/// respects every voltage, angle and lifted-variable box.
pub fn random_ac_case(seed: u64) -> (SystemData, PowerFlow, AcPoint) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=3);
        let ids: Vec<String> = (1..=n).map(|i| format!("N{i}")).collect();
        let mut buses: Vec<_> = ids.iter().enumerate().map(|(i, id)| bus(id.clone(), i == 0)).collect();
        for b in &mut buses {
            if rng.random_bool(0.5) {
                b.g_shunt = rng.random_range(0.0..0.05);
                b.b_shunt = rng.random_range(-0.1..0.1);
            }
        }
        let mut lines = Vec::new();
        for i in 1..n {
            let from = rng.random_range(0..i);
            lines.push(line(&ids[from], &ids[i], rng.random_range(0.05..0.3), 10.0));
        }
        if n == 3 && rng.random_bool(0.5) {
            let mut extra = line(&ids[2], &ids[1], rng.random_range(0.05..0.3), 10.0);
            extra.circuit = "c3".into();
            lines.push(extra);
        }
        if rng.random_bool(0.4) {
            let mut par = lines[0].clone();
            par.circuit = "c2".into();
            lines.push(par);
        }
        for l in &mut lines {
            let x = l.reactance;
            let r = x * rng.random_range(0.0..0.3);
            let z2 = r * r + x * x;
            l.conductance = r / z2;
            l.susceptance = -x / z2;
            l.charging = rng.random_range(0.0..0.05);
        }
        let system = SystemData {
            buses,
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
        let spec: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(-0.8..0.8), rng.random_range(-0.3..0.3)))
            .collect();
        let Ok(pf) = newton_power_flow(&system, rng.random_range(0.95..1.05), &spec) else {
            continue;
        };
        let point = ac_operating_point(&system, &pf, StepRef::new(1, 1));
        let Ok(check) = check_relaxation(&system, &point) else {
            continue;
        };
        let angles_ok = system.lines.iter().all(|l| {
            let i = system.bus_index(&l.from).unwrap();
            let j = system.bus_index(&l.to).unwrap();
            (pf.buses[i].angle - pf.buses[j].angle).abs() <= system.scalars.max_angle_diff
        });
        let volts_ok = pf
            .buses
            .iter()
            .zip(&system.buses)
            .all(|(p, b)| p.magnitude >= b.v_min && p.magnitude <= b.v_max);
        if angles_ok && volts_ok && check.bound_violation <= 0.0 {
            return (system, pf, point);
        }
    }
}
