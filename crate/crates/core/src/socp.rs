//! Second-order cone relaxation of AC power flow, replacing the DC block.
//!
//! Per bus pair the lifted variables are `cii = |V_i|²`,
//! `cij = |V_i||V_j| cos(θ_j − θ_i)` and `sij = |V_i||V_j| sin(θ_j − θ_i)`,
//! with the pair oriented by bus order in the dataset.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::blocks::{at, names};
use crate::error::{Error, Result};
use crate::model::{ident, Block, LinearExpr, ModelInstance, RowSense};
use crate::system::{Line, SystemData};
use crate::temporal::{StepRef, TemporalStructure};

const B: Block = Block::AcOpf;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SocpOptions {
    /// Add `fP² + fQ² ≤ Ā²` per directed flow on top of the separate boxes.
    pub apparent_cone: bool,
}

/// Bus pair of a line in dataset bus order, and the sign mapping the pair's
/// `sij` to the line's from→to orientation.
pub(crate) fn pair_of(system: &SystemData, line: &Line) -> (usize, usize, f64) {
    let i = system.bus_index(&line.from).expect("validated");
    let j = system.bus_index(&line.to).expect("validated");
    if i < j {
        (i, j, 1.0)
    } else {
        (j, i, -1.0)
    }
}

/// Distinct bus pairs joined by at least one line, in first-seen order.
pub(crate) fn bus_pairs(system: &SystemData) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for l in &system.lines {
        let (a, b, _) = pair_of(system, l);
        if !out.contains(&(a, b)) {
            out.push((a, b));
        }
    }
    out
}

pub(crate) fn cii_name(s: StepRef, bus: &str) -> String {
    at("cii", s, &[bus])
}
pub(crate) fn cij_name(s: StepRef, a: &str, b: &str) -> String {
    at("cij", s, &[a, b])
}
pub(crate) fn sij_name(s: StepRef, a: &str, b: &str) -> String {
    at("sij", s, &[a, b])
}

pub fn build_socp(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
    options: SocpOptions,
) -> Result<()> {
    let delta = system.scalars.max_angle_diff;
    if !(delta > 0.0 && delta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Build(format!("max angle difference {delta} rad must lie in (0, π/2)")));
    }
    let tan_d = delta.tan();
    let sb = system.scalars.base_power_gva();
    let pairs = bus_pairs(system);
    let bus = |i: usize| system.buses[i].id.as_str();

    for s in temporal.steps() {
        for b in &system.buses {
            model.continuous(cii_name(s, &b.id), b.v_min.powi(2), b.v_max.powi(2))?;
        }
        for &(a, b) in &pairs {
            let ba = &system.buses[a];
            model.continuous(cij_name(s, bus(a), bus(b)), ba.v_min.powi(2), ba.v_max.powi(2))?;
            model.continuous(sij_name(s, bus(a), bus(b)), -ba.v_max.powi(2), ba.v_max.powi(2))?;
        }
        for l in &system.lines {
            let a_lim = l.apparent_limit_gva();
            for (i, j) in [(&l.from, &l.to), (&l.to, &l.from)] {
                model.continuous(at(names::FP, s, &[i, j, &l.circuit]), -l.flow_limit, l.flow_limit)?;
                model.continuous(at(names::FQ, s, &[i, j, &l.circuit]), -a_lim, a_lim)?;
            }
        }
        for t in &system.thermal {
            model.continuous(at(names::Q, s, &[&t.id]), t.q_min.min(0.0), t.q_max.max(0.0))?;
        }
        for r in &system.renewable {
            model.continuous(at(names::Q, s, &[&r.id]), r.q_min, r.q_max)?;
        }
        for st in &system.storage {
            model.continuous(at(names::Q, s, &[&st.id]), st.q_min, st.q_max)?;
        }
        for f in &system.facts {
            let n = f64::from(f.build_max);
            model.continuous(at(names::Q, s, &[&f.id]), f.q_min * n, f.q_max * n)?;
        }
    }

    for s in temporal.steps() {
        for b in &system.buses {
            let cii = model.require(&cii_name(s, &b.id))?;
            let mut p = crate::blocks::injection(system, model, s, &b.id)?;
            let mut q = LinearExpr::new();
            for id in system
                .thermal
                .iter()
                .filter(|t| t.bus == b.id)
                .map(|t| &t.id)
                .chain(system.renewable.iter().filter(|r| r.bus == b.id).map(|r| &r.id))
                .chain(system.storage.iter().filter(|u| u.bus == b.id).map(|u| &u.id))
                .chain(system.facts.iter().filter(|f| f.bus == b.id).map(|f| &f.id))
            {
                q.add(model.require(&at(names::Q, s, &[id]))?, 1.0);
            }
            q.add(model.require(&at(names::PNS, s, &[&b.id]))?, b.reactive_ratio);
            for l in &system.lines {
                let other = if l.from == b.id {
                    &l.to
                } else if l.to == b.id {
                    &l.from
                } else {
                    continue;
                };
                p.add(model.require(&at(names::FP, s, &[&b.id, other, &l.circuit]))?, -1.0);
                q.add(model.require(&at(names::FQ, s, &[&b.id, other, &l.circuit]))?, -1.0);
            }
            p.add(cii, -b.g_shunt * sb);
            q.add(cii, b.b_shunt * sb);
            model.add_row(
                at("ac_balp", s, &[&b.id]),
                B,
                p,
                RowSense::Eq,
                system.active_demand(s.rp, s.k, &b.id),
            )?;
            model.add_row(
                at("ac_balq", s, &[&b.id]),
                B,
                q,
                RowSense::Eq,
                system.reactive_demand(s.rp, s.k, &b.id),
            )?;
        }

        for &(a, b) in &pairs {
            let (na, nb) = (bus(a), bus(b));
            let c = model.require(&cij_name(s, na, nb))?;
            let sn = model.require(&sij_name(s, na, nb))?;
            let ca = model.require(&cii_name(s, na))?;
            let cb = model.require(&cii_name(s, nb))?;
            model.add_cone(at("ac_cone", s, &[na, nb]), B, vec![c, sn], (ca, cb))?;
            model.add_row(
                at("ac_ang_lo", s, &[na, nb]),
                B,
                LinearExpr::new().with(sn, 1.0).with(c, tan_d),
                RowSense::Ge,
                0.0,
            )?;
            model.add_row(
                at("ac_ang_hi", s, &[na, nb]),
                B,
                LinearExpr::new().with(sn, 1.0).with(c, -tan_d),
                RowSense::Le,
                0.0,
            )?;
        }

        for l in &system.lines {
            let (a, b, sign) = pair_of(system, l);
            let c = model.require(&cij_name(s, bus(a), bus(b)))?;
            let sn = model.require(&sij_name(s, bus(a), bus(b)))?;
            let ci = model.require(&cii_name(s, &l.from))?;
            let cj = model.require(&cii_name(s, &l.to))?;
            let (g, bb, half_bc) = (l.conductance, l.susceptance, l.charging / 2.0);
            let idx_ij = [l.from.as_str(), l.to.as_str(), l.circuit.as_str()];
            let idx_ji = [l.to.as_str(), l.from.as_str(), l.circuit.as_str()];
            let fp_ij = model.require(&at(names::FP, s, &idx_ij))?;
            let fp_ji = model.require(&at(names::FP, s, &idx_ji))?;
            let fq_ij = model.require(&at(names::FQ, s, &idx_ij))?;
            let fq_ji = model.require(&at(names::FQ, s, &idx_ji))?;
            let defs = [
                ("ac_fp_ij", fp_ij, ci, g, -g, sign * bb),
                ("ac_fp_ji", fp_ji, cj, g, -g, -sign * bb),
                ("ac_fq_ij", fq_ij, ci, -(bb + half_bc), bb, sign * g),
                ("ac_fq_ji", fq_ji, cj, -(bb + half_bc), bb, -sign * g),
            ];
            for (fam, flow, cii, k_cii, k_c, k_s) in defs {
                model.add_row(
                    at(fam, s, &idx_ij),
                    B,
                    LinearExpr::new()
                        .with(flow, 1.0)
                        .with(cii, -sb * k_cii)
                        .with(c, -sb * k_c)
                        .with(sn, -sb * k_s),
                    RowSense::Eq,
                    0.0,
                )?;
            }
            if options.apparent_cone {
                let lim = l.apparent_limit_gva();
                let cap = model.continuous_shared(ident("abar", &[&l.from, &l.to, &l.circuit]), lim, lim)?;
                model.add_cone(at("ac_sapp_ij", s, &idx_ij), B, vec![fp_ij, fq_ij], (cap, cap))?;
                model.add_cone(at("ac_sapp_ji", s, &idx_ij), B, vec![fp_ji, fq_ji], (cap, cap))?;
            }
        }

        for f in &system.facts {
            let q = model.require(&at(names::Q, s, &[&f.id]))?;
            let x = model.require(&crate::blocks::x_name(&f.id))?;
            model.add_row(
                at("q_facts_lo", s, &[&f.id]),
                B,
                LinearExpr::new().with(q, 1.0).with(x, -f.q_min),
                RowSense::Ge,
                0.0,
            )?;
            model.add_row(
                at("q_facts_hi", s, &[&f.id]),
                B,
                LinearExpr::new().with(q, 1.0).with(x, -f.q_max),
                RowSense::Le,
                0.0,
            )?;
        }
        for t in &system.thermal {
            let q = model.require(&at(names::Q, s, &[&t.id]))?;
            let u = model.require(&at(names::U, s, &[&t.id]))?;
            model.add_row(
                at("q_th_lo", s, &[&t.id]),
                B,
                LinearExpr::new().with(q, 1.0).with(u, -t.q_min),
                RowSense::Ge,
                0.0,
            )?;
            model.add_row(
                at("q_th_hi", s, &[&t.id]),
                B,
                LinearExpr::new().with(q, 1.0).with(u, -t.q_max),
                RowSense::Le,
                0.0,
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeResidual {
    pub rp: usize,
    pub k: usize,
    pub from: String,
    pub to: String,
    pub residual: f64,
}

/// `cii_i·cii_j − cij² − sij²` per step and bus pair.
pub fn residual(cii_i: f64, cii_j: f64, cij: f64, sij: f64) -> f64 {
    cii_i * cii_j - cij * cij - sij * sij
}

pub fn cone_residual(
    values: &BTreeMap<String, f64>,
    system: &SystemData,
    temporal: &TemporalStructure,
) -> Vec<ConeResidual> {
    let get = |n: &str| values.get(n).copied().unwrap_or(0.0);
    let pairs = bus_pairs(system);
    let mut out = Vec::new();
    for s in temporal.steps() {
        for &(a, b) in &pairs {
            let (na, nb) = (&system.buses[a].id, &system.buses[b].id);
            out.push(ConeResidual {
                rp: s.rp,
                k: s.k,
                from: na.clone(),
                to: nb.clone(),
                residual: residual(
                    get(&cii_name(s, na)),
                    get(&cii_name(s, nb)),
                    get(&cij_name(s, na, nb)),
                    get(&sij_name(s, na, nb)),
                ),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BusVoltage {
    pub rp: usize,
    pub k: usize,
    pub bus: String,
    pub magnitude: f64,
    /// Angle relative to the slack bus along a spanning tree, rad.
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAngle {
    pub rp: usize,
    pub k: usize,
    pub from: String,
    pub to: String,
    /// `atan2(sij, cij)`: angle of `to` relative to `from`, rad.
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VoltageRecovery {
    pub buses: Vec<BusVoltage>,
    pub pairs: Vec<PairAngle>,
    /// Largest loop mismatch per step, (rp, k, rad).
    pub cycle_error: Vec<(usize, usize, f64)>,
}

fn wrap(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = (a + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if r <= -std::f64::consts::PI {
        r + two_pi
    } else {
        r
    }
}

/// Magnitudes and angles from the lifted variables. Angles are propagated
/// from the slack along a breadth-first tree; loops closing off the tree
/// give the cycle-consistency error.
pub fn recover_voltages(
    values: &BTreeMap<String, f64>,
    system: &SystemData,
    temporal: &TemporalStructure,
    tol: f64,
) -> Result<VoltageRecovery> {
    let get = |n: &str| values.get(n).copied().unwrap_or(0.0);
    let pairs = bus_pairs(system);
    let n = system.buses.len();
    let slack = system.buses.iter().position(|b| b.is_slack).unwrap_or(0);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (pi, &(a, b)) in pairs.iter().enumerate() {
        adj[a].push((b, pi));
        adj[b].push((a, pi));
    }
    let mut out = VoltageRecovery {
        buses: Vec::new(),
        pairs: Vec::new(),
        cycle_error: Vec::new(),
    };
    for s in temporal.steps() {
        let mut mags = Vec::with_capacity(n);
        for b in &system.buses {
            let c = get(&cii_name(s, &b.id));
            if c < -tol {
                return Err(Error::Numerical(format!("cii at {s:?}, bus {} is {c}", b.id)));
            }
            mags.push(c.max(0.0).sqrt());
        }
        let phi: Vec<f64> = pairs
            .iter()
            .map(|&(a, b)| {
                let (na, nb) = (&system.buses[a].id, &system.buses[b].id);
                get(&sij_name(s, na, nb)).atan2(get(&cij_name(s, na, nb)))
            })
            .collect();
        let mut theta = vec![f64::NAN; n];
        let mut tree = vec![false; pairs.len()];
        let mut queue = VecDeque::new();
        if n > 0 {
            theta[slack] = 0.0;
            queue.push_back(slack);
        }
        while let Some(i) = queue.pop_front() {
            for &(j, pi) in &adj[i] {
                if theta[j].is_nan() {
                    let (a, _) = pairs[pi];
                    theta[j] = if a == i { theta[i] + phi[pi] } else { theta[i] - phi[pi] };
                    tree[pi] = true;
                    queue.push_back(j);
                }
            }
        }
        let mut worst: f64 = 0.0;
        for (pi, &(a, b)) in pairs.iter().enumerate() {
            if !tree[pi] {
                worst = worst.max(wrap(theta[b] - theta[a] - phi[pi]).abs());
            }
        }
        out.cycle_error.push((s.rp, s.k, worst));
        for (i, b) in system.buses.iter().enumerate() {
            out.buses.push(BusVoltage {
                rp: s.rp,
                k: s.k,
                bus: b.id.clone(),
                magnitude: mags[i],
                angle: theta[i],
            });
        }
        for (pi, &(a, b)) in pairs.iter().enumerate() {
            out.pairs.push(PairAngle {
                rp: s.rp,
                k: s.k,
                from: system.buses[a].id.clone(),
                to: system.buses[b].id.clone(),
                angle: phi[pi],
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{build_general_bounds, build_thermal};
    use crate::system::fixtures::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_point_is_tight() {
        assert_eq!(residual(1.0, 1.0, 1.0, 0.0), 0.0);
        assert_abs_diff_eq!(residual(1.21, 1.21, 1.0, 0.0), 0.4641, epsilon = 1e-12);
    }

    fn triangle() -> SystemData {
        system(
            vec![bus("B1", true), bus("B2", false), bus("B3", false)],
            vec![line("B1", "B2", 0.1), line("B3", "B2", 0.1), line("B1", "B3", 0.1)],
            1,
        )
    }

    #[test]
    fn thermal_reactive_follows_commitment() {
        let mut s = triangle();
        let mut t = thermal("CCGT", "B1", 0.134, 0.668);
        t.q_min = -0.2;
        t.q_max = 0.2;
        s.thermal.push(t);
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        build_thermal(&s, &tm, &mut m).unwrap();
        build_socp(&s, &tm, &mut m, SocpOptions::default()).unwrap();
        let q = m.variable(m.require("q(rp1,k1,CCGT)").unwrap());
        assert_eq!((q.lower, q.upper), (-0.2, 0.2));
        let hi = m.rows().iter().find(|r| r.name == "q_th_hi(rp1,k1,CCGT)").unwrap();
        let mut vals = vec![0.0; m.num_vars()];
        vals[m.require("q(rp1,k1,CCGT)").unwrap().0] = 0.1;
        assert!(hi.violation(&vals) > 0.09);
        assert_eq!(m.cones().len(), 3);
        // reversed line B3→B2 maps onto pair (B2,B3)
        assert!(m.var("cij(rp1,k1,B2,B3)").is_some());
    }

    #[test]
    fn right_angle_rejected() {
        let mut s = triangle();
        s.scalars.max_angle_diff = std::f64::consts::FRAC_PI_2;
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        assert!(build_socp(&s, &tm, &mut m, SocpOptions::default()).is_err());
    }

    #[test]
    fn angle_recovery() {
        let s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B2", 0.1)], 1);
        let tm = s.temporal_structure().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let vals: BTreeMap<String, f64> = [
            ("cii(rp1,k1,B1)", 1.0),
            ("cii(rp1,k1,B2)", 1.0),
            ("cij(rp1,k1,B1,B2)", h),
            ("sij(rp1,k1,B1,B2)", h),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let rec = recover_voltages(&vals, &s, &tm, 1e-7).unwrap();
        assert_abs_diff_eq!(rec.pairs[0].angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(rec.buses[0].magnitude, 1.0);
        assert_abs_diff_eq!(rec.buses[1].angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(rec.cycle_error, vec![(1, 1, 0.0)]);
    }

    #[test]
    fn negative_magnitude_rejected() {
        let s = system(vec![bus("B1", true)], vec![], 1);
        let tm = s.temporal_structure().unwrap();
        let vals: BTreeMap<String, f64> = [("cii(rp1,k1,B1)".to_string(), -0.1)].into_iter().collect();
        assert!(recover_voltages(&vals, &s, &tm, 1e-7).is_err());
    }

    #[test]
    fn consistent_loop_has_no_cycle_error() {
        let s = triangle();
        let tm = s.temporal_structure().unwrap();
        let th: [f64; 3] = [0.0, -0.1, -0.25];
        let v = [1.0, 0.98, 1.02];
        let mut vals = BTreeMap::new();
        for (i, b) in ["B1", "B2", "B3"].iter().enumerate() {
            vals.insert(format!("cii(rp1,k1,{b})"), v[i] * v[i]);
        }
        for (a, b) in [(0usize, 1usize), (1, 2), (0, 2)] {
            let (na, nb) = (format!("B{}", a + 1), format!("B{}", b + 1));
            vals.insert(format!("cij(rp1,k1,{na},{nb})"), v[a] * v[b] * (th[b] - th[a]).cos());
            vals.insert(format!("sij(rp1,k1,{na},{nb})"), v[a] * v[b] * (th[b] - th[a]).sin());
        }
        let rec = recover_voltages(&vals, &s, &tm, 1e-7).unwrap();
        assert!(rec.cycle_error[0].2 < 1e-12);
        assert_abs_diff_eq!(rec.buses[2].angle, -0.25, epsilon = 1e-12);
    }
}
