//! RoCoF inertia block. The gains and the weighted-average inertia are
//! bilinear (continuous × commitment or investment); every product is
//! replaced by an auxiliary variable with four linear rows, and integer
//! investments are expanded into bits first, so the linear model is exact.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::blocks::{at, names, p_name, x_name};
use crate::error::{Error, Result};
use crate::model::{family_of, ident, indices_of, Block, LinearExpr, ModelInstance, RowSense, VarId, VarKind};
use crate::system::{InertiaConfig, SystemData, VirtualGainReading, VirtualUnit};
use crate::temporal::{StepRef, TemporalStructure};

const B: Block = Block::Inertia;

/// Tolerance used to round near-integral values before re-evaluation.
pub const INTEGRALITY_TOL: f64 = 1e-6;

fn derived(name: &str, suffix: &str, extra: Option<&str>) -> String {
    let mut idx = indices_of(name);
    if let Some(e) = extra {
        idx.push(e);
    }
    ident(&format!("{}{suffix}", family_of(name)), &idx)
}

/// `aux = cont · bin`, exact at every point with `bin ∈ {0,1}` and
/// `cont ∈ [0, U]`:
/// `aux ≤ U·bin`, `aux ≤ cont`, `cont − aux ≤ U·(1 − bin)`, `aux ≥ 0`.
pub fn linearize_binary_product(
    model: &mut ModelInstance,
    cont: VarId,
    bin: VarId,
    aux_name: impl Into<String>,
) -> Result<VarId> {
    let aux_name = aux_name.into();
    let c = model.variable(cont).clone();
    let b = model.variable(bin).clone();
    if !c.upper.is_finite() {
        return Err(Error::Build(format!("{aux_name}: {} has no finite upper bound", c.name)));
    }
    if c.lower < 0.0 {
        return Err(Error::Build(format!("{aux_name}: {} may be negative", c.name)));
    }
    if b.kind != VarKind::Binary {
        return Err(Error::Build(format!("{aux_name}: {} is not binary", b.name)));
    }
    let u = c.upper;
    let aux = model.continuous(aux_name.clone(), 0.0, u)?;
    model.add_row(
        derived(&aux_name, "_bin", None),
        B,
        LinearExpr::new().with(aux, 1.0).with(bin, -u),
        RowSense::Le,
        0.0,
    )?;
    model.add_row(
        derived(&aux_name, "_cont", None),
        B,
        LinearExpr::new().with(aux, 1.0).with(cont, -1.0),
        RowSense::Le,
        0.0,
    )?;
    model.add_row(
        derived(&aux_name, "_lin", None),
        B,
        LinearExpr::new().with(cont, 1.0).with(aux, -1.0).with(bin, u),
        RowSense::Le,
        u,
    )?;
    Ok(aux)
}

/// Number of bits needed for values in `0..=max`.
pub fn bit_count(max: u32) -> u32 {
    u32::BITS - max.leading_zeros()
}

/// Write integer `x ∈ [0, X̄]` as `Σ_b 2^b bit_b` with `Σ_b 2^b bit_b ≤ X̄`.
/// Bits are named after `x` with a trailing `bN` index. Returns the bits in
/// increasing weight.
pub fn binary_expand_integer(model: &mut ModelInstance, x: VarId) -> Result<Vec<VarId>> {
    let var = model.variable(x).clone();
    if var.kind != VarKind::Integer && var.kind != VarKind::Binary {
        return Err(Error::Build(format!("{} is not integer", var.name)));
    }
    if var.lower < 0.0 || !var.upper.is_finite() {
        return Err(Error::Build(format!("{}: bounds [{}, {}] cannot be expanded", var.name, var.lower, var.upper)));
    }
    let max = var.upper.round() as u32;
    let n = bit_count(max);
    let mut bits = Vec::with_capacity(n as usize);
    for b in 0..n {
        bits.push(model.binary(derived(&var.name, "b", Some(&format!("b{b}"))))?);
    }
    if bits.is_empty() {
        return Ok(bits);
    }
    let mut link = LinearExpr::new().with(x, 1.0);
    let mut sum = LinearExpr::new();
    for (b, &v) in bits.iter().enumerate() {
        let w = f64::from(1u32 << b);
        link.add(v, -w);
        sum.add(v, w);
    }
    model.add_row(derived(&var.name, "bits", None), B, link, RowSense::Eq, 0.0)?;
    model.add_row(derived(&var.name, "bmax", None), B, sum, RowSense::Le, f64::from(max))?;
    Ok(bits)
}

pub mod families {
    pub const KT: &str = "kt";
    pub const KV: &str = "kv";
    pub const MSG: &str = "msg";
    pub const MVI: &str = "mvi";
    pub const M: &str = "m";
    pub const KU: &str = "ku";
    pub const KVB: &str = "kvb";
    pub const MU: &str = "mu";
    pub const MB: &str = "mb";
    pub const MSGU: &str = "msgu";
    pub const MVIB: &str = "mvib";
}
use families as f;

struct ViData {
    id: String,
    size: f64,
    inertia: f64,
    existing: f64,
    x: VarId,
    bits: Vec<VarId>,
}

pub fn build_inertia(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
    config: &InertiaConfig,
) -> Result<()> {
    config.validate()?;
    let m_cap = config.inertia_cap;
    let vis = system.virtual_inertia_units();
    for v in &vis {
        if let VirtualUnit::Renewable(r) = v {
            for s in temporal.steps() {
                if system.profile(&r.profile_key, s.rp, s.k).is_none() {
                    return Err(Error::Build(format!(
                        "virtual-inertia unit {} has no availability at {s:?}",
                        r.id
                    )));
                }
            }
        }
    }

    let mut vi = Vec::with_capacity(vis.len());
    for v in &vis {
        let x = model.require(&x_name(v.id()))?;
        let bits = binary_expand_integer(model, x)?;
        vi.push(ViData {
            id: v.id().to_string(),
            size: v.unit_size(),
            inertia: v.inertia(),
            existing: f64::from(v.existing()),
            x,
            bits,
        });
    }

    for s in temporal.steps() {
        let pf: Vec<f64> = vis
            .iter()
            .map(|v| v.availability(system, s.rp, s.k).expect("checked above"))
            .collect();
        let u: Vec<VarId> = system
            .thermal
            .iter()
            .map(|t| model.require(&at(names::U, s, &[&t.id])))
            .collect::<Result<_>>()?;

        let kt: Vec<VarId> = system
            .thermal
            .iter()
            .map(|t| model.continuous(at(f::KT, s, &[&t.id]), 0.0, 1.0))
            .collect::<Result<_>>()?;
        let kv: Vec<VarId> = vi
            .iter()
            .map(|v| model.continuous(at(f::KV, s, &[&v.id]), 0.0, 1.0))
            .collect::<Result<_>>()?;
        let msg = model.continuous(at(f::MSG, s, &[]), 0.0, m_cap)?;
        let mvi = model.continuous(at(f::MVI, s, &[]), 0.0, m_cap)?;
        let m = model.continuous(at(f::M, s, &[]), 0.0, m_cap)?;

        // thermal gains: k_t Σ_tt P̄_tt u_tt = P̄_t u_t
        for (ti, t) in system.thermal.iter().enumerate() {
            let mut e = LinearExpr::new().with(u[ti], -t.p_max);
            for (tti, tt) in system.thermal.iter().enumerate() {
                let aux = linearize_binary_product(model, kt[ti], u[tti], at(f::KU, s, &[&tt.id, &t.id]))?;
                e.add(aux, tt.p_max);
            }
            model.add_row(at("in_kt", s, &[&t.id]), B, e, RowSense::Eq, 0.0)?;
            let mut zero = LinearExpr::new().with(kt[ti], 1.0);
            for &uu in &u {
                zero.add(uu, -1.0);
            }
            model.add_row(at("in_kt0", s, &[&t.id]), B, zero, RowSense::Le, 0.0)?;
        }

        // virtual gains: k_v Σ_vv P̄_vv PF_vv (x_vv + EU_vv) = numerator
        let mut kvb: BTreeMap<(usize, usize, usize), VarId> = BTreeMap::new();
        for (vi_i, v) in vi.iter().enumerate() {
            let mut e = LinearExpr::new();
            for (vv_i, vv) in vi.iter().enumerate() {
                let scale = vv.size * pf[vv_i];
                e.add(kv[vi_i], scale * vv.existing);
                for (b, &bit) in vv.bits.iter().enumerate() {
                    let bl = format!("b{b}");
                    let aux = linearize_binary_product(model, kv[vi_i], bit, at(f::KVB, s, &[&vv.id, &bl, &v.id]))?;
                    kvb.insert((vv_i, b, vi_i), aux);
                    e.add(aux, scale * f64::from(1u32 << b));
                }
            }
            let rhs = match config.virtual_gain {
                VirtualGainReading::OwnOutput => {
                    e.add(model.require(&p_name(s, &v.id))?, -1.0);
                    0.0
                }
                VirtualGainReading::AvailableCapacity => {
                    let scale = v.size * pf[vi_i];
                    e.add(v.x, -scale);
                    scale * v.existing
                }
            };
            model.add_row(at("in_kv", s, &[&v.id]), B, e, RowSense::Eq, rhs)?;

            let mut zero = LinearExpr::new().with(kv[vi_i], 1.0);
            let mut eu = 0.0;
            for (vv_i, vv) in vi.iter().enumerate() {
                if pf[vv_i] > 0.0 {
                    zero.add(vv.x, -1.0);
                    eu += vv.existing;
                }
            }
            model.add_row(at("in_kv0", s, &[&v.id]), B, zero, RowSense::Le, eu)?;
        }

        // M^SG = Σ 2 H_t k_t
        let mut e = LinearExpr::new().with(msg, 1.0);
        for (ti, t) in system.thermal.iter().enumerate() {
            e.add(kt[ti], -2.0 * t.inertia);
        }
        model.add_row(at("in_msg", s, &[]), B, e, RowSense::Eq, 0.0)?;

        // M^VI = Σ 2 H_v k_v x_v
        let mut e = LinearExpr::new().with(mvi, 1.0);
        for (vi_i, v) in vi.iter().enumerate() {
            for b in 0..v.bits.len() {
                e.add(kvb[&(vi_i, b, vi_i)], -2.0 * v.inertia * f64::from(1u32 << b));
            }
        }
        model.add_row(at("in_mvi", s, &[]), B, e, RowSense::Eq, 0.0)?;

        // M (SG + VI) = M^SG SG + M^VI VI, with SG = Σ P̄ u and VI = Σ P̄ PF (x + EU)
        let mut e = LinearExpr::new();
        for (tti, tt) in system.thermal.iter().enumerate() {
            let mu = linearize_binary_product(model, m, u[tti], at(f::MU, s, &[&tt.id]))?;
            let msgu = linearize_binary_product(model, msg, u[tti], at(f::MSGU, s, &[&tt.id]))?;
            e.add(mu, tt.p_max);
            e.add(msgu, -tt.p_max);
        }
        for (vv_i, vv) in vi.iter().enumerate() {
            let scale = vv.size * pf[vv_i];
            e.add(m, scale * vv.existing);
            e.add(mvi, -scale * vv.existing);
            for (b, &bit) in vv.bits.iter().enumerate() {
                let bl = format!("b{b}");
                let w = scale * f64::from(1u32 << b);
                let mb = linearize_binary_product(model, m, bit, at(f::MB, s, &[&vv.id, &bl]))?;
                let mvib = linearize_binary_product(model, mvi, bit, at(f::MVIB, s, &[&vv.id, &bl]))?;
                e.add(mb, w);
                e.add(mvib, -w);
            }
        }
        model.add_row(at("in_m", s, &[]), B, e, RowSense::Eq, 0.0)?;

        let mut zero = LinearExpr::new().with(m, 1.0);
        for &uu in &u {
            zero.add(uu, -m_cap);
        }
        let mut eu = 0.0;
        for (vv_i, vv) in vi.iter().enumerate() {
            if pf[vv_i] > 0.0 {
                zero.add(vv.x, -m_cap);
                eu += vv.existing;
            }
        }
        model.add_row(at("in_m0", s, &[]), B, zero, RowSense::Le, m_cap * eu)?;

        model.add_row(
            at("rocof", s, &[]),
            B,
            LinearExpr::new().with(m, config.rocof_limit / config.f_base),
            RowSense::Ge,
            config.disturbance_at(s.rp, s.k),
        )?;
    }
    Ok(())
}

/// A synchronous unit as seen by the inertia formulas.
#[derive(Clone, Copy, Debug)]
pub struct SyncInput {
    pub p_max: f64,
    pub inertia: f64,
    pub committed: bool,
}

/// A virtual-inertia unit type as seen by the inertia formulas.
#[derive(Clone, Copy, Debug)]
pub struct VirtualInput {
    pub unit_size: f64,
    pub inertia: f64,
    pub built: f64,
    pub existing: f64,
    pub availability: f64,
    pub output: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InertiaPoint {
    pub k_sync: Vec<f64>,
    pub k_virtual: Vec<f64>,
    pub m_sg: f64,
    pub m_vi: f64,
    pub m: f64,
}

/// Gains and inertia from their nonlinear definitions; zero denominators give
/// zero gains and zero inertia.
pub fn inertia_of(sync: &[SyncInput], virt: &[VirtualInput], reading: VirtualGainReading) -> InertiaPoint {
    let sg: f64 = sync.iter().filter(|t| t.committed).map(|t| t.p_max).sum();
    let vi: f64 = virt
        .iter()
        .map(|v| v.unit_size * (v.built + v.existing) * v.availability)
        .sum();
    let k_sync: Vec<f64> = sync
        .iter()
        .map(|t| if sg > 0.0 && t.committed { t.p_max / sg } else { 0.0 })
        .collect();
    let k_virtual: Vec<f64> = virt
        .iter()
        .map(|v| {
            if vi <= 0.0 {
                return 0.0;
            }
            match reading {
                VirtualGainReading::OwnOutput => v.output / vi,
                VirtualGainReading::AvailableCapacity => v.unit_size * (v.built + v.existing) * v.availability / vi,
            }
        })
        .collect();
    let m_sg: f64 = sync.iter().zip(&k_sync).map(|(t, k)| 2.0 * k * t.inertia).sum();
    let m_vi: f64 = virt
        .iter()
        .zip(&k_virtual)
        .map(|(v, k)| 2.0 * k * v.inertia * v.built)
        .sum();
    let m = if sg + vi > 0.0 {
        (m_sg * sg + m_vi * vi) / (sg + vi)
    } else {
        0.0
    };
    InertiaPoint {
        k_sync,
        k_virtual,
        m_sg,
        m_vi,
        m,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InertiaRecord {
    pub rp: usize,
    pub k: usize,
    pub m_sg: f64,
    pub m_vi: f64,
    pub m: f64,
    pub rocof_ok: bool,
}

fn snap(v: f64) -> f64 {
    if (v - v.round()).abs() <= INTEGRALITY_TOL {
        v.round()
    } else {
        v
    }
}

/// Inputs of [`inertia_of`] at one step, read from a named solution.
pub fn inputs_at(
    values: &BTreeMap<String, f64>,
    system: &SystemData,
    s: StepRef,
) -> (Vec<SyncInput>, Vec<VirtualInput>) {
    let get = |n: &str| values.get(n).copied().unwrap_or(0.0);
    let sync = system
        .thermal
        .iter()
        .map(|t| SyncInput {
            p_max: t.p_max,
            inertia: t.inertia,
            committed: snap(get(&at(names::U, s, &[&t.id]))) >= 0.5,
        })
        .collect();
    let virt = system
        .virtual_inertia_units()
        .iter()
        .map(|v| VirtualInput {
            unit_size: v.unit_size(),
            inertia: v.inertia(),
            built: snap(get(&x_name(v.id()))),
            existing: f64::from(v.existing()),
            availability: v.availability(system, s.rp, s.k).unwrap_or(0.0),
            output: get(&p_name(s, v.id())),
        })
        .collect();
    (sync, virt)
}

/// Re-evaluate inertia on a solution from the nonlinear definitions.
pub fn evaluate_inertia(
    values: &BTreeMap<String, f64>,
    system: &SystemData,
    temporal: &TemporalStructure,
    config: &InertiaConfig,
) -> Vec<InertiaRecord> {
    temporal
        .steps()
        .map(|s| {
            let (sync, virt) = inputs_at(values, system, s);
            let pt = inertia_of(&sync, &virt, config.virtual_gain);
            let dp = config.disturbance_at(s.rp, s.k);
            InertiaRecord {
                rp: s.rp,
                k: s.k,
                m_sg: pt.m_sg,
                m_vi: pt.m_vi,
                m: pt.m,
                rocof_ok: dp <= 0.0 || config.rocof_limit / config.f_base * pt.m >= dp - 1e-9,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sync(p: f64, h: f64, on: bool) -> SyncInput {
        SyncInput {
            p_max: p,
            inertia: h,
            committed: on,
        }
    }

    #[test]
    fn lone_nuclear() {
        let pt = inertia_of(&[sync(0.772, 8.0, true)], &[], VirtualGainReading::OwnOutput);
        assert_eq!(pt.k_sync, vec![1.0]);
        assert_abs_diff_eq!(pt.m_sg, 16.0);
        assert_abs_diff_eq!(pt.m, 16.0);
    }

    #[test]
    fn nuclear_and_ccgt() {
        let pt = inertia_of(
            &[sync(0.772, 8.0, true), sync(0.668, 4.0, true)],
            &[],
            VirtualGainReading::OwnOutput,
        );
        // 2 (0.772·8 + 0.668·4) / 1.440
        assert_abs_diff_eq!(pt.m_sg, 12.288_888_888_888_89, epsilon = 1e-12);
        assert_abs_diff_eq!(pt.k_sync.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn battery_alone_at_full_gain() {
        let bess = VirtualInput {
            unit_size: 0.1,
            inertia: 10.0,
            built: 1.0,
            existing: 0.0,
            availability: 1.0,
            output: 0.1,
        };
        let pt = inertia_of(&[sync(0.4, 2.5, false)], &[bess], VirtualGainReading::OwnOutput);
        assert_abs_diff_eq!(pt.m_vi, 20.0);
        assert_abs_diff_eq!(pt.m, 20.0);
        assert_eq!(pt.m_sg, 0.0);
    }

    #[test]
    fn all_off_is_zero() {
        let pt = inertia_of(&[sync(0.4, 2.5, false)], &[], VirtualGainReading::OwnOutput);
        assert_eq!(pt.m, 0.0);
        assert_eq!(pt.k_sync, vec![0.0]);
    }

    #[test]
    fn bits_needed() {
        assert_eq!(bit_count(0), 0);
        assert_eq!(bit_count(1), 1);
        assert_eq!(bit_count(3), 2);
        assert_eq!(bit_count(35), 6);
        assert_eq!(bit_count(99), 7);
    }

    fn product_model(u_cap: f64) -> (ModelInstance, VarId, VarId, VarId) {
        let mut m = ModelInstance::new();
        let c = m.continuous("c", 0.0, u_cap).unwrap();
        let b = m.binary("b").unwrap();
        let a = linearize_binary_product(&mut m, c, b, "a").unwrap();
        (m, c, b, a)
    }

    #[test]
    fn product_rows_pin_aux() {
        // at every grid point the only feasible aux is c·b
        let (m, _, _, _) = product_model(1.0);
        for bin in [0.0, 1.0] {
            for i in 0..=4 {
                let c = f64::from(i) * 0.25;
                for j in 0..=8 {
                    let a = f64::from(j) * 0.125;
                    let feasible = m.max_violation(&[c, bin, a]).0 <= 1e-12;
                    assert_eq!(feasible, (a - c * bin).abs() < 1e-12, "c={c} b={bin} a={a}");
                }
            }
        }
    }

    #[test]
    fn product_needs_finite_bound() {
        let mut m = ModelInstance::new();
        let c = m.continuous("c", 0.0, f64::INFINITY).unwrap();
        let b = m.binary("b").unwrap();
        assert!(linearize_binary_product(&mut m, c, b, "a").is_err());
    }

    #[test]
    fn expansion_round_trips() {
        for max in [1u32, 2, 5, 35] {
            let mut m = ModelInstance::new();
            let x = m.add_var("x(W)", VarKind::Integer, 0.0, f64::from(max)).unwrap();
            let bits = binary_expand_integer(&mut m, x).unwrap();
            assert_eq!(bits.len() as u32, bit_count(max));
            assert_eq!(m.variable(bits[0]).name, "xb(W,b0)");
            for value in 0..=max {
                let mut vals = vec![0.0; m.num_vars()];
                vals[x.0] = f64::from(value);
                for (b, id) in bits.iter().enumerate() {
                    vals[id.0] = f64::from((value >> b) & 1);
                }
                assert!(m.max_violation(&vals).0 < 1e-12);
            }
            // the all-ones pattern exceeds X̄ unless X̄ is 2^n − 1
            let mut vals = vec![1.0; m.num_vars()];
            vals[x.0] = f64::from((1u32 << bits.len()) - 1);
            let ok = m.max_violation(&vals).0 < 1e-12;
            assert_eq!(ok, (max + 1).is_power_of_two());
        }
    }
}
