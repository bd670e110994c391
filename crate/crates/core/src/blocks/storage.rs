use super::thermal::storage_reserve_vars;
use super::{at, names, p_name, x_name};
use crate::error::{Error, Result};
use crate::model::{ident, Block, LinearExpr, ModelInstance, RowSense};
use crate::system::{StorageUnit, SystemData};
use crate::temporal::TemporalStructure;

const B: Block = Block::Storage;

/// How a unit's state of charge is tracked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageMode {
    /// Chronological balance checked at moving-window checkpoints.
    Inter,
    /// Cyclic balance within each representative period.
    Intra,
}

impl StorageMode {
    /// Hydro units use the inter-period balance when the year is represented
    /// by several periods; everything else cycles within its period.
    pub fn of(unit: &StorageUnit, temporal: &TemporalStructure) -> Self {
        if unit.is_hydro && temporal.num_rep_periods() > 1 {
            StorageMode::Inter
        } else {
            StorageMode::Intra
        }
    }
}

fn inter_name(p: usize, s: &str) -> String {
    ident(names::INTER, &[&format!("p{p}"), s])
}

pub fn build_storage(system: &SystemData, temporal: &TemporalStructure, model: &mut ModelInstance) -> Result<()> {
    for st in &system.storage {
        if !(st.eff_charge > 0.0) || !(st.eff_discharge > 0.0) {
            return Err(Error::Build(format!(
                "storage {}: efficiencies must be positive (charge {}, discharge {})",
                st.id, st.eff_charge, st.eff_discharge
            )));
        }
    }
    storage_reserve_vars(system, temporal, model)?;

    for st in &system.storage {
        let id = st.id.as_str();
        let units = f64::from(st.existing + st.build_max);
        let cap = st.unit_size * units;
        let energy = st.energy_per_unit() * units;
        let mode = StorageMode::of(st, temporal);
        for s in temporal.steps() {
            model.continuous(p_name(s, id), 0.0, cap)?;
            model.continuous(at(names::CS, s, &[id]), 0.0, cap)?;
            model.binary(at(names::BCHD, s, &[id]))?;
            if st.is_hydro {
                model.continuous(at(names::SP, s, &[id]), 0.0, (1.0 - st.max_soc_frac) * energy)?;
            }
            if mode == StorageMode::Intra {
                model.continuous(at(names::INTRA, s, &[id]), 0.0, energy)?;
            }
        }
        if mode == StorageMode::Inter {
            for p in temporal.checkpoints() {
                model.continuous(inter_name(p, id), 0.0, energy)?;
            }
        }
    }

    for st in &system.storage {
        let id = st.id.as_str();
        let eu = f64::from(st.existing);
        let e = st.energy_per_unit();
        let big_m = st.unit_size * f64::from(st.existing + st.build_max);
        let x = model.require(&x_name(id))?;
        let mode = StorageMode::of(st, temporal);

        for s in temporal.steps() {
            let w = temporal.step_weight(s.k);
            let prev = temporal.prev_cyclic(s);
            let p = model.require(&p_name(s, id))?;
            let cs = model.require(&at(names::CS, s, &[id]))?;
            let rup = model.require(&at(names::RES_UP, s, &[id]))?;
            let rdn = model.require(&at(names::RES_DN, s, &[id]))?;
            let b = model.require(&at(names::BCHD, s, &[id]))?;
            let row = |f: &str| at(f, s, &[id]);

            if mode == StorageMode::Intra {
                let intra = model.require(&at(names::INTRA, s, &[id]))?;
                let intra_prev = model.require(&at(names::INTRA, prev, &[id]))?;
                let rup_prev = model.require(&at(names::RES_UP, prev, &[id]))?;
                let rdn_prev = model.require(&at(names::RES_DN, prev, &[id]))?;
                let mut def = LinearExpr::new()
                    .with(intra, 1.0)
                    .with(intra_prev, -1.0)
                    .with(p, w / st.eff_discharge)
                    .with(cs, -w * st.eff_charge);
                if st.is_hydro {
                    def.add(model.require(&at(names::SP, s, &[id]))?, 1.0);
                }
                model.add_row(row("intra_def"), B, def, RowSense::Eq, system.inflow(id, s.rp, s.k) * w)?;
                model.add_row(
                    row("intra_ub_res"),
                    B,
                    LinearExpr::new()
                        .with(intra, 1.0)
                        .with(rdn, w)
                        .with(rdn_prev, w)
                        .with(x, -e),
                    RowSense::Le,
                    e * eu,
                )?;
                model.add_row(
                    row("intra_lb_res"),
                    B,
                    LinearExpr::new()
                        .with(intra, 1.0)
                        .with(rup, -w)
                        .with(rup_prev, -w)
                        .with(x, -st.min_soc_frac * e),
                    RowSense::Ge,
                    st.min_soc_frac * e * eu,
                )?;
                model.add_row(
                    row("intra_ub"),
                    B,
                    LinearExpr::new().with(intra, 1.0).with(x, -e),
                    RowSense::Le,
                    e * eu,
                )?;
                model.add_row(
                    row("intra_lb"),
                    B,
                    LinearExpr::new().with(intra, 1.0).with(x, -st.min_soc_frac * e),
                    RowSense::Ge,
                    st.min_soc_frac * e * eu,
                )?;
            }

            model.add_row(
                row("sres_up"),
                B,
                LinearExpr::new()
                    .with(p, 1.0)
                    .with(cs, -1.0)
                    .with(rup, 1.0)
                    .with(x, -st.unit_size),
                RowSense::Le,
                st.unit_size * eu,
            )?;
            model.add_row(
                row("sres_dn"),
                B,
                LinearExpr::new()
                    .with(p, 1.0)
                    .with(cs, -1.0)
                    .with(rdn, -1.0)
                    .with(x, st.unit_size),
                RowSense::Ge,
                -st.unit_size * eu,
            )?;
            model.add_row(
                row("dis_excl"),
                B,
                LinearExpr::new().with(p, 1.0).with(b, -big_m),
                RowSense::Le,
                0.0,
            )?;
            model.add_row(
                row("ch_excl"),
                B,
                LinearExpr::new().with(cs, 1.0).with(b, big_m),
                RowSense::Le,
                big_m,
            )?;
            for (fam, v) in [("s_p_cap", p), ("s_cs_cap", cs), ("s_resup_cap", rup), ("s_resdn_cap", rdn)] {
                model.add_row(
                    row(fam),
                    B,
                    LinearExpr::new().with(v, 1.0).with(x, -st.unit_size),
                    RowSense::Le,
                    st.unit_size * eu,
                )?;
            }
            if st.is_hydro {
                let sp = model.require(&at(names::SP, s, &[id]))?;
                let frac = 1.0 - st.max_soc_frac;
                model.add_row(
                    row("sp_cap"),
                    B,
                    LinearExpr::new().with(sp, 1.0).with(x, -frac * e),
                    RowSense::Le,
                    frac * e * eu,
                )?;
            }
        }

        if mode == StorageMode::Inter {
            let checkpoints = temporal.checkpoints();
            for (i, &cp) in checkpoints.iter().enumerate() {
                let inter = model.require(&inter_name(cp, id))?;
                let mut def = LinearExpr::new().with(inter, 1.0);
                let mut rhs = 0.0;
                if i == 0 {
                    rhs += st.initial_reserve;
                } else {
                    def.add(model.require(&inter_name(checkpoints[i - 1], id))?, -1.0);
                }
                for s in temporal.window_members(cp)? {
                    let w = temporal.step_weight(s.k);
                    def.add(model.require(&p_name(s, id))?, w / st.eff_discharge);
                    def.add(model.require(&at(names::CS, s, &[id]))?, -w * st.eff_charge);
                    if st.is_hydro {
                        def.add(model.require(&at(names::SP, s, &[id]))?, 1.0);
                    }
                    rhs += system.inflow(id, s.rp, s.k) * w;
                }
                let pl = format!("p{cp}");
                model.add_row(ident("inter_def", &[&pl, id]), B, def, RowSense::Eq, rhs)?;
                model.add_row(
                    ident("inter_ub", &[&pl, id]),
                    B,
                    LinearExpr::new().with(inter, 1.0).with(x, -e),
                    RowSense::Le,
                    e * eu,
                )?;
                model.add_row(
                    ident("inter_lb", &[&pl, id]),
                    B,
                    LinearExpr::new().with(inter, 1.0).with(x, -st.min_soc_frac * e),
                    RowSense::Ge,
                    st.min_soc_frac * e * eu,
                )?;
            }
            let last = *checkpoints.last().expect("at least one checkpoint");
            model.add_row(
                ident("inter_end", &[id]),
                B,
                LinearExpr::new().with(model.require(&inter_name(last, id))?, 1.0),
                RowSense::Ge,
                st.initial_reserve,
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::build_general_bounds;
    use crate::system::fixtures::*;
    use crate::system::{SystemData, TemporalLayout};

    fn bess() -> StorageUnit {
        StorageUnit {
            id: "BESS".into(),
            tech: "bess".into(),
            bus: "B1".into(),
            unit_size: 1.0,
            energy_to_power: 4.0,
            eff_charge: 0.95,
            eff_discharge: 0.95,
            min_soc_frac: 0.0,
            max_soc_frac: 1.0,
            inertia: 0.0,
            c_om: 0.0,
            c_inv: 0.0,
            existing: 1,
            build_max: 0,
            initial_reserve: 0.0,
            is_hydro: false,
            q_min: 0.0,
            q_max: 0.0,
        }
    }

    fn build(s: &SystemData) -> ModelInstance {
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(s, &tm, &mut m).unwrap();
        build_storage(s, &tm, &mut m).unwrap();
        m
    }

    fn set(m: &ModelInstance, vals: &mut [f64], name: &str, v: f64) {
        vals[m.require(name).unwrap().0] = v;
    }

    #[test]
    fn round_trip_efficiency() {
        // charge 1 GWh at k1, discharge at k2 until empty: energy out is 0.95^2 of energy in
        let mut s = system(vec![bus("B1", true)], vec![], 3);
        s.storage.push(bess());
        let m = build(&s);
        let mut vals = vec![0.0; m.num_vars()];
        set(&m, &mut vals, "cs(rp1,k1,BESS)", 1.0);
        set(&m, &mut vals, "bchd(rp1,k2,BESS)", 1.0);
        set(&m, &mut vals, "p(rp1,k2,BESS)", 0.9025);
        set(&m, &mut vals, "intra(rp1,k1,BESS)", 0.95);
        set(&m, &mut vals, "intra(rp1,k2,BESS)", 0.0);
        set(&m, &mut vals, "intra(rp1,k3,BESS)", 0.0);
        let (worst, name) = m.max_violation(&vals);
        assert!(worst < 1e-12, "{name} violated by {worst}");
        // one more unit of output breaks the balance
        set(&m, &mut vals, "p(rp1,k2,BESS)", 0.95);
        assert!(m.max_violation(&vals).0 > 1e-3);
    }

    #[test]
    fn exclusivity_binary() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.storage.push(bess());
        let m = build(&s);
        let mut vals = vec![0.0; m.num_vars()];
        set(&m, &mut vals, "intra(rp1,k1,BESS)", 1.0);
        set(&m, &mut vals, "bchd(rp1,k1,BESS)", 1.0);
        set(&m, &mut vals, "cs(rp1,k1,BESS)", 0.1);
        let (_, name) = m.max_violation(&vals);
        assert!(name.starts_with("ch_excl"), "{name}");
        set(&m, &mut vals, "cs(rp1,k1,BESS)", 0.0);
        set(&m, &mut vals, "bchd(rp1,k1,BESS)", 0.0);
        set(&m, &mut vals, "p(rp1,k1,BESS)", 0.1);
        let (_, name) = m.max_violation(&vals);
        assert!(name.starts_with("dis_excl") || name.starts_with("intra_def"), "{name}");
    }

    #[test]
    fn idle_hydro_keeps_inter_soc() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.layout = TemporalLayout::Representative {
            steps_per_rp: 2,
            moving_window: 4,
            assignments: vec![1, 2, 2, 1],
        };
        let mut h = bess();
        h.id = "HYD".into();
        h.is_hydro = true;
        h.initial_reserve = 2.0;
        s.storage.push(h);
        let m = build(&s);
        assert!(m.var("intra(rp1,k1,HYD)").is_none());
        let mut vals = vec![0.0; m.num_vars()];
        set(&m, &mut vals, "inter(p4,HYD)", 2.0);
        set(&m, &mut vals, "inter(p8,HYD)", 2.0);
        let (worst, name) = m.max_violation(&vals);
        assert!(worst < 1e-12, "{name} violated by {worst}");
        assert_eq!(m.row_count("inter_def"), 2);
        assert_eq!(m.row_count("inter_end"), 1);
        assert_eq!(m.row_count("sp_cap"), 4);
    }

    #[test]
    fn zero_efficiency_rejected() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        let mut b = bess();
        b.eff_charge = 0.0;
        s.storage.push(b);
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        assert!(build_storage(&s, &tm, &mut m).is_err());
    }
}
