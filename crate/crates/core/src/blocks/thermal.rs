use super::{at, names, p_name, x_name};
use crate::error::{Error, Result};
use crate::model::{Block, LinearExpr, ModelInstance, RowSense};
use crate::system::SystemData;
use crate::temporal::TemporalStructure;

const B: Block = Block::Thermal;

/// Reserve variables of a storage unit; shared with the storage block.
pub(crate) fn storage_reserve_vars(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
) -> Result<()> {
    for s in temporal.steps() {
        for st in &system.storage {
            let cap = st.unit_size * f64::from(st.existing + st.build_max);
            model.continuous_shared(at(names::RES_UP, s, &[&st.id]), 0.0, cap)?;
            model.continuous_shared(at(names::RES_DN, s, &[&st.id]), 0.0, cap)?;
        }
    }
    Ok(())
}

/// Unit commitment of thermal units and the system reserve requirements.
pub fn build_thermal(system: &SystemData, temporal: &TemporalStructure, model: &mut ModelInstance) -> Result<()> {
    if system.thermal.is_empty() && system.storage.is_empty() {
        return Ok(());
    }
    for t in &system.thermal {
        if !(t.ramp_up > 0.0) || !(t.ramp_down > 0.0) {
            return Err(Error::Build(format!(
                "thermal {}: ramp limits must be positive (RU = {}, RD = {})",
                t.id, t.ramp_up, t.ramp_down
            )));
        }
    }

    for s in temporal.steps() {
        for t in &system.thermal {
            let id = t.id.as_str();
            let units = f64::from(t.existing + t.build_max);
            let span = t.p_max - t.p_min;
            model.continuous(p_name(s, id), 0.0, t.p_max * units)?;
            model.continuous(at(names::PHAT, s, &[id]), 0.0, span * units)?;
            model.continuous(at(names::RES_UP, s, &[id]), 0.0, span * units)?;
            model.continuous(at(names::RES_DN, s, &[id]), 0.0, span * units)?;
            model.binary(at(names::U, s, &[id]))?;
            model.binary(at(names::Y, s, &[id]))?;
            model.binary(at(names::Z, s, &[id]))?;
        }
    }
    storage_reserve_vars(system, temporal, model)?;

    let sc = &system.scalars;
    for s in temporal.steps() {
        let demand = system.total_demand(s.rp, s.k);
        let mut up = LinearExpr::new();
        let mut dn = LinearExpr::new();
        for id in system
            .thermal
            .iter()
            .map(|t| &t.id)
            .chain(system.storage.iter().map(|st| &st.id))
        {
            up.add(model.require(&at(names::RES_UP, s, &[id]))?, 1.0);
            dn.add(model.require(&at(names::RES_DN, s, &[id]))?, 1.0);
        }
        model.add_row(at("res_up_req", s, &[]), B, up, RowSense::Ge, sc.reserve_up * demand)?;
        model.add_row(at("res_dn_req", s, &[]), B, dn, RowSense::Ge, sc.reserve_down * demand)?;

        let prev = temporal.prev_cyclic(s);
        let next = temporal.next_cyclic(s);
        for t in &system.thermal {
            let id = t.id.as_str();
            let span = t.p_max - t.p_min;
            let eu = f64::from(t.existing);
            let p = model.require(&p_name(s, id))?;
            let phat = model.require(&at(names::PHAT, s, &[id]))?;
            let phat_prev = model.require(&at(names::PHAT, prev, &[id]))?;
            let rup = model.require(&at(names::RES_UP, s, &[id]))?;
            let rdn = model.require(&at(names::RES_DN, s, &[id]))?;
            let u = model.require(&at(names::U, s, &[id]))?;
            let u_prev = model.require(&at(names::U, prev, &[id]))?;
            let y = model.require(&at(names::Y, s, &[id]))?;
            let z = model.require(&at(names::Z, s, &[id]))?;
            let z_next = model.require(&at(names::Z, next, &[id]))?;
            let x = model.require(&x_name(id))?;

            let row = |f: &str| at(f, s, &[id]);
            model.add_row(
                row("out_def"),
                B,
                LinearExpr::new().with(p, 1.0).with(u, -t.p_min).with(phat, -1.0),
                RowSense::Eq,
                0.0,
            )?;
            model.add_row(
                row("res_up_su"),
                B,
                LinearExpr::new().with(phat, 1.0).with(rup, 1.0).with(u, -span).with(y, span),
                RowSense::Le,
                0.0,
            )?;
            model.add_row(
                row("res_up_sd"),
                B,
                LinearExpr::new().with(phat, 1.0).with(rup, 1.0).with(u, -span).with(z_next, span),
                RowSense::Le,
                0.0,
            )?;
            model.add_row(
                row("res_dn_cap"),
                B,
                LinearExpr::new().with(phat, 1.0).with(rdn, -1.0),
                RowSense::Ge,
                0.0,
            )?;
            model.add_row(
                row("commit_logic"),
                B,
                LinearExpr::new().with(u, 1.0).with(u_prev, -1.0).with(y, -1.0).with(z, 1.0),
                RowSense::Eq,
                0.0,
            )?;
            model.add_row(
                row("commit_cap"),
                B,
                LinearExpr::new().with(u, 1.0).with(x, -1.0),
                RowSense::Le,
                eu,
            )?;
            model.add_row(
                row("ramp_up"),
                B,
                LinearExpr::new()
                    .with(phat, 1.0)
                    .with(phat_prev, -1.0)
                    .with(rup, 1.0)
                    .with(u, -t.ramp_up),
                RowSense::Le,
                0.0,
            )?;
            model.add_row(
                row("ramp_dn"),
                B,
                LinearExpr::new()
                    .with(phat, 1.0)
                    .with(phat_prev, -1.0)
                    .with(rdn, -1.0)
                    .with(u_prev, t.ramp_down),
                RowSense::Ge,
                0.0,
            )?;
            model.add_row(
                row("p_cap"),
                B,
                LinearExpr::new().with(p, 1.0).with(x, -t.p_max),
                RowSense::Le,
                t.p_max * eu,
            )?;
            for (fam, v) in [("phat_cap", phat), ("resup_cap", rup), ("resdn_cap", rdn)] {
                model.add_row(
                    row(fam),
                    B,
                    LinearExpr::new().with(v, 1.0).with(x, -span),
                    RowSense::Le,
                    span * eu,
                )?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::build_general_bounds;
    use crate::system::fixtures::*;

    fn built(hours: usize, n_units: usize) -> (ModelInstance, SystemData) {
        let mut s = system(vec![bus("B1", true)], vec![], hours);
        for i in 0..n_units {
            s.thermal.push(thermal(&format!("T{i}"), "B1", 0.1, 0.5));
        }
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        build_thermal(&s, &tm, &mut m).unwrap();
        (m, s)
    }

    #[test]
    fn row_counts_match_index_sets() {
        let (m, _) = built(3, 2);
        for fam in [
            "out_def", "res_up_su", "res_up_sd", "res_dn_cap", "commit_logic", "commit_cap", "ramp_up", "ramp_dn",
            "p_cap", "phat_cap", "resup_cap", "resdn_cap",
        ] {
            assert_eq!(m.row_count(fam), 3 * 2, "{fam}");
        }
        assert_eq!(m.row_count("res_up_req"), 3);
        assert_eq!(m.row_count("res_dn_req"), 3);
    }

    #[test]
    fn commitment_wraps_cyclically() {
        let (m, _) = built(3, 1);
        let row = m.rows().iter().find(|r| r.name == "commit_logic(rp1,k1,T0)").unwrap();
        let u3 = m.require("u(rp1,k3,T0)").unwrap();
        assert!(row.expr.terms().iter().any(|&(v, c)| v == u3 && c == -1.0));
    }

    #[test]
    fn constant_commitment_needs_no_startups() {
        let (m, _) = built(3, 1);
        let mut vals = vec![0.0; m.num_vars()];
        for k in 1..=3 {
            vals[m.require(&format!("u(rp1,k{k},T0)")).unwrap().0] = 1.0;
            vals[m.require(&format!("p(rp1,k{k},T0)")).unwrap().0] = 0.1;
        }
        vals[m.require("x(T0)").unwrap().0] = 0.0;
        let (worst, name) = m.max_violation(&vals);
        assert!(worst < 1e-12, "{name} violated by {worst}");
    }

    #[test]
    fn must_run_unit_has_no_headroom() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.thermal.push(thermal("NUC", "B1", 0.772, 0.772));
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        build_thermal(&s, &tm, &mut m).unwrap();
        let phat = m.variable(m.require("phat(rp1,k1,NUC)").unwrap());
        assert_eq!(phat.upper, 0.0);
    }

    #[test]
    fn nonpositive_ramp_rejected() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        let mut t = thermal("T", "B1", 0.0, 1.0);
        t.ramp_down = 0.0;
        s.thermal.push(t);
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        assert!(build_thermal(&s, &tm, &mut m).is_err());
    }
}
