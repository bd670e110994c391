use super::{at, names, p_name};
use crate::error::{Error, Result};
use crate::model::{Block, LinearExpr, ModelInstance, RowSense};
use crate::system::{Isf, SystemData};
use crate::temporal::{StepRef, TemporalStructure};

const B: Block = Block::DcOpf;

pub(crate) fn fp_dc_name(s: StepRef, from: &str, to: &str, c: &str) -> String {
    at(names::FP, s, &[from, to, c])
}

/// Net injection expression at a bus: generation − charging + non-served energy.
pub(crate) fn injection(system: &SystemData, model: &ModelInstance, s: StepRef, bus: &str) -> Result<LinearExpr> {
    let mut e = LinearExpr::new();
    for id in system
        .thermal
        .iter()
        .filter(|t| t.bus == bus)
        .map(|t| &t.id)
        .chain(system.renewable.iter().filter(|r| r.bus == bus).map(|r| &r.id))
    {
        e.add(model.require(&p_name(s, id))?, 1.0);
    }
    for st in system.storage.iter().filter(|st| st.bus == bus) {
        e.add(model.require(&p_name(s, &st.id))?, 1.0);
        e.add(model.require(&at(names::CS, s, &[&st.id]))?, -1.0);
    }
    e.add(model.require(&at(names::PNS, s, &[bus]))?, 1.0);
    Ok(e)
}

pub fn build_dc_opf(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
    isf: &Isf,
) -> Result<()> {
    let expected_buses = system.buses.len().saturating_sub(1);
    if isf.matrix.nrows() != system.lines.len() || isf.matrix.ncols() != expected_buses {
        return Err(Error::Build(format!(
            "ISF is {}x{}, network needs {}x{}",
            isf.matrix.nrows(),
            isf.matrix.ncols(),
            system.lines.len(),
            expected_buses
        )));
    }
    for s in temporal.steps() {
        for l in &system.lines {
            model.continuous(fp_dc_name(s, &l.from, &l.to, &l.circuit), -l.flow_limit, l.flow_limit)?;
        }
    }
    for s in temporal.steps() {
        let mut inj = Vec::with_capacity(isf.buses.len());
        for b in &isf.buses {
            inj.push((injection(system, model, s, b)?, system.active_demand(s.rp, s.k, b)));
        }
        for b in &system.buses {
            let mut e = injection(system, model, s, &b.id)?;
            for l in &system.lines {
                let f = model.require(&fp_dc_name(s, &l.from, &l.to, &l.circuit))?;
                if l.to == b.id {
                    e.add(f, 1.0);
                }
                if l.from == b.id {
                    e.add(f, -1.0);
                }
            }
            model.add_row(
                at("dc_bal", s, &[&b.id]),
                B,
                e,
                RowSense::Eq,
                system.active_demand(s.rp, s.k, &b.id),
            )?;
        }
        for (li, l) in system.lines.iter().enumerate() {
            let f = model.require(&fp_dc_name(s, &l.from, &l.to, &l.circuit))?;
            let mut e = LinearExpr::new().with(f, 1.0);
            let mut rhs = 0.0;
            for (n, (expr, d)) in inj.iter().enumerate() {
                let c = isf.matrix[(li, n)];
                if c != 0.0 {
                    e.extend(expr, -c);
                    rhs -= c * d;
                }
            }
            model.add_row(at("dc_flow", s, &[&l.from, &l.to, &l.circuit]), B, e, RowSense::Eq, rhs)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{build_general_bounds, build_thermal};
    use crate::system::compute_isf;
    use crate::system::fixtures::*;

    #[test]
    fn radial_flow_carries_remote_demand() {
        let mut s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B2", 0.1)], 1);
        s.thermal.push(thermal("G", "B1", 0.0, 2.0));
        s.demand.insert((1, 1, "B2".into()), (1.0, 0.0));
        let tm = s.temporal_structure().unwrap();
        let isf = compute_isf(&s).unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        build_thermal(&s, &tm, &mut m).unwrap();
        build_dc_opf(&s, &tm, &mut m, &isf).unwrap();
        let mut vals = vec![0.0; m.num_vars()];
        let set = |vals: &mut Vec<f64>, n: &str, v: f64| vals[m.require(n).unwrap().0] = v;
        set(&mut vals, "u(rp1,k1,G)", 1.0);
        set(&mut vals, "p(rp1,k1,G)", 1.0);
        set(&mut vals, "phat(rp1,k1,G)", 1.0);
        set(&mut vals, "fp(rp1,k1,B1,B2,c1)", 1.0);
        let bad: Vec<_> = m
            .rows()
            .iter()
            .filter(|r| r.block == Block::DcOpf && r.violation(&vals) > 1e-12)
            .map(|r| r.name.clone())
            .collect();
        assert!(bad.is_empty(), "{bad:?}");
        set(&mut vals, "fp(rp1,k1,B1,B2,c1)", 0.5);
        assert!(m.rows().iter().any(|r| r.name.starts_with("dc_flow") && r.violation(&vals) > 0.1));
    }

    #[test]
    fn mismatched_isf_rejected() {
        let s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B2", 0.1)], 1);
        let other = system(vec![bus("B1", true)], vec![], 1);
        let tm = s.temporal_structure().unwrap();
        let mut m = ModelInstance::new();
        build_general_bounds(&s, &tm, &mut m).unwrap();
        assert!(build_dc_opf(&s, &tm, &mut m, &compute_isf(&other).unwrap()).is_err());
    }
}
