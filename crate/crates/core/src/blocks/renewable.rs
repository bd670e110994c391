use super::{at, p_name, x_name};
use crate::error::{Error, Result};
use crate::model::{Block, LinearExpr, ModelInstance, RowSense};
use crate::system::SystemData;
use crate::temporal::TemporalStructure;

const B: Block = Block::Renewable;

/// Renewable availability bounds plus the clean-production row.
pub fn build_renewable_policy(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
    kappa: f64,
) -> Result<()> {
    build_renewable(system, temporal, model)?;
    build_clean_policy(system, temporal, model, kappa)
}

pub fn build_renewable(system: &SystemData, temporal: &TemporalStructure, model: &mut ModelInstance) -> Result<()> {
    for r in &system.renewable {
        let id = r.id.as_str();
        let eu = f64::from(r.existing);
        let x = model.require(&x_name(id))?;
        for s in temporal.steps() {
            let pf = system.profile(&r.profile_key, s.rp, s.k).ok_or_else(|| {
                Error::Build(format!("renewable {id}: profile {} has no value at {s:?}", r.profile_key))
            })?;
            let scale = r.unit_size * pf;
            let p = model.continuous(p_name(s, id), 0.0, scale * f64::from(r.existing + r.build_max))?;
            model.add_row(
                at("r_cap", s, &[id]),
                B,
                LinearExpr::new().with(p, 1.0).with(x, -scale),
                RowSense::Le,
                scale * eu,
            )?;
        }
    }
    Ok(())
}

/// Weighted thermal energy ≤ (1 − κ) × weighted demand.
pub fn build_clean_policy(
    system: &SystemData,
    temporal: &TemporalStructure,
    model: &mut ModelInstance,
    kappa: f64,
) -> Result<()> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Build(format!("kappa = {kappa} outside [0, 1]")));
    }
    let mut lhs = LinearExpr::new();
    let mut demand = 0.0;
    for s in temporal.steps() {
        let w = temporal.weight(s);
        for t in &system.thermal {
            lhs.add(model.require(&p_name(s, &t.id))?, w);
        }
        demand += w * system.total_demand(s.rp, s.k);
    }
    model.add_row("clean", B, lhs, RowSense::Le, (1.0 - kappa) * demand)
}
