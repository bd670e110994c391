//! Case assembly, the multi-stage ex-post procedures and run reporting.

mod metrics;
mod rundir;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blocks::{
    build_clean_policy, build_dc_opf, build_general_bounds, build_objective, build_renewable, build_storage,
    build_thermal, names,
};
use crate::error::{Error, Result};
use crate::inertia::build_inertia;
use crate::model::{family_of, Block, ModelInstance};
use crate::socp::{build_socp, SocpOptions};
use crate::solver::{fix_variables, solve, FixMode, Solution, SolverRequest};
use crate::system::{compute_isf, InertiaConfig, SystemData};
use crate::temporal::TemporalStructure;

pub use metrics::{compute_metrics, CapacityRow, Metrics, RunReport, REPORT_VERSION};
pub use rundir::{read_run_spec, read_solution, write_model_only, write_run, write_solution, RunFiles, RunSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Bc,
    Ic,
    Rc,
    Lego,
}

impl CaseKind {
    pub const ALL: [CaseKind; 4] = [CaseKind::Bc, CaseKind::Ic, CaseKind::Rc, CaseKind::Lego];

    pub fn has_dc(self) -> bool {
        matches!(self, CaseKind::Bc | CaseKind::Ic)
    }

    pub fn has_ac(self) -> bool {
        !self.has_dc()
    }

    pub fn has_inertia(self) -> bool {
        matches!(self, CaseKind::Ic | CaseKind::Lego)
    }

    /// Constraint blocks the case is made of.
    pub fn blocks(self) -> Vec<Block> {
        let mut b = vec![Block::General, Block::Thermal, Block::Storage, Block::Renewable];
        b.push(if self.has_dc() { Block::DcOpf } else { Block::AcOpf });
        if self.has_inertia() {
            b.push(Block::Inertia);
        }
        b.sort();
        b
    }

    /// Same network model with the inertia block added or removed.
    pub fn with_inertia(self, on: bool) -> CaseKind {
        match (self.has_dc(), on) {
            (true, false) => CaseKind::Bc,
            (true, true) => CaseKind::Ic,
            (false, false) => CaseKind::Rc,
            (false, true) => CaseKind::Lego,
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::Bc => "bc",
            CaseKind::Ic => "ic",
            CaseKind::Rc => "rc",
            CaseKind::Lego => "lego",
        })
    }
}

impl FromStr for CaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bc" => Ok(CaseKind::Bc),
            "ic" => Ok(CaseKind::Ic),
            "rc" => Ok(CaseKind::Rc),
            "lego" => Ok(CaseKind::Lego),
            other => Err(Error::Case(format!("unknown case kind '{other}' (bc, ic, rc, lego)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Native,
    OpsOnly,
    AddInvestments,
    ExPostAc,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Native => "native",
            RunMode::OpsOnly => "ops-only",
            RunMode::AddInvestments => "add-investments",
            RunMode::ExPostAc => "ex-post-ac",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub kind: CaseKind,
    /// Clean-production fraction; `None` leaves the clean row out.
    pub kappa: Option<f64>,
    pub inertia: InertiaConfig,
    #[serde(default)]
    pub apparent_cone: bool,
}

impl CaseSpec {
    pub fn new(kind: CaseKind, kappa: Option<f64>) -> Self {
        Self {
            kind,
            kappa,
            inertia: InertiaConfig::default(),
            apparent_cone: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.kappa {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::Case(format!("kappa = {k} outside [0, 1]")));
            }
        }
        if self.kind.has_inertia() {
            self.inertia.validate()?;
        }
        Ok(())
    }
}

pub fn assemble_case(spec: &CaseSpec, system: &SystemData, temporal: &TemporalStructure) -> Result<ModelInstance> {
    spec.validate()?;
    system.validate()?;
    let mut m = ModelInstance::new();
    build_general_bounds(system, temporal, &mut m)?;
    build_thermal(system, temporal, &mut m)?;
    build_storage(system, temporal, &mut m)?;
    build_renewable(system, temporal, &mut m)?;
    if let Some(k) = spec.kappa {
        build_clean_policy(system, temporal, &mut m, k)?;
    }
    if spec.kind.has_dc() {
        let isf = compute_isf(system)?;
        build_dc_opf(system, temporal, &mut m, &isf)?;
    } else {
        build_socp(
            system,
            temporal,
            &mut m,
            SocpOptions {
                apparent_cone: spec.apparent_cone,
            },
        )?;
    }
    if spec.kind.has_inertia() {
        build_inertia(system, temporal, &mut m, &spec.inertia)?;
    }
    build_objective(system, temporal, &mut m)?;
    Ok(m)
}

/// Everything produced by one solve.
#[derive(Clone, Debug)]
pub struct CaseRun {
    pub spec: CaseSpec,
    pub mode: RunMode,
    pub model: ModelInstance,
    pub solution: Solution,
    pub report: RunReport,
}

fn finish(
    spec: &CaseSpec,
    mode: RunMode,
    model: ModelInstance,
    solution: Solution,
    system: &SystemData,
    temporal: &TemporalStructure,
    base_cost: Option<f64>,
) -> CaseRun {
    let report = RunReport::new(spec, mode, &model, &solution, system, temporal, base_cost);
    CaseRun {
        spec: spec.clone(),
        mode,
        model,
        solution,
        report,
    }
}

pub fn run_case(
    spec: &CaseSpec,
    system: &SystemData,
    temporal: &TemporalStructure,
    request: &SolverRequest,
) -> Result<CaseRun> {
    let model = assemble_case(spec, system, temporal)?;
    let solution = solve(&model, request)?;
    Ok(finish(spec, RunMode::Native, model, solution, system, temporal, None))
}

/// Investment decisions `x(g)` of a solution.
pub fn investments(solution: &Solution) -> BTreeMap<String, f64> {
    solution
        .values
        .iter()
        .filter(|(n, _)| family_of(n) == names::X)
        .map(|(n, &v)| (n.clone(), v))
        .collect()
}

fn require_solved(base: &Solution) -> Result<()> {
    if !base.status.has_solution() {
        return Err(Error::Case(format!("base run has no solution (status {})", base.status)));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InertiaExPost {
    /// All investments fixed at the base values; only operation changes.
    OpsOnly,
    /// Investments lower-bounded at the base values; additions allowed.
    AddInvestments,
}

/// Re-run a DC base plan with the inertia block added.
///
/// In ops-only mode the clean row is left out unless `enforce_clean` is set,
/// so the achieved share can be reported against the target.
pub fn run_ex_post_inertia(
    base: &Solution,
    mode: InertiaExPost,
    spec: &CaseSpec,
    enforce_clean: bool,
    system: &SystemData,
    temporal: &TemporalStructure,
    request: &SolverRequest,
) -> Result<CaseRun> {
    require_solved(base)?;
    let mut spec = spec.clone();
    spec.kind = spec.kind.with_inertia(true);
    let target = spec.kappa;
    let (fix, run_mode) = match mode {
        InertiaExPost::OpsOnly => {
            if !enforce_clean {
                spec.kappa = None;
            }
            (FixMode::Fix, RunMode::OpsOnly)
        }
        InertiaExPost::AddInvestments => (FixMode::LowerBound, RunMode::AddInvestments),
    };
    let model = assemble_case(&spec, system, temporal)?;
    let model = fix_variables(&model, &investments(base), fix)?;
    let solution = solve(&model, request)?;
    spec.kappa = target;
    Ok(finish(&spec, run_mode, model, solution, system, temporal, Some(base.objective)))
}

/// Re-run a DC base plan under the AC relaxation with investments
/// lower-bounded at the base. FACTS devices are free unless `allow_facts`
/// is off, in which case they are fixed at zero.
pub fn run_ex_post_ac(
    base: &Solution,
    spec: &CaseSpec,
    allow_facts: bool,
    system: &SystemData,
    temporal: &TemporalStructure,
    request: &SolverRequest,
) -> Result<CaseRun> {
    require_solved(base)?;
    let mut spec = spec.clone();
    spec.kind = if spec.kind.has_inertia() { CaseKind::Lego } else { CaseKind::Rc };
    let model = assemble_case(&spec, system, temporal)?;
    let facts: Vec<String> = system.facts.iter().map(|f| crate::model::ident(names::X, &[&f.id])).collect();
    let mut lower = investments(base);
    lower.retain(|n, _| !facts.contains(n));
    let mut model = fix_variables(&model, &lower, FixMode::LowerBound)?;
    if !allow_facts {
        let zero: BTreeMap<String, f64> = facts.into_iter().map(|n| (n, 0.0)).collect();
        model = fix_variables(&model, &zero, FixMode::Fix)?;
    }
    let solution = solve(&model, request)?;
    Ok(finish(&spec, RunMode::ExPostAc, model, solution, system, temporal, Some(base.objective)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_blocks() {
        assert!(CaseKind::Bc.blocks().contains(&Block::DcOpf));
        assert!(!CaseKind::Bc.blocks().contains(&Block::Inertia));
        assert!(CaseKind::Lego.blocks().contains(&Block::AcOpf));
        assert!(CaseKind::Lego.blocks().contains(&Block::Inertia));
        assert_eq!(CaseKind::Rc.with_inertia(true), CaseKind::Lego);
        assert_eq!(CaseKind::Ic.with_inertia(false), CaseKind::Bc);
    }

    #[test]
    fn kappa_outside_unit_interval() {
        assert!(CaseSpec::new(CaseKind::Bc, Some(1.2)).validate().is_err());
        assert!(CaseSpec::new(CaseKind::Bc, None).validate().is_ok());
        assert!("dc".parse::<CaseKind>().is_err());
    }
}
