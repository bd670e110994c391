//! Constraint blocks of the planning model. Each builder registers the
//! variables it owns and the rows of its block; builders that depend on
//! variables of another block look them up by name.

mod dcopf;
mod general;
mod renewable;
mod storage;
mod thermal;

pub use dcopf::build_dc_opf;
pub(crate) use dcopf::injection;
pub use general::{build_general_bounds, build_objective, cost_terms, CostGroup};
pub use renewable::{build_clean_policy, build_renewable, build_renewable_policy};
pub use storage::{build_storage, StorageMode};
pub use thermal::build_thermal;

use crate::model::ident;
use crate::temporal::StepRef;

/// `family(rpN,kM,rest...)`.
pub(crate) fn at(family: &str, s: StepRef, rest: &[&str]) -> String {
    let rp = s.rp_label();
    let k = s.k_label();
    let mut parts: Vec<&str> = vec![&rp, &k];
    parts.extend_from_slice(rest);
    ident(family, &parts)
}

/// Variable and row families, kept in one place so census tests and reports
/// agree with the builders.
pub mod names {
    pub const PNS: &str = "pns";
    pub const X: &str = "x";
    pub const P: &str = "p";
    pub const PHAT: &str = "phat";
    pub const U: &str = "u";
    pub const Y: &str = "y";
    pub const Z: &str = "z";
    pub const RES_UP: &str = "resup";
    pub const RES_DN: &str = "resdn";
    pub const CS: &str = "cs";
    pub const BCHD: &str = "bchd";
    pub const SP: &str = "sp";
    pub const INTRA: &str = "intra";
    pub const INTER: &str = "inter";
    pub const FP: &str = "fp";
    pub const FQ: &str = "fq";
    pub const Q: &str = "q";
}

/// `p(rp,k,g)` for any generating unit.
pub(crate) fn p_name(s: StepRef, g: &str) -> String {
    at(names::P, s, &[g])
}

pub(crate) fn x_name(g: &str) -> String {
    ident(names::X, &[g])
}
