//! Solver-agnostic optimisation problem: typed variables with bounds, linear
//! rows, rotated second-order cones and a linear objective (always minimised).
//!
//! Every variable and row carries a canonical name `family(idx1,idx2,...)` so
//! solutions can be addressed semantically and file exports are reproducible.

mod expr;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::LinearExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_discrete(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn family(&self) -> &str {
        family_of(&self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// Thematic block a row belongs to; the case taxonomy is expressed in blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    General,
    Thermal,
    Storage,
    Renewable,
    DcOpf,
    Inertia,
    AcOpf,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::General,
        Block::Thermal,
        Block::Storage,
        Block::Renewable,
        Block::DcOpf,
        Block::Inertia,
        Block::AcOpf,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Block::General => "general",
            Block::Thermal => "thermal",
            Block::Storage => "storage",
            Block::Renewable => "renewable",
            Block::DcOpf => "dc-opf",
            Block::Inertia => "inertia",
            Block::AcOpf => "ac-opf",
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub block: Block,
    pub expr: LinearExpr,
    pub sense: RowSense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn family(&self) -> &str {
        family_of(&self.name)
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.evaluate(values);
        match self.sense {
            RowSense::Le => (lhs - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - lhs).max(0.0),
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Rotated cone `Σ squares² ≤ product.0 · product.1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeConstraint {
    pub name: String,
    pub block: Block,
    pub squares: Vec<VarId>,
    pub product: (VarId, VarId),
}

impl ConeConstraint {
    pub fn family(&self) -> &str {
        family_of(&self.name)
    }

    /// `product − Σ squares²`; non-negative when the point is inside the cone.
    pub fn slack(&self, values: &[f64]) -> f64 {
        let sq: f64 = self.squares.iter().map(|v| values[v.0].powi(2)).sum();
        values[self.product.0 .0] * values[self.product.1 .0] - sq
    }
}

/// Canonical `family(a,b,c)` identifier.
pub fn ident(family: &str, parts: &[&str]) -> String {
    if parts.is_empty() {
        return family.to_string();
    }
    let mut s = String::with_capacity(family.len() + 2 + parts.iter().map(|p| p.len() + 1).sum::<usize>());
    s.push_str(family);
    s.push('(');
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(p);
    }
    s.push(')');
    s
}

pub fn family_of(name: &str) -> &str {
    name.split_once('(').map_or(name, |(f, _)| f)
}

pub fn indices_of(name: &str) -> Vec<&str> {
    match name.split_once('(') {
        Some((_, rest)) => rest.trim_end_matches(')').split(',').collect(),
        None => Vec::new(),
    }
}

#[derive(Clone, Debug, Default)]
pub struct ModelInstance {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    rows: Vec<LinearConstraint>,
    cones: Vec<ConeConstraint>,
    constraint_names: HashMap<String, usize>,
    objective: LinearExpr,
}

impl ModelInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<VarId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Build(format!("duplicate variable {name}")));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Build(format!("variable {name}: invalid bounds [{lower}, {upper}]")));
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(Error::Build(format!("binary {name} with bounds [{lower}, {upper}]")));
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Existing continuous variable by name, or a new one with the given bounds.
    pub fn continuous_shared(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        let name = name.into();
        match self.var(&name) {
            Some(id) => Ok(id),
            None => self.continuous(name, lower, upper),
        }
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    /// Look up a variable a builder depends on.
    pub fn require(&self, name: &str) -> Result<VarId> {
        self.var(name)
            .ok_or_else(|| Error::Build(format!("missing variable {name}")))
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn has_family(&self, family: &str) -> bool {
        self.vars.iter().any(|v| v.family() == family)
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        let v = &mut self.vars[id.0];
        if lower > upper {
            return Err(Error::Build(format!("variable {}: invalid bounds [{lower}, {upper}]", v.name)));
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_kind(&mut self, id: VarId, kind: VarKind) {
        self.vars[id.0].kind = kind;
    }

    fn claim_name(&mut self, name: &str) -> Result<()> {
        if self.constraint_names.contains_key(name) {
            return Err(Error::Build(format!("duplicate constraint {name}")));
        }
        self.constraint_names
            .insert(name.to_string(), self.rows.len() + self.cones.len());
        Ok(())
    }

    /// Add `expr sense rhs`; any constant inside `expr` moves to the right-hand side.
    pub fn add_row(&mut self, name: impl Into<String>, block: Block, expr: LinearExpr, sense: RowSense, rhs: f64) -> Result<()> {
        let name = name.into();
        for &(v, _) in expr.terms() {
            if v.0 >= self.vars.len() {
                return Err(Error::Build(format!("row {name} references unknown variable")));
            }
        }
        self.claim_name(&name)?;
        let normalized = expr.normalized();
        let rhs = rhs - normalized.constant_term();
        let expr = LinearExpr::from_terms(normalized.terms().iter().copied());
        self.rows.push(LinearConstraint {
            name,
            block,
            expr,
            sense,
            rhs,
        });
        Ok(())
    }

    pub fn add_cone(&mut self, name: impl Into<String>, block: Block, squares: Vec<VarId>, product: (VarId, VarId)) -> Result<()> {
        let name = name.into();
        self.claim_name(&name)?;
        self.cones.push(ConeConstraint {
            name,
            block,
            squares,
            product,
        });
        Ok(())
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn cones(&self) -> &[ConeConstraint] {
        &self.cones
    }

    pub fn set_objective(&mut self, objective: LinearExpr) {
        self.objective = objective.normalized();
    }

    pub fn objective(&self) -> &LinearExpr {
        &self.objective
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind.is_discrete())
    }

    /// Variables ordered by family then index tuple; the order used by file exports.
    pub fn canonical_order(&self) -> Vec<VarId> {
        let mut ids: Vec<VarId> = (0..self.vars.len()).map(VarId).collect();
        ids.sort_by(|a, b| {
            let (na, nb) = (&self.vars[a.0].name, &self.vars[b.0].name);
            (family_of(na), indices_of(na)).cmp(&(family_of(nb), indices_of(nb)))
        });
        ids
    }

    /// Rows and cones per family, in a stable order.
    pub fn census(&self) -> BTreeMap<String, (Block, usize)> {
        let mut out: BTreeMap<String, (Block, usize)> = BTreeMap::new();
        for r in &self.rows {
            out.entry(r.family().to_string()).or_insert((r.block, 0)).1 += 1;
        }
        for c in &self.cones {
            out.entry(c.family().to_string()).or_insert((c.block, 0)).1 += 1;
        }
        out
    }

    pub fn row_count(&self, family: &str) -> usize {
        self.rows.iter().filter(|r| r.family() == family).count()
            + self.cones.iter().filter(|c| c.family() == family).count()
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut b: Vec<Block> = self
            .rows
            .iter()
            .map(|r| r.block)
            .chain(self.cones.iter().map(|c| c.block))
            .collect();
        b.sort();
        b.dedup();
        b
    }

    /// Worst violation over bounds, rows, cones and integrality for a dense point.
    pub fn max_violation(&self, values: &[f64]) -> (f64, String) {
        let mut worst = (0.0, String::new());
        let mut bump = |v: f64, name: &str| {
            if v > worst.0 {
                worst = (v, name.to_string());
            }
        };
        for (i, var) in self.vars.iter().enumerate() {
            let x = values[i];
            bump((var.lower - x).max(0.0), &var.name);
            bump((x - var.upper).max(0.0), &var.name);
            if var.kind.is_discrete() {
                bump((x - x.round()).abs(), &var.name);
            }
        }
        for r in &self.rows {
            bump(r.violation(values), &r.name);
        }
        for c in &self.cones {
            bump((-c.slack(values)).max(0.0), &c.name);
        }
        worst
    }

    /// Dense value vector from a name→value map; unknown names are ignored, missing ones are 0.
    pub fn dense_values(&self, values: &BTreeMap<String, f64>) -> Vec<f64> {
        self.vars
            .iter()
            .map(|v| values.get(&v.name).copied().unwrap_or(0.0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_follow_grammar() {
        assert_eq!(ident("u", &["rp1", "k2", "CCGT"]), "u(rp1,k2,CCGT)");
        assert_eq!(family_of("u(rp1,k2,CCGT)"), "u");
        assert_eq!(indices_of("u(rp1,k2,CCGT)"), vec!["rp1", "k2", "CCGT"]);
        assert_eq!(ident("kappa", &[]), "kappa");
    }

    #[test]
    fn duplicate_and_bad_bounds_rejected() {
        let mut m = ModelInstance::new();
        m.continuous("x", 0.0, 1.0).unwrap();
        assert!(m.continuous("x", 0.0, 1.0).is_err());
        assert!(m.continuous("y", 2.0, 1.0).is_err());
        assert!(m.add_var("b", VarKind::Binary, 0.0, 2.0).is_err());
    }

    #[test]
    fn constant_moves_to_rhs() {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let e = LinearExpr::constant(2.0).with(x, 1.0);
        m.add_row("r", Block::General, e, RowSense::Le, 5.0).unwrap();
        assert_eq!(m.rows()[0].rhs, 3.0);
        assert!(m.add_row("r", Block::General, LinearExpr::new(), RowSense::Le, 0.0).is_err());
    }

    #[test]
    fn violation_and_census() {
        let mut m = ModelInstance::new();
        let x = m.continuous("x", 0.0, 10.0).unwrap();
        let y = m.continuous("y", 0.0, 10.0).unwrap();
        let z = m.continuous("z", 0.0, 10.0).unwrap();
        m.add_row("bal(a)", Block::DcOpf, LinearExpr::new().with(x, 1.0), RowSense::Ge, 3.0).unwrap();
        m.add_row("bal(b)", Block::DcOpf, LinearExpr::new().with(y, 1.0), RowSense::Eq, 1.0).unwrap();
        m.add_cone("soc(a)", Block::AcOpf, vec![x], (y, z)).unwrap();
        let census = m.census();
        assert_eq!(census["bal"], (Block::DcOpf, 2));
        assert_eq!(census["soc"], (Block::AcOpf, 1));
        let (v, _) = m.max_violation(&[3.0, 1.0, 9.0]);
        assert_eq!(v, 0.0);
        let (v, name) = m.max_violation(&[3.0, 1.0, 1.0]);
        assert_eq!(name, "soc(a)");
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_order_sorts_by_family_then_indices() {
        let mut m = ModelInstance::new();
        m.continuous("p(rp1,k2)", 0.0, 1.0).unwrap();
        m.continuous("cs(rp1,k1)", 0.0, 1.0).unwrap();
        m.continuous("p(rp1,k1)", 0.0, 1.0).unwrap();
        let names: Vec<_> = m
            .canonical_order()
            .into_iter()
            .map(|v| m.variable(v).name.clone())
            .collect();
        assert_eq!(names, ["cs(rp1,k1)", "p(rp1,k1)", "p(rp1,k2)"]);
    }
}
