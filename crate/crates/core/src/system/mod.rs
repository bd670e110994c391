//! Power-system dataset: network, candidate and existing units, demand and
//! availability profiles, plus the scalar settings of a study.
//!
//! Quantities are in GW / GWh / GVar, money in M€, network electrical data in
//! per-unit on the base power. Line apparent limits are kept in MVA as they
//! appear in the input files.

mod io;
mod isf;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::TemporalStructure;

pub use io::{load_system, write_system};
pub use isf::{compute_isf, Isf};

#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    pub id: String,
    pub g_shunt: f64,
    pub b_shunt: f64,
    /// tan(arccos(pf)): reactive power carried by each unit of shed active load.
    pub reactive_ratio: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub is_slack: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub circuit: String,
    pub conductance: f64,
    pub susceptance: f64,
    pub charging: f64,
    /// Active flow limit, GW.
    pub flow_limit: f64,
    /// Reactive/apparent limit, MVA.
    pub apparent_limit: f64,
    pub reactance: f64,
}

impl Line {
    /// `from.to.circuit`, the line label used inside variable names.
    pub fn label(&self) -> String {
        format!("{}.{}.{}", self.from, self.to, self.circuit)
    }

    pub fn apparent_limit_gva(&self) -> f64 {
        self.apparent_limit / 1000.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThermalUnit {
    pub id: String,
    pub tech: String,
    pub bus: String,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub inertia: f64,
    pub c_startup: f64,
    pub c_commit: f64,
    pub c_var: f64,
    pub c_inv: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub existing: u32,
    pub build_max: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenewableUnit {
    pub id: String,
    pub tech: String,
    pub bus: String,
    pub unit_size: f64,
    pub inertia: f64,
    pub c_om: f64,
    pub c_inv: f64,
    pub existing: u32,
    pub build_max: u32,
    pub profile_key: String,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StorageUnit {
    pub id: String,
    pub tech: String,
    pub bus: String,
    pub unit_size: f64,
    pub energy_to_power: f64,
    pub eff_charge: f64,
    pub eff_discharge: f64,
    pub min_soc_frac: f64,
    pub max_soc_frac: f64,
    pub inertia: f64,
    pub c_om: f64,
    pub c_inv: f64,
    pub existing: u32,
    pub build_max: u32,
    /// Reserve level at the first inter-period checkpoint and floor at the horizon end, GWh.
    pub initial_reserve: f64,
    pub is_hydro: bool,
    pub q_min: f64,
    pub q_max: f64,
}

impl StorageUnit {
    /// Energy capacity of one unit, GWh.
    pub fn energy_per_unit(&self) -> f64 {
        self.unit_size * self.energy_to_power
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactsDevice {
    pub id: String,
    pub bus: String,
    pub q_min: f64,
    pub q_max: f64,
    /// M€ per device-year.
    pub c_inv: f64,
    pub build_max: u32,
}

/// Inertia / RoCoF settings. None of these values come with the dataset
/// itself; the defaults are configuration choices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaConfig {
    #[serde(default = "default_f_base", rename = "f_base_hz")]
    pub f_base: f64,
    #[serde(default = "default_rocof", rename = "rocof_limit_hz_per_s")]
    pub rocof_limit: f64,
    /// Default disturbance ΔP in per-unit, used where no per-step override exists.
    #[serde(default = "default_disturbance", rename = "disturbance_pu")]
    pub disturbance: f64,
    #[serde(default = "default_inertia_cap", rename = "inertia_cap_s")]
    pub inertia_cap: f64,
    /// Per-(rp,k) disturbance overrides, 1-based indices.
    #[serde(skip)]
    pub disturbance_overrides: BTreeMap<(usize, usize), f64>,
    #[serde(default)]
    pub virtual_gain: VirtualGainReading,
}

/// How the numerator of the virtual-inertia gain is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VirtualGainReading {
    /// Gain = the VI unit's own output over total available VI capacity.
    #[default]
    OwnOutput,
    /// Gain = the VI unit's available capacity over total available VI capacity.
    AvailableCapacity,
}

fn default_f_base() -> f64 {
    50.0
}
fn default_rocof() -> f64 {
    1.0
}
fn default_disturbance() -> f64 {
    0.15
}
fn default_inertia_cap() -> f64 {
    30.0
}

impl Default for InertiaConfig {
    fn default() -> Self {
        Self {
            f_base: default_f_base(),
            rocof_limit: default_rocof(),
            disturbance: default_disturbance(),
            inertia_cap: default_inertia_cap(),
            disturbance_overrides: BTreeMap::new(),
            virtual_gain: VirtualGainReading::default(),
        }
    }
}

impl InertiaConfig {
    pub fn disturbance_at(&self, rp: usize, k: usize) -> f64 {
        self.disturbance_overrides
            .get(&(rp, k))
            .copied()
            .unwrap_or(self.disturbance)
    }

    /// Smallest inertia constant M satisfying the RoCoF row at (rp,k).
    pub fn required_inertia(&self, rp: usize, k: usize) -> f64 {
        self.disturbance_at(rp, k) * self.f_base / self.rocof_limit
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, v: f64| Err(Error::validation("inertia", format!("{field} = {v}")));
        if !(self.f_base > 0.0) {
            return bad("f_base_hz", self.f_base);
        }
        if !(self.rocof_limit > 0.0) {
            return bad("rocof_limit_hz_per_s", self.rocof_limit);
        }
        if !(self.inertia_cap > 0.0) {
            return bad("inertia_cap_s", self.inertia_cap);
        }
        if !(self.disturbance >= 0.0) {
            return bad("disturbance_pu", self.disturbance);
        }
        if let Some((&(rp, k), &v)) = self.disturbance_overrides.iter().find(|(_, v)| !(**v >= 0.0)) {
            return bad(&format!("disturbance(rp{rp},k{k})"), v);
        }
        Ok(())
    }
}

/// How the time axis of the dataset is laid out.
#[derive(Clone, Debug, PartialEq)]
pub enum TemporalLayout {
    /// Chronological hours, one representative period.
    Hourly { hours: usize, moving_window: usize },
    /// Representative periods with a day → rp assignment.
    Representative {
        steps_per_rp: usize,
        moving_window: usize,
        /// 1-based rp index per chronological day, in day order.
        assignments: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scalars {
    /// MVA.
    pub base_power: f64,
    /// rad.
    pub max_angle_diff: f64,
    pub reserve_up: f64,
    pub reserve_down: f64,
    pub reserve_cost_up: f64,
    pub reserve_cost_down: f64,
    /// M€/GWh.
    pub ens_cost: f64,
    pub kappa: f64,
}

impl Scalars {
    pub fn base_power_gva(&self) -> f64 {
        self.base_power / 1000.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemData {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub thermal: Vec<ThermalUnit>,
    pub renewable: Vec<RenewableUnit>,
    pub storage: Vec<StorageUnit>,
    pub facts: Vec<FactsDevice>,
    /// (rp, k, bus) → (D^P GW, D^Q GVar), 1-based rp and k.
    pub demand: BTreeMap<(usize, usize, String), (f64, f64)>,
    /// (profile_key, rp, k) → availability fraction.
    pub profiles: BTreeMap<(String, usize, usize), f64>,
    /// (storage id, rp, k) → inflow GWh per step.
    pub inflows: BTreeMap<(String, usize, usize), f64>,
    pub scalars: Scalars,
    pub inertia: InertiaConfig,
    pub layout: TemporalLayout,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SystemData {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack(&self) -> &Bus {
        self.buses
            .iter()
            .find(|b| b.is_slack)
            .expect("validated system has a slack bus")
    }

    pub fn active_demand(&self, rp: usize, k: usize, bus: &str) -> f64 {
        self.demand
            .get(&(rp, k, bus.to_string()))
            .map_or(0.0, |d| d.0)
    }

    pub fn reactive_demand(&self, rp: usize, k: usize, bus: &str) -> f64 {
        self.demand
            .get(&(rp, k, bus.to_string()))
            .map_or(0.0, |d| d.1)
    }

    pub fn total_demand(&self, rp: usize, k: usize) -> f64 {
        self.buses
            .iter()
            .map(|b| self.active_demand(rp, k, &b.id))
            .sum()
    }

    pub fn profile(&self, key: &str, rp: usize, k: usize) -> Option<f64> {
        self.profiles.get(&(key.to_string(), rp, k)).copied()
    }

    pub fn inflow(&self, storage: &str, rp: usize, k: usize) -> f64 {
        self.inflows
            .get(&(storage.to_string(), rp, k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn temporal_structure(&self) -> Result<TemporalStructure> {
        match &self.layout {
            TemporalLayout::Hourly {
                hours,
                moving_window,
            } => TemporalStructure::hourly_identity(*hours)?.with_moving_window(*moving_window),
            TemporalLayout::Representative {
                steps_per_rp,
                moving_window,
                assignments,
            } => TemporalStructure::representative(assignments, *steps_per_rp)?
                .with_moving_window(*moving_window),
        }
    }

    /// Units able to provide virtual inertia: renewables and storage with H > 0.
    pub fn virtual_inertia_units(&self) -> Vec<VirtualUnit<'_>> {
        let mut out: Vec<VirtualUnit<'_>> = self
            .renewable
            .iter()
            .filter(|r| r.inertia > 0.0)
            .map(VirtualUnit::Renewable)
            .collect();
        out.extend(
            self.storage
                .iter()
                .filter(|s| s.inertia > 0.0)
                .map(VirtualUnit::Storage),
        );
        out
    }

    /// Check every record invariant and cross reference.
    pub fn validate(&self) -> Result<()> {
        let temporal = self.temporal_structure()?;
        let (n_rp, n_k) = (temporal.num_rep_periods(), temporal.num_steps());

        let mut bus_ids = BTreeSet::new();
        for b in &self.buses {
            let rec = format!("bus {}", b.id);
            if !valid_id(&b.id) {
                return Err(Error::validation(rec, "id must be non-empty [A-Za-z0-9_]"));
            }
            if !bus_ids.insert(b.id.as_str()) {
                return Err(Error::validation(rec, "duplicate bus id"));
            }
            if !(b.v_min > 0.0) {
                return Err(Error::validation(rec, format!("v_min = {} must be > 0", b.v_min)));
            }
            if !(b.v_min <= b.v_max) {
                return Err(Error::validation(rec, format!("v_min = {} exceeds v_max = {}", b.v_min, b.v_max)));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.is_slack).count();
        if slacks != 1 {
            return Err(Error::validation("buses", format!("exactly one slack bus required, found {slacks}")));
        }
        let known_bus = |bus: &str, rec: &str| -> Result<()> {
            if bus_ids.contains(bus) {
                Ok(())
            } else {
                Err(Error::validation(rec.to_string(), format!("unknown bus {bus}")))
            }
        };

        let mut line_keys = BTreeSet::new();
        for l in &self.lines {
            let rec = format!("line {}", l.label());
            known_bus(&l.from, &rec)?;
            known_bus(&l.to, &rec)?;
            if !valid_id(&l.circuit) {
                return Err(Error::validation(rec, "circuit id must be non-empty [A-Za-z0-9_]"));
            }
            if l.from == l.to {
                return Err(Error::validation(rec, "from_bus equals to_bus"));
            }
            if !line_keys.insert((l.from.as_str(), l.to.as_str(), l.circuit.as_str())) {
                return Err(Error::validation(rec, "duplicate (from, to, circuit)"));
            }
            if !(l.flow_limit > 0.0) {
                return Err(Error::validation(rec, format!("flow_limit = {} must be > 0", l.flow_limit)));
            }
            if !(l.apparent_limit > 0.0) {
                return Err(Error::validation(rec, format!("apparent_limit = {} must be > 0", l.apparent_limit)));
            }
            if l.reactance == 0.0 || !l.reactance.is_finite() {
                return Err(Error::validation(rec, format!("reactance = {} must be nonzero", l.reactance)));
            }
        }

        let mut unit_ids = BTreeSet::new();
        let mut claim = |id: &str, rec: &str| -> Result<()> {
            if !valid_id(id) {
                return Err(Error::validation(rec.to_string(), "id must be non-empty [A-Za-z0-9_]"));
            }
            if !unit_ids.insert(id.to_string()) {
                return Err(Error::validation(rec.to_string(), "duplicate unit id"));
            }
            Ok(())
        };

        for t in &self.thermal {
            let rec = format!("thermal {}", t.id);
            claim(&t.id, &rec)?;
            known_bus(&t.bus, &rec)?;
            if !(0.0 <= t.p_min && t.p_min <= t.p_max) {
                return Err(Error::validation(rec, format!("p_min = {}, p_max = {} violate 0 <= p_min <= p_max", t.p_min, t.p_max)));
            }
            if !(t.q_min <= t.q_max) {
                return Err(Error::validation(rec, format!("q_min = {} exceeds q_max = {}", t.q_min, t.q_max)));
            }
            if !(t.inertia >= 0.0) {
                return Err(Error::validation(rec, format!("inertia = {} must be >= 0", t.inertia)));
            }
            if !(t.ramp_up > 0.0) {
                return Err(Error::validation(rec, format!("ramp_up = {} must be > 0", t.ramp_up)));
            }
            if !(t.ramp_down > 0.0) {
                return Err(Error::validation(rec, format!("ramp_down = {} must be > 0", t.ramp_down)));
            }
        }

        for r in &self.renewable {
            let rec = format!("renewable {}", r.id);
            claim(&r.id, &rec)?;
            known_bus(&r.bus, &rec)?;
            if !(r.unit_size > 0.0) {
                return Err(Error::validation(rec, format!("unit_size = {} must be > 0", r.unit_size)));
            }
            if !(r.inertia >= 0.0) {
                return Err(Error::validation(rec, format!("inertia = {} must be >= 0", r.inertia)));
            }
            if !(r.q_min <= r.q_max) {
                return Err(Error::validation(rec, format!("q_min = {} exceeds q_max = {}", r.q_min, r.q_max)));
            }
            for rp in 1..=n_rp {
                for k in 1..=n_k {
                    if self.profile(&r.profile_key, rp, k).is_none() {
                        return Err(Error::validation(rec, format!("profile {} has no value at rp {rp}, k {k}", r.profile_key)));
                    }
                }
            }
        }

        for s in &self.storage {
            let rec = format!("storage {}", s.id);
            claim(&s.id, &rec)?;
            known_bus(&s.bus, &rec)?;
            if !(s.unit_size > 0.0) {
                return Err(Error::validation(rec, format!("unit_size = {} must be > 0", s.unit_size)));
            }
            if !(s.energy_to_power > 0.0) {
                return Err(Error::validation(rec, format!("energy_to_power = {} must be > 0", s.energy_to_power)));
            }
            for (field, eff) in [("eff_charge", s.eff_charge), ("eff_discharge", s.eff_discharge)] {
                if !(eff > 0.0 && eff <= 1.0) {
                    return Err(Error::validation(rec, format!("{field} = {eff} must be in (0, 1]")));
                }
            }
            if !(0.0 <= s.min_soc_frac && s.min_soc_frac <= s.max_soc_frac && s.max_soc_frac <= 1.0) {
                return Err(Error::validation(rec, format!("min_soc_frac = {}, max_soc_frac = {} violate 0 <= min <= max <= 1", s.min_soc_frac, s.max_soc_frac)));
            }
            if !(s.inertia >= 0.0) {
                return Err(Error::validation(rec, format!("inertia = {} must be >= 0", s.inertia)));
            }
            if !(s.initial_reserve >= 0.0) {
                return Err(Error::validation(rec, format!("initial_reserve = {} must be >= 0", s.initial_reserve)));
            }
            if !(s.q_min <= s.q_max) {
                return Err(Error::validation(rec, format!("q_min = {} exceeds q_max = {}", s.q_min, s.q_max)));
            }
        }

        for f in &self.facts {
            let rec = format!("facts {}", f.id);
            claim(&f.id, &rec)?;
            known_bus(&f.bus, &rec)?;
            if !(f.q_min <= 0.0 && 0.0 <= f.q_max) {
                return Err(Error::validation(rec, format!("q_min = {}, q_max = {} violate q_min <= 0 <= q_max", f.q_min, f.q_max)));
            }
        }

        for ((rp, k, bus), (dp, _)) in &self.demand {
            let rec = format!("demand rp {rp}, k {k}, bus {bus}");
            known_bus(bus, &rec)?;
            if *rp == 0 || *rp > n_rp || *k == 0 || *k > n_k {
                return Err(Error::validation(rec, "index outside the temporal structure"));
            }
            if !(*dp >= 0.0) {
                return Err(Error::validation(rec, format!("dP = {dp} must be >= 0")));
            }
        }

        for ((key, rp, k), v) in &self.profiles {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::validation(format!("profile {key} rp {rp}, k {k}"), format!("value = {v} outside [0, 1]")));
            }
        }

        for ((s, rp, k), v) in &self.inflows {
            let rec = format!("inflow {s} rp {rp}, k {k}");
            if !self.storage.iter().any(|u| &u.id == s) {
                return Err(Error::validation(rec, format!("unknown storage {s}")));
            }
            if !(*v >= 0.0) {
                return Err(Error::validation(rec, format!("value = {v} must be >= 0")));
            }
        }

        let sc = &self.scalars;
        if !(sc.base_power > 0.0) {
            return Err(Error::validation("system", format!("base_power_mva = {} must be > 0", sc.base_power)));
        }
        if !(sc.max_angle_diff > 0.0) {
            return Err(Error::validation("system", format!("max_angle_diff_rad = {} must be > 0", sc.max_angle_diff)));
        }
        if !(0.0..=1.0).contains(&sc.kappa) {
            return Err(Error::validation("system", format!("kappa = {} outside [0, 1]", sc.kappa)));
        }
        for (field, v) in [
            ("reserve_up", sc.reserve_up),
            ("reserve_down", sc.reserve_down),
            ("reserve_cost_up", sc.reserve_cost_up),
            ("reserve_cost_down", sc.reserve_cost_down),
            ("ens_cost", sc.ens_cost),
        ] {
            if !(v >= 0.0) {
                return Err(Error::validation("system", format!("{field} = {v} must be >= 0")));
            }
        }
        self.inertia.validate()
    }
}

/// A unit that can emulate inertia.
#[derive(Clone, Copy, Debug)]
pub enum VirtualUnit<'a> {
    Renewable(&'a RenewableUnit),
    Storage(&'a StorageUnit),
}

impl<'a> VirtualUnit<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            VirtualUnit::Renewable(r) => &r.id,
            VirtualUnit::Storage(s) => &s.id,
        }
    }

    pub fn unit_size(&self) -> f64 {
        match self {
            VirtualUnit::Renewable(r) => r.unit_size,
            VirtualUnit::Storage(s) => s.unit_size,
        }
    }

    pub fn inertia(&self) -> f64 {
        match self {
            VirtualUnit::Renewable(r) => r.inertia,
            VirtualUnit::Storage(s) => s.inertia,
        }
    }

    pub fn existing(&self) -> u32 {
        match self {
            VirtualUnit::Renewable(r) => r.existing,
            VirtualUnit::Storage(s) => s.existing,
        }
    }

    pub fn build_max(&self) -> u32 {
        match self {
            VirtualUnit::Renewable(r) => r.build_max,
            VirtualUnit::Storage(s) => s.build_max,
        }
    }

    /// Availability factor at (rp,k); storage is always available.
    pub fn availability(&self, system: &SystemData, rp: usize, k: usize) -> Option<f64> {
        match self {
            VirtualUnit::Renewable(r) => system.profile(&r.profile_key, rp, k),
            VirtualUnit::Storage(_) => Some(1.0),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn bus(id: &str, slack: bool) -> Bus {
        Bus {
            id: id.into(),
            g_shunt: 0.0,
            b_shunt: 0.0,
            reactive_ratio: 0.0,
            v_min: 0.9,
            v_max: 1.1,
            is_slack: slack,
        }
    }

    pub fn line(from: &str, to: &str, x: f64) -> Line {
        Line {
            from: from.into(),
            to: to.into(),
            circuit: "c1".into(),
            conductance: 0.0,
            susceptance: -1.0 / x,
            charging: 0.0,
            flow_limit: 10.0,
            apparent_limit: 10_000.0,
            reactance: x,
        }
    }

    pub fn thermal(id: &str, bus: &str, p_min: f64, p_max: f64) -> ThermalUnit {
        ThermalUnit {
            id: id.into(),
            tech: "gas".into(),
            bus: bus.into(),
            p_min,
            p_max,
            q_min: 0.0,
            q_max: 0.0,
            inertia: 4.0,
            c_startup: 0.0,
            c_commit: 0.0,
            c_var: 0.03,
            c_inv: 0.0,
            ramp_up: p_max.max(1e-3),
            ramp_down: p_max.max(1e-3),
            existing: 1,
            build_max: 0,
        }
    }

    pub fn scalars() -> Scalars {
        Scalars {
            base_power: 100.0,
            max_angle_diff: 0.5,
            reserve_up: 0.0,
            reserve_down: 0.0,
            reserve_cost_up: 0.0,
            reserve_cost_down: 0.0,
            ens_cost: 10.0,
            kappa: 0.0,
        }
    }

    /// Empty hourly system over `hours` steps.
    pub fn system(buses: Vec<Bus>, lines: Vec<Line>, hours: usize) -> SystemData {
        SystemData {
            buses,
            lines,
            thermal: vec![],
            renewable: vec![],
            storage: vec![],
            facts: vec![],
            demand: BTreeMap::new(),
            profiles: BTreeMap::new(),
            inflows: BTreeMap::new(),
            scalars: scalars(),
            inertia: InertiaConfig::default(),
            layout: TemporalLayout::Hourly {
                hours,
                moving_window: hours,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_bus_without_units_is_valid() {
        let s = system(vec![bus("B1", true)], vec![], 1);
        s.validate().unwrap();
    }

    #[test]
    fn unknown_bus_is_named() {
        let s = system(vec![bus("B1", true), bus("B2", false)], vec![line("B1", "B99", 0.1)], 1);
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("unknown bus B99"), "{err}");
    }

    #[test]
    fn slack_count_enforced() {
        let s = system(vec![bus("B1", false)], vec![], 1);
        assert!(s.validate().is_err());
        let s = system(vec![bus("B1", true), bus("B2", true)], vec![], 1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn thermal_invariants() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.thermal.push(thermal("T1", "B1", 0.5, 0.2));
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("thermal T1"), "{err}");
        s.thermal[0] = thermal("T1", "B1", 0.1, 0.2);
        s.thermal[0].ramp_up = 0.0;
        assert!(s.validate().unwrap_err().to_string().contains("ramp_up"));
    }

    #[test]
    fn facts_must_straddle_zero() {
        let mut s = system(vec![bus("B1", true)], vec![], 1);
        s.facts.push(FactsDevice {
            id: "F1".into(),
            bus: "B1".into(),
            q_min: 0.1,
            q_max: 0.2,
            c_inv: 1.0,
            build_max: 1,
        });
        assert!(s.validate().is_err());
    }

    #[test]
    fn inertia_requirement_from_defaults() {
        // 0.15 pu at 50 Hz and 1 Hz/s needs 7.5 s.
        let cfg = InertiaConfig::default();
        assert!((cfg.required_inertia(1, 1) - 7.5).abs() < 1e-12);
    }
}
