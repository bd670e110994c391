//! One line per acceptance criterion. Exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gep_core::model::Block;
use gep_core::oracle;
use gep_core::solver::{solve, SolverId, SolverRequest, Status};
use gep_core::system::{compute_isf, load_system, Bus, Line, SystemData};
use gep_core::workflows::{
    assemble_case, compute_metrics, run_case, run_ex_post_ac, run_ex_post_inertia, CaseKind, CaseRun, CaseSpec,
    InertiaExPost,
};

type Outcome = Result<String, String>;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn linearization() -> Outcome {
    let t = Instant::now();
    let (mut points, mut worst) = (0, 0.0f64);
    for seed in 0..50 {
        let (sys, _) = oracle::random_inertia_point(seed);
        let r = oracle::check_linearization_enumerated(&sys, &sys.inertia, seed, 1e-6).map_err(|e| e.to_string())?;
        if let Some(m) = r.mismatches.first() {
            return Err(format!("seed {seed}: {} expected {} got [{}, {}]", m.variable, m.expected, m.min, m.max));
        }
        points += r.points;
        worst = worst.max(r.max_error);
    }
    let el = t.elapsed();
    if el > Duration::from_secs(60) {
        return Err(format!("took {:.1} s", el.as_secs_f64()));
    }
    Ok(format!("50 instances, {points} integer points, max error {worst:.1e}, {:.1} s", el.as_secs_f64()))
}

fn brute_force() -> Outcome {
    let t = Instant::now();
    let mut msg = Vec::new();
    for kind in [CaseKind::Bc, CaseKind::Ic] {
        let (mut feasible, mut infeasible, mut seed) = (0, 0, 0u64);
        while feasible < 50 {
            let system = oracle::random_tiny(seed);
            let temporal = system.temporal_structure().map_err(|e| e.to_string())?;
            let spec = CaseSpec {
                inertia: system.inertia.clone(),
                ..CaseSpec::new(kind, None)
            };
            let model = assemble_case(&spec, &system, &temporal).map_err(|e| e.to_string())?;
            let bf = oracle::brute_force_optimum(&model, &system, &temporal).map_err(|e| e.to_string())?;
            let milp = solve(&model, &SolverRequest::with_solver(SolverId::Highs)).map_err(|e| e.to_string())?;
            match (bf.objective, milp.status) {
                (None, Status::Infeasible) => infeasible += 1,
                (Some(o), Status::Optimal) if (o - milp.objective).abs() <= 1e-6 * o.abs().max(1e-9) => feasible += 1,
                (o, s) => return Err(format!("{kind} seed {seed}: enumeration {o:?}, solver {s} {}", milp.objective)),
            }
            seed += 1;
        }
        msg.push(format!("{kind} 50 optima agree ({infeasible} agreed infeasible)"));
    }
    let el = t.elapsed();
    if el > Duration::from_secs(600) {
        return Err(format!("took {:.1} s", el.as_secs_f64()));
    }
    Ok(format!("{}, {:.1} s", msg.join(", "), el.as_secs_f64()))
}

fn random_network(rng: &mut ChaCha8Rng) -> SystemData {
    let n = rng.random_range(2..=20);
    let buses: Vec<Bus> = (0..n)
        .map(|i| Bus {
            id: format!("N{i}"),
            g_shunt: 0.0,
            b_shunt: 0.0,
            reactive_ratio: 0.0,
            v_min: 0.9,
            v_max: 1.1,
            is_slack: i == 0,
        })
        .collect();
    let mut lines = Vec::new();
    let edge = |a: usize, b: usize, circuit: usize, rng: &mut ChaCha8Rng| {
        let x = rng.random_range(0.01..0.5);
        Line {
            from: format!("N{a}"),
            to: format!("N{b}"),
            circuit: format!("c{circuit}"),
            conductance: 0.0,
            susceptance: -1.0 / x,
            charging: 0.0,
            flow_limit: 1.0,
            apparent_limit: 1000.0,
            reactance: x,
        }
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        lines.push(edge(j, i, 1, rng));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            let c = lines.iter().filter(|l: &&Line| l.from == format!("N{a}") && l.to == format!("N{b}")).count();
            lines.push(edge(a, b, c + 2, rng));
        }
    }
    let mut sys = oracle::random_tiny(0);
    sys.buses = buses;
    sys.lines = lines;
    sys.thermal.clear();
    sys.renewable.clear();
    sys.storage.clear();
    sys.demand.clear();
    sys
}

/// Angle formulation: solve the reduced B θ = P, then flow = (θf − θt)/x.
fn angle_flows(sys: &SystemData, p: &[f64]) -> Vec<f64> {
    let n = sys.buses.len();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for l in &sys.lines {
        let (i, j) = (sys.bus_index(&l.from).unwrap(), sys.bus_index(&l.to).unwrap());
        let y = 1.0 / l.reactance;
        b[(i, i)] += y;
        b[(j, j)] += y;
        b[(i, j)] -= y;
        b[(j, i)] -= y;
    }
    let red = b.view((1, 1), (n - 1, n - 1)).into_owned();
    let rhs = DVector::from_iterator(n - 1, p[1..].iter().copied());
    let th = red.lu().solve(&rhs).expect("connected");
    let theta = |i: usize| if i == 0 { 0.0 } else { th[i - 1] };
    sys.lines
        .iter()
        .map(|l| (theta(sys.bus_index(&l.from).unwrap()) - theta(sys.bus_index(&l.to).unwrap())) / l.reactance)
        .collect()
}

fn isf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for case in 0..200 {
        let sys = random_network(&mut rng);
        let isf = compute_isf(&sys).map_err(|e| e.to_string())?;
        let mut p: Vec<f64> = (0..sys.buses.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        p[0] = -p[1..].iter().sum::<f64>();
        let a = isf.flows(&sys, &p);
        let b = angle_flows(&sys, &p);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
        if worst > 1e-8 {
            return Err(format!("network {case}: deviation {worst:e}"));
        }
    }
    Ok(format!("200 networks of 2-20 buses, max deviation {worst:.1e} p.u."))
}

fn socp() -> Outcome {
    let (mut rows, mut cone, mut bounds) = (0.0f64, f64::INFINITY, 0.0f64);
    for seed in 0..200 {
        let (sys, _, point) = oracle::random_ac_case(seed);
        let c = oracle::check_relaxation(&sys, &point).map_err(|e| e.to_string())?;
        if c.row_violation > 1e-8 || c.min_cone_slack < -1e-7 || c.bound_violation > 1e-9 {
            return Err(format!(
                "seed {seed}: row {} off by {:e}, cone {:e}, bounds {:e}",
                c.worst_row, c.row_violation, c.min_cone_slack, c.bound_violation
            ));
        }
        rows = rows.max(c.row_violation);
        cone = cone.min(c.min_cone_slack);
        bounds = bounds.max(c.bound_violation);
    }
    Ok(format!("200 power-flow points, max row error {rows:.1e}, min cone residual {cone:.1e}, box error {bounds:.1e}"))
}

fn census() -> Outcome {
    let sys = load_system(data("nine_bus")).map_err(|e| e.to_string())?;
    let temporal = sys.temporal_structure().map_err(|e| e.to_string())?;
    let mut families: BTreeMap<CaseKind, BTreeMap<String, Block>> = BTreeMap::new();
    for kind in CaseKind::ALL {
        let spec = CaseSpec {
            inertia: sys.inertia.clone(),
            ..CaseSpec::new(kind, Some(0.5))
        };
        let m = assemble_case(&spec, &sys, &temporal).map_err(|e| e.to_string())?;
        families.insert(kind, m.census().into_iter().map(|(f, (b, _))| (f, b)).collect());
    }
    // Row-carrying blocks per case; the general block only carries bounds and the objective.
    let expected = |k: CaseKind| -> BTreeSet<Block> {
        let mut b = BTreeSet::from([Block::Thermal, Block::Storage, Block::Renewable]);
        b.insert(if matches!(k, CaseKind::Bc | CaseKind::Ic) { Block::DcOpf } else { Block::AcOpf });
        if matches!(k, CaseKind::Ic | CaseKind::Lego) {
            b.insert(Block::Inertia);
        }
        b
    };
    for (k, fams) in &families {
        let got: BTreeSet<Block> = fams.values().copied().collect();
        if got != expected(*k) {
            return Err(format!("{k}: blocks {got:?}"));
        }
    }
    let of = |k: CaseKind, b: Block| -> BTreeSet<&String> {
        families[&k].iter().filter(|(_, &x)| x == b).map(|(f, _)| f).collect()
    };
    for b in [Block::Thermal, Block::Storage, Block::Renewable] {
        for k in CaseKind::ALL {
            if of(k, b) != of(CaseKind::Bc, b) {
                return Err(format!("{k}: {b:?} families differ from bc"));
            }
        }
    }
    if of(CaseKind::Bc, Block::DcOpf) != of(CaseKind::Ic, Block::DcOpf)
        || of(CaseKind::Rc, Block::AcOpf) != of(CaseKind::Lego, Block::AcOpf)
        || of(CaseKind::Ic, Block::Inertia) != of(CaseKind::Lego, Block::Inertia)
    {
        return Err("network or inertia families differ between cases sharing the block".into());
    }
    for (fam, want) in [
        ("dc_flow", [true, true, false, false]),
        ("ac_cone", [false, false, true, true]),
        ("rocof", [false, true, false, true]),
        ("xbits", [false, true, false, true]),
        ("inter_def", [true, true, true, true]),
    ] {
        for (k, w) in CaseKind::ALL.iter().zip(want) {
            if families[k].contains_key(fam) != w {
                return Err(format!("{k}: {fam} present = {}", !w));
            }
        }
    }
    let sizes: Vec<String> = families.iter().map(|(k, f)| format!("{k} {}", f.len())).collect();
    Ok(format!("families per case: {}", sizes.join(", ")))
}

struct Runs {
    /// label, seconds, relative gap between recomputed cost and objective
    log: Vec<(String, f64, f64)>,
}

impl Runs {
    fn timed(&mut self, label: &str, f: impl FnOnce() -> gep_core::Result<CaseRun>) -> Result<CaseRun, String> {
        let t = Instant::now();
        let run = f().map_err(|e| format!("{label}: {e}"))?;
        let el = t.elapsed().as_secs_f64();
        let total = run.report.metrics.as_ref().map_or(f64::NAN, |m| m.total_cost);
        let gap = (total - run.solution.objective) / run.solution.objective.abs().max(1.0);
        self.log.push((label.to_string(), el, gap));
        if el > 120.0 {
            return Err(format!("{label} took {el:.1} s"));
        }
        Ok(run)
    }
}

fn workflow(runs: &mut Runs) -> Outcome {
    let sys = load_system(data("mini3")).map_err(|e| e.to_string())?;
    let temporal = sys.temporal_structure().map_err(|e| e.to_string())?;
    let request = SolverRequest::default();
    let spec = |kind, kappa| CaseSpec {
        inertia: sys.inertia.clone(),
        ..CaseSpec::new(kind, Some(kappa))
    };
    if !(sys.inertia.disturbance > 0.0) {
        return Err("mini-case has no disturbance".into());
    }

    let mut costs: BTreeMap<CaseKind, Vec<f64>> = BTreeMap::new();
    let mut bc1 = None;
    let mut lego1 = None;
    for kappa in [0.0, 0.5, 1.0] {
        for kind in CaseKind::ALL {
            let run = runs.timed(&format!("{kind} κ={kappa}"), || run_case(&spec(kind, kappa), &sys, &temporal, &request))?;
            if run.solution.status != Status::Optimal {
                return Err(format!("{kind} κ={kappa}: {}", run.solution.status));
            }
            costs.entry(kind).or_default().push(run.solution.objective);
            if kappa == 1.0 && kind == CaseKind::Bc {
                bc1 = Some(run);
            } else if kappa == 1.0 && kind == CaseKind::Lego {
                lego1 = Some(run);
            }
        }
    }
    for (k, c) in &costs {
        if c.windows(2).any(|w| w[1] < w[0] - 1e-9 * w[0].abs()) {
            return Err(format!("(i) {k} cost decreases in κ: {c:?}"));
        }
    }
    let (bc1, lego1) = (bc1.unwrap(), lego1.unwrap());
    let base = spec(CaseKind::Bc, 1.0);

    let ops = runs.timed("ops-only", || {
        run_ex_post_inertia(&bc1.solution, InertiaExPost::OpsOnly, &base, false, &sys, &temporal, &request)
    })?;
    let ops_fails = match ops.solution.status {
        Status::Infeasible => true,
        Status::Optimal | Status::Feasible => ops.report.clean_target_met == Some(false),
        s => return Err(format!("(ii) ops-only ended {s}")),
    };
    if !ops_fails {
        return Err("(ii) ops-only ex-post is feasible and meets the clean target".into());
    }
    let add = runs.timed("add-investments", || {
        run_ex_post_inertia(&bc1.solution, InertiaExPost::AddInvestments, &base, false, &sys, &temporal, &request)
    })?;
    if add.solution.status != Status::Optimal {
        return Err(format!("(ii) add-investments ended {}", add.solution.status));
    }
    if add.solution.objective < lego1.solution.objective {
        return Err(format!(
            "(ii) add-investments cost {} below native LEGO {}",
            add.solution.objective, lego1.solution.objective
        ));
    }
    let ac = runs.timed("ex-post AC", || run_ex_post_ac(&bc1.solution, &base, true, &sys, &temporal, &request))?;
    let facts = ac.report.metrics.as_ref().map_or(0.0, |m| m.facts_built);
    if ac.solution.status != Status::Optimal || facts < 1.0 {
        return Err(format!("(iii) ex-post AC ended {} with {facts} FACTS", ac.solution.status));
    }
    let slowest = runs.log.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(format!(
        "(i) BC {:?}, LEGO {:?}; (ii) ops-only {}, add-investments {:.4} ≥ LEGO {:.4}; (iii) {facts} FACTS; slowest solve {slowest:.1} s",
        costs[&CaseKind::Bc].iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
        costs[&CaseKind::Lego].iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
        ops.solution.status,
        add.solution.objective,
        lego1.solution.objective,
    ))
}

fn metric_identity(runs: &Runs) -> Outcome {
    let mut worst = 0.0f64;
    for (label, _, diff) in &runs.log {
        if diff.is_nan() {
            continue;
        }
        let rel = diff.abs();
        if rel > 1e-6 {
            return Err(format!("{label}: recomputed cost off by {diff:e}"));
        }
        worst = worst.max(rel);
    }
    // nine-bus base case, solved here so the identity also covers representative periods
    let sys = load_system(data("nine_bus")).map_err(|e| e.to_string())?;
    let temporal = sys.temporal_structure().map_err(|e| e.to_string())?;
    let spec = CaseSpec {
        inertia: sys.inertia.clone(),
        ..CaseSpec::new(CaseKind::Bc, Some(0.5))
    };
    let model = assemble_case(&spec, &sys, &temporal).map_err(|e| e.to_string())?;
    let mut request = SolverRequest::with_solver(SolverId::Highs);
    request.mip_gap = 1e-3;
    request.time_limit = Some(Duration::from_secs(300));
    let sol = solve(&model, &request).map_err(|e| e.to_string())?;
    if matches!(sol.status, Status::Optimal | Status::Feasible) {
        let m = compute_metrics(&sol, &sys, &temporal, &sys.inertia);
        let rel = (m.total_cost - sol.objective).abs() / sol.objective.abs().max(1.0);
        if rel > 1e-6 {
            return Err(format!("nine-bus BC: recomputed {} vs {}", m.total_cost, sol.objective));
        }
        worst = worst.max(rel);
    } else {
        return Err(format!("nine-bus BC ended {}", sol.status));
    }
    Ok(format!("{} runs, max relative gap {worst:.1e}", runs.log.len() + 1))
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let exe = env!("CARGO_BIN_EXE_gep");
    let mut dirs = Vec::new();
    for i in 0..2 {
        let mut files = BTreeMap::new();
        for (case, extra) in [("ic", vec![]), ("lego", vec!["--emit-only"])] {
            let out = tmp.path().join(format!("{case}{i}"));
            let st = Command::new(exe)
                .args(["run", "--data"])
                .arg(data("mini3"))
                .args(["--case", case, "--kappa", "0.5", "--out"])
                .arg(&out)
                .args(&extra)
                .output()
                .map_err(|e| e.to_string())?;
            if !st.status.success() {
                return Err(format!("{case}: {}", String::from_utf8_lossy(&st.stderr)));
            }
            for entry in fs::read_dir(&out).map_err(|e| e.to_string())? {
                let p = entry.map_err(|e| e.to_string())?.path();
                let name = p.file_name().unwrap().to_string_lossy().into_owned();
                if name == "timing.txt" {
                    continue;
                }
                files.insert(format!("{case}/{name}"), fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
        dirs.push(files);
    }
    let names: Vec<&String> = dirs[0].keys().collect();
    if dirs[0].keys().ne(dirs[1].keys()) {
        return Err("different file sets".into());
    }
    for n in &names {
        let (a, b) = (&dirs[0][*n], &dirs[1][*n]);
        if a != b {
            return Err(format!("{n} differs"));
        }
    }
    Ok(format!("{} files byte-identical across two invocations", names.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |name: &str, r: Outcome| match r {
        Ok(detail) => println!("PASS  {name}: {detail}"),
        Err(why) => {
            failed += 1;
            println!("FAIL  {name}: {why}");
        }
    };
    report("linearization exactness", linearization());
    report("brute-force equivalence", brute_force());
    report("ISF vs angle flows", isf());
    report("SOCP relaxation of AC points", socp());
    report("case census", census());
    let mut runs = Runs { log: Vec::new() };
    report("workflow ordering", workflow(&mut runs));
    report("metric identity", metric_identity(&runs));
    report("determinism", determinism());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
