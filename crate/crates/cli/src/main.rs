use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use gep_core::oracle;
use gep_core::solver::{SolverId, SolverRequest, Status};
use gep_core::system::{load_system, SystemData};
use gep_core::temporal::TemporalStructure;
use gep_core::workflows::{
    assemble_case, read_run_spec, read_solution, run_case, run_ex_post_ac, run_ex_post_inertia, write_model_only,
    write_run, CaseKind, CaseRun, CaseSpec, InertiaExPost, RunMode, RunSpec,
};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NO_SOLUTION: u8 = 3;

#[derive(Parser)]
#[command(name = "gep", version, about = "Generation-expansion planning model compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble and solve one case.
    Run(RunArgs),
    /// Re-run a solved base plan with inertia or AC constraints added.
    #[command(subcommand)]
    Expost(Expost),
    /// Load and validate a dataset directory.
    Validate { dataset: PathBuf },
    /// Randomised oracle campaign on tiny instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// auto, highs, clarabel or scip (binary path via GEP_SCIP).
    #[arg(long, default_value = "auto")]
    solver: SolverId,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative MIP gap.
    #[arg(long, default_value_t = 0.0)]
    mip_gap: f64,
    #[arg(long, default_value_t = 1)]
    threads: u32,
}

impl SolverArgs {
    fn request(&self) -> SolverRequest {
        SolverRequest {
            solver: self.solver,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            mip_gap: self.mip_gap,
            threads: Some(self.threads),
            work_dir: None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Dataset directory.
    #[arg(long, default_value = "data/nine_bus")]
    data: PathBuf,
    #[arg(long, default_value = "bc")]
    case: CaseKind,
    /// Clean-production fraction in [0, 1]; omitted means no clean row.
    #[arg(long)]
    kappa: Option<f64>,
    /// Bound each directed flow's apparent power with a cone.
    #[arg(long)]
    apparent_cone: bool,
    /// Write the model and stop.
    #[arg(long)]
    emit_only: bool,
    /// Run directory; defaults to runs/<case>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum InertiaMode {
    OpsOnly,
    AddInvestments,
}

#[derive(Subcommand)]
enum Expost {
    /// Add the inertia block to a DC base plan.
    Inertia {
        #[arg(long, value_enum)]
        mode: InertiaMode,
        /// Base run directory.
        #[arg(long)]
        base: PathBuf,
        /// Keep the clean-production row in ops-only mode.
        #[arg(long)]
        enforce_clean: bool,
        /// Dataset directory; defaults to the one recorded in the base run.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve a DC base plan under the AC relaxation.
    Ac {
        #[arg(long)]
        base: PathBuf,
        /// Forbid FACTS investments.
        #[arg(long)]
        no_facts: bool,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Expost(e) => cmd_expost(e),
        Command::Validate { dataset } => cmd_validate(&dataset),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(data: &Path) -> Result<(SystemData, TemporalStructure), Failure> {
    let system = load_system(data)?;
    let temporal = system.temporal_structure()?;
    Ok((system, temporal))
}

fn finish(run: &CaseRun, dir: &Path, system: &SystemData, temporal: &TemporalStructure, request: &SolverRequest, data: &Path) -> Result<ExitCode, Failure> {
    write_run(dir, run, system, temporal, request, Some(&data.display().to_string()))?;
    let r = &run.report;
    print!("{} {} status {}", r.case, r.mode, r.status);
    if let Some(o) = r.objective {
        print!(", objective {o:.6}");
    }
    if let Some(d) = r.cost_delta {
        print!(", delta {d:+.6}");
    }
    if let Some(m) = &r.metrics {
        print!(", clean {:.1}%", 100.0 * m.clean_share + 0.0);
        if m.facts_built > 0.0 {
            print!(", facts {}", m.facts_built);
        }
    }
    println!(" -> {}", dir.display());
    Ok(match run.solution.status {
        Status::Optimal | Status::Feasible => ExitCode::SUCCESS,
        Status::Infeasible | Status::Unbounded => ExitCode::from(EXIT_INFEASIBLE),
        Status::Limit => ExitCode::from(EXIT_NO_SOLUTION),
    })
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, Failure> {
    let (system, temporal) = load(&a.data)?;
    let mut spec = CaseSpec::new(a.case, a.kappa);
    spec.inertia = system.inertia.clone();
    spec.apparent_cone = a.apparent_cone;
    let request = a.solver.request();
    let dir = a.out.unwrap_or_else(|| PathBuf::from("runs").join(a.case.to_string()));
    if a.emit_only {
        let model = assemble_case(&spec, &system, &temporal)?;
        let echo = RunSpec::new(Some(a.data.display().to_string()), &spec, RunMode::Native, &request);
        let path = write_model_only(&dir, &model, &echo)?;
        println!("{} variables, {} rows, {} cones -> {}", model.num_vars(), model.rows().len(), model.cones().len(), path.display());
        return Ok(ExitCode::SUCCESS);
    }
    let t = Instant::now();
    let run = run_case(&spec, &system, &temporal, &request)?;
    eprintln!("solved in {:.2} s", t.elapsed().as_secs_f64());
    finish(&run, &dir, &system, &temporal, &request, &a.data)
}

fn base_of(base: &Path, data: Option<PathBuf>) -> Result<(RunSpec, PathBuf), Failure> {
    let spec = read_run_spec(base)?;
    let data = match data.or_else(|| spec.dataset.clone().map(PathBuf::from)) {
        Some(d) => d,
        None => return Err("base run records no dataset; pass --data".into()),
    };
    if !spec.spec.kind.has_dc() {
        return Err(format!("base run is a {} case; ex-post runs start from bc or ic", spec.spec.kind).into());
    }
    Ok((spec, data))
}

fn cmd_expost(e: Expost) -> Result<ExitCode, Failure> {
    match e {
        Expost::Inertia {
            mode,
            base,
            enforce_clean,
            data,
            out,
            solver,
        } => {
            let (base_spec, data) = base_of(&base, data)?;
            let (system, temporal) = load(&data)?;
            let base_sol = read_solution(&base)?;
            let mode = match mode {
                InertiaMode::OpsOnly => InertiaExPost::OpsOnly,
                InertiaMode::AddInvestments => InertiaExPost::AddInvestments,
            };
            let request = solver.request();
            let run = run_ex_post_inertia(&base_sol, mode, &base_spec.spec, enforce_clean, &system, &temporal, &request)?;
            let dir = out.unwrap_or_else(|| base.join(run.mode.to_string()));
            finish(&run, &dir, &system, &temporal, &request, &data)
        }
        Expost::Ac {
            base,
            no_facts,
            data,
            out,
            solver,
        } => {
            let (base_spec, data) = base_of(&base, data)?;
            let (system, temporal) = load(&data)?;
            let base_sol = read_solution(&base)?;
            let request = solver.request();
            let run = run_ex_post_ac(&base_sol, &base_spec.spec, !no_facts, &system, &temporal, &request)?;
            let dir = out.unwrap_or_else(|| base.join(run.mode.to_string()));
            finish(&run, &dir, &system, &temporal, &request, &data)
        }
    }
}

fn cmd_validate(dataset: &Path) -> Result<ExitCode, Failure> {
    let system = load_system(dataset)?;
    println!("OK, {} buses, {} lines", system.buses.len(), system.lines.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode, Failure> {
    let mut failed = 0;
    for kind in [CaseKind::Bc, CaseKind::Ic] {
        let mut pass = 0;
        for seed in a.seed..a.seed + a.n {
            match brute_check(kind, seed) {
                Ok(()) => pass += 1,
                Err(e) => eprintln!("brute-force {kind} seed {seed}: {e}"),
            }
        }
        println!("brute-force {kind}: {pass}/{} pass", a.n);
        failed += a.n - pass;
    }

    let mut pass = 0;
    for seed in a.seed..a.seed + a.n {
        let (sys, _) = oracle::random_inertia_point(seed);
        match oracle::check_linearization_enumerated(&sys, &sys.inertia, seed, 1e-6) {
            Ok(r) if r.mismatches.is_empty() => pass += 1,
            Ok(r) => eprintln!("linearization seed {seed}: {:?}", r.mismatches[0]),
            Err(e) => eprintln!("linearization seed {seed}: {e}"),
        }
    }
    println!("linearization: {pass}/{} pass", a.n);
    failed += a.n - pass;

    let mut pass = 0;
    for seed in a.seed..a.seed + a.n {
        let (sys, _, point) = oracle::random_ac_case(seed);
        match oracle::check_relaxation(&sys, &point) {
            Ok(c) if c.row_violation <= 1e-7 && c.min_cone_slack >= -1e-7 => pass += 1,
            Ok(c) => eprintln!("relaxation seed {seed}: {} off by {:e}, cone slack {:e}", c.worst_row, c.row_violation, c.min_cone_slack),
            Err(e) => eprintln!("relaxation seed {seed}: {e}"),
        }
    }
    println!("relaxation: {pass}/{} pass", a.n);
    failed += a.n - pass;

    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn brute_check(kind: CaseKind, seed: u64) -> Result<(), Failure> {
    let system = oracle::random_tiny(seed);
    let temporal = system.temporal_structure()?;
    let spec = CaseSpec {
        inertia: system.inertia.clone(),
        ..CaseSpec::new(kind, None)
    };
    let model = assemble_case(&spec, &system, &temporal)?;
    let bf = oracle::brute_force_optimum(&model, &system, &temporal)?;
    let milp = gep_core::solver::solve(&model, &SolverRequest::with_solver(SolverId::Highs))?;
    match (bf.objective, milp.status) {
        (None, Status::Infeasible) => Ok(()),
        (Some(o), Status::Optimal) if (o - milp.objective).abs() <= 1e-6 * o.abs().max(1.0) => Ok(()),
        (o, s) => Err(format!("enumeration {o:?}, solver {s} {}", milp.objective).into()),
    }
}
