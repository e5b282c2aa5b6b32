use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oranplan::report::{
    associate_stage, compare_solvers, deploy_stage, emit, load_bundle, price_stage, run_pipeline,
    write_gap_table, ExperimentConfig, SolverChoice,
};
use oranplan::scenario::{AreaClass, Scenario};
use oranplan::Result;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "oranplan",
    version,
    about = "RU placement and TWDM-PON front/mid-haul planning"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write scenario.json.
    Generate(CaseArgs),
    /// Solve UE-RU association; writes assignment.json and gap_trace.csv.
    Associate(StageArgs),
    /// Design the PON front/mid-haul; writes plan.json.
    Deploy(StageArgs),
    /// Price the PON plan and the OTN baseline; writes cost.json.
    Price(StageArgs),
    /// Run the configured sweep and write the result bundle.
    Sweep(SweepArgs),
    /// Tabulate heuristic vs exact results of a bundle; writes solver_gaps.csv.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long, default_value = "urban")]
    class: AreaClass,
    /// Square side in km.
    #[arg(long, default_value_t = 1.0)]
    side: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Heuristic,
    Exact,
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Use a previously generated scenario instead of --class/--side/--seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "heuristic")]
    solver: Solver,
    /// Deployment variant from the config; defaults to the first one.
    #[arg(long)]
    variant: Option<String>,
    /// Also write the P2 model tables to p2_model.json.
    #[arg(long)]
    dump_model: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Override one seed list entry per flag.
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory holding bundle.json.
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn scenario(args: &StageArgs, cfg: &ExperimentConfig) -> Result<Scenario> {
    match &args.scenario {
        Some(p) => Scenario::from_json(&fs::read_to_string(p)?),
        None => {
            oranplan::report::scenario_for(cfg, args.case.class, args.case.side, args.case.seed)
        }
    }
}

fn solver(s: Solver) -> SolverChoice {
    match s {
        Solver::Heuristic => SolverChoice::Heuristic,
        Solver::Exact => SolverChoice::Exact,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Generate(a) => {
            let cfg = load_config(a.config.as_deref())?;
            let s = oranplan::report::scenario_for(&cfg, a.class, a.side, a.seed)?;
            fs::create_dir_all(&a.out)?;
            fs::write(a.out.join("scenario.json"), s.to_json()? + "\n")?;
            println!(
                "{} UEs, {} candidate RUs",
                s.ues.len(),
                s.candidate_rus.len()
            );
        }
        Command::Associate(a) => {
            let cfg = load_config(a.case.config.as_deref())?;
            let s = scenario(&a, &cfg)?;
            let r = associate_stage(&s, &cfg, solver(a.solver))?;
            write_json(&a.case.out, "assignment.json", &r.assignment)?;
            if let Some(t) = &r.trace {
                t.write_csv(fs::File::create(a.case.out.join("gap_trace.csv"))?)?;
            }
            println!(
                "{} RUs installed ({})",
                r.assignment.installed_count(),
                r.solver
            );
        }
        Command::Deploy(a) => {
            let cfg = load_config(a.case.config.as_deref())?;
            let variant = cfg.variant(a.variant.as_deref())?;
            let s = scenario(&a, &cfg)?;
            let r = associate_stage(&s, &cfg, solver(a.solver))?;
            let (model, plan) = deploy_stage(&r.model, &r.assignment, &s, &variant.deploy)?;
            write_json(&a.case.out, "plan.json", &plan)?;
            if a.dump_model {
                write_json(&a.case.out, "p2_model.json", &model)?;
            }
            println!(
                "{} Stage-I OLTs, {} Stage-II OLTs for {} RUs",
                plan.stage1_installed.len(),
                plan.stage2_installed.len(),
                plan.ru_count()
            );
        }
        Command::Price(a) => {
            let cfg = load_config(a.case.config.as_deref())?;
            let variant = cfg.variant(a.variant.as_deref())?;
            let s = scenario(&a, &cfg)?;
            let r = associate_stage(&s, &cfg, solver(a.solver))?;
            let (model, plan) = deploy_stage(&r.model, &r.assignment, &s, &variant.deploy)?;
            let priced = price_stage(&model, &plan, variant.otn.then_some(&cfg.otn));
            #[derive(Serialize)]
            struct Priced {
                pon: oranplan::cost::CostBreakdown,
                otn: Option<oranplan::cost::CostBreakdown>,
                otn_detail: Option<String>,
                savings: Option<f64>,
            }
            let (otn, detail) = match priced.otn {
                Some(Ok(d)) => (Some(d.cost), None),
                Some(Err(e)) => (None, Some(e.to_string())),
                None => (None, None),
            };
            let out = Priced {
                pon: priced.cost,
                otn,
                otn_detail: detail,
                savings: otn.map(|o| oranplan::cost::savings(&priced.cost, &o)),
            };
            write_json(&a.case.out, "cost.json", &out)?;
            if a.dump_model {
                write_json(&a.case.out, "p2_model.json", &model)?;
            }
            println!("TWDM-PON total EUR {}", priced.cost.total_eur());
        }
        Command::Sweep(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if !a.seed.is_empty() {
                cfg.seeds = a.seed.clone();
            }
            if a.threads.is_some() {
                cfg.threads = a.threads;
            }
            let bundle = run_pipeline(&cfg)?;
            emit(&bundle, &a.out)?;
            let ok = bundle
                .runs
                .iter()
                .filter(|r| r.status == oranplan::report::RunStatus::Ok)
                .count();
            println!(
                "{ok}/{} runs feasible, config {}",
                bundle.runs.len(),
                bundle.config_hash
            );
        }
        Command::Compare(a) => {
            let bundle = load_bundle(&a.bundle)?;
            let rows = compare_solvers(&bundle);
            fs::create_dir_all(&a.out)?;
            write_gap_table(&rows, fs::File::create(a.out.join("solver_gaps.csv"))?)?;
            let violated = rows.iter().filter(|r| r.factor_violated).count();
            println!("{} comparisons, {violated} above the ln factor", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_infeasible() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
