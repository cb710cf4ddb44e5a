use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sinegordon::harness::{self, CompareConfig, ConvergeConfig, RunConfig, SolverConfig};
use sinegordon::{Error, Problem, ProblemId, Result, SchemeKind};

#[derive(Parser)]
#[command(name = "sinegordon", version, about = "Structure-preserving sine-Gordon solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one problem and write energy.csv, field snapshots and meta.json.
    Run(RunArgs),
    /// Refine (h, tau) by halves and write convergence.csv.
    Converge(ConvergeArgs),
    /// Run both schemes on the same mesh and step; write energy traces and cpu.csv.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: ProblemId,
    /// Intervals per axis, `n1` or `n1,n2`. In 2D a single value keeps h1 = h2.
    #[arg(long, value_delimiter = ',', num_args = 1..=2, conflicts_with = "h")]
    n: Option<Vec<usize>>,
    /// Mesh spacing, as an alternative to --n.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    tau: f64,
    #[arg(long = "T")]
    final_time: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Linear solver tolerance, relative to max(1, ||rhs||).
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1e-14)]
    fp_tol: f64,
    #[arg(long, default_value_t = 100)]
    fp_max_sweeps: usize,
}

impl Common {
    fn mesh(&self) -> Result<(usize, usize)> {
        let problem: Problem = self.problem.problem();
        match (&self.n, self.h) {
            (Some(n), _) => {
                let n1 = n[0];
                let n2 = match (problem.dim, n.get(1)) {
                    (1, None) | (1, Some(1)) => 1,
                    (1, Some(_)) => return Err(Error::Config(format!("{} is one-dimensional", problem.name()))),
                    (_, Some(&n2)) => n2,
                    (_, None) => problem.matching_n2(n1),
                };
                Ok((n1, n2))
            }
            (None, Some(h)) => problem.intervals_for_spacing(h),
            (None, None) => Err(Error::Config("one of --n or --h is required".into())),
        }
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            fixed_point_tol: self.fp_tol,
            fixed_point_max_sweeps: self.fp_max_sweeps,
        }
    }

    fn run_config(&self, scheme: SchemeKind) -> Result<RunConfig> {
        let (n1, n2) = self.mesh()?;
        let mut cfg = RunConfig::new(self.problem, scheme, n1, n2, self.tau, self.final_time);
        cfg.solver = self.solver();
        cfg.out = self.out.clone();
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "li-leps")]
    scheme: SchemeKind,
    /// Snapshot times.
    #[arg(long, value_delimiter = ',')]
    snap: Vec<f64>,
    /// Record the energy every this many steps.
    #[arg(long, default_value_t = 1)]
    every: usize,
    /// Write raw u instead of sin(u/2).
    #[arg(long)]
    raw: bool,
    /// Extend snapshots by the problem's symmetry lines.
    #[arg(long)]
    mirror: bool,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "li-leps")]
    scheme: SchemeKind,
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Additional meshes for the timing table, each doubling n.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    #[arg(long, default_value_t = 1)]
    every: usize,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => {
            let mut cfg = a.common.run_config(a.scheme)?;
            cfg.snapshots = a.snap;
            cfg.record_every = a.every;
            cfg.transform = !a.raw;
            cfg.mirror = a.mirror;
            let out = harness::cmd_run(&cfg)?;
            let last = out.energy.last().map_or(0.0, |r| r.deviation);
            println!(
                "{} {} t={} steps={} deviation={last:e} stepping={:.3}s",
                cfg.problem, cfg.scheme, out.state.t, out.state.step, out.stats.stepping_seconds
            );
        }
        Command::Converge(a) => {
            let (n1, n2) = a.common.mesh()?;
            let cfg = ConvergeConfig {
                problem: a.common.problem,
                scheme: a.scheme,
                n1,
                n2,
                tau: a.common.tau,
                final_time: a.common.final_time,
                levels: a.levels,
                solver: a.common.solver(),
                out: a.common.out.clone(),
            };
            for r in harness::cmd_converge(&cfg)? {
                let o = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
                println!(
                    "h={:<10} tau={:<10} l2={:.4e} ({}) linf={:.4e} ({}) h1={:.4e} ({})",
                    r.h,
                    r.tau,
                    r.l2,
                    o(r.l2_order),
                    r.linf,
                    o(r.linf_order),
                    r.h1,
                    o(r.h1_order)
                );
            }
        }
        Command::Compare(a) => {
            let mut base = a.common.run_config(SchemeKind::LiLeps)?;
            base.record_every = a.every;
            let cfg = CompareConfig { base, refinements: a.refine };
            for r in harness::cmd_compare(&cfg)? {
                println!("{:<8} nodes={:<8} {:.3}s", r.scheme, r.nodes, r.wall_seconds);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
