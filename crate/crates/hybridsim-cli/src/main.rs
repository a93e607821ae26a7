use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hybridsim_cli::runner::{self, RunOutput};
use hybridsim_cli::scenario::{self, GraphSpec};
use hybridsim_cli::sweep;

#[derive(Parser)]
#[command(name = "hybridsim", version, about = "Hybrid model simulation harness")]
struct Cli {
    /// Directory for results.csv, ledger.csv and summary.txt.
    #[arg(long, default_value = "out", global = true)]
    out_dir: PathBuf,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Record delivered traffic and audit the global budget per run.
    #[arg(long, global = true)]
    transcript: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file and write its reports.
    Run { scenario: PathBuf },
    /// Run the scaling sweep a scenario file describes.
    Sweep { scenario: PathBuf },
    /// Run a scenario file with verification forced on.
    Verify { scenario: PathBuf },
    /// Generate a graph file from a spec like erdos-renyi:n=512,p=0.05.
    GenGraph { spec: String, out: PathBuf },
}

fn print_outcome(run: &RunOutput) {
    let viol: u64 = run.outcomes.iter().map(|o| o.violations).sum();
    let err = run.outcomes.iter().map(|o| o.max_error).max().unwrap_or(0);
    let verdict = if viol == 0 { "PASS" } else { "FAIL" };
    println!(
        "{}: {} seeds, max error {}, {} violations -> {}",
        run.scenario,
        run.outcomes.len(),
        err,
        viol,
        verdict
    );
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("setting up the thread pool")?;
    }

    match cli.cmd {
        Cmd::Run { scenario } => {
            let sc = scenario::load(&scenario)?;
            let run = runner::run_scenario(&sc, cli.transcript)?;
            runner::write_outputs(&cli.out_dir, std::slice::from_ref(&run), None)?;
            print_outcome(&run);
        }
        Cmd::Verify { scenario } => {
            let mut sc = scenario::load(&scenario)?;
            sc.verify = true;
            let run = runner::run_scenario(&sc, cli.transcript)?;
            runner::write_outputs(&cli.out_dir, std::slice::from_ref(&run), None)?;
            print_outcome(&run);
        }
        Cmd::Sweep { scenario } => {
            let sc = scenario::load(&scenario)?;
            let run = sweep::run_sweep(&sc, cli.transcript)?;
            let extra = sweep::sweep_summary(&run);
            runner::write_outputs(&cli.out_dir, &run.outputs, Some(&extra))?;
            print!("{extra}");
        }
        Cmd::GenGraph { spec, out } => {
            let (graph_spec, wmin, wmax, seed) = scenario::parse_graph_spec(&spec)?;
            let (g, roles) = runner::build_graph(&graph_spec, wmin, wmax, seed)?;
            g.save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            if let (Some(roles), GraphSpec::LowerBound { .. }) = (roles, &graph_spec) {
                let sidecar = out.with_extension("roles");
                hybridsim::gen::save_roles(&roles, &sidecar)
                    .with_context(|| format!("writing {}", sidecar.display()))?;
                println!("roles -> {}", sidecar.display());
            }
            println!(
                "{} nodes, {} edges -> {}",
                g.n(),
                g.edges().len(),
                out.display()
            );
        }
    }
    Ok(())
}
