use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use twisted_trace::workbench::{self, ExperimentConfig, RunOptions};
use twisted_trace::Error;

/// Trace formula workbench for twisted Laplacians on the Bolza surface.
#[derive(Parser, Debug)]
#[command(name = "twisted-trace", version, about)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recompute the length-spectrum cache instead of reading it.
    #[arg(long, global = true)]
    refresh: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate conjugacy classes up to l_max (cached).
    Enumerate,
    /// Eigenvalues of the twisted Laplacian.
    Spectrum,
    /// Geometric side for each test function.
    Geomside {
        /// Fail rather than enumerate when no cache exists.
        #[arg(long)]
        no_compute: bool,
    },
    /// Weyl counting over the middle third of the computed spectrum.
    Weyl,
    /// Both sides of the trace formula and their residuals.
    Verify,
    /// Print an example config to stdout.
    ExampleConfig,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_RESIDUAL: u8 = 4;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error [{}]: {e}", e.code());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    if let Command::ExampleConfig = cli.command {
        match ExperimentConfig::example().to_toml() {
            Ok(t) => {
                print!("{t}");
                return ExitCode::SUCCESS;
            }
            Err(e) => return fail(&e),
        }
    }
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(EXIT_VALIDATION);
    };
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.base_dir.join(&cfg.output_dir));
    let mut run = RunOptions::new(out);
    run.refresh = cli.refresh;
    for a in cfg.advisories() {
        eprintln!("note: {a}");
    }

    let t0 = Instant::now();
    let result = match cli.command {
        Command::Enumerate => workbench::cmd_enumerate(&cfg, &run).map(|o| {
            println!(
                "{} classes up to L = {} ({})",
                o.classes.len(),
                cfg.l_max,
                if o.computed { "computed" } else { "from cache" }
            );
            true
        }),
        Command::Spectrum => workbench::cmd_spectrum(&cfg, &run).map(|s| {
            println!(
                "{} eigenvalues in {} clusters, method {}, max residual {:.2e}, max |Im| {:.3e}",
                s.count(),
                s.eigenvalues.len(),
                s.method,
                s.max_residual,
                s.max_abs_imag()
            );
            true
        }),
        Command::Geomside { no_compute } => {
            run.no_compute = no_compute;
            workbench::cmd_geomside(&cfg, &run).map(|reps| {
                for (f, r) in cfg.test_functions.iter().zip(&reps) {
                    let t = r.total();
                    println!(
                        "T = {:<5} k = {:<2} identity {:.12e}  total {:.12e}{:+.2e}i  classes {}",
                        f.t,
                        f.k,
                        r.identity_term,
                        t.re,
                        t.im,
                        r.class_contributions.len()
                    );
                }
                true
            })
        }
        Command::Weyl => workbench::cmd_weyl(&cfg, &run).map(|w| {
            println!("{:>12} {:>8} {:>12} {:>8}", "r", "N(r)", "prediction", "ratio");
            for p in &w.points {
                println!("{:>12.4} {:>8} {:>12.3} {:>8.4}", p.r, p.count, p.prediction, p.ratio());
            }
            println!("ratio range [{:.4}, {:.4}]", w.min_ratio, w.max_ratio);
            true
        }),
        Command::Verify => workbench::cmd_verify(&cfg, &run).map(|r| {
            print!("{}", r.table());
            r.passed
        }),
        Command::ExampleConfig => unreachable!(),
    };
    eprintln!("elapsed {:.1} s, artifacts in {}", t0.elapsed().as_secs_f64(), run.out_dir.display());
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RESIDUAL),
        Err(e) => fail(&e),
    }
}
