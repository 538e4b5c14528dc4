use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use platform_ident_cli::{
    load_config, run_demo, run_identify, run_sensitivity, run_synth, CliError, IdentifyReport,
    KSweep, RunOptions, ScenarioConfig,
};

/// Identify a two-leg observing platform from an intercepted bearings-only FIM.
#[derive(Parser)]
#[command(name = "platform-ident", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the FIM at the true platform and write jobs.csv and target.csv.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to output.dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identify the platform from jobs.csv and target.csv.
    Identify {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        io: RunArgs,
    },
    /// Repeat identification over a range of turn indices.
    Sensitivity {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        io: RunArgs,
        /// Turn indices to try, as LO:HI or LO:HI:STEP; overrides the config.
        #[arg(long, value_name = "LO:HI[:STEP]")]
        k_sweep: Option<KSweep>,
    },
    /// Run synth, identify and sensitivity on the bundled scenarios.
    Demo {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output directory; defaults to output.dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory holding jobs.csv and target.csv; defaults to the output directory.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Evaluate zones and sweep points on N threads.
    #[arg(long, value_name = "N")]
    parallel: Option<usize>,
}

impl RunArgs {
    fn resolve(&self, cfg: &ScenarioConfig) -> (PathBuf, PathBuf, RunOptions) {
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        let input = self.input.clone().unwrap_or_else(|| out.clone());
        (
            input,
            out,
            RunOptions {
                threads: self.parallel,
            },
        )
    }
}

fn print_identify(report: &IdentifyReport) {
    let r = &report.result;
    let [xi, eta, speed, phi1, phi2] = r.best_state.params();
    println!(
        "zone {} k {}: xi {xi:.3} eta {eta:.3} speed {speed:.6} phi1 {phi1:.6} phi2 {phi2:.6}",
        r.winner, report.k
    );
    println!(
        "alpha_theta {:.4} residual ratio {:.3e}",
        r.alpha_theta_hat, r.residual_ratio
    );
    if let Some(rspe) = report.rspe {
        println!("rspe {rspe:.6e} m");
    }
    for w in &r.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = load_config(&config)?;
            let out = out.unwrap_or_else(|| cfg.output.dir.clone());
            let report = run_synth(&cfg, &out)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_files(&report.files);
        }
        Command::Identify { config, io } => {
            let cfg = load_config(&config)?;
            let (input, out, options) = io.resolve(&cfg);
            let report = run_identify(&cfg, &input, &out, options)?;
            print_identify(&report);
            print_files(&report.files);
        }
        Command::Sensitivity {
            config,
            io,
            k_sweep,
        } => {
            let cfg = load_config(&config)?;
            let (input, out, options) = io.resolve(&cfg);
            let rows = run_sensitivity(&cfg, &input, &out, k_sweep, options)?;
            for row in &rows {
                let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.6e}"));
                match &row.error {
                    Some(e) => println!("k {:>4}  error: {e}", row.k),
                    None => println!(
                        "k {:>4}  rspe {}  g_best {}",
                        row.k,
                        show(row.rspe),
                        show(row.g_best)
                    ),
                }
            }
            print_files(&[out.join(platform_ident_cli::files::SENSITIVITY_CSV)]);
        }
        Command::Demo { out, parallel } => {
            for report in run_demo(&out, RunOptions { threads: parallel })? {
                println!("== {} ({})", report.name, report.dir.display());
                print_identify(&report.identify);
                let best = report
                    .sensitivity
                    .iter()
                    .filter_map(|r| r.rspe.map(|e| (r.k, e)))
                    .min_by(|a, b| a.1.total_cmp(&b.1));
                if let Some((k, e)) = best {
                    println!("turn sweep: smallest rspe {e:.3e} m at k {k}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
