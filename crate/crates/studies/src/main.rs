use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridplan_core::grid_model::load_case;
use gridplan_studies::{check_case_file, describe, run_study, StudyConfig};

#[derive(Parser)]
#[command(name = "gridplan", version, about = "Transmission planning studies for renewable integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file; exit 2 when it violates an invariant.
    Validate { case: PathBuf },
    /// Print a summary of a case.
    Describe { case: PathBuf },
    /// Run the study described by a configuration file.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides the configured worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { case } => match check_case_file(&case) {
            Ok(v) if v.is_empty() => {
                println!("{}: valid", case.display());
                0
            }
            Ok(v) => {
                for violation in &v {
                    eprintln!("{violation}");
                }
                eprintln!("{}: {} violation(s)", case.display(), v.len());
                2
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Describe { case } => match load_case(&case) {
            Ok(c) => {
                print!("{}", describe(&c));
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Command::Run {
            config,
            output_dir,
            workers,
        } => {
            let outcome = StudyConfig::load(&config).and_then(|mut cfg| {
                if let Some(d) = output_dir {
                    cfg.output_dir = d;
                }
                if workers.is_some() {
                    cfg.workers = workers;
                }
                run_study(&cfg)
            });
            match outcome {
                Ok(o) => {
                    for f in &o.findings {
                        println!("finding: {f}");
                    }
                    println!("manifest: {}", o.manifest.display());
                    o.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
    };
    ExitCode::from(code)
}
