use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finslerlab_cli::{plot, CliError, Format, Overrides};

#[derive(Parser)]
#[command(name = "finslerlab", version, about = "Finsler geometry scenarios on homogeneous spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or built-in and write its report.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: $FINSLERLAB_OUT or ./finslerlab-out]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// List built-in scenarios and the scenario files of a directory.
    List {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Extract CSV plot data from a report.
    Plot {
        report: PathBuf,
        /// indicatrix, curvature or convergence
        #[arg(long)]
        kind: String,
        /// Histogram bins for the curvature kind.
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the Chebyshev norm: indicatrix CSV and delta-vector certificates.
    Chebyshev {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the positive-curvature obstruction report as JSON.
    Obstruct {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn passed(report: &serde_json::Value) -> Result<(), CliError> {
    if report["pass"] == true {
        Ok(())
    } else {
        Err(CliError::TaskFailed("one or more task assertions failed".into()))
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { scenario, seed, out, budget, tol, format } => {
            let mut s = finslerlab_cli::load(&scenario)?;
            s.apply(&Overrides { seed, budget, tol })?;
            let out = out.unwrap_or_else(finslerlab_cli::default_out_dir);
            let (report, files) = finslerlab_cli::run_to_dir(&s, &out, format)?;
            print!("{}", finslerlab_cli::summary(&report));
            for f in files {
                println!("wrote {}", f.display());
            }
            passed(&report)
        }
        Command::List { dir } => {
            for (name, desc) in finslerlab_cli::list_entries(dir.as_deref())? {
                println!("{name}\t{desc}");
            }
            Ok(())
        }
        Command::Plot { report, kind, bins, out } => {
            let text = std::fs::read_to_string(&report).map_err(|e| CliError::Io(format!("{}: {e}", report.display())))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", report.display())))?;
            let csv = plot::plot(&value, &kind, bins)?;
            match out {
                Some(p) => std::fs::write(&p, csv).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
        Command::Chebyshev { scenario, budget, seed, out } => {
            let s = finslerlab_cli::load(&scenario)?;
            if budget == Some(0) {
                return Err(CliError::Parse("budget must be positive".into()));
            }
            let out = out.unwrap_or_else(finslerlab_cli::default_out_dir);
            let (rep, files) = finslerlab_cli::chebyshev_artifacts(&s, budget, seed, &out)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            passed(&rep)
        }
        Command::Obstruct { scenario, budget } => {
            let s = finslerlab_cli::load(&scenario)?;
            print!("{}", finslerlab_cli::to_json(&finslerlab_cli::obstruct(&s, budget)?));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("finslerlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
