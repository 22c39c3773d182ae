//! `sparse-bandit`: solve exploration designs, run regret experiments, fit
//! regret slopes and plot results.
//!
//! Exit codes: 0 on success, 2 for invalid input or configuration, 3 for
//! failures during a run (I/O, numerical).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sparse_bandit::design::{solve_e_optimal, solve_g_optimal, DEFAULT_MAX_ITER, DEFAULT_TOL};
use sparse_bandit::harness::{
    read_long_csv, read_summary_csv, run_experiment, slopes_from_summary, summarize, write_outputs,
    ExperimentConfig, THREADS_ENV,
};
use sparse_bandit::{Error, InstanceDocument};

#[derive(Parser)]
#[command(
    name = "sparse-bandit",
    version,
    about = "Sparse linear bandit simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKind {
    /// Maximize the smallest eigenvalue of the design covariance.
    E,
    /// Minimize the largest leverage.
    G,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an exploration design for the actions in a JSON instance document.
    Design {
        actions: PathBuf,
        #[arg(long, value_enum, default_value = "e")]
        kind: DesignKind,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Run the experiment described by a JSON config and write CSV/SVG results.
    #[command(after_help = format!("{THREADS_ENV} caps the number of worker threads."))]
    Run {
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Fit the log–log slope of median regret against the horizon, per policy.
    Slope { summary: PathBuf },
    /// Plot a long-form results CSV as SVG.
    Plot {
        results: PathBuf,
        /// Defaults to the results path with an `.svg` extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn design(path: &Path, kind: DesignKind, tol: f64, max_iter: usize) -> Result<(), Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    let doc: InstanceDocument = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let actions = doc.action_set()?;
    let (design, certificate) = match kind {
        DesignKind::E => solve_e_optimal(&actions, tol, max_iter)?,
        DesignKind::G => solve_g_optimal(&actions, tol, max_iter)?,
    };
    let out = serde_json::json!({ "design": design, "certificate": certificate });
    println!("{}", serde_json::to_string_pretty(&out)?);
    if !certificate.converged {
        eprintln!(
            "warning: not converged after {} iterations (gap {:.3e})",
            certificate.iterations, certificate.fw_gap
        );
    }
    Ok(())
}

fn run(path: &Path, out_dir: Option<PathBuf>) -> Result<(), Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(dir) = out_dir {
        config.output.dir = dir;
    }
    let result = run_experiment(&config)?;
    for file in write_outputs(&result, &config.output)? {
        eprintln!("wrote {}", file.display());
    }
    println!("policy,horizon,median,iqr");
    for row in summarize(&result) {
        println!("{},{},{},{}", row.policy, row.horizon, row.median, row.iqr);
    }
    Ok(())
}

fn slope(path: &Path) -> Result<(), Error> {
    let rows = read_summary_csv(path)?;
    for (policy, slope) in slopes_from_summary(&rows) {
        match slope {
            Ok(s) => println!("{policy}\t{s:.4}"),
            Err(e) => return Err(Error::InvalidInput(format!("{policy}: {e}"))),
        }
    }
    Ok(())
}

fn plot(results: &Path, output: Option<PathBuf>) -> Result<(), Error> {
    let rows = read_long_csv(results)?;
    let output = output.unwrap_or_else(|| results.with_extension("svg"));
    sparse_bandit::harness::plot_rows(&rows, &output)?;
    eprintln!("wrote {}", output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Design {
            actions,
            kind,
            tol,
            max_iter,
        } => design(&actions, kind, tol, max_iter),
        Command::Run { config, out_dir } => run(&config, out_dir),
        Command::Slope { summary } => slope(&summary),
        Command::Plot { results, output } => plot(&results, output),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
