use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gradmech_cli::analyze::{analyze_paths, format_report};
use gradmech_cli::commands::{self, BrstCheck, CanonKind, EvolveOverrides};
use gradmech_cli::model::ModelFile;
use gradmech_cli::{CliError, Format, Options};

/// Constrained graded mechanics: constraint analysis, brackets, dynamics and BRST checks.
#[derive(Parser, Debug)]
#[command(name = "gradmech", version)]
struct Cli {
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Threshold for numerical diagnostics.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tolerance: f64,
    /// Independent model files analysed concurrently.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Legendre map, constraint chain, classification, symmetries and dynamics diagnostics.
    Analyze {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Poisson or Dirac bracket of two expressions.
    Bracket {
        path: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        lhs: String,
        #[arg(long, allow_hyphen_values = true)]
        rhs: String,
        /// Dirac bracket; without a value the model's second-class set is used.
        #[arg(long, num_args = 0..=1, value_name = "RHO,...", allow_hyphen_values = true)]
        dirac: Option<Option<String>>,
    },
    /// Integrate the total-Hamiltonian flow, streaming NDJSON records.
    Evolve {
        path: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// rk4 | exact-linear
        #[arg(long)]
        scheme: Option<String>,
        /// total | extended
        #[arg(long)]
        generator: Option<String>,
        /// poisson | dirac
        #[arg(long)]
        bracket: Option<String>,
        /// Emit every n-th state.
        #[arg(long, default_value_t = 1)]
        every: usize,
        /// Gauge-difference table for the schedules in `dynamics.compare`.
        #[arg(long)]
        compare: bool,
    },
    /// Canonical form of a supermatrix (inline JSON, matrix file or model file).
    Canon {
        matrix: String,
        #[arg(long, value_enum)]
        kind: Option<CanonKind>,
    },
    /// Property checks of the BRST operator of the model's Lie algebra.
    Brst {
        path: PathBuf,
        #[arg(long, value_enum)]
        check: BrstCheck,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: &Cli) -> (String, Vec<CliError>) {
    let opts = Options { format: cli.format, tolerance: cli.tolerance, jobs: cli.jobs };
    let one = |r: Result<String, CliError>| match r {
        Ok(s) => (s, vec![]),
        Err(e) => (String::new(), vec![e]),
    };
    match &cli.cmd {
        Cmd::Analyze { paths } => {
            let mut out = String::new();
            let mut errors = Vec::new();
            for (p, r) in paths.iter().zip(analyze_paths(paths, &opts)) {
                match r {
                    Ok(rep) => out.push_str(&format_report(&rep, opts.format)),
                    Err(e) => errors.push(match e {
                        CliError::Input(m) => CliError::Input(format!("{}: {m}", p.display())),
                        CliError::Analysis(m) => CliError::Analysis(format!("{}: {m}", p.display())),
                    }),
                }
            }
            (out, errors)
        }
        Cmd::Bracket { path, lhs, rhs, dirac } => one(
            ModelFile::load(path).and_then(|f| commands::bracket(f, lhs, rhs, dirac.as_ref().map(|d| d.as_deref()), &opts)),
        ),
        Cmd::Evolve { path, dt, steps, scheme, generator, bracket, every, compare } => {
            let o = EvolveOverrides {
                dt: *dt,
                steps: *steps,
                scheme: scheme.clone(),
                generator: generator.clone(),
                bracket: bracket.clone(),
                every: *every,
                compare: *compare,
            };
            one(ModelFile::load(path).and_then(|f| commands::evolve(f, &o, &opts)))
        }
        Cmd::Canon { matrix, kind } => one(commands::canon(matrix, *kind, &opts)),
        Cmd::Brst { path, check, samples, seed } => {
            one(ModelFile::load(path).and_then(|f| commands::brst(f, *check, *samples, *seed, &opts)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (out, errors) = run(&cli);
    let written = match &cli.output {
        Some(p) => std::fs::write(p, &out).map_err(|e| e.to_string()),
        None => std::io::stdout().write_all(out.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(errors.iter().map(CliError::exit_code).max().unwrap_or(0) as u8)
}
