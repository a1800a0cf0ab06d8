use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toric_cli::{CliError, Outcome, ScanSettings, Status};
use toric_extremal::metrics::TOL_BC;
use toric_extremal::stability::TOL_STAB;

#[derive(Parser)]
#[command(name = "toric", version, about = "Extremal toric geometry on labelled polytopes")]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScanArgs {
    /// Direction mesh size.
    #[arg(long)]
    directions: Option<usize>,
    /// Crease positions per direction.
    #[arg(long)]
    offsets: Option<usize>,
    /// Normalization point (default: barycenter, or the input file's basepoint).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    basepoint: Option<Vec<f64>>,
    #[arg(long, default_value_t = TOL_STAB)]
    tol_stab: f64,
}

impl ScanArgs {
    fn settings(&self) -> ScanSettings {
        ScanSettings {
            directions: self.directions,
            offsets: self.offsets,
            basepoint: self.basepoint.clone(),
            tol_stab: Some(self.tol_stab),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Volume, barycenters, ζ, Futaki form and a crease scan.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        /// Also certify the Guillemin field.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = TOL_BC)]
        tol_bc: f64,
        #[arg(long, default_value_t = 1e-8)]
        quad_tol: f64,
    },
    /// Crease scan for destabilizing piecewise-linear functions.
    Stability {
        file: PathBuf,
        #[command(flatten)]
        scan: ScanArgs,
        /// Refine the scan minimum by Nelder–Mead.
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = 400)]
        max_iter: usize,
        /// Write every scanned sample to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Label rescalings with vanishing Futaki invariant.
    FutakiCone { file: PathBuf },
    /// Extremal metric on an interval.
    #[command(allow_negative_numbers = true)]
    Solve1d { alpha: f64, beta: f64, a_left: f64, a_right: f64 },
    /// Boundary, positivity and integration-by-parts checks of the Guillemin field.
    GuilleminCheck {
        file: PathBuf,
        #[arg(long, default_value_t = TOL_BC)]
        tol_bc: f64,
        #[arg(long, default_value_t = 1e-8)]
        quad_tol: f64,
    },
    /// Least-squares formal solution of the Abreu equation.
    FormalSolve {
        file: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: u32,
    },
    /// Cone angles of a labelling relative to a reference labelling.
    Angles {
        file: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
}

fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Analyze { file, scan, certify, tol_bc, quad_tol } => {
            toric_cli::analyze(file, &scan.settings(), *certify, *tol_bc, *quad_tol)
        }
        Command::Stability { file, scan, refine, max_iter, csv } => {
            toric_cli::stability(file, &scan.settings(), refine.then_some(*max_iter), csv.as_deref())
        }
        Command::FutakiCone { file } => toric_cli::futaki_cone_cmd(file),
        Command::Solve1d { alpha, beta, a_left, a_right } => toric_cli::solve1d(*alpha, *beta, *a_left, *a_right),
        Command::GuilleminCheck { file, tol_bc, quad_tol } => toric_cli::guillemin_check(file, *tol_bc, *quad_tol),
        Command::FormalSolve { file, degree } => toric_cli::formal_solve_cmd(file, *degree),
        Command::Angles { file, reference } => toric_cli::angles(file, reference),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        pool = pool.num_threads(k);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| run(&cli.command)),
        Err(e) => Err(CliError::Usage(format!("cannot start worker pool: {e}"))),
    };
    match result {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.json).expect("valid JSON");
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(out.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Error as u8)
        }
    }
}
