use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wce_core::harness::suite::parse_check_list;
use wce_core::harness::{
    gen_instance, parse_instance, run_suite, serialize_instance, suite_config, Check, GeneratorConfig, Instance,
    SpecialModes, VerificationReport,
};
use wce_core::tolerance::Tolerances;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "wce",
    version,
    about = "Generate and verify weighted conditional expectation instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    MeasurableU,
    PartialIsometry,
    ZeroBlocks,
    ConstantU,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        blocks: usize,
        /// Special construction; may be repeated.
        #[arg(long, value_enum)]
        mode: Vec<Mode>,
        /// Leave out the random point map.
        #[arg(long)]
        no_phi: bool,
        /// Output file; standard output when absent.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Run checks on instance files.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Comma-separated check names, or `all` / `decomposition`.
        #[arg(long, default_value = "all")]
        checks: String,
        /// Relative tolerance for operator comparisons.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the JSON report here (`-` for standard output).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate instances for a range of seeds and verify them.
    Suite {
        /// Inclusive range `A..B`, or a single seed.
        #[arg(long)]
        seeds: String,
        /// Add the spectral and conditional-expectation checks.
        #[arg(long)]
        full: bool,
        /// Comma-separated check names; overrides `--full`.
        #[arg(long)]
        checks: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn parse_seeds(range: &str) -> Result<(u64, u64), String> {
    let parse = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("bad seed \"{s}\": {e}"));
    let (a, b) = match range.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let a = parse(range)?;
            (a, a)
        }
    };
    if b < a {
        return Err(format!("empty seed range {range}"));
    }
    Ok((a, b))
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances, String> {
    match tol {
        None => Ok(Tolerances::default()),
        Some(t) if t.is_finite() && t > 0.0 => Ok(Tolerances::with_operator(t)),
        Some(t) => Err(format!("tolerance must be a positive number, got {t}")),
    }
}

fn emit(report: &VerificationReport, path: Option<&PathBuf>) -> ExitCode {
    let human = report.human();
    match path {
        Some(p) if p.as_os_str() == "-" => {
            eprint!("{human}");
            print!("{}", report.to_json());
        }
        Some(p) => {
            print!("{human}");
            if let Err(e) = fs::write(p, report.to_json()) {
                return usage(format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{human}"),
    }
    if report.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED)
    }
}

fn gen(seed: u64, n: usize, blocks: usize, modes: &[Mode], no_phi: bool, output: Option<PathBuf>) -> ExitCode {
    let mut special = SpecialModes::default();
    for mode in modes {
        match mode {
            Mode::MeasurableU => special.measurable_u = true,
            Mode::PartialIsometry => special.partial_isometry = true,
            Mode::ZeroBlocks => special.zero_blocks = true,
            Mode::ConstantU => special.constant_u = true,
        }
    }
    let mut cfg = GeneratorConfig::new(seed, n, blocks).with_modes(special);
    cfg.with_phi = !no_phi;
    let inst = match gen_instance(&cfg) {
        Ok(inst) => inst,
        Err(e) => return usage(e),
    };
    let text = serialize_instance(&inst);
    match output {
        Some(path) => {
            if let Err(e) = fs::write(&path, text) {
                return usage(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn verify(files: &[PathBuf], checks: &str, tol: Option<f64>, report: Option<PathBuf>) -> ExitCode {
    let checks = match parse_check_list(checks) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let tol = match tolerances(tol) {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let mut instances: Vec<Instance> = Vec::with_capacity(files.len());
    for path in files {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
        };
        match parse_instance(&text) {
            Ok(inst) => instances.push(inst),
            Err(e) => return usage(format!("{}: {e}", path.display())),
        }
    }
    emit(&run_suite(&instances, &checks, &tol), report.as_ref())
}

fn suite(seeds: &str, full: bool, checks: Option<String>, tol: Option<f64>, report: Option<PathBuf>) -> ExitCode {
    let (first, last) = match parse_seeds(seeds) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let checks: Vec<Check> = match checks {
        Some(list) => match parse_check_list(&list) {
            Ok(c) => c,
            Err(e) => return usage(e),
        },
        None if full => Check::ALL.to_vec(),
        None => Check::DECOMPOSITION.to_vec(),
    };
    let tol = match tolerances(tol) {
        Ok(t) => t,
        Err(e) => return usage(e),
    };
    let mut instances = Vec::new();
    for seed in first..=last {
        match gen_instance(&suite_config(seed)) {
            Ok(inst) => instances.push(inst),
            Err(e) => return usage(format!("seed {seed}: {e}")),
        }
    }
    emit(&run_suite(&instances, &checks, &tol), report.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen {
            seed,
            n,
            blocks,
            mode,
            no_phi,
            output,
        } => gen(seed, n, blocks, &mode, no_phi, output),
        Command::Verify {
            files,
            checks,
            tol,
            report,
        } => verify(&files, &checks, tol, report),
        Command::Suite {
            seeds,
            full,
            checks,
            tol,
            report,
        } => suite(&seeds, full, checks, tol, report),
    }
}
