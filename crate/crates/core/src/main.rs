use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use annealchem::cli::{
    fit, fit_minimum, points_from_csv, points_from_json, points_to_csv, points_to_json, qubit_report, run_method, scan, timing_report,
    write_rows_csv, Method, Problem, ProblemOptions, SamplerConfig, SamplerKind, ENDPOINT_ENV,
};
use annealchem::pauli::Encoding;
use annealchem::qcc::FoldProfile;

#[derive(Parser)]
#[command(name = "annealchem", version, about = "Molecular ground-state energies via Ising-model optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Seed for the sampler and optimizer multi-starts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = SamplerKind::Sa)]
    sampler: SamplerKind,
    /// Remote sampler URL.
    #[arg(long, global = true, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
    /// Remote request timeout in seconds.
    #[arg(long, global = true, default_value_t = 60)]
    timeout: u64,
    #[arg(long, global = true, default_value_t = 100)]
    reads: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Worker threads for scans.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Fermion-to-qubit encoding: jw or bk.
    #[arg(long, global = true, default_value = "bk")]
    encoding: Encoding,
    /// Number-penalty weight (default: twice the Pauli one-norm).
    #[arg(long, global = true)]
    penalty: Option<f64>,
    /// Leave out the spin-projection penalty.
    #[arg(long, global = true)]
    no_spin_penalty: bool,
    /// Frozen orbitals (default: from the fixture manifest, else 0).
    #[arg(long, global = true)]
    frozen: Option<usize>,
    /// Active orbitals (default: from the fixture manifest, else all).
    #[arg(long, global = true)]
    active: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Exact,
    Xbk,
    Qcc,
}

#[derive(Args, Clone)]
struct MethodArgs {
    /// XBK copy count.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Convergence tolerance (default 1e-9 for xbk, 1e-7 for qcc).
    #[arg(long)]
    tol: Option<f64>,
    /// QCC entangler count.
    #[arg(long, default_value_t = 4)]
    nent: usize,
    /// QCC fold profile.
    #[arg(long, default_value = "theta=1,phi=2,tau=2")]
    fold: FoldProfile,
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
    /// QMF multi-starts.
    #[arg(long, default_value_t = 8)]
    starts: usize,
}

impl MethodArgs {
    fn method(&self, name: MethodName) -> Method {
        match name {
            MethodName::Exact => Method::Exact,
            MethodName::Xbk => Method::Xbk { r: self.r, tol: self.tol.unwrap_or(1e-9) },
            MethodName::Qcc => Method::Qcc {
                n_ent: self.nent,
                folds: self.fold,
                tol: self.tol.unwrap_or(1e-7),
                max_outer: self.max_outer,
                starts: self.starts,
            },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Summarize a fixture and its qubit Hamiltonian.
    Inspect { fcidump: PathBuf },
    /// Exact diagonalization ground energy.
    Exact { fcidump: PathBuf },
    /// XBK ground energy.
    Xbk {
        fcidump: PathBuf,
        #[command(flatten)]
        params: MethodArgs,
    },
    /// QCC ground energy.
    Qcc {
        fcidump: PathBuf,
        #[command(flatten)]
        params: MethodArgs,
    },
    /// Potential-energy scan over fixtures matching a glob.
    Scan {
        pattern: String,
        /// Methods besides the always-included exact oracle.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "exact")]
        methods: Vec<MethodName>,
        /// Write `<prefix>.csv` and `<prefix>.json` instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: MethodArgs,
    },
    /// Minimum location and binding energy from a scan file (CSV or JSON).
    Fit {
        scan_file: PathBuf,
        #[arg(long, default_value = "exact")]
        method: String,
        /// Dissociation-limit label (default: largest label).
        #[arg(long)]
        asymptote: Option<f64>,
        /// Report only the minimum (scans without a dissociation point).
        #[arg(long)]
        minimum_only: bool,
    },
    /// Pre/post quadratization variable counts over r (xbk) or N_ent (qcc).
    QubitReport {
        fcidump: PathBuf,
        #[arg(long, value_enum, default_value = "xbk")]
        method: MethodName,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        values: Vec<usize>,
        #[command(flatten)]
        params: MethodArgs,
    },
    /// Mean wall-clock time per phase over r (xbk) or N_ent (qcc).
    TimingReport {
        fcidump: PathBuf,
        #[arg(long, value_enum, default_value = "xbk")]
        method: MethodName,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        values: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[command(flatten)]
        params: MethodArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit<T: Serialize>(g: &Global, rows: &[T]) -> Result<()> {
    match g.output {
        Output::Json => println!("{}", serde_json::to_string_pretty(rows)?),
        Output::Csv => print!("{}", write_rows_csv(rows)?),
    }
    Ok(())
}

fn load(g: &Global, path: &Path) -> Result<Problem> {
    let opts = ProblemOptions { encoding: g.encoding, frozen: g.frozen, active: g.active, penalty: g.penalty, no_spin_penalty: g.no_spin_penalty };
    Problem::load(path, &opts).with_context(|| format!("loading {}", path.display()))
}

#[derive(Serialize)]
struct Single {
    method: String,
    energy: f64,
    seconds: f64,
    reference_energy: Option<f64>,
    detail: serde_json::Value,
}

fn run_single(g: &Global, sampler: &SamplerConfig, path: &Path, method: &Method) -> Result<bool> {
    let p = load(g, path)?;
    let out = run_method(&p, method, sampler)?;
    let s = Single {
        method: method.name().into(),
        energy: out.energy,
        seconds: out.seconds,
        reference_energy: p.reference_energy,
        detail: out.detail,
    };
    match g.output {
        Output::Json => println!("{}", serde_json::to_string_pretty(&s)?),
        Output::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                method: &'a str,
                energy: f64,
                seconds: f64,
                reference_energy: Option<f64>,
            }
            print!(
                "{}",
                write_rows_csv(&[Row { method: &s.method, energy: s.energy, seconds: s.seconds, reference_energy: s.reference_energy }])?
            );
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    let sampler = SamplerConfig {
        kind: g.sampler,
        reads: g.reads,
        sweeps: g.sweeps,
        seed: g.seed,
        endpoint: g.endpoint.clone(),
        timeout: Duration::from_secs(g.timeout),
    };
    match &cli.command {
        Command::Inspect { fcidump } => {
            let p = load(g, fcidump)?;
            let info = serde_json::json!({
                "file": fcidump.display().to_string(),
                "label": p.label,
                "n_orbitals": p.integrals.n_orbitals,
                "n_electrons": p.integrals.n_electrons,
                "n_qubits": p.n_qubits(),
                "n_terms": p.hamiltonian.len(),
                "penalty_weight": p.penalty_weight,
                "core_energy": p.integrals.core_energy,
                "reference_energy": p.reference_energy,
            });
            println!("{}", serde_json::to_string_pretty(&info)?);
            Ok(true)
        }
        Command::Exact { fcidump } => run_single(g, &sampler, fcidump, &Method::Exact),
        Command::Xbk { fcidump, params } => run_single(g, &sampler, fcidump, &params.method(MethodName::Xbk)),
        Command::Qcc { fcidump, params } => run_single(g, &sampler, fcidump, &params.method(MethodName::Qcc)),
        Command::Scan { pattern, methods, out, params } => {
            let methods: Vec<Method> = methods.iter().map(|&m| params.method(m)).collect();
            let opts = ProblemOptions { encoding: g.encoding, frozen: g.frozen, active: g.active, penalty: g.penalty, no_spin_penalty: g.no_spin_penalty };
            let report = scan(pattern, &methods, &opts, &sampler, g.jobs)?;
            if report.points.is_empty() {
                bail!("no fixtures matched `{pattern}`");
            }
            let csv = points_to_csv(&report.points)?;
            let json = points_to_json(&report.points)?;
            match out {
                Some(prefix) => {
                    fs::write(prefix.with_extension("csv"), &csv)?;
                    fs::write(prefix.with_extension("json"), &json)?;
                }
                None if g.output == Output::Csv => print!("{csv}"),
                None => println!("{json}"),
            }
            for f in &report.failures {
                eprintln!("failed: {} {}: {}", f.fcidump_path, f.method, f.message);
            }
            Ok(report.ok())
        }
        Command::Fit { scan_file, method, asymptote, minimum_only } => {
            let text = fs::read_to_string(scan_file).with_context(|| scan_file.display().to_string())?;
            let points = if scan_file.extension().is_some_and(|e| e == "json") {
                points_from_json(&text)?
            } else {
                points_from_csv(&text)?
            };
            if *minimum_only {
                #[derive(Serialize)]
                struct Minimum {
                    minimum_location: f64,
                    minimum_energy: f64,
                }
                let (x, e) = fit_minimum(&points, method, None)?;
                emit(g, &[Minimum { minimum_location: x, minimum_energy: e }])?;
            } else {
                emit(g, &[fit(&points, method, *asymptote)?])?;
            }
            Ok(true)
        }
        Command::QubitReport { fcidump, method, values, params } => {
            let p = load(g, fcidump)?;
            emit(g, &qubit_report(&p, &params.method(*method), values)?)?;
            Ok(true)
        }
        Command::TimingReport { fcidump, method, values, repeats, params } => {
            let p = load(g, fcidump)?;
            emit(g, &timing_report(&p, &params.method(*method), values, *repeats, &sampler)?)?;
            Ok(true)
        }
    }
}
