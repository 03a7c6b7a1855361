use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use zerodensity::config::RunConfig;
use zerodensity::pipeline;
use zerodensity::report::CertificateReport;
use zerodensity::zeta_data::load_zero_file;

/// Directory searched for `zeta_zeros.txt` when no config names a table.
const FIXTURE_ENV: &str = "ZERODENS_FIXTURES";

#[derive(Parser)]
#[command(name = "zerodensity", version, about = "Certified lower bound for the density of sign changes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the zero table.
    CheckZeros(RunArgs),
    /// Certify the contour claims only.
    Mesh(RunArgs),
    /// Run the lattice reduction and write its certificate.
    Lll(RunArgs),
    /// Finish a run from a stored lattice certificate.
    Volume {
        #[command(flatten)]
        run: RunArgs,
        /// Certificate written by `lll` or `run`.
        #[arg(long, required = true)]
        certificate: PathBuf,
    },
    /// Full pipeline.
    Run(RunArgs),
    /// Print a stored certificate as text.
    Report {
        #[arg(long, required = true)]
        certificate: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Reduced,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defaults used when no config file is given.
    #[arg(long, value_enum, default_value = "paper")]
    preset: Preset,
    #[arg(long)]
    zeros: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_prime: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    lll_digits: Option<u32>,
    #[arg(long)]
    coeff_bound: Option<String>,
    /// Lattice target `d`, or `auto` for twice the certified sum.
    #[arg(long)]
    d_target: Option<String>,
    #[arg(long)]
    prec: Option<u32>,
    #[arg(long)]
    threads: Option<usize>,
    /// Any other config key, as `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Where to write the JSON certificate.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_zeros() -> PathBuf {
    let dir = std::env::var_os(FIXTURE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures"));
    dir.join("zeta_zeros.txt")
}

impl RunArgs {
    fn config(&self) -> zerodensity::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => match self.preset {
                Preset::Paper => RunConfig::paper(default_zeros()),
                Preset::Reduced => RunConfig::reduced(default_zeros()),
            },
        };
        let mut set = |k: &str, v: Option<String>| -> zerodensity::Result<()> {
            match v {
                Some(v) => cfg.set(k, &v),
                None => Ok(()),
            }
        };
        set("zeros", self.zeros.as_ref().map(|p| p.display().to_string()))?;
        set("N", self.n.map(|x| x.to_string()))?;
        set("N_prime", self.n_prime.map(|x| x.to_string()))?;
        set("m", self.m.map(|x| x.to_string()))?;
        set("ell", self.ell.map(|x| x.to_string()))?;
        set("lll_digits", self.lll_digits.map(|x| x.to_string()))?;
        set("coeff_bound", self.coeff_bound.clone())?;
        set("d_target", self.d_target.clone())?;
        set("prec", self.prec.map(|x| x.to_string()))?;
        set("threads", self.threads.map(|x| x.to_string()))?;
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| zerodensity::Error::Argument(format!("--set expects KEY=VALUE, got `{item}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(report: &CertificateReport, out: Option<&Path>) -> zerodensity::Result<ExitCode> {
    print!("{}", report.to_text());
    if let Some(path) = out {
        report.write(path)?;
        println!("certificate written to {}", path.display());
    }
    Ok(if report.is_certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> zerodensity::Result<ExitCode> {
    match cli.command {
        Command::CheckZeros(args) => {
            let cfg = args.config()?;
            let table = load_zero_file(&cfg.zeros_path, &cfg.declared_ulp()?, cfg.prec)?;
            let last = table.gamma(table.count() - 1);
            println!(
                "{}: {} ordinates, gamma_0 = {}, last = {}",
                cfg.zeros_path.display(),
                table.count(),
                table.gamma(0),
                last
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Mesh(args) => {
            let cfg = args.config()?;
            emit(&pipeline::run_mesh(&cfg)?, args.out.as_deref())
        }
        Command::Lll(args) => {
            let cfg = args.config()?;
            emit(&pipeline::run_lattice(&cfg)?, args.out.as_deref())
        }
        Command::Volume { run, certificate } => {
            let cfg = run.config()?;
            let stored = CertificateReport::read(&certificate)?;
            emit(&pipeline::run_volume(&cfg, &stored)?, run.out.as_deref())
        }
        Command::Run(args) => {
            let cfg = args.config()?;
            emit(&pipeline::run_pipeline(&cfg)?, args.out.as_deref())
        }
        Command::Report { certificate } => {
            let stored = CertificateReport::read(&certificate)?;
            print!("{}", stored.to_text());
            Ok(if stored.is_certified() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e @ (zerodensity::Error::Argument(_) | zerodensity::Error::Parse { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
