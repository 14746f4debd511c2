use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use crlab::cli::{cmd_report, run, Failure, Pipeline, RunConfig};

#[derive(Parser)]
#[command(name = "crlab", about = "Cauchy-Riemann operator laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "L", global = true)]
    l: Option<usize>,
    /// family parameter, or "auto"
    #[arg(long, global = true, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, global = true)]
    delta: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// build the superregular operator with cokernel and its certificates
    Construct,
    /// continue the kernel along the perturbation family and certify the dichotomy
    Sweep,
    /// curvature and splitting-type probes
    Kahler,
    /// summarize the certificates already written
    Report,
}

fn config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(l) = cli.l {
        cfg.l = l;
    }
    if let Some(t) = &cli.t {
        cfg.set("t", t)?;
    }
    if let Some(d) = cli.delta {
        cfg.delta = d;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| match cli.cmd {
        Cmd::Construct => run(Pipeline::Construct, &cfg),
        Cmd::Sweep => run(Pipeline::Sweep, &cfg),
        Cmd::Kahler => run(Pipeline::Kahler, &cfg),
        Cmd::Report => cmd_report(&cfg),
    });
    match result {
        Ok(o) => {
            print!("{}", o.certificate);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("FAILED {f}");
            ExitCode::FAILURE
        }
    }
}
