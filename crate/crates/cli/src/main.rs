use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use compactkit_cli::{run_to_exit_code, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "compactkit",
    version,
    about = "Constructive total-boundedness certification for sampled function families"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandLine,
}

#[derive(Args)]
struct CommonArgs {
    /// Family manifest (JSON; member payloads resolve relative to it)
    #[arg(long)]
    family: PathBuf,

    /// Lebesgue exponent p >= 1
    #[arg(long)]
    p: f64,

    /// Target exponent q for the sobolev command
    #[arg(long)]
    q: Option<f64>,

    /// Certification epsilon
    #[arg(long)]
    epsilon: Option<f64>,

    /// Pointwise selection tolerance for the helly command
    #[arg(long)]
    tau: Option<f64>,

    /// Tail-radius tabulation, comma-separated and increasing
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,

    /// Shift-radius (or frequency-cutoff) tabulation, comma-separated
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,

    /// Configured Sobolev embedding constant (diagnostic only)
    #[arg(long)]
    embedding_constant: Option<f64>,

    /// Report destination (written atomically)
    #[arg(long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum CommandLine {
    /// Tabulate norm bound, tail profile and translation profile
    Moduli(CommonArgs),
    /// Direct greedy epsilon-cover in Lp with covering-number bound
    Cover(CommonArgs),
    /// Projection-pipeline certification from the measured moduli
    Certify(CommonArgs),
    /// Spectral-tail certification in L2 on the box torus
    Fourier(CommonArgs),
    /// Bounded-variation selection for one-dimensional families
    Helly(CommonArgs),
    /// First-order Sobolev reduction to an Lq cover with diagnostics
    Sobolev(CommonArgs),
}

fn to_config(command: Command, args: CommonArgs) -> RunConfig {
    RunConfig {
        command,
        family_path: args.family,
        p: args.p,
        q: args.q,
        epsilon: args.epsilon,
        tau: args.tau,
        r_grid: args.r_grid,
        rho_grid: args.rho_grid,
        embedding_constant: args.embedding_constant,
        output_path: args.output,
    }
}

fn main() {
    if let Ok(threads) = std::env::var("COMPACTKIT_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    let config = match cli.command {
        CommandLine::Moduli(a) => to_config(Command::Moduli, a),
        CommandLine::Cover(a) => to_config(Command::Cover, a),
        CommandLine::Certify(a) => to_config(Command::Certify, a),
        CommandLine::Fourier(a) => to_config(Command::Fourier, a),
        CommandLine::Helly(a) => to_config(Command::Helly, a),
        CommandLine::Sobolev(a) => to_config(Command::Sobolev, a),
    };
    std::process::exit(run_to_exit_code(&config));
}
