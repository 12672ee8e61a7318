//! `mixfam`: solve catalog problems (capacity, exponents, wiretap,
//! commitment, em, information bottleneck) from JSON inputs, sweep the
//! acceleration parameter, and emit result JSON plus trace CSVs.

mod cli;
mod driver;
mod input;

use clap::Parser;

use cli::{Cli, Command};

fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(s) = std::env::var("MIXFAM_THREADS") {
        let n: usize = s
            .parse()
            .map_err(|_| anyhow::anyhow!("MIXFAM_THREADS = {s:?} is not a positive integer"))?;
        if n == 0 {
            anyhow::bail!("MIXFAM_THREADS must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("cannot configure thread pool: {e}"))?;
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = init_thread_pool().and_then(|()| match &cli.command {
        Command::Run(args) => driver::run(args),
        Command::SweepGamma(args) => driver::sweep_gamma(args),
        Command::Grid(args) => driver::grid(args),
    });
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
