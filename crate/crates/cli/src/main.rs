use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stlw_cli::commands::{self, Options, Outcome};
use stlw_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "stlw", version, about = "Space-time finite-volume experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file or bundled config name (see `stlw list`).
    config: String,
    /// Exit with status 1 when any check fails.
    #[arg(long)]
    assert: bool,
    /// Output directory (default: the config's `output`, else out/<name>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Doubles the quadrature segments per face.
    #[arg(long)]
    quad_refine: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study with residuals and assertions.
    Run(Common),
    /// Checks the numerical flux properties at the first mesh width.
    VerifyFlux(Common),
    /// Grid files.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Bundled configs.
    List,
}

#[derive(Subcommand)]
enum GridCommand {
    /// Builds the grid of a config and writes it.
    Dump {
        config: String,
        file: PathBuf,
        /// Mesh width (default: the first `h` of the config).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Reads a grid file and prints its metrics.
    Load { file: PathBuf },
}

impl Common {
    fn options(&self) -> Options {
        Options { out: self.out.clone(), seed: self.seed, quad_refine: self.quad_refine }
    }
}

fn threads() -> Result<()> {
    let Ok(v) = std::env::var("STLW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("STLW_THREADS must be a thread count, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("STLW_THREADS: {e}")))
}

fn report(o: &Outcome, assert: bool) -> ExitCode {
    print!("{}", o.report);
    for f in &o.files {
        println!("wrote {}", f.display());
    }
    let failed: Vec<_> = o.failures().collect();
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    for c in &failed {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    if assert {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main_() -> Result<ExitCode> {
    let cli = Cli::parse();
    threads()?;
    Ok(match cli.command {
        Command::Run(c) => {
            let cfg = commands::load_config(&c.config)?;
            report(&commands::run(&cfg, &c.options())?, c.assert)
        }
        Command::VerifyFlux(c) => {
            let cfg = commands::load_config(&c.config)?;
            report(&commands::verify_flux(&cfg, &c.options())?, c.assert)
        }
        Command::Grid(GridCommand::Dump { config, file, h, seed }) => {
            let mut cfg = commands::load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            print!("{}", commands::grid_dump(&cfg, h, &file)?);
            println!("wrote {}", file.display());
            ExitCode::SUCCESS
        }
        Command::Grid(GridCommand::Load { file }) => {
            print!("{}", commands::grid_load(&file)?);
            ExitCode::SUCCESS
        }
        Command::List => {
            print!("{}", commands::list());
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    match main_() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
