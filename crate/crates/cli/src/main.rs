use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infheat_cli::{catalog_text, run_file};

#[derive(Parser)]
#[command(name = "infheat", version, about = "Experiments for the normalized infinity-heat equation")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "INFHEAT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print every barrier form with parameters, constraints and anchor.
    ListCatalog,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match cli.cmd {
        Cmd::ListCatalog => {
            print!("{}", catalog_text());
            ExitCode::SUCCESS
        }
        Cmd::Run { config, out, seed } => match run_file(&config, out.as_deref(), seed) {
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            Ok(o) => {
                println!("{}", o.summary);
                for p in &o.written {
                    println!("wrote {}", p.display());
                }
                for c in &o.checks {
                    let tag = if c.ok { "ok" } else { "MISMATCH" };
                    println!("expect {}: {tag} (expected {}, got {})", c.name, c.expected, c.actual);
                }
                if o.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
        },
    }
}
