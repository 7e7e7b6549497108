use clap::{Parser, Subcommand};
use gglab::config::ExperimentConfig;
use gglab::{exit, experiments, manifest, run_experiment, with_thread_pool};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gglab",
    about = "Experiment laboratory for lattice gradient interface models with quenched disorder",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment; writes CSV results, a summary, and a manifest.
    Run {
        /// Experiment name (see `gglab list`).
        name: String,
        /// TOML config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default `out/<name>`; env `GGLAB_OUT`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (env `GGLAB_THREADS`); results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the experiment registry.
    List,
    /// Re-run a manifest's config and compare output checksums.
    Replay {
        manifest: PathBuf,
        /// Scratch directory for the re-run (default: a temp dir).
        #[arg(long)]
        scratch: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            name,
            config,
            seed,
            out,
            threads,
        } => cmd_run(name, config, seed, out, threads),
        Command::List => cmd_list(),
        Command::Replay { manifest, scratch } => cmd_replay(manifest, scratch),
    };
    ExitCode::from(code as u8)
}

fn cmd_run(
    name: String,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> i32 {
    let entry = match experiments::find(&name) {
        Some(e) => e,
        None => {
            eprintln!("unknown experiment '{name}'; see `gglab list`");
            return exit::USAGE;
        }
    };
    let mut cfg = match config {
        Some(path) => match ExperimentConfig::load(&path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("config error: {e:#}");
                return exit::USAGE;
            }
        },
        None => (entry.default_config)(seed.unwrap_or(0)),
    };
    if cfg.name != name {
        eprintln!(
            "config names experiment '{}' but '{}' was requested",
            cfg.name, name
        );
        return exit::USAGE;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let threads = threads
        .or_else(|| {
            std::env::var("GGLAB_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .or(cfg.threads);
    let out_dir = out
        .or_else(|| std::env::var("GGLAB_OUT").ok().map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&name));
    if let Err(e) = cfg.validate() {
        eprintln!("config error: {e:#}");
        return exit::USAGE;
    }

    let result = with_thread_pool(threads, || run_experiment(&cfg, &out_dir));
    match result {
        Ok(res) => {
            for line in &res.summary_lines {
                println!("{line}");
            }
            println!("manifest: {}", res.manifest_path.display());
            if res.all_pass {
                println!("overall: PASS");
                exit::PASS
            } else {
                println!("overall: FAIL");
                exit::CHECK_FAIL
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e:#}");
            exit::RUNTIME
        }
    }
}

fn cmd_list() -> i32 {
    for e in experiments::registry() {
        println!("{:<22} {}", e.name, e.summary);
    }
    exit::PASS
}

fn cmd_replay(path: PathBuf, scratch: Option<PathBuf>) -> i32 {
    let man = match manifest::RunManifest::load(&path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("manifest error: {e:#}");
            return exit::USAGE;
        }
    };
    let tmp;
    let scratch_dir = match scratch {
        Some(p) => p,
        None => {
            tmp = std::env::temp_dir().join(format!(
                "gglab-replay-{}-{}",
                man.config.name,
                std::process::id()
            ));
            tmp.clone()
        }
    };
    match manifest::replay(&man, &scratch_dir) {
        Ok(manifest::ReplayOutcome::Identical { files }) => {
            println!("replay identical: {files} files match");
            exit::PASS
        }
        Ok(manifest::ReplayOutcome::Drift { mismatched }) => {
            println!("replay drift in {} file(s):", mismatched.len());
            for f in mismatched {
                println!("  {f}");
            }
            exit::CHECK_FAIL
        }
        Err(e) => {
            eprintln!("replay error: {e:#}");
            exit::RUNTIME
        }
    }
}
