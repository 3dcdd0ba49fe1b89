use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use padic_qnn::scenario::{
    exit_code, load_config, preset, run_checks, run_scenario, Horizon, ScenarioConfig, EXIT_CONFIG,
    EXIT_IO, EXIT_OK, PRESET_NAMES,
};
use padic_qnn::Error;

#[derive(Parser)]
#[command(
    name = "pqnn",
    version,
    about = "Simulate p-adic quantum and classical cellular neural networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        /// Output directory (default: the file's output.dir, else out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in scenario.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        /// Full published run length, or a shortened desk run.
        #[arg(long, value_enum, default_value_t = HorizonArg::Desk)]
        horizon: HorizonArg,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV file with the 64x64 cat cortex matrix, replacing the synthetic one.
        #[arg(long)]
        cat_matrix: Option<PathBuf>,
        /// Also write heatmap.pgm.
        #[arg(long)]
        heatmap: bool,
        /// Print the scenario as JSON and exit without running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Run the built-in invariant and certificate checks.
    Check,
    /// Run every *.json scenario in a directory.
    Batch {
        dir: PathBuf,
        /// Parent directory for per-scenario outputs (default: out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum HorizonArg {
    Paper,
    Desk,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out } => {
            load_config(&config).map_or_else(fail, |c| run_one(&c, out))
        }
        Command::Preset {
            name,
            horizon,
            out,
            cat_matrix,
            heatmap,
            print_config,
        } => {
            let horizon = match horizon {
                HorizonArg::Paper => Horizon::Paper,
                HorizonArg::Desk => Horizon::Desk,
            };
            match preset(&name, horizon, cat_matrix) {
                Ok(config) if print_config => {
                    println!("{}", config.to_json());
                    EXIT_OK
                }
                Ok(mut config) => {
                    config.output.heatmap |= heatmap;
                    run_one(&config, out)
                }
                Err(e) => fail(e),
            }
        }
        Command::Check => check(),
        Command::Batch { dir, out } => batch(&dir, &out.unwrap_or_else(|| PathBuf::from("out"))),
    };
    ExitCode::from(code as u8)
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(&e)
}

fn default_out(config: &ScenarioConfig) -> PathBuf {
    config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(&config.name))
}

fn run_one(config: &ScenarioConfig, out: Option<PathBuf>) -> i32 {
    let dir = out.unwrap_or_else(|| default_out(config));
    match run_scenario(config, &dir) {
        Ok(report) => {
            print!("{}", report.summary());
            println!("output_dir={}", dir.display());
            report.exit_code()
        }
        Err(e) => fail(e),
    }
}

fn check() -> i32 {
    let mut code = EXIT_OK;
    for outcome in run_checks() {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", outcome.name, outcome.detail);
        if !outcome.passed {
            code = 1;
        }
    }
    code
}

/// Scenarios run on up to `available_parallelism` threads, each writing to
/// `<out>/<name>`. The exit code is the largest of the individual codes.
fn batch(dir: &Path, out: &Path) -> i32 {
    let entries = match std::fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) => {
            return fail(Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        eprintln!("error: no *.json scenarios in {}", dir.display());
        return EXIT_IO;
    }

    let results: Mutex<Vec<(usize, String, i32)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(files.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                let (text, code) = match load_config(path) {
                    Ok(config) => match run_scenario(&config, &out.join(&config.name)) {
                        Ok(report) => (report.summary(), report.exit_code()),
                        Err(e) => (format!("error={e}\n"), exit_code(&e)),
                    },
                    Err(e) => (format!("error={e}\n"), EXIT_CONFIG.max(exit_code(&e))),
                };
                results
                    .lock()
                    .unwrap()
                    .push((i, format!("file={}\n{text}", path.display()), code));
            });
        }
    });

    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.0);
    let mut worst = EXIT_OK;
    for (_, text, code) in results {
        println!("{text}");
        worst = worst.max(code);
    }
    worst
}
