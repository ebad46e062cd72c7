mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gammarad::gallery::{gallery_csv, run_gallery, GalleryOptions, DEFAULT_SEED};

use config::ExperimentConfig;
use report::Manifest;

const INPUT_ERROR: u8 = 1;
const INVARIANT_VIOLATED: u8 = 2;

#[derive(Parser)]
#[command(name = "gammarad", version, about = "Gamma-radonifying norms and stochastic Weiss experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write `<experiment>.csv` plus a manifest.
    Run {
        config: PathBuf,
    },
    /// Run the fixture gallery; exits 2 if any fixture misses its expectation.
    Gallery {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Output directory (default: $GAMMARAD_OUT, then ./gammarad-out).
        #[arg(long)]
        out: Option<String>,
        /// Shift every recorded expectation; the run must then fail.
        #[arg(long)]
        perturb: bool,
    },
    /// Check a config against the schema and print its hash.
    Validate {
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config).and_then(|c| c.draws().map(|_| c)) {
            Ok(c) => {
                println!("ok {} {}", c.experiment.id(), c.hash());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(INPUT_ERROR)
            }
        },
        Command::Run { config } => run(&config),
        Command::Gallery { seed, out, perturb } => gallery(seed, out.as_deref(), perturb),
    }
}

fn run(path: &std::path::Path) -> ExitCode {
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let draws = match cfg.draws() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let start = Instant::now();
    let outcome = match experiments::run(&cfg.experiment, &draws) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let id = cfg.experiment.id();
    let csv = report::csv(id, &outcome.rows, draws.seed);
    let status = if outcome.violations.is_empty() { "ok" } else { "invariant-violated" };
    let manifest = Manifest {
        experiment: id,
        config_sha256: cfg.hash(),
        seed: draws.seed,
        n_samples: draws.n_samples,
        batch_count: draws.batch_count,
        gammarad_version: gammarad_version(),
        cli_version: env!("CARGO_PKG_VERSION"),
        rows: outcome.rows.len(),
        wall_time_ms: start.elapsed().as_millis(),
        status,
        violations: &outcome.violations,
        report: format!("{id}.csv"),
    };
    finish(&report::output_dir(cfg.output.as_deref()), id, &csv, &manifest)
}

fn gallery(seed: u64, out: Option<&str>, perturb: bool) -> ExitCode {
    let start = Instant::now();
    let rows = match run_gallery(&GalleryOptions { seed, perturb }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INPUT_ERROR);
        }
    };
    let violations: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {}: {} vs expected {} ({:?})", r.experiment, r.parameter, r.value, r.expected, r.tolerance))
        .collect();
    let canonical = format!("gallery;seed={seed};perturb={perturb}");
    let manifest = Manifest {
        experiment: "counterexample-gallery",
        config_sha256: sha_hex(&canonical),
        seed,
        n_samples: 100_000,
        batch_count: 50,
        gammarad_version: gammarad_version(),
        cli_version: env!("CARGO_PKG_VERSION"),
        rows: rows.len(),
        wall_time_ms: start.elapsed().as_millis(),
        status: if violations.is_empty() { "ok" } else { "invariant-violated" },
        violations: &violations,
        report: "gallery.csv".into(),
    };
    finish(&report::output_dir(out), "gallery", &gallery_csv(&rows, seed), &manifest)
}

fn finish(dir: &std::path::Path, name: &str, csv: &str, manifest: &Manifest<'_>) -> ExitCode {
    if let Err(e) = report::write(dir, name, csv, manifest) {
        eprintln!("error: cannot write reports to {}: {e}", dir.display());
        return ExitCode::from(INPUT_ERROR);
    }
    print!("{csv}");
    if manifest.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in manifest.violations {
            eprintln!("invariant violated: {v}");
        }
        ExitCode::from(INVARIANT_VIOLATED)
    }
}

fn sha_hex(s: &str) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn gammarad_version() -> &'static str {
    // the CLI is versioned in lockstep with the library
    env!("CARGO_PKG_VERSION")
}
