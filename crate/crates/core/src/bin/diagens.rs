use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diagens::experiment::{
    figure_recipes, fit_power_law, load_config, parse_overrides, profile_run_dir, recipe, resolve_workers, run,
    Table, WORKERS_ENV,
};
use diagens::{Error, Result};

#[derive(Parser)]
#[command(name = "diagens", version, about = "Diagonal-ensemble filtering with matrix product states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job of a config file (or `recipe:NAME`); `--key=value` overrides any key.
    Run {
        config: String,
        /// Worker threads; falls back to the environment variable, then to the core count.
        #[arg(long, env = WORKERS_ENV, hide_env = true)]
        workers: Option<usize>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Power-law fit `y ~ x^slope` of two table columns.
    Fit {
        table: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Inclusive abscissa range `a,b`.
        #[arg(long)]
        range: Option<String>,
    },
    /// Required bond per stored degree and tolerance; writes `profile.tsv`.
    Profile {
        run_dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4,1e-5")]
        tols: Vec<f64>,
    },
    /// List the figure presets, or print one as a config file.
    Recipes {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        show: Option<String>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("range {s:?} is not a,b"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn main_inner(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            workers,
            overrides,
        } => {
            // `--workers` may also appear among the trailing overrides
            let mut workers = workers;
            let mut rest = Vec::new();
            for a in overrides {
                match a.strip_prefix("--workers=") {
                    Some(w) => {
                        workers = Some(w.parse().map_err(|_| Error::Config(format!("bad worker count {w:?}")))?)
                    }
                    None => rest.push(a),
                }
            }
            let cfg = load_config(&config, &parse_overrides(&rest)?)?;
            let summary = run(&cfg, resolve_workers(workers)?)?;
            for o in &summary.outcomes {
                match &o.failure {
                    None => println!("ok\t{}", o.spec.stem()),
                    Some(e) => eprintln!("failed\t{}\t{e}", o.spec.stem()),
                }
            }
            println!("{}", summary.dir.display());
            let clean = summary.failed().next().is_none();
            Ok(clean)
        }
        Command::Fit { table, x, y, range } => {
            let t = Table::read(&table)?;
            let range = range.as_deref().map(parse_range).transpose()?;
            let f = fit_power_law(&t.column(&x)?, &t.column(&y)?, range)?;
            println!("slope\tintercept\tr_squared\tx_min\tx_max\tpoints");
            println!(
                "{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                f.slope, f.intercept, f.r_squared, f.range.0, f.range.1, f.points
            );
            Ok(true)
        }
        Command::Profile { run_dir, tols } => {
            let t = profile_run_dir(&run_dir, &tols)?;
            println!("{}", t.header.join("\t"));
            for r in &t.rows {
                println!("{}", r.join("\t"));
            }
            Ok(true)
        }
        Command::Recipes { list: _, show } => {
            if let Some(name) = show {
                let r = recipe(&name)?;
                print!("{}", toml::to_string(&r.config).map_err(|e| Error::Config(e.to_string()))?);
            } else {
                for r in figure_recipes() {
                    println!("{}\t{}", r.name, r.description);
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("diagens: {e}");
            ExitCode::FAILURE
        }
    }
}
