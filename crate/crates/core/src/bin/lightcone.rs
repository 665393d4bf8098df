use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use lightcone::battery::run_battery;
use lightcone::config::{Axis, ExperimentConfig};
use lightcone::fit::{fit_decay, Verdict};
use lightcone::io::read_csv;
use lightcone::runner::{self, RunManifest};

#[derive(Parser)]
#[command(
    name = "lightcone",
    version,
    about = "Maximal propagation speed lab for Schrödinger dynamics"
)]
struct Cli {
    /// Worker threads; LIGHTCONE_THREADS takes precedence. Defaults to physical cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit 0 even when a verdict is fail or flagged.
    #[arg(long, global = true)]
    no_fail_exit: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant battery.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run the experiment named in a config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One sub-run per axis value.
    Sweep {
        config: PathBuf,
        /// One of c, mu, delta_g, a.
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a log-log decay exponent to two CSV columns.
    Fit {
        csv: PathBuf,
        /// Expected exponent; the verdict is `exponent <= target + tolerance`.
        #[arg(long, allow_hyphen_values = true)]
        target: f64,
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        /// Abscissa column (name); defaults to the first column.
        #[arg(long)]
        x: Option<String>,
        /// Ordinate column (name); defaults to the second column.
        #[arg(long)]
        y: Option<String>,
        /// Fit window as lo,hi; defaults to the full abscissa range.
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
    },
    /// Human-readable summary of a manifest.
    Report { manifest: PathBuf },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected lo,hi, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(format!("window needs lo < hi, got {lo},{hi}"));
    }
    Ok((lo, hi))
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Ok(v) = std::env::var("LIGHTCONE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("LIGHTCONE_THREADS={v:?} is not a count"))?;
        if n == 0 {
            bail!("LIGHTCONE_THREADS must be positive");
        }
        return Ok(n);
    }
    Ok(flag.unwrap_or_else(num_cpus::get_physical).max(1))
}

fn column(header: &[String], name: Option<&str>, fallback: usize) -> anyhow::Result<usize> {
    match name {
        Some(n) => header
            .iter()
            .position(|h| h == n)
            .with_context(|| format!("no column {n:?} in {header:?}")),
        None if fallback < header.len() => Ok(fallback),
        None => bail!(
            "need at least {} columns, found {}",
            fallback + 1,
            header.len()
        ),
    }
}

fn execute(cli: Cli) -> anyhow::Result<Verdict> {
    match cli.command {
        Command::Check { seed } => {
            let lines = run_battery(seed)?;
            for l in &lines {
                println!("{l}");
            }
            Ok(lines.iter().fold(Verdict::Pass, |v, l| v.worst(l.verdict)))
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("{}", cfg.to_toml());
            let dir = out.unwrap_or_else(|| runner::output_dir(&cfg));
            let m =
                runner::run(&cfg, &dir).with_context(|| format!("running {}", config.display()))?;
            print!("{}", m.report());
            Ok(m.verdict)
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| runner::output_dir(&cfg));
            let m = runner::sweep(&cfg, axis, &values, &dir)
                .with_context(|| format!("sweeping {}", config.display()))?;
            print!("{}", m.report());
            Ok(m.verdict)
        }
        Command::Fit {
            csv,
            target,
            tolerance,
            x,
            y,
            window,
        } => {
            let (header, columns) = read_csv(&csv)?;
            let (ix, iy) = (
                column(&header, x.as_deref(), 0)?,
                column(&header, y.as_deref(), 1)?,
            );
            let (xs, ys) = (&columns[ix], &columns[iy]);
            let window = match window {
                Some(w) => w,
                None => (
                    xs.iter().cloned().fold(f64::INFINITY, f64::min),
                    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                ),
            };
            let fit = fit_decay(xs, ys, window, target, tolerance)?;
            println!(
                "[{}] exponent {:.6} (target {target}, tolerance {tolerance}), intercept {:.6}, r^2 {:.6}, {} points in [{}, {}]",
                fit.verdict, fit.exponent, fit.intercept, fit.r_squared, fit.points, window.0, window.1
            );
            Ok(fit.verdict)
        }
        Command::Report { manifest } => {
            let m = RunManifest::load(&manifest)?;
            print!("{}", m.report());
            Ok(m.verdict)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit codes 1 and 2 are reserved for flagged and failed verdicts
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let no_fail_exit = cli.no_fail_exit;
    let pool = thread_count(cli.threads).and_then(|n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Into::into)
    });
    if let Err(e) = pool {
        eprintln!("error: {e:#}");
        return ExitCode::from(3);
    }
    match execute(cli) {
        Ok(v) if no_fail_exit => {
            eprintln!("overall: {v}");
            ExitCode::SUCCESS
        }
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Flagged) => ExitCode::from(1),
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
