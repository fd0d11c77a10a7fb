use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lwire::harness::{
    append_csv, certify_report, convergence_study, exit_code, run_experiment, sweep, transverse_report, write_csv,
    CertFamily, CsvRow, ExperimentConfig, SweepAxis,
};
use lwire::{Error, Result};

#[derive(Parser)]
#[command(name = "lwire", version, about = "Bound states of leaky wires with a potential bias")]
struct Cli {
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "LWIRE_JOBS")]
    jobs: Option<usize>,
    /// Output path (record for `solve`, CSV for `sweep`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Transverse 1D spectrum and its finite-difference cross-check.
    Transverse {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        v0: f64,
    },
    /// Runs the grid ladder of one config and reports the verdict.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs a config once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
    },
    /// Order of convergence in h, R stability and Richardson value.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Searches for a variational certificate.
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        family: Family,
        /// Interval length of the product trial.
        #[arg(long, default_value_t = 10.0)]
        l_len: f64,
        /// Mode number of the product trial.
        #[arg(long, default_value_t = 1)]
        j: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Beta,
    V0,
    Alpha,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Auto,
    Theorem4,
    Theorem6,
    Prop1,
    Prop2,
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Transverse { alpha, v0 } => {
            print!("{}", transverse_report(alpha, v0)?);
        }
        Cmd::Solve { config } => {
            let cfg = load(&config, cli.seed)?;
            cfg.validate()?;
            let (rec, err) = run_experiment(&cfg);
            let out = cli.out.or_else(|| cfg.output.clone());
            if let Some(path) = &out {
                std::fs::write(path, rec.to_toml()?)?;
                append_csv(&path.with_extension("csv"), &[CsvRow::from_record(&rec)])?;
            }
            if let Some(e) = err {
                return Err(e);
            }
            for r in &rec.rungs {
                println!(
                    "h = {} R = {} lambda1 = {} count = {}",
                    r.grid.h,
                    r.grid.half_extent,
                    r.lambda1(),
                    r.count_below_mu_margin
                );
            }
            if let Some(c) = &rec.certificate {
                println!("certificate {} = {}", c.family, if c.found { "found" } else { "not-found" });
            }
            println!("verdict = {}", rec.verdict.label());
            write_csv(std::io::stdout(), &[CsvRow::from_record(&rec)])?;
        }
        Cmd::Sweep { config, axis, values } => {
            let cfg = load(&config, cli.seed)?;
            let axis = match axis {
                Axis::Beta => SweepAxis::Beta,
                Axis::V0 => SweepAxis::V0,
                Axis::Alpha => SweepAxis::Alpha,
            };
            let points = sweep(&cfg, axis, &values)?;
            for p in &points {
                if let Some(e) = &p.error {
                    eprintln!("{axis:?} = {}: {e}", p.value);
                }
            }
            let rows: Vec<CsvRow> = points.iter().map(|p| CsvRow::from_record(&p.record)).collect();
            match &cli.out {
                Some(path) => write_csv(std::fs::File::create(path)?, &rows)?,
                None => write_csv(std::io::stdout(), &rows)?,
            }
        }
        Cmd::Converge { config } => {
            let cfg = load(&config, cli.seed)?;
            cfg.validate()?;
            let r = convergence_study(&cfg)?;
            for (h, big_r, lam) in &r.rungs {
                println!("h = {h} R = {big_r} lambda1 = {lam}");
            }
            if let Some(e) = r.exact {
                println!("exact = {e}");
            }
            println!("order = {}", r.order);
            println!("extrapolated = {}", r.extrapolated);
            println!("r_gap = {}", r.r_gap);
            if r.inconclusive {
                println!("verdict = inconclusive (order below 0.7)");
            }
        }
        Cmd::Certify { config, family, l_len, j } => {
            let cfg = load(&config, cli.seed)?;
            cfg.validate()?;
            let family = match family {
                Family::Auto => CertFamily::Auto,
                Family::Theorem4 => CertFamily::Theorem4,
                Family::Theorem6 => CertFamily::Theorem6,
                Family::Prop1 => CertFamily::Prop1,
                Family::Prop2 => CertFamily::Prop2,
            };
            let (_, text) = certify_report(&cfg, family, l_len, j)?;
            print!("{text}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
