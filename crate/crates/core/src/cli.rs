//! Subcommand front end shared by the binary and the integration tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::allocator::{allocate, AllocationResult, CSV_HEADER};
use crate::channel::{build_scenario, generate_dataset, Dataset};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{run_experiment, write_cdf_csv, write_metrics_csv};
use crate::svc::SvcVariant;
use crate::uncertainty::{fit_set, Method, UncertaintySet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "robust-d2d",
    version,
    about = "Robust power allocation for D2D underlay links"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed of the data streams.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Uncertainty-set method for fit-set.
    #[arg(long, global = true, value_name = "NAME")]
    pub method: Option<String>,
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub verbosity: u8,
    /// Configuration override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a training dataset and write it as CSV.
    GenData,
    /// Fit an uncertainty set on a dataset.
    FitSet { dataset: PathBuf },
    /// Run the robust allocation against a fitted set.
    Allocate { set: PathBuf },
    /// Run the Monte Carlo experiment and write metric and CDF tables.
    Sweep,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(m) = &cli.method {
        overrides.push(format!("method={}", toml::Value::String(m.clone())));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("out_dir={}", toml::Value::String(out.display().to_string())));
    }
    RunConfig::load(cli.config.as_deref(), &overrides)
}

fn set_method(set: &UncertaintySet) -> Method {
    match set {
        UncertaintySet::Singleton(_) => Method::NonRobust,
        UncertaintySet::Symmetric(s) => match s.shape {
            crate::quantile_sets::SetShape::L1Ball => Method::L1Ball,
            crate::quantile_sets::SetShape::L2Ball => Method::L2Ball,
            crate::quantile_sets::SetShape::BoxSet => Method::BoxSet,
        },
        UncertaintySet::Svc(p) => match p.variant {
            SvcVariant::Soft => Method::Svc,
            SvcVariant::Quantile => Method::QuantileSvc,
        },
    }
}

/// Runs one command, writing results to `out`; returns the process exit code.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> i32 {
    let cfg = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    eprintln!("# effective configuration\n{}", cfg.to_toml());
    let result = match &cli.command {
        Command::GenData => gen_data(&cfg, out),
        Command::FitSet { dataset } => fit(&cfg, dataset, out),
        Command::Allocate { set } => allocate_cmd(&cfg, set, cli.verbosity, out),
        Command::Sweep => sweep(&cfg, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_out(out: &mut impl Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text).map_err(|e| Error::Io {
        path: "<stdout>".into(),
        source: e,
    })
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.out_dir);
    fs::create_dir_all(&dir).map_err(io_at(&dir))?;
    Ok(dir)
}

fn gen_data(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let scenario = build_scenario(&cfg.scenario()?)?;
    let data = generate_dataset(&scenario, &cfg.error_distribution()?, cfg.n_train, cfg.seed)?;
    let path = out_dir(cfg)?.join("dataset.csv");
    let file = fs::File::create(&path).map_err(io_at(&path))?;
    data.write_csv(std::io::BufWriter::new(file))?;
    write_out(
        out,
        format_args!("wrote N={} seed={} to {}\n", data.len(), cfg.seed, path.display()),
    )
}

fn fit(cfg: &RunConfig, dataset: &Path, out: &mut impl Write) -> Result<()> {
    let file = fs::File::open(dataset).map_err(io_at(dataset))?;
    let data = Dataset::read_csv(file)?;
    let method = cfg.method()?;
    let set = fit_set(method, &data.samples, cfg.epsilon).map_err(|e| match e {
        Error::Config { field, reason } => Error::Config {
            field,
            reason: format!("{reason} (fitting {method})"),
        },
        Error::Dataset(m) => Error::Dataset(format!("fitting {method}: {m}")),
        other => {
            eprintln!("fitting {method} failed");
            other
        }
    })?;
    let path = out_dir(cfg)?.join(format!("set_{}.txt", method.to_string().to_ascii_lowercase()));
    fs::write(&path, set.to_text()?).map_err(io_at(&path))?;
    match &set {
        UncertaintySet::Singleton(c) => write_out(out, format_args!("method={method} center={},{}\n", c[0], c[1]))?,
        UncertaintySet::Symmetric(s) => write_out(
            out,
            format_args!(
                "method={method} shape={} size={} radius={}\n",
                s.shape,
                s.size,
                s.radius()
            ),
        )?,
        UncertaintySet::Svc(p) => write_out(
            out,
            format_args!("method={method} C={} rho={} support={}\n", p.cap, p.rho, p.points.len()),
        )?,
    }
    write_out(out, format_args!("wrote {}\n", path.display()))
}

fn allocate_cmd(cfg: &RunConfig, set_path: &Path, verbosity: u8, out: &mut impl Write) -> Result<()> {
    let text = fs::read_to_string(set_path).map_err(io_at(set_path))?;
    let set = UncertaintySet::from_text(&text)?;
    let method = set_method(&set);
    let scenario = build_scenario(&cfg.scenario()?)?;
    let zeta = cfg.zeta_for(&scenario);
    write_out(out, format_args!("{CSV_HEADER}\n"))?;
    match allocate(&scenario, &set, zeta) {
        Ok(r) => {
            write_out(
                out,
                format_args!("{}\n", r.csv_row(&method.to_string(), cfg.epsilon, cfg.gamma_min_d)),
            )?;
            if verbosity >= 1 {
                write_out(out, format_args!("iteration,p_d,p_c\n"))?;
                for (i, s) in r.trace.iter().enumerate() {
                    write_out(out, format_args!("{},{:e},{:e}\n", i + 1, s.p_d, s.p_c))?;
                }
            }
            info!("throughput {:e} bit/s", r.throughput(&scenario));
            Ok(())
        }
        Err(e @ Error::Infeasible(_)) => {
            let r = AllocationResult::infeasible(zeta, 0, Vec::new());
            write_out(
                out,
                format_args!("{}\n", r.csv_row(&method.to_string(), cfg.epsilon, cfg.gamma_min_d)),
            )?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn sweep(cfg: &RunConfig, out: &mut impl Write) -> Result<()> {
    let spec = cfg.experiment()?;
    let result = run_experiment(&spec)?;
    let dir = out_dir(cfg)?;
    let path = dir.join("metrics.csv");
    let file = fs::File::create(&path).map_err(io_at(&path))?;
    write_metrics_csv(&result.rows, std::io::BufWriter::new(file))?;
    write_out(
        out,
        format_args!("wrote {} rows to {}\n", result.rows.len(), path.display()),
    )?;
    for table in &result.cdfs {
        let path = dir.join(format!("cdf_{}.csv", table.method.to_string().to_ascii_lowercase()));
        let file = fs::File::create(&path).map_err(io_at(&path))?;
        write_cdf_csv(table, std::io::BufWriter::new(file))?;
        write_out(out, format_args!("wrote {}\n", path.display()))?;
    }
    Ok(())
}
