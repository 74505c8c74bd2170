//! `hl`: run the level-length experiments from the command line.
//!
//! Exit status: 0 on success, 2 on a configuration error, 3 on a numerical
//! failure, 1 on anything else (I/O).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hl_core::experiments::{
    emit, run_appendix_checks, run_moment_laws, run_proxy_convergence, run_theorem1,
    ExperimentConfig, ReplicationPlans,
};
use hl_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "hl",
    version,
    about = "Level-set lengths of random spherical harmonics"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML (or .json) file with ExperimentConfig keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file and HL_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum concurrent replications.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Degrees, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    ell: Option<Vec<usize>>,
    /// Levels u, comma separated.
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    levels: Option<Vec<f64>>,
    /// Replications per degree.
    #[arg(long, global = true)]
    reps: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Correlations and norm-partial correlations between level lengths.
    Theorem1,
    /// Mean and variance of the length against closed forms.
    Moments,
    /// Correlations with the second-chaos and trispectrum proxies.
    Proxies,
    /// Truncated Legendre moment integrals and their scaling.
    Appendix,
    /// Binary dump of one realization's grid for each degree.
    FieldDump {
        /// Replication index to dump.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
}

fn config_sets_seed(path: &Path) -> Result<bool, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(v.get("master_seed").is_some())
    } else {
        let v: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(v.contains_key("master_seed"))
    }
}

/// Defaults, then the config file, then HL_SEED (only if the file has no
/// seed), then flags.
fn resolve_config(c: &Common) -> Result<ExperimentConfig, Error> {
    let (mut cfg, file_seed) = match &c.config {
        Some(p) => (ExperimentConfig::load(p)?, config_sets_seed(p)?),
        None => (ExperimentConfig::default(), false),
    };
    if !file_seed {
        if let Ok(s) = std::env::var("HL_SEED") {
            cfg.master_seed = s.trim().parse().map_err(|_| {
                Error::Config(format!("HL_SEED={s:?} is not an unsigned 64-bit integer"))
            })?;
        }
    }
    if let Some(s) = c.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(p) = c.parallelism {
        cfg.parallelism = p;
    }
    if let Some(l) = &c.ell {
        cfg.ells = l.clone();
    }
    if let Some(u) = &c.levels {
        cfg.levels = u.clone();
    }
    if let Some(n) = c.reps {
        cfg.replications = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Error> {
    let cfg = resolve_config(&cli.common)?;
    let out = cfg.output_dir.clone();
    match &cli.command {
        Command::Theorem1 => emit(&run_theorem1(&cfg)?, &cfg, &out),
        Command::Moments => emit(&run_moment_laws(&cfg)?, &cfg, &out),
        Command::Proxies => emit(&run_proxy_convergence(&cfg)?, &cfg, &out),
        Command::Appendix => emit(&run_appendix_checks(&cfg)?, &cfg, &out),
        Command::FieldDump { replication } => {
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let mut written = Vec::new();
            for &ell in &cfg.ells {
                let plans = ReplicationPlans::new(&cfg, ell, true)?;
                let grid = plans.chaos_grid(&cfg, *replication)?;
                let path = out.join(format!("field_l{ell}_r{replication}.bin"));
                let io = |e| Error::Io {
                    path: path.clone(),
                    source: e,
                };
                let mut f = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
                grid.write_binary(&mut f).map_err(io)?;
                std::io::Write::flush(&mut f).map_err(io)?;
                written.push(path);
            }
            Ok(written)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Io { .. } => 1,
                _ => 3,
            })
        }
    }
}
