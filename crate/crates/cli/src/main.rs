mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synprior::scenarios::{PriorKind, ScenarioFile, DEFAULT_SEED};
use synprior::ChainConfig;

use commands::{execute, read_manifest, Run, RIDGE_LAMBDAS};
use error::{CliError, CliResult};

/// Bayesian logistic regression with conditional-means priors, fitted by
/// Pólya-Gamma Gibbs sampling.
#[derive(Debug, Parser)]
#[command(name = "synprior", version)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving output files and the run manifest.
    #[arg(long, global = true, env = "SYNPRIOR_OUT_DIR", default_value = "synprior-out")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ChainArgs {
    /// Total Gibbs iterations, including burn-in.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

impl ChainArgs {
    fn apply(&self, mut chain: ChainConfig) -> ChainConfig {
        if let Some(v) = self.iters {
            chain.iterations = v;
        }
        if let Some(v) = self.burnin {
            chain.burn_in = v;
        }
        if let Some(v) = self.thin {
            chain.thin = v;
        }
        chain
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a logistic regression to a CSV with a 0/1 `y` column.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// JSON array of prior design points; omit for a flat prior.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Do not prepend an intercept column.
        #[arg(long)]
        no_intercept: bool,
        /// Covariate values (comma separated, intercept excluded) at which to
        /// report the success probability. Repeatable.
        #[arg(long, value_parser = parse_query)]
        query: Vec<Vec<f64>>,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Replicate the simulated dose-finding trial under both priors.
    Simulate {
        /// Scenario JSON; defaults to the built-in Emax scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
        /// Run replicates one after another.
        #[arg(long)]
        sequential: bool,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Refit the O-ring launch data at the reference temperatures.
    Oring {
        /// Fit only the flat prior.
        #[arg(long)]
        flat_only: bool,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Compare closed-form ridge with OLS on the augmented design.
    RidgeDemo {
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
    /// ESS and Geweke z for every column of a draws CSV.
    Diagnose {
        #[arg(long)]
        draws: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn parse_query(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number")))
        .collect()
}

fn resolve(cli: &Cli) -> CliResult<Run> {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let chain = |args: &ChainArgs| args.apply(ChainConfig::default().with_seed(seed));
    Ok(match &cli.command {
        Command::Fit {
            data,
            prior,
            no_intercept,
            query,
            level,
            chain: c,
        } => Run::Fit {
            data: data.clone(),
            prior: prior.clone(),
            intercept: !no_intercept,
            chain: chain(c),
            queries: query.clone(),
            level: *level,
        },
        Command::Simulate {
            scenario,
            reps,
            sequential,
            chain: c,
        } => {
            let mut file = match scenario {
                Some(path) => io::parse_scenario(&io::read_to_string(path)?)?,
                None => ScenarioFile::default(),
            };
            if let Some(r) = reps {
                file.replicates = *r;
            }
            if cli.seed.is_some() || scenario.is_none() {
                file.chain.seed = seed;
            }
            file.chain = c.apply(file.chain);
            Run::Simulate {
                scenario: file,
                sequential: *sequential,
            }
        }
        Command::Oring { flat_only, chain: c } => Run::Oring {
            chain: chain(c),
            priors: if *flat_only {
                vec![PriorKind::Flat]
            } else {
                vec![PriorKind::Bcj, PriorKind::Flat]
            },
        },
        Command::RidgeDemo { instances } => Run::RidgeDemo {
            seed,
            instances: *instances,
            lambdas: RIDGE_LAMBDAS.to_vec(),
        },
        Command::Diagnose { draws } => Run::Diagnose { draws: draws.clone() },
        Command::Replay { manifest } => {
            if cli.seed.is_some() {
                return Err(CliError::usage("replay takes its seed from the manifest"));
            }
            read_manifest(manifest)?.run
        }
    })
}

fn run(cli: &Cli) -> CliResult<()> {
    let resolved = resolve(cli)?;
    let report = execute(&resolved, &cli.out_dir)?;
    print!("{report}");
    eprintln!("outputs written to {}", cli.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category, e.message);
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
