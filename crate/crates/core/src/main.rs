use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use island_evo::analytic::{
    build_chain, choose_sum_div, exact_lo_runtime, expected_hitting_time, hitting_probability, lo_block_runtime,
    Start,
};
use island_evo::fitness::SpecConfig;
use island_evo::harness::{fit_exponent, parse_config, read_csv, run_all, verify_all, write_csv, Field, Thresholds};
use island_evo::{BitString, Error, Result};

/// Environment variable that overrides `--threads`.
const THREADS_ENV: &str = "ISLAND_EVO_THREADS";

#[derive(Parser)]
#[command(name = "island-evo", version, about = "Island-model EA simulator with exact (1+1) EA oracles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file and write one CSV row per cell.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact reference values.
    Oracle {
        #[command(subcommand)]
        query: Oracle,
    },
    /// Run the acceptance suite; exits nonzero if any criterion fails.
    Verify {
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
        /// JSON file overriding thresholds, grids or replicate counts.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit ln(mean) against ln(n) per scenario of a result CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        /// rounds or evaluations
        #[arg(long, default_value = "evaluations")]
        field: String,
        /// Restrict to one scenario.
        #[arg(long)]
        scenario: Option<String>,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Closed-form LeadingOnes runtime.
    LoRuntime { n: usize },
    /// Expected (1+1) EA steps to the optimum from a uniform start or `--from`.
    HittingTime {
        /// Fitness spec as JSON, e.g. '{"variant":"fork","r":2,"n":8}'.
        #[arg(long)]
        spec: String,
        /// Mutation denominator (default: the spec length).
        #[arg(long)]
        n_mut: Option<usize>,
        /// Start string instead of the uniform distribution.
        #[arg(long)]
        from: Option<String>,
    },
    /// Probability of reaching `--a` before `--b` (defaults: valley, optimum).
    HittingProb {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n_mut: Option<usize>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        from: Option<String>,
    },
    /// Block-composition runtime from the inner expected time.
    LoBlock { n: usize, k: usize, inner_expected: f64 },
    /// Normalized binomial sum for one n or a range `lo..=hi`.
    ChooseSum {
        n: usize,
        #[arg(long)]
        to: Option<usize>,
    },
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        ),
        Err(_) => flag,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn parse_spec(text: &str) -> Result<island_evo::FitnessSpec> {
    let cfg: SpecConfig = serde_json::from_str(text)?;
    cfg.build(None)
}

fn parse_point(text: &str, n: usize) -> Result<BitString> {
    let x: BitString = text.parse()?;
    if x.len() != n {
        return Err(Error::Config(format!("string {text:?} has length {}, spec has {n}", x.len())));
    }
    Ok(x)
}

fn start_from(from: Option<&str>, chain: &island_evo::analytic::ExactChain) -> Result<Start> {
    Ok(match from {
        Some(s) => Start::Point(chain.index_of(&parse_point(s, chain.n())?)),
        None => Start::Uniform,
    })
}

fn oracle(query: Oracle) -> Result<()> {
    match query {
        Oracle::LoRuntime { n } => println!("{}", exact_lo_runtime(n)?),
        Oracle::HittingTime { spec, n_mut, from } => {
            let spec = parse_spec(&spec)?;
            let chain = build_chain(&spec, n_mut.unwrap_or(spec.n()))?;
            let target = chain.index_of(&spec.optimum().optimum);
            let start = start_from(from.as_deref(), &chain)?;
            println!("{}", expected_hitting_time(&chain, &[target], &start)?);
        }
        Oracle::HittingProb { spec, n_mut, a, b, from } => {
            let spec = parse_spec(&spec)?;
            let chain = build_chain(&spec, n_mut.unwrap_or(spec.n()))?;
            let a = match a {
                Some(s) => parse_point(&s, spec.n())?,
                None => spec
                    .valley()
                    .map(|v| v.0.clone())
                    .ok_or_else(|| Error::Config("spec has no valley; pass --a".into()))?,
            };
            let b = match b {
                Some(s) => parse_point(&s, spec.n())?,
                None => spec.optimum().optimum.clone(),
            };
            let start = start_from(from.as_deref(), &chain)?;
            println!(
                "{}",
                hitting_probability(&chain, chain.index_of(&a), chain.index_of(&b), &start)?
            );
        }
        Oracle::LoBlock { n, k, inner_expected } => println!("{}", lo_block_runtime(n, k, inner_expected)?),
        Oracle::ChooseSum { n, to } => match to {
            None => println!("{}", choose_sum_div(n)?),
            Some(hi) => {
                for m in n..=hi {
                    println!("{m},{}", choose_sum_div(m)?);
                }
            }
        },
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, threads, out } => {
            init_threads(threads)?;
            let scenarios = parse_config(&fs::read_to_string(&config)?)?;
            let rows = run_all(&scenarios)?;
            for row in rows.iter().filter(|r| r.trapped > 0) {
                eprintln!(
                    "warning: {} n={}: {} of {} replicates hit the round cap",
                    row.scenario, row.n, row.trapped, row.replicates
                );
            }
            match out {
                Some(path) => write_csv(&rows, fs::File::create(path)?)?,
                None => write_csv(&rows, io::stdout().lock())?,
            }
        }
        Command::Oracle { query } => oracle(query)?,
        Command::Verify {
            out,
            only,
            thresholds,
            threads,
        } => {
            init_threads(threads)?;
            let th = match thresholds {
                Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
                None => Thresholds::default(),
            };
            let report = verify_all(&th, only.as_deref(), |r| {
                println!("{r}");
                let _ = io::stdout().flush();
            });
            println!("{} passed, {} failed", report.passed, report.failed);
            if let Some(path) = out {
                fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            if !report.all_pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Fit { csv, field, scenario } => {
            let field: Field = field.parse()?;
            let rows = read_csv(fs::File::open(csv)?)?;
            let mut names: Vec<&str> = Vec::new();
            for r in &rows {
                if !names.contains(&r.scenario.as_str()) {
                    names.push(&r.scenario);
                }
            }
            if let Some(s) = &scenario {
                if !names.contains(&s.as_str()) {
                    return Err(Error::Config(format!("no scenario {s:?} in CSV")));
                }
                names.retain(|n| n == s);
            }
            println!("scenario,field,slope,slope_stderr,intercept,r_squared,points");
            let mut fitted = 0;
            for name in names {
                let group: Vec<_> = rows.iter().filter(|r| r.scenario == name).cloned().collect();
                let fit = match fit_exponent(&group, field) {
                    Ok(f) => f,
                    Err(e) => {
                        eprintln!("warning: {name}: {e}");
                        continue;
                    }
                };
                fitted += 1;
                if !fit.excluded.is_empty() {
                    eprintln!("warning: {name}: excluded n = {:?} (no positive mean)", fit.excluded);
                }
                println!(
                    "{name},{field},{},{},{},{},{}",
                    fit.slope, fit.slope_stderr, fit.intercept, fit.r_squared, fit.points
                );
            }
            if fitted == 0 {
                return Err(Error::Domain("no scenario could be fitted".into()));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
