use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msqp_core::harness::{
    run_checks, run_experiment, run_sweep, seed_configs, summary_path, write_summary, write_summary_file,
};
use msqp_core::problems::SpringProblem;
use msqp_core::series::all_bounds;
use msqp_core::{ExperimentConfig, HarnessError};

/// Projected stochastic SQP experiments.
#[derive(Parser, Debug)]
#[command(name = "msqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write its trajectory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set seed=3`.
        #[arg(long = "set", value_parser = parse_key_val)]
        overrides: Vec<(String, String)>,
    },
    /// Run a config over consecutive seeds and summarize the final metrics.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long = "set", value_parser = parse_key_val)]
        overrides: Vec<(String, String)>,
    },
    /// Run the built-in oracle checks.
    Check,
    /// Check the geometric series bounds by direct summation.
    Series {
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        #[arg(long, default_value_t = 100_000)]
        terms: u64,
    },
    /// Write the spring problem's training points as CSV.
    SpringData {
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_key_val(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn fail(err: HarnessError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}

fn cmd_run(config: PathBuf, overrides: Vec<(String, String)>) -> ExitCode {
    let cfg = match ExperimentConfig::from_file(&config, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(e.into()),
    };
    let out = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let e = &out.final_entry;
    println!("problem        {}", cfg.problem);
    println!("optimizer      {}", cfg.optimizer);
    println!("iterations     {}", out.iterations);
    println!("epochs         {:.3}", out.epochs);
    println!("f              {:.6e}", e.f);
    println!("cviol_l1       {:.6e}", e.cviol_l1);
    println!("proj_grad_sq   {:.6e}", e.proj_grad_sq);
    println!("merit          {:.6e}", e.merit(out.tau));
    println!("tau            {:.6e}", out.tau);
    println!("running_avg    {:.6e}", out.running_avg);
    if let Some(p) = &cfg.output {
        println!("trajectory     {}", p.display());
    }
    ExitCode::SUCCESS
}

fn cmd_sweep(config: PathBuf, seeds: u64, overrides: Vec<(String, String)>) -> ExitCode {
    let base = match ExperimentConfig::from_file(&config, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(e.into()),
    };
    if seeds == 0 {
        return fail(HarnessError::EmptySweep);
    }
    let out = match run_sweep(&seed_configs(&base, seeds)) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    for (cfg, r) in &out.runs {
        match r {
            Ok(o) => println!(
                "seed {:>4}  f {:.4e}  cviol {:.4e}  proj_grad_sq {:.4e}",
                cfg.seed, o.final_entry.f, o.final_entry.cviol_l1, o.final_entry.proj_grad_sq
            ),
            Err(e) => println!("seed {:>4}  failed: {e}", cfg.seed),
        }
    }
    let written = match &base.output {
        Some(p) => write_summary_file(&summary_path(p), &out.summary).map(|_| Some(summary_path(p))),
        None => write_summary(std::io::stdout().lock(), &out.summary)
            .map(|_| None)
            .map_err(|e| HarnessError::io(std::path::Path::new("<stdout>"), e)),
    };
    match written {
        Ok(Some(p)) => println!("summary        {}", p.display()),
        Ok(None) => {}
        Err(e) => return fail(e),
    }
    // The first numerical failure decides the exit code.
    match out.runs.into_iter().find_map(|(_, r)| r.err()) {
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        None => ExitCode::SUCCESS,
    }
}

fn cmd_check() -> ExitCode {
    let results = run_checks();
    let mut ok = true;
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        ok &= r.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_series(beta: f64, terms: u64) -> ExitCode {
    let checks = match all_bounds(beta, terms) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {:<48} sum {:.12e}  bound {:.12e}  log10(slack) {:.2}",
            if c.holds { "PASS" } else { "FAIL" },
            c.name,
            c.sum,
            c.bound,
            c.slack_log10
        );
        ok &= c.holds;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_spring_data(output: PathBuf) -> ExitCode {
    let written = File::create(&output)
        .and_then(|f| SpringProblem::standard().write_training_data(BufWriter::new(f)));
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(HarnessError::io(&output, e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, overrides } => cmd_run(config, overrides),
        Command::Sweep {
            config,
            seeds,
            overrides,
        } => cmd_sweep(config, seeds, overrides),
        Command::Check => cmd_check(),
        Command::Series { beta, terms } => cmd_series(beta, terms),
        Command::SpringData { output } => cmd_spring_data(output),
    }
}
