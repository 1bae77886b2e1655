use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aoas_core::agents::{run_agent, AgentConfig, Variant};
use aoas_core::docfmt::to_json_f17;
use aoas_core::estimator::{build_operators, estimate_from_counts, ConfidenceRegion, Dims, EstimateDump};
use aoas_core::harness::{run_experiment, ExperimentConfig};
use aoas_core::planner::{discretize, plan_on_model, PlanDump, PlannerSettings};
use aoas_core::pomdp::{
    generate_instance, generate_instance_with_sigma, tuple_counts_from_trace, validate_assumptions, GenParams,
    ModelDocument,
};
use aoas_core::{Error, Result};

#[derive(Parser)]
#[command(name = "aoas", version, about = "Observation-aware POMDP learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a flat key=value config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. `--set runs=3`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a model file and report its assumption diagnostics.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Plan on a model's own transitions over a belief grid.
    Plan {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
    },
    /// Estimate transitions from a step trace.
    Estimate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Episode index used for the confidence radius.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0.5)]
        c_scale: f64,
    },
    /// Write a random instance.
    Generate {
        #[arg(long = "states", short = 'S')]
        states: usize,
        #[arg(long = "actions", short = 'A')]
        actions: usize,
        #[arg(long = "observations", short = 'O')]
        observations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated per-action sigma_S(O_a) targets.
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one agent with default parameters and write its step trace.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn split_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not KEY=VALUE")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, overrides } => {
            let overrides = overrides
                .iter()
                .map(|s| split_override(s))
                .collect::<Result<Vec<_>>>()?;
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let report = run_experiment(&cfg)?;
            for inst in &report.instances {
                if let Some(rho) = inst.rho_star {
                    println!("{}: rho* = {rho:.6}", inst.dir.display());
                }
                for a in &inst.agents {
                    let ci = aoas_core::harness::aggregate_ci(&a.regret.final_values(), cfg.ci);
                    println!(
                        "  {:<24} final regret {:>12.2} +- {:.2}",
                        a.label, ci.mean, ci.halfwidth
                    );
                }
                for e in &inst.estimation {
                    println!("  {}: {} runs", e.label, e.curves.len());
                }
            }
            println!("{} files written to {}", report.files.len(), cfg.output_dir.display());
        }
        Command::Validate { model } => {
            let m = ModelDocument::load(&model)?.to_model()?;
            let rep = validate_assumptions(&m);
            print!("{}", to_json_f17(&rep)?);
            if !rep.is_valid() {
                return Err(Error::Domain("model violates the epsilon or alpha assumption".into()));
            }
        }
        Command::Plan {
            model,
            grid,
            tol,
            max_iter,
        } => {
            let m = ModelDocument::load(&model)?.to_model()?;
            let g = discretize(m.num_states(), grid)?;
            let settings = PlannerSettings {
                resolution: grid,
                tol,
                max_iter,
                ..PlannerSettings::default()
            };
            let plan = plan_on_model(&g, m.transition(), m.observation(), m.reward(), &settings);
            print!("{}", to_json_f17(&PlanDump::from(&plan))?);
            if !plan.converged {
                return Err(Error::NotConverged {
                    iterations: plan.iterations,
                    span: plan.span,
                });
            }
        }
        Command::Estimate {
            trace,
            model,
            k,
            delta,
            c_scale,
        } => {
            let m = ModelDocument::load(&model)?.to_model()?;
            let (na, no) = (m.num_actions(), m.num_observations());
            let counts = tuple_counts_from_trace(&fs::read_to_string(trace)?, na, no)?;
            let ops = build_operators(m.observation())?;
            let est = estimate_from_counts(&counts, &ops, k);
            let dims = Dims {
                states: m.num_states(),
                actions: na,
                observations: no,
            };
            let region = ConfidenceRegion::build(&est, k, dims, delta, c_scale)?;
            print!("{}", to_json_f17(&EstimateDump::collect(&est, &counts, &region.radii))?);
        }
        Command::Generate {
            states,
            actions,
            observations,
            seed,
            sigma,
            out,
        } => {
            let params = GenParams::default();
            let m = match sigma {
                Some(s) => {
                    let targets = s
                        .split(',')
                        .map(|x| {
                            x.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::Parse(format!("bad sigma `{x}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if targets.len() != actions {
                        return Err(Error::Config(format!(
                            "{} sigma targets for A = {actions}",
                            targets.len()
                        )));
                    }
                    generate_instance_with_sigma(states, observations, &targets, seed, &params)?
                }
                None => generate_instance(states, actions, observations, seed, &params)?,
            };
            ModelDocument::from_model(&m, Some(seed)).save(&out)?;
        }
        Command::Simulate {
            model,
            agent,
            horizon,
            seed,
            out,
        } => {
            let m = ModelDocument::load(&model)?.to_model()?;
            let cfg = AgentConfig::new(Variant::from_tag(&agent)?);
            let log = run_agent(&m, horizon, &cfg, seed)?;
            let mut buf = Vec::new();
            log.write_records(&mut buf)?;
            fs::write(out, buf)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
