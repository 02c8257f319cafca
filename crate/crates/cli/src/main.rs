use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use obsrobust::error::ErrorClass;
use obsrobust::io::{self, benchmarks::builtin_by_name, OutputFormat};
use obsrobust::validate::{self, Event};
use obsrobust::{fsc_value, Fsc, Horizon, Pomdp, RobustnessQuery, Threshold, Variant};

#[derive(Parser, Debug)]
#[command(name = "obsrobust", version, about = "Observation-robustness analysis of FSC policies on POMDPs")]
struct Cli {
    /// Suppress the human-readable summary on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nominal value of the controller.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Largest admissible observation deviation for one threshold.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Admissible deviation over a list of thresholds.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Threshold values, comma separated. Read as eta unless --absolute is given.
        #[arg(long, value_delimiter = ',', required = true)]
        thresholds: Vec<f64>,
        /// Read thresholds as absolute value degradation.
        #[arg(long)]
        absolute: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve a query, then sample extreme perturbations at the returned deviation.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value_t = validate::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo rollouts of the controller on the nominal model.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = validate::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Visit-frequency event `name=node1,node2,...`. Repeatable.
        #[arg(long = "event")]
        events: Vec<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// POMDP file.
    #[arg(long, requires = "fsc", conflicts_with = "benchmark", required_unless_present = "benchmark")]
    model: Option<PathBuf>,
    /// Controller file for --model.
    #[arg(long, requires = "model")]
    fsc: Option<PathBuf>,
    /// Built-in benchmark: toy-rover, rover-nav, cancer, part-qc-policy1, part-qc-policy2, tiger, baby.
    #[arg(long)]
    benchmark: Option<String>,
    /// Horizon in decisions, or `inf`.
    #[arg(long, default_value = "inf")]
    horizon: Horizon,
    /// Replace the model's discount factor.
    #[arg(long)]
    discount: Option<f64>,
    /// Inner evaluation tolerance.
    #[arg(long, default_value_t = obsrobust::eval::DEFAULT_EPS)]
    eps_inner: f64,
}

#[derive(Args, Debug)]
struct QueryArgs {
    /// Allowed relative value degradation.
    #[arg(long, required_unless_present = "delta_threshold", conflicts_with = "delta_threshold")]
    eta: Option<f64>,
    /// Allowed absolute value degradation.
    #[arg(long)]
    delta_threshold: Option<f64>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, default_value = "nonsticky")]
    variant: Variant,
    /// Bisection tolerance.
    #[arg(long, default_value_t = obsrobust::eval::DEFAULT_EPS)]
    eps_mbs: f64,
    /// Probability floor on perturbed observations [default: 0 nonsticky, 0.01 sticky].
    #[arg(long)]
    eps_p: Option<f64>,
    /// Region budget for the sticky search.
    #[arg(long)]
    max_regions: Option<usize>,
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    /// Write machine output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Invalid flag combination detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "usage: {}", self.0)
    }
}

impl std::error::Error for UsageError {}

/// Error that should exit with the model/policy status.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn load(args: &ModelArgs, quiet: bool) -> Result<(Pomdp, Fsc)> {
    let (mut m, pi) = match (&args.benchmark, &args.model, &args.fsc) {
        (Some(name), None, None) => builtin_by_name(name)?,
        (None, Some(mp), Some(fp)) => {
            let read = |p: &PathBuf| fs::read_to_string(p).map_err(|e| InputError(format!("model-io: cannot read {}: {e}", p.display())));
            let m = io::parse_pomdp(&read(mp)?).with_context(|| format!("in {}", mp.display()))?;
            let (pi, warnings) = io::parse_fsc(&read(fp)?, &m).with_context(|| format!("in {}", fp.display()))?;
            if !quiet {
                for w in warnings {
                    eprintln!("warning: {w}");
                }
            }
            (m, pi)
        }
        _ => return Err(UsageError("give either --benchmark or both --model and --fsc".into()).into()),
    };
    if let Some(g) = args.discount {
        if !(0.0..=1.0).contains(&g) || g == 0.0 {
            return Err(UsageError(format!("--discount must lie in (0, 1] (got {g})")).into());
        }
        m = m.with_discount(g);
    }
    Ok((m, pi))
}

fn query(m: Pomdp, pi: Fsc, ma: &ModelArgs, qa: &QueryArgs) -> RobustnessQuery {
    let threshold = match (qa.eta, qa.delta_threshold) {
        (Some(eta), _) => Threshold::Relative(eta),
        (None, Some(d)) => Threshold::Absolute(d),
        (None, None) => unreachable!("clap enforces one threshold flag"),
    };
    search_query(m, pi, ma, &qa.search, threshold)
}

fn search_query(m: Pomdp, pi: Fsc, ma: &ModelArgs, q: &SearchArgs, threshold: Threshold) -> RobustnessQuery {
    let mut rq = RobustnessQuery::new(m, pi, q.variant, threshold, ma.horizon);
    rq.eps_mbs = q.eps_mbs;
    rq.eps_inner = ma.eps_inner;
    rq.eps_p = q.eps_p;
    rq.max_regions = q.max_regions;
    rq
}

fn emit(out: &OutArgs, text: &str) -> Result<()> {
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| InputError(format!("cannot write {}: {e}", p.display())).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("output serializes");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Eval { model, out } => {
            let (m, pi) = load(&model, quiet)?;
            let v = fsc_value(&m, &pi, model.horizon, model.eps_inner)?;
            if !quiet {
                eprintln!("nominal value {} (horizon {}, {} sweeps)", v.initial, model.horizon, v.sweeps);
            }
            let text = match out.format {
                OutputFormat::Json => json_text(&json!({ "nominal_value": v.initial, "horizon": model.horizon })),
                OutputFormat::Csv => format!("horizon,nominal\n{},{}\n", model.horizon, v.initial),
            };
            emit(&out, &text)
        }
        Command::Analyze { model, query: qa, out } => {
            let (m, pi) = load(&model, quiet)?;
            let q = query(m, pi, &model, &qa);
            let r = obsrobust::run_query(&q)?;
            if !quiet {
                eprintln!(
                    "{} delta {}{} (nominal {}, worst case {}, {} evaluations)",
                    r.variant,
                    r.delta,
                    if r.saturated { " [saturated]" } else { "" },
                    r.nominal_value,
                    r.worst_case_value,
                    r.iterations.len()
                );
            }
            emit(&out, &io::write_result(&r, out.format))
        }
        Command::Sweep { model, search, thresholds, absolute, out } => {
            let (m, pi) = load(&model, quiet)?;
            let threshold = if absolute { Threshold::Absolute(0.0) } else { Threshold::Relative(0.0) };
            let q = search_query(m, pi, &model, &search, threshold);
            let rs = validate::sweep(&q, &thresholds)?;
            if !quiet {
                for r in &rs {
                    eprintln!("threshold {} -> delta {}", r.threshold, r.delta);
                }
            }
            emit(&out, &io::write_sweep(&rs, out.format))
        }
        Command::Validate { model, query: qa, samples, seed, out } => {
            let (m, pi) = load(&model, quiet)?;
            let q = query(m, pi, &model, &qa);
            let (r, rep) = validate::validate(&q, samples, seed)?;
            if !quiet {
                eprintln!(
                    "delta {}: witness eta {}, sampled eta {:?} (nonsticky) / {} (sticky) over {} samples",
                    r.delta, rep.eta_witness, rep.eta_sampled_ns, rep.eta_sampled_s, samples
                );
            }
            let text = match out.format {
                OutputFormat::Json => json_text(&rep),
                OutputFormat::Csv => format!(
                    "target_eta,delta_used,eta_witness,eta_sampled_ns,eta_sampled_s,samples,seed\n{},{},{},{},{},{},{}\n",
                    rep.target_eta,
                    rep.delta_used,
                    rep.eta_witness,
                    rep.eta_sampled_ns.map(|x| x.to_string()).unwrap_or_default(),
                    rep.eta_sampled_s,
                    rep.samples,
                    rep.seed
                ),
            };
            emit(&out, &text)
        }
        Command::Simulate { model, samples, seed, events, out } => {
            let (m, pi) = load(&model, quiet)?;
            let Horizon::Finite(h) = model.horizon else {
                return Err(UsageError("simulate needs a finite --horizon".into()).into());
            };
            let mut evs = Vec::new();
            for arg in &events {
                let (name, nodes) = arg.split_once('=').ok_or_else(|| UsageError(format!("event `{arg}` is not name=node,...")))?;
                let nodes: Vec<&str> = nodes.split(',').collect();
                if let Some(bad) = nodes.iter().find(|n| pi.node_index(n).is_none()) {
                    return Err(UsageError(format!("event `{name}`: unknown node `{bad}`")).into());
                }
                evs.push(Event::nodes(name, &m, &pi, &nodes));
            }
            let rep = validate::monte_carlo(&m, &pi, samples, h, seed, &evs);
            if !quiet {
                eprintln!("mean return {} ± {} over {} rollouts", rep.mean, rep.std_err, rep.rollouts);
            }
            let text = match out.format {
                OutputFormat::Json => json_text(&rep),
                OutputFormat::Csv => {
                    let mut s = String::from("event,frequency\n");
                    s.push_str(&format!("mean_return,{}\nstd_err,{}\n", rep.mean, rep.std_err));
                    for (n, f) in &rep.frequencies {
                        s.push_str(&format!("{n},{f}\n"));
                    }
                    s
                }
            };
            emit(&out, &text)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if e.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<obsrobust::Error>().map(|e| e.class()) {
        Some(ErrorClass::Usage) => 1,
        Some(ErrorClass::Numeric) => 3,
        Some(ErrorClass::Model) | None => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    obsrobust::configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
