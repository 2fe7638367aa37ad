//! Command implementations.

use std::path::Path;

use ckptplan::fmt::sig6;
use ckptplan::simulator::trace_to_csv;
use ckptplan::{
    baseline_daly, baseline_young, estimate_mttf, optimizer, parse_cost_samples, parse_failure_log,
    simulator, sweep, ExponentialFailureModel, PredictionResult, DEFAULT_TS_ITERATIONS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::args::{Command, MethodArg, PredictArgs, SimulateArgs, SweepArgs};
use crate::config::{build_sim_config, resolve_failure_model, resolve_seed, FileConfig};
use crate::manifest::RunManifest;
use crate::{CliFailure, CliResult};

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::EstimateMttf { log } => cmd_estimate_mttf(&log),
        Command::EstimateTs {
            samples,
            n,
            r,
            iterations,
            seed,
        } => cmd_estimate_ts(&samples, n, r, iterations, seed),
        Command::Predict(args) => cmd_predict(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliFailure::input(format!("cannot read {}: {e}", path.display())))
}

fn cmd_estimate_mttf(log: &Path) -> CliResult<()> {
    let records = parse_failure_log(&read_input(log)?)?;
    let mttf = estimate_mttf(&records)?;
    println!("mttf_s={} lambda={}", sig6(mttf), sig6(1.0 / mttf));
    Ok(())
}

fn cmd_estimate_ts(
    samples: &Path,
    n: u64,
    r: u64,
    iterations: Option<u64>,
    seed: Option<u64>,
) -> CliResult<()> {
    let log = parse_cost_samples(&read_input(samples)?)?;
    let iterations = iterations.unwrap_or(DEFAULT_TS_ITERATIONS);
    let seed = resolve_seed(seed, &FileConfig::empty(), "seed")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ts = log.estimate_ts(n, r, iterations, &mut rng)?;
    println!("ts_s={} iterations={}", sig6(ts), iterations);
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> CliResult<()> {
    let model = resolve_failure_model(args.lambda, args.mttf, &FileConfig::empty())?;
    let result = run_prediction(&args, &model)?;
    println!(
        "tc_opt_s={} method={} residual={}",
        sig6(result.tc_opt),
        result.method.as_str(),
        sig6(result.residual)
    );
    Ok(())
}

fn run_prediction(
    args: &PredictArgs,
    model: &ExponentialFailureModel,
) -> CliResult<PredictionResult> {
    let spec = ckptplan::JobSpec::new(args.n, args.r)
        .map_err(|e| CliFailure::input(format!("--n/--r: {e}")))?;
    let result = match args.method {
        MethodArg::General => optimizer::predict_general(model, args.ts, &spec),
        MethodArg::Single => optimizer::predict_single(model, args.ts),
        MethodArg::FirstOrder => optimizer::predict_first_order(model, args.ts),
        MethodArg::R1 => optimizer::predict_r1(model, args.ts, args.n),
        MethodArg::Young => baseline_young(args.ts, model.mttf()),
        MethodArg::Daly => baseline_daly(args.ts, model.mttf(), args.restart_overhead),
    };
    result.map_err(|e| CliFailure::input(format!("--ts/--lambda: {e}")))
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let (mut cfg, params) = build_sim_config(&args.flags, true)?;
    let file = FileConfig::load(args.flags.config.as_deref())?;
    let seed = resolve_seed(args.seed, &file, "seed")?;
    cfg.record_trace = args.trace.is_some();

    let result = simulator::run(&cfg, seed)?;
    println!(
        "completion_s={} checkpoints_saved={} requests_ignored={} failures={} work_lost={}",
        sig6(result.completion_time),
        result.checkpoints_saved,
        result.requests_ignored,
        result.failures,
        sig6(result.work_lost)
    );

    if let Some(trace_path) = &args.trace {
        let trace = result.trace.as_deref().unwrap_or(&[]);
        std::fs::write(trace_path, trace_to_csv(trace))?;

        let mut manifest = RunManifest::new("simulate", seed, params);
        if let Some(config_path) = &args.flags.config {
            manifest.add_input(config_path)?;
        }
        manifest.add_output(trace_path);
        let manifest_path = trace_path.with_extension("manifest.json");
        manifest.write(&manifest_path)?;
    }
    Ok(())
}

fn parse_intervals(raw: Option<&str>, file: &FileConfig) -> CliResult<Vec<f64>> {
    let from_file = file.get::<String>("intervals")?;
    let text = match (raw, from_file.as_deref()) {
        (Some(t), _) => t.to_string(),
        (None, Some(t)) => t.to_string(),
        (None, None) => "12,25,50,100,200,400,800,1600,3200".to_string(),
    };
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| CliFailure::input(format!("bad interval `{}`", part.trim())))
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let (cfg, mut params) = build_sim_config(&args.flags, false)?;
    let file = FileConfig::load(args.flags.config.as_deref())?;
    let seed_base = resolve_seed(args.seed_base, &file, "seed-base")?;
    let intervals = parse_intervals(args.intervals.as_deref(), &file)?;
    let runs = match args.runs {
        Some(v) => v,
        None => file.get::<u32>("runs")?.unwrap_or(10),
    };

    // Predicted interval: explicit override, otherwise the general-model
    // optimum for the sweep's own lambda/ts/n/r.
    let predicted_tc = match args.predicted_tc {
        Some(tc) => tc,
        None => match file.get::<f64>("predicted-tc")? {
            Some(tc) => tc,
            None => {
                optimizer::predict_general(&cfg.failure_model, cfg.ts, &cfg.spec)
                    .map_err(|e| {
                        CliFailure::input(format!(
                            "cannot predict an interval for this configuration ({e}); \
                         pass --predicted-tc explicitly"
                        ))
                    })?
                    .tc_opt
            }
        },
    };

    let report = sweep::run_sweep(&cfg, &intervals, runs, seed_base)?;
    let metrics = report.compare(predicted_tc)?;

    let out = &args.out;
    let paths = SweepPaths::new(out);
    std::fs::write(&paths.raw, report.to_raw_csv())?;
    std::fs::write(&paths.summary, report.to_summary_csv())?;
    std::fs::write(&paths.comparison, metrics.to_csv())?;

    params.insert(
        "intervals".into(),
        intervals
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    params.insert("runs".into(), runs.to_string());
    params.insert("seed-base".into(), seed_base.to_string());
    params.insert("predicted-tc".into(), predicted_tc.to_string());
    let mut manifest = RunManifest::new("sweep", seed_base, params);
    if let Some(config_path) = &args.flags.config {
        manifest.add_input(config_path)?;
    }
    manifest.add_output(&paths.raw);
    manifest.add_output(&paths.summary);
    manifest.add_output(&paths.comparison);
    manifest.write(&paths.manifest)?;

    println!(
        "tc_predicted_s={} tc_best_s={} tc_worst_s={} t_best_s={} t_worst_s={} t_predict_s={} \
         pct_best_vs_predict={} pct_best_vs_worst={}",
        sig6(metrics.tc_predicted),
        sig6(metrics.tc_best),
        sig6(metrics.tc_worst),
        sig6(metrics.t_best),
        sig6(metrics.t_worst),
        sig6(metrics.t_predict),
        sig6(metrics.pct_best_vs_predict),
        sig6(metrics.pct_best_vs_worst)
    );
    Ok(())
}

struct SweepPaths {
    raw: std::path::PathBuf,
    summary: std::path::PathBuf,
    comparison: std::path::PathBuf,
    manifest: std::path::PathBuf,
}

impl SweepPaths {
    fn new(prefix: &Path) -> Self {
        let stem = prefix.as_os_str().to_string_lossy();
        Self {
            raw: format!("{stem}_raw.csv").into(),
            summary: format!("{stem}_summary.csv").into(),
            comparison: format!("{stem}_comparison.csv").into(),
            manifest: format!("{stem}_manifest.json").into(),
        }
    }
}
