use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use mimoframe::colgen::CgOptions;
use mimoframe::io::load_instance;
use mimoframe::model::{db_to_linear, Instance, Precoder};
use mimoframe::powerctl::PowerScheme;
use mimoframe::pricing::PricingOptions;
use mimoframe::run::{run_pipeline, RunOptions, RunReport};
use mimoframe::scenarios::{build_instance, ExperimentConfig, ScenarioSpec, K_SWEEP, MU_SWEEP};

#[derive(Parser)]
#[command(name = "mimoframe", version, about = "Minimum-length massive MIMO frames by compatible-set column generation")]
struct Cli {
    /// -v per-iteration progress, -vv solver detail, -vvv branch-and-bound nodes.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write its schedule.
    Run(RunArgs),
    /// Solve a grid of configurations and write one CSV row per run.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Improvement tolerance on the pricing value test `B > 1 + eps`.
    #[arg(long, env = "MIMOFRAME_EPS_RC", default_value_t = 1e-6)]
    eps_rc: f64,
    #[arg(long, env = "MIMOFRAME_ITER_CAP", default_value_t = 2000)]
    iter_cap: usize,
    /// Time limit per pricing solve and per frame integer program, in seconds.
    #[arg(long, env = "MIMOFRAME_TIME_LIMIT_S", default_value_t = 60.0)]
    time_limit_s: f64,
    /// Stop column generation when the objective stalls for 10 iterations.
    #[arg(long, env = "MIMOFRAME_EARLY_STOP")]
    early_stop: bool,
    /// Override every device's SINR threshold, in dB.
    #[arg(long, env = "MIMOFRAME_MU_DB", allow_hyphen_values = true)]
    mu_db: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> anyhow::Result<RunOptions> {
        if !(self.time_limit_s > 0.0 && self.time_limit_s.is_finite()) {
            bail!("--time-limit-s must be positive");
        }
        if !(self.eps_rc >= 0.0) {
            bail!("--eps-rc must be non-negative");
        }
        let limit = Duration::from_secs_f64(self.time_limit_s);
        let mut opts = RunOptions {
            cg: CgOptions {
                pricing: PricingOptions {
                    eps_rc: self.eps_rc,
                    time_limit: Some(limit),
                    ..PricingOptions::default()
                },
                iter_cap: self.iter_cap,
                early_stop: self.early_stop,
            },
            ..RunOptions::default()
        };
        opts.ip.time_limit = Some(limit);
        Ok(opts)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, env = "MIMOFRAME_EXPERIMENT", value_parser = clap::value_parser!(u8).range(1..=6), conflicts_with = "instance", required_unless_present = "instance")]
    experiment: Option<u8>,
    /// Instance file in JSON.
    #[arg(long, env = "MIMOFRAME_INSTANCE")]
    instance: Option<PathBuf>,
    #[arg(long, env = "MIMOFRAME_SCENARIO", value_parser = clap::value_parser!(u8).range(1..=6), default_value_t = 1)]
    scenario: u8,
    /// Device count for the device-count experiment.
    #[arg(long, env = "MIMOFRAME_DEVICES")]
    devices: Option<usize>,
    #[arg(long, env = "MIMOFRAME_PRECODER", default_value = "mrc")]
    precoder: Precoder,
    #[arg(long, env = "MIMOFRAME_POWER", default_value = "optimal")]
    power: PowerScheme,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, env = "MIMOFRAME_OUT")]
    out: Option<PathBuf>,
    #[arg(long, env = "MIMOFRAME_FORMAT", value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, env = "MIMOFRAME_EXPERIMENT", value_delimiter = ',', default_value = "1")]
    experiment: Vec<u8>,
    #[arg(long, env = "MIMOFRAME_SCENARIO", value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    scenario: Vec<u8>,
    #[arg(long, env = "MIMOFRAME_PRECODER", value_delimiter = ',', default_value = "mrc,zf")]
    precoder: Vec<Precoder>,
    #[arg(long, env = "MIMOFRAME_POWER", value_delimiter = ',', default_value = "optimal,fair,static,downlink")]
    power: Vec<PowerScheme>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Number of runs solved in parallel.
    #[arg(long, env = "MIMOFRAME_JOBS", default_value_t = 1)]
    jobs: usize,
    #[arg(long, env = "MIMOFRAME_OUT")]
    out: Option<PathBuf>,
}

const CSV_HEADER: [&str; 16] = [
    "experiment",
    "scenario",
    "precoder",
    "scheme",
    "frame",
    "lr_obj",
    "total_power",
    "max_node_power",
    "iters",
    "pool_size",
    "t_master",
    "t_pricing",
    "t_ip",
    "status",
    "k",
    "mu",
];

struct Job {
    experiment: String,
    scenario: u8,
    precoder: Precoder,
    scheme: PowerScheme,
    config: Option<ExperimentConfig>,
}

fn with_mu(mut inst: Instance, mu_db: Option<f64>) -> Instance {
    if let Some(db) = mu_db {
        for d in &mut inst.devices {
            d.sinr_threshold = db_to_linear(db);
        }
    }
    inst
}

fn csv_row(job: &Job, inst: Option<&Instance>, outcome: &Result<RunReport, String>) -> Vec<String> {
    let mut row = vec![
        job.experiment.clone(),
        job.scenario.to_string(),
        job.precoder.to_string(),
        job.scheme.to_string(),
    ];
    match outcome {
        Ok(r) => {
            let status = if r.valid { format!("{:?}", r.cg_stop).to_lowercase() } else { "invalid".into() };
            row.extend([
                r.frame.to_string(),
                format!("{:.6}", r.lr_objective),
                format!("{:.6}", r.metrics.total_power),
                format!("{:.6}", r.metrics.max_node_power),
                r.iterations.to_string(),
                r.pool_size.to_string(),
                format!("{:.3}", r.timings.master_s),
                format!("{:.3}", r.timings.pricing_s),
                format!("{:.3}", r.timings.ip_s),
                status,
            ]);
        }
        Err(e) => {
            row.extend(std::iter::repeat_n(String::new(), 9));
            row.push(format!("error: {e}"));
        }
    }
    let k = inst.map(|i| i.num_devices().to_string()).unwrap_or_default();
    let mu = inst
        .and_then(|i| i.devices.first())
        .map(|d| d.sinr_threshold.to_string())
        .unwrap_or_default();
    row.extend([k, mu]);
    row
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let opts = args.solver.options()?;
    let (inst, label) = match (&args.instance, args.experiment) {
        (Some(path), _) => (load_instance(path)?, path.display().to_string()),
        (None, Some(e)) => {
            let mut cfg = ExperimentConfig::new(e)?;
            if let Some(k) = args.devices {
                cfg = cfg.with_devices(k);
            }
            (build_instance(&cfg, &ScenarioSpec::new(args.scenario)?)?, e.to_string())
        }
        (None, None) => bail!("either --experiment or --instance is required"),
    };
    let inst = with_mu(inst, args.solver.mu_db);
    info!("{} devices, {} {}", inst.num_devices(), args.precoder, args.power);
    let job = Job {
        experiment: label,
        scenario: args.scenario,
        precoder: args.precoder,
        scheme: args.power,
        config: None,
    };
    let outcome = run_pipeline(&inst, args.precoder, args.power, &opts);
    let mut out = output(&args.out)?;
    match args.format {
        Format::Json => match &outcome {
            Ok(r) => serde_json::to_writer_pretty(&mut out, r)?,
            Err(e) => serde_json::to_writer_pretty(&mut out, &serde_json::json!({ "error": e.to_string() }))?,
        },
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            w.write_record(csv_row(&job, Some(&inst), &outcome.as_ref().map(Clone::clone).map_err(|e| e.to_string())))?;
            w.flush()?;
            return finish(&outcome);
        }
    }
    writeln!(out)?;
    finish(&outcome)
}

fn finish(outcome: &Result<RunReport, mimoframe::Error>) -> anyhow::Result<ExitCode> {
    match outcome {
        Ok(r) if r.valid => Ok(ExitCode::SUCCESS),
        Ok(r) => {
            for v in &r.violations {
                error!("{v}");
            }
            Ok(ExitCode::from(1))
        }
        Err(e) => {
            error!("{e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn sweep_jobs(args: &SweepArgs) -> anyhow::Result<Vec<Job>> {
    let mut jobs = Vec::new();
    for &e in &args.experiment {
        let base = ExperimentConfig::new(e)?;
        let configs: Vec<(String, ExperimentConfig)> = match e {
            4 => MU_SWEEP.iter().map(|&mu| (format!("4/mu={mu}"), base.clone().with_mu(mu))).collect(),
            5 => K_SWEEP.iter().map(|&k| (format!("5/k={k}"), base.clone().with_devices(k))).collect(),
            _ => vec![(e.to_string(), base)],
        };
        for &s in &args.scenario {
            ScenarioSpec::new(s)?;
            for (label, cfg) in &configs {
                for &p in &args.precoder {
                    for &scheme in &args.power {
                        jobs.push(Job {
                            experiment: label.clone(),
                            scenario: s,
                            precoder: p,
                            scheme,
                            config: Some(cfg.clone()),
                        });
                    }
                }
            }
        }
    }
    Ok(jobs)
}

fn sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let opts = args.solver.options()?;
    let jobs = sweep_jobs(&args)?;
    let rows: Mutex<Vec<Option<Vec<String>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                let cfg = job.config.as_ref().expect("sweep jobs carry a configuration");
                let inst = ScenarioSpec::new(job.scenario)
                    .and_then(|sc| build_instance(cfg, &sc))
                    .map(|inst| with_mu(inst, args.solver.mu_db));
                let (inst, outcome) = match inst {
                    Ok(inst) => {
                        let r = run_pipeline(&inst, job.precoder, job.scheme, &opts).map_err(|e| e.to_string());
                        (Some(inst), r)
                    }
                    Err(e) => (None, Err(e.to_string())),
                };
                if !matches!(&outcome, Ok(r) if r.valid) {
                    failed.fetch_add(1, Ordering::SeqCst);
                }
                info!("finished {} sc{} {} {}", job.experiment, job.scenario, job.precoder, job.scheme);
                rows.lock().expect("row lock")[i] = Some(csv_row(job, inst.as_ref(), &outcome));
            });
        }
    });
    let mut w = csv::Writer::from_writer(output(&args.out)?);
    w.write_record(CSV_HEADER)?;
    for row in rows.into_inner().expect("row lock").into_iter().flatten() {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(if failed.load(Ordering::SeqCst) == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let payload = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{payload}");
            ExitCode::from(2)
        }
    }
}
