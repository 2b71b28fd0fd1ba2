use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spendpace::benchmark::{hindsight_value, run_strategy, write_trace_csv};
use spendpace::estimation::Kernel;
use spendpace::harness::{
    compare_algorithms, compute_buy_all_budget, emit_plot, example1_demo, lemma2_demo, load_campaign,
    run_repetitions, slow_moving_experiment, summarize, sweep_samples, train_plan, write_csv, Algorithm,
    BandwidthMode, DeltaMode, ExperimentConfig, Lemma2Params, MuInit, PlotKind, PlotTable, RunRecord, RunSetting,
};
use spendpace::harness::run::build_pacer;
use spendpace::spendplan::{estimate_episodes, FpMode, SpendPlan};
use spendpace::{Error, Result};

#[derive(Parser)]
#[command(name = "spendpace", version, about = "Spend-plan estimation and budget pacing experiments")]
struct Cli {
    /// TOML experiment config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a normalized spend plan and write it as JSON.
    Estimate {
        /// Directory for per-episode estimated spend curves (`mu,value` CSV).
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Pace one realization of the campaign with a saved plan.
    Pace {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 0)]
        repetition: u32,
        /// Per-round trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Utility ratio against training-set size and budget fraction.
    SweepSamples,
    /// Paired comparison of algorithms with random budget fractions.
    Compare,
    /// Run a hand-built counterexample.
    Scenario {
        #[command(subcommand)]
        which: Scenario,
    },
    /// Bucketed planning on a drifting campaign.
    SlowMoving,
    /// Paired runs at the configured budget.
    Run,
}

#[derive(Subcommand)]
enum Scenario {
    Example1,
    Lemma2 {
        #[arg(long, default_value_t = 5)]
        tau: usize,
        #[arg(long, default_value_t = 10.0)]
        p_high: f64,
        #[arg(long, default_value_t = 1.0)]
        v_low: f64,
        #[arg(long, default_value_t = 2.0)]
        v_high: f64,
    },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true, value_delimiter = ',')]
    datasets: Option<Vec<String>>,
    #[arg(long, global = true)]
    model_file: Option<PathBuf>,
    #[arg(long, global = true)]
    meta_ranges: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Training samples per episode.
    #[arg(short, long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    budget_frac: Option<f64>,
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long, global = true)]
    repetitions: Option<usize>,
    #[arg(long, global = true)]
    kernel: Option<Kernel>,
    #[arg(long, global = true)]
    bandwidth: Option<BandwidthMode>,
    #[arg(long, global = true)]
    fp_mode: Option<FpMode>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    eta_scale: Option<f64>,
    #[arg(long, global = true)]
    mu_bar: Option<f64>,
    /// `plan` or a number.
    #[arg(long, global = true)]
    mu_init: Option<MuInit>,
    /// `zero`, `theory` or a number.
    #[arg(long, global = true)]
    delta: Option<DeltaMode>,
    #[arg(long, global = true)]
    delta_confidence: Option<f64>,
    #[arg(long, global = true)]
    delta_c: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    buy_all_seeds: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    budget_fracs: Option<Vec<f64>>,
    #[arg(long, global = true)]
    max_budget_frac: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    e_bucket_grid: Option<Vec<usize>>,
}

macro_rules! apply {
    ($cfg:ident, $o:ident; $($field:ident),*) => {
        $(if let Some(v) = $o.$field { $cfg.$field = v; })*
    };
}

impl Overrides {
    fn apply(self, mut cfg: ExperimentConfig) -> ExperimentConfig {
        let o = self;
        if o.budget.is_some() {
            cfg.budget = o.budget;
        }
        if o.model_file.is_some() {
            cfg.model_file = o.model_file;
        }
        if o.meta_ranges.is_some() {
            cfg.meta_ranges = o.meta_ranges;
        }
        if o.eta.is_some() {
            cfg.eta = o.eta;
        }
        if o.mu_bar.is_some() {
            cfg.mu_bar = o.mu_bar;
        }
        if o.beta.is_some() {
            cfg.beta = o.beta;
        }
        if o.output.is_some() {
            cfg.output = o.output;
        }
        apply!(cfg, o; dataset, datasets, seed, horizon, episodes, n, budget_frac, algorithms, repetitions, kernel,
            bandwidth, fp_mode, eta_scale, mu_init, delta, delta_confidence, delta_c, buy_all_seeds, n_grid,
            budget_fracs, max_budget_frac, e_bucket_grid);
        cfg
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let config = cli.overrides.apply(base);
    config.validate()?;
    match cli.command {
        Command::Estimate { curves } => estimate(&config, curves.as_deref()),
        Command::Pace { plan, repetition, trace } => pace(&config, &plan, repetition, trace.as_deref()),
        Command::SweepSamples => {
            let (rows, records) = sweep_samples(&config)?;
            let dir = output_dir(&config, "sweep")?;
            write_csv(&rows, fs::File::create(dir.join("sweep.csv"))?)?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            let mut table = PlotTable::new("utility ratio vs training samples", "n", "mean utility ratio");
            table.log_x = true;
            for r in &rows {
                table.push(&format!("{} x{}", r.algorithm, r.budget_frac), r.n as f64, r.mean_ratio);
            }
            emit_plot(&table, PlotKind::Line, &dir.join("sweep.svg"))?;
            print_json(&rows)
        }
        Command::Compare => {
            let records = compare_algorithms(&config)?;
            let dir = output_dir(&config, "compare")?;
            #[derive(Serialize)]
            struct Row<'a> {
                dataset: &'a str,
                budget_frac: Option<f64>,
                algorithm: &'a str,
                ratio: f64,
            }
            let rows: Vec<Row> = records
                .iter()
                .map(|r| Row {
                    dataset: &r.dataset,
                    budget_frac: r.budget_frac,
                    algorithm: &r.algorithm,
                    ratio: r.utility_ratio,
                })
                .collect();
            write_csv(&rows, fs::File::create(dir.join("compare.csv"))?)?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            for dataset in config.dataset_list() {
                let mut table = PlotTable::new(&dataset, "budget / buy-all budget", "utility ratio");
                for r in records.iter().filter(|r| r.dataset == dataset) {
                    table.push(&r.algorithm, r.budget_frac.unwrap_or(f64::NAN), r.utility_ratio);
                }
                emit_plot(&table, PlotKind::Scatter, &dir.join(format!("compare_{dataset}.svg")))?;
            }
            finish_records(&records, &dir)
        }
        Command::Scenario { which: Scenario::Example1 } => {
            let records = example1_demo(&config)?;
            let dir = output_dir(&config, "example1")?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            finish_records(&records, &dir)
        }
        Command::Scenario { which: Scenario::Lemma2 { tau, p_high, v_low, v_high } } => {
            let (summary, records) = lemma2_demo(&config, Lemma2Params { tau, p_high, v_low, v_high })?;
            let dir = output_dir(&config, "lemma2")?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            print_json(&summary)
        }
        Command::SlowMoving => {
            let records = slow_moving_experiment(&config)?;
            let dir = output_dir(&config, "slow_moving")?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            finish_records(&records, &dir)
        }
        Command::Run => {
            let mut records = Vec::new();
            for dataset in config.dataset_list() {
                let campaign = load_campaign(&config, &dataset)?;
                records.extend(run_repetitions(&config, &dataset, &campaign)?);
            }
            let dir = output_dir(&config, "run")?;
            write_csv(&records, fs::File::create(dir.join("records.csv"))?)?;
            finish_records(&records, &dir)
        }
    }
}

fn estimate(config: &ExperimentConfig, curves: Option<&Path>) -> Result<()> {
    let campaign = load_campaign(config, &config.dataset)?;
    let (budget, budget_frac) = match config.budget {
        Some(b) => (b, None),
        None => {
            let buy_all = compute_buy_all_budget(&campaign, config.seed, config.buy_all_seeds);
            (config.budget_frac * buy_all, Some(config.budget_frac))
        }
    };
    let plan_episodes = campaign.natural_episodes();
    let setting =
        RunSetting { label: &config.dataset, campaign: &campaign, budget, budget_frac, repetition: 0, plan_episodes };
    let plan = train_plan(config, &setting)?;
    if let Some(dir) = curves {
        fs::create_dir_all(dir)?;
        let samples = campaign.training_samples(config.n, plan_episodes, config.seed, 0)?;
        for (e, est) in estimate_episodes(&samples, &config.estimation_settings())?.iter().enumerate() {
            est.write_csv(fs::File::create(dir.join(format!("episode_{:03}.csv", e + 1)))?)?;
        }
    }
    match &config.output {
        Some(path) => plan.save(path),
        None => {
            println!("{}", plan.to_json()?);
            Ok(())
        }
    }
}

fn pace(config: &ExperimentConfig, plan_path: &Path, repetition: u32, trace: Option<&Path>) -> Result<()> {
    let plan = SpendPlan::load(plan_path)?;
    let campaign = load_campaign(config, &config.dataset)?;
    if campaign.horizon() != plan.horizon {
        return Err(Error::Config(format!(
            "plan horizon {} does not match campaign horizon {}",
            plan.horizon,
            campaign.horizon()
        )));
    }
    let realization = campaign.realize(config.seed, repetition);
    let mut pacer = build_pacer(config, &plan, campaign.value_upper_bound())?;
    let outcome = run_strategy(&mut pacer, &realization, plan.rounds_per_episode(), trace.is_some())?;
    if let (Some(path), Some(rows)) = (trace, &outcome.trace) {
        write_trace_csv(rows, fs::File::create(path)?)?;
    }
    let hindsight = hindsight_value(&realization, plan.budget).value;
    #[derive(Serialize)]
    struct Summary {
        utility: f64,
        spend: f64,
        budget: f64,
        wins: usize,
        hindsight: f64,
        utility_ratio: f64,
        realization_hash: String,
    }
    print_json(&Summary {
        utility: outcome.utility,
        spend: outcome.spend,
        budget: plan.budget,
        wins: outcome.wins,
        hindsight,
        utility_ratio: if hindsight > 1e-12 { outcome.utility / hindsight } else { 1.0 },
        realization_hash: realization.digest(),
    })
}

fn output_dir(config: &ExperimentConfig, default: &str) -> Result<PathBuf> {
    let dir = config.output.clone().unwrap_or_else(|| PathBuf::from("out").join(default));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn finish_records(records: &[RunRecord], dir: &Path) -> Result<()> {
    let summary = summarize(records);
    write_csv(&summary, fs::File::create(dir.join("summary.csv"))?)?;
    print_json(&summary)
}

fn print_json<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
