//! Experiment configuration, paired runs, multi-run experiments and plots.

pub mod config;
pub mod experiments;
pub mod plot;
pub mod run;

pub use config::{
    Algorithm, BandwidthMode, DeltaMode, ExperimentConfig, MuInit, NamedDelta, NamedMuInit, CONFIG_VERSION,
};
pub use experiments::{
    compare_algorithms, example1_demo, lemma2_demo, mean_stderr, median, ratios_of, run_repetitions,
    slow_moving_experiment, summarize, sweep_samples, write_csv, Lemma2Params, Lemma2Summary, SummaryRow, SweepRow,
};
pub use plot::{emit_plot, PlotKind, PlotPoint, PlotTable};
pub use run::{
    compute_buy_all_budget, load_campaign, load_model_file, run_end_to_end, run_paired, run_slow_moving,
    train_plan, Campaign, PairedRun, RunRecord, RunSetting, HINDSIGHT_EPS,
};
