use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phscreen::dnn::TrainConfig;
use phscreen::features::CriteriaThresholds;
use phscreen::ingest::ControlPolicy;
use phscreen::pipeline::{PipelineOptions, DEFAULT_TRAIN_FRACTION, DEFAULT_VAL_FRACTION};

#[derive(Debug, Parser)]
#[command(name = "phscreen", version, about = "Screen 12-lead ECGs for right-heart strain patterns")]
pub struct Cli {
    #[command(flatten)]
    pub source: Source,

    /// Directory for every file a command writes.
    #[arg(long, global = true, default_value = "out")]
    pub output_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

/// Where records come from and how the cohort is selected.
#[derive(Debug, Clone, Args)]
pub struct Source {
    /// PTB-XL root (the directory holding ptbxl_database.csv).
    #[arg(long, env = "PTBXL_ROOT", global = true)]
    pub dataset_root: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 100, value_parser = parse_rate)]
    pub sampling_rate: u32,

    /// Use generated records instead of a dataset.
    #[arg(long, global = true)]
    pub synthetic: bool,

    /// Synthetic cohort size.
    #[arg(long, global = true, default_value_t = 200)]
    pub n: usize,

    /// Distance of synthetic parameters from each threshold, in measurement tolerances.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub margin: f64,

    #[arg(long, global = true, default_value_t = 50.0)]
    pub likelihood_threshold: f64,

    #[arg(long, global = true, value_enum, default_value_t = Controls::Matched)]
    pub controls: Controls,

    /// Skip malformed metadata rows instead of failing.
    #[arg(long, global = true)]
    pub lenient: bool,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

fn parse_rate(s: &str) -> Result<u32, String> {
    match s {
        "100" => Ok(100),
        "500" => Ok(500),
        _ => Err("expected 100 or 500".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Controls {
    /// NORM-only records sampled to the positive count.
    Matched,
    /// Every NORM-only record.
    All,
}

impl From<Controls> for ControlPolicy {
    fn from(c: Controls) -> Self {
        match c {
            Controls::Matched => ControlPolicy::NormMatched,
            Controls::All => ControlPolicy::NormAll,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label, age and sex tables for the cohort.
    Stats,
    /// Cohort membership and labels as CSV.
    Cohort,
    /// Train/validation/test record ids as JSON.
    Split(SplitArgs),
    /// Train the network and write the model, dataset cache and report.
    Train(TrainArgs),
    /// Score a saved model on the test split.
    Eval(EvalArgs),
    /// Criteria and (optionally) model output for one record.
    Screen(ScreenArgs),
    /// Write a synthetic cohort as a PTB-XL style tree of WFDB records.
    Synth,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,

    /// Share of the training part held out for validation.
    #[arg(long, default_value_t = DEFAULT_VAL_FRACTION)]
    pub val_fraction: f64,

    /// Two-way split, validation on the test split, statistics fitted on all records.
    #[arg(long)]
    pub paper_faithful: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub split: SplitArgs,

    #[arg(long, default_value_t = 50)]
    pub epochs: usize,

    #[arg(long, default_value_t = 0.001)]
    pub lr0: f64,

    #[arg(long, default_value_t = 0.95)]
    pub decay_rate: f64,

    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 10)]
    pub patience: usize,

    #[arg(long, default_value_t = 1e-4)]
    pub min_delta: f64,

    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "256,64")]
    pub hidden: Vec<usize>,

    /// Append age, sex, height and weight to the input.
    #[arg(long)]
    pub include_demographics: bool,

    /// Two outputs (RVH, RAE) instead of one.
    #[arg(long)]
    pub per_condition: bool,
}

impl TrainArgs {
    pub fn pipeline(&self, seed: u64) -> PipelineOptions {
        PipelineOptions {
            train_fraction: self.split.train_fraction,
            val_fraction: self.split.val_fraction,
            paper_faithful: self.split.paper_faithful,
            include_demographics: self.include_demographics,
            per_condition: self.per_condition,
            hidden: self.hidden.clone(),
            seed,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr0: self.lr0,
            decay_rate: self.decay_rate,
            batch_size: self.batch_size,
            patience: self.patience,
            min_delta: self.min_delta,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub split: SplitArgs,

    /// Defaults to `<output-dir>/model.ecgm`.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    /// WFDB record path, with or without `.hea`.
    #[arg(long)]
    pub record: PathBuf,

    #[arg(long)]
    pub model: Option<PathBuf>,

    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 90.0)]
    pub rad_axis_deg: f64,
    #[arg(long, default_value_t = 0.7)]
    pub tall_r_v1_mv: f64,
    #[arg(long, default_value_t = 120.0)]
    pub narrow_qrs_ms: f64,
    #[arg(long, default_value_t = 0.25)]
    pub p_pulmonale_mv: f64,
}

impl From<&ThresholdArgs> for CriteriaThresholds {
    fn from(t: &ThresholdArgs) -> Self {
        CriteriaThresholds {
            rad_axis_deg: t.rad_axis_deg,
            tall_r_v1_mv: t.tall_r_v1_mv,
            narrow_qrs_ms: t.narrow_qrs_ms,
            p_pulmonale_mv: t.p_pulmonale_mv,
        }
    }
}
