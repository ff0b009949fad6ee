//! The `neoseiz` command line: `train`, `detect`, `evaluate`, `burden`,
//! `synth` and `retrain`.
//!
//! Exit status is 0 on success, 2 when the input or configuration is
//! invalid and 1 when a run fails for any other reason.

pub mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::error::{Error, Result};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "neoseiz", version, about = "Neonatal EEG seizure detection")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand; each overrides the config file.
#[derive(Debug, Default, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Epoch hop in seconds.
    #[arg(long, global = true)]
    pub hop: Option<f64>,
    /// Minimum detected event duration in seconds.
    #[arg(long, global = true)]
    pub min_dur: Option<usize>,
    /// Bipolar derivations, e.g. F3-P3,F4-P4,P3-P4.
    #[arg(long, global = true, value_delimiter = ',')]
    pub montage: Option<Vec<String>>,
    /// Raters whose consensus is the reference, e.g. e1,e2.
    #[arg(long, global = true, value_delimiter = ',')]
    pub raters: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub bootstrap_iters: Option<usize>,
    /// Recording directory (training corpus or recordings to analyse).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate, calibrate and fit a detector on an annotated corpus.
    Train {
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Run a detector over recordings.
    Detect {
        /// EDF files; defaults to every recording in --data.
        recordings: Vec<PathBuf>,
    },
    /// Score detector masks against reference annotations.
    Evaluate {
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// `report.json` of an earlier evaluation to test generalization against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        pred_rater: Option<String>,
    },
    /// Seizure burden, periods of interest and burden classes.
    Burden {
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Reference annotations to compare against.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        pred_rater: Option<String>,
    },
    /// Write a synthetic annotated corpus.
    Synth {
        #[arg(long)]
        n_neonates: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seizure_rate: Option<f64>,
        #[arg(long)]
        artifact_rate: Option<f64>,
        #[arg(long)]
        id_prefix: Option<String>,
    },
    /// Retrain a detector with newly annotated neonates.
    Retrain {
        /// Directory of the new neonates.
        #[arg(long)]
        new: Option<PathBuf>,
    },
}

impl Cli {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn config(&self) -> Result<RunConfig> {
        let c = &self.common;
        let mut cfg = match &c.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = c.seed {
            cfg.seed = v;
        }
        if let Some(v) = c.hop {
            cfg.hop = v;
        }
        if let Some(v) = c.min_dur {
            cfg.min_dur = Some(v);
        }
        if let Some(v) = &c.montage {
            cfg.montage = v.clone();
        }
        if let Some(v) = &c.raters {
            cfg.raters = v.clone();
        }
        if let Some(v) = c.bootstrap_iters {
            cfg.bootstrap_iters = v;
        }
        if let Some(v) = &c.data {
            cfg.paths.data_dir = Some(v.clone());
        }
        if let Some(v) = &c.model {
            cfg.paths.model = Some(v.clone());
        }
        if let Some(v) = &c.out {
            cfg.paths.out_dir = Some(v.clone());
        }
        match &self.command {
            Command::Train { folds } => {
                if let Some(v) = folds {
                    cfg.train.n_folds = *v;
                }
            }
            Command::Evaluate {
                pred,
                truth,
                baseline,
                pred_rater,
            } => {
                set(&mut cfg.paths.pred_dir, pred);
                set(&mut cfg.paths.truth_dir, truth);
                set(&mut cfg.paths.baseline, baseline);
                set_string(&mut cfg.pred_rater, pred_rater);
            }
            Command::Burden { pred, truth, pred_rater } => {
                set(&mut cfg.paths.pred_dir, pred);
                set(&mut cfg.paths.truth_dir, truth);
                set_string(&mut cfg.pred_rater, pred_rater);
            }
            Command::Synth {
                n_neonates,
                duration,
                seizure_rate,
                artifact_rate,
                id_prefix,
            } => {
                let s = &mut cfg.synth;
                if let Some(v) = n_neonates {
                    s.n_neonates = *v;
                }
                if let Some(v) = duration {
                    s.duration_s = *v;
                }
                if let Some(v) = seizure_rate {
                    s.seizure_rate_per_h = *v;
                }
                if let Some(v) = artifact_rate {
                    s.artifact_rate_per_h = *v;
                }
                set_string(&mut s.id_prefix, id_prefix);
            }
            Command::Retrain { new } => set(&mut cfg.paths.new_data_dir, new),
            Command::Detect { .. } => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set(slot: &mut Option<PathBuf>, v: &Option<PathBuf>) {
    if let Some(v) = v {
        *slot = Some(v.clone());
    }
}

fn set_string(slot: &mut String, v: &Option<String>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = cli.config()?;
    match &cli.command {
        Command::Train { .. } => commands::train(&cfg),
        Command::Detect { recordings } => commands::detect(&cfg, recordings),
        Command::Evaluate { .. } => commands::evaluate(&cfg),
        Command::Burden { .. } => commands::burden(&cfg),
        Command::Synth { .. } => commands::synth(&cfg),
        Command::Retrain { .. } => commands::retrain(&cfg),
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
