use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use evifuse_core::datagen::{generate, Split};
use evifuse_core::harness::{
    credible_counts_csv, evaluate_pair, run_experiment_with_models, uncertainty_hist_csv, write_experiment,
    write_models, write_uncertainty_files, ExperimentConfig,
};
use evifuse_core::model::{train_pair, ModelFile, TrainedPair};
use evifuse_core::{fuse_opinions, Evidence, Opinion};

/// Evidential two-view fusion: data generation, training and evaluation.
#[derive(Parser)]
#[command(name = "evifuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the first seed's dataset as dataset.csv plus a dataset.json sidecar.
    Datagen(ConfigArgs),
    /// Train the evidential pair on the first seed; writes model_a.json, model_b.json, history.json.
    Train(ConfigArgs),
    /// Evaluate saved models on the first seed's test split.
    Eval {
        #[command(flatten)]
        args: ConfigArgs,
        /// Directory holding model_a.json and model_b.json.
        #[arg(long)]
        models: PathBuf,
    },
    /// Fuse two opinions (or evidence vectors) given as JSON files.
    Fuse {
        /// First view: {"credibility":[..],"uncertainty":u} or {"evidence":[..]}
        #[arg(long)]
        a: PathBuf,
        /// Second view, same formats
        #[arg(long)]
        b: PathBuf,
    },
    /// Run the multi-seed strategy comparison and write all report files.
    Experiment(ConfigArgs),
    /// Run the experiment and write only the uncertainty histogram and credible counts.
    UncertaintyReport {
        #[command(flatten)]
        args: ConfigArgs,
        /// Override the credible-sample threshold.
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Marks errors caused by bad user input (exit code 2).
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Deserialize)]
#[serde(untagged)]
enum OpinionInput {
    Opinion(Opinion),
    Evidence(Evidence),
}

#[derive(Serialize)]
struct FuseOutput {
    opinion: Opinion,
    evidence: Vec<f64>,
    predicted_class: usize,
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(&args.config)?)
}

fn read_opinion(path: &Path) -> Result<Opinion> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let input: OpinionInput = serde_json::from_str(&text)
        .map_err(|_| InputError(format!("{}: expected an opinion or evidence object", path.display())))?;
    Ok(match input {
        OpinionInput::Opinion(o) => o,
        OpinionInput::Evidence(e) => e.to_opinion(),
    })
}

fn train_first_seed(cfg: &ExperimentConfig) -> Result<(evifuse_core::datagen::Dataset, TrainedPair)> {
    let (gen, train) = cfg.for_seed(cfg.seeds[0]);
    let data = generate(&gen)?;
    let pair = train_pair(&data, &train)?;
    Ok((data, pair))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Datagen(args) => {
            let cfg = load_config(&args)?;
            let (gen, _) = cfg.for_seed(cfg.seeds[0]);
            generate(&gen)?.save(&args.out)?;
            eprintln!("wrote dataset for seed {} to {}", gen.seed, args.out.display());
        }
        Command::Train(args) => {
            let cfg = load_config(&args)?;
            let (_, pair) = train_first_seed(&cfg)?;
            write_models(&pair, &args.out)?;
            std::fs::write(args.out.join("history.json"), serde_json::to_string_pretty(&pair.history)?)?;
            if let (Some(first), Some(last)) = (pair.history.first(), pair.history.last()) {
                eprintln!("global loss {:.4} -> {:.4}", first.global_loss, last.global_loss);
            }
        }
        Command::Eval { args, models } => {
            let cfg = load_config(&args)?;
            let load = |name: &str| -> Result<_> {
                let path = models.join(name);
                let file = ModelFile::load(&path).with_context(|| format!("loading {}", path.display()))?;
                Ok(file.to_evidence_head()?)
            };
            let pair = TrainedPair { head_a: load("model_a.json")?, head_b: load("model_b.json")?, history: vec![] };
            let (gen, _) = cfg.for_seed(cfg.seeds[0]);
            let data = generate(&gen)?;
            let eval = evaluate_pair(&pair, &data, Split::Test, cfg.credible_threshold)?;
            std::fs::create_dir_all(&args.out)?;
            std::fs::write(args.out.join("report.json"), serde_json::to_string_pretty(&eval)?)?;
            std::fs::write(args.out.join("report.csv"), eval_csv(&eval))?;
            let views = eval.views();
            std::fs::write(
                args.out.join("uncertainty_hist.csv"),
                uncertainty_hist_csv(views.iter().map(|(v, r)| (*v, r.histogram.clone()))),
            )?;
            std::fs::write(
                args.out.join("credible_counts.csv"),
                credible_counts_csv(cfg.credible_threshold, views.iter().map(|(v, r)| (*v, r.credible_counts.clone()))),
            )?;
            println!("{}", serde_json::to_string(&eval.fused)?);
        }
        Command::Fuse { a, b } => {
            let (oa, ob) = (read_opinion(&a)?, read_opinion(&b)?);
            let fused = fuse_opinions(&oa, &ob)?;
            let out = FuseOutput {
                opinion: fused.opinion,
                evidence: fused.evidence.into_inner(),
                predicted_class: fused.predicted_class,
            };
            println!("{}", serde_json::to_string(&out)?);
        }
        Command::Experiment(args) => {
            let cfg = load_config(&args)?;
            let (report, pair) = run_experiment_with_models(&cfg)?;
            write_experiment(&report, &pair, cfg.credible_threshold, &args.out)?;
            for s in &report.strategies {
                eprintln!("{:<10} acc {:.4} ± {:.4}  f1 {:.4} ± {:.4}", s.name, s.accuracy_mean, s.accuracy_std, s.f1_mean, s.f1_std);
            }
        }
        Command::UncertaintyReport { args, threshold } => {
            let mut cfg = load_config(&args)?;
            if let Some(t) = threshold {
                cfg.credible_threshold = t;
                cfg.validate()?;
            }
            let (report, _) = run_experiment_with_models(&cfg)?;
            write_uncertainty_files(&report, cfg.credible_threshold, &args.out)?;
            std::fs::write(args.out.join("report.json"), serde_json::to_string_pretty(&report.uncertainty)?)?;
            for u in &report.uncertainty {
                eprintln!("{:<6} mean u {:.3} (degraded {:.3}, clean {:.3})", u.view, u.mean_u, u.mean_u_degraded, u.mean_u_clean);
            }
        }
    }
    Ok(())
}

fn eval_csv(eval: &evifuse_core::harness::PairEvaluation) -> String {
    let mut out = String::from("view,metric,index,value\n");
    for (view, report) in eval.views() {
        for line in report.to_csv().lines().skip(1) {
            out.push_str(view);
            out.push(',');
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<evifuse_core::Error>() {
        Some(e) if e.is_config() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
