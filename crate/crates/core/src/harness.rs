//! Multi-seed experiment runner and report files.
//!
//! Each seed regenerates a dataset, trains the evidential pair plus one
//! softmax classifier per view, and scores single views and every requested
//! fusion strategy on the test split. Seeds run in parallel; aggregation is
//! an ordered reduction over the per-seed table, so the report depends only
//! on the configuration.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate, Dataset, GenConfig, Split};
use crate::error::{Error, Result};
use crate::fusion::{fuse_baseline_with, BaselineRule, ExtremumMode};
use crate::metrics::{accuracy_and_macro_f1, EvalReport, HISTOGRAM_BINS};
use crate::model::{train_pair, train_softmax_baseline, ModelFile, SoftmaxClassifier, TrainConfig, TrainedPair, View};
use crate::opinion::argmax;
use crate::rng::mix64;

const TRAIN_SEED_SALT: u64 = 0x7EA1_0000_5EED_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Evidential,
    Sum,
    Product,
    Max,
    Min,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::Evidential, Strategy::Sum, Strategy::Product, Strategy::Max, Strategy::Min];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Evidential => "evidential",
            Strategy::Sum => "sum",
            Strategy::Product => "product",
            Strategy::Max => "max",
            Strategy::Min => "min",
        }
    }

    fn baseline_rule(self) -> Option<BaselineRule> {
        match self {
            Strategy::Evidential => None,
            Strategy::Sum => Some(BaselineRule::Sum),
            Strategy::Product => Some(BaselineRule::Product),
            Strategy::Max => Some(BaselineRule::Max),
            Strategy::Min => Some(BaselineRule::Min),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

fn default_threshold() -> f64 {
    0.4
}

/// Experiment description. `gen.seed` and `train.seed` are overridden per
/// run: seed `s` generates data with `s` and trains with
/// `mix64(s ^ 0x7EA100005EED0001)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub gen: GenConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_threshold")]
    pub credible_threshold: f64,
    #[serde(default)]
    pub extremum_mode: ExtremumMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gen: GenConfig::default(),
            train: TrainConfig::default(),
            seeds: default_seeds(),
            strategies: default_strategies(),
            credible_threshold: default_threshold(),
            extremum_mode: ExtremumMode::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.strategies.is_empty() {
            return Err(Error::config("at least one strategy is required"));
        }
        if !(self.credible_threshold > 0.0 && self.credible_threshold <= 1.0) {
            return Err(Error::config("credible_threshold must lie in (0, 1]"));
        }
        self.gen.validate()?;
        self.train.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Generation and training configs for one seed.
    pub fn for_seed(&self, seed: u64) -> (GenConfig, TrainConfig) {
        let gen = GenConfig { seed, ..self.gen.clone() };
        let train = TrainConfig { seed: mix64(seed ^ TRAIN_SEED_SALT), ..self.train.clone() };
        (gen, train)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Evidence-based evaluation of both views and their fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEvaluation {
    pub view_a: EvalReport,
    pub view_b: EvalReport,
    pub fused: EvalReport,
}

impl PairEvaluation {
    pub fn views(&self) -> [(&'static str, &EvalReport); 3] {
        [("a", &self.view_a), ("b", &self.view_b), ("fused", &self.fused)]
    }
}

/// Scores a trained pair on one split. Degradation flags refer to view B.
pub fn evaluate_pair(pair: &TrainedPair, data: &Dataset, split: Split, threshold: f64) -> Result<PairEvaluation> {
    let samples = data.subset(split);
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = data.num_classes();
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let degraded: Vec<bool> = samples.iter().map(|s| s.degraded_b).collect();
    let mut per_view = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
    for s in &samples {
        let ea = pair.head_a.forward(&s.x_a)?;
        let eb = pair.head_b.forward(&s.x_b)?;
        let ef = pair.fused_evidence(s);
        let fused_u = k as f64 / (ef.iter().sum::<f64>() + k as f64);
        for (slot, (pred, u)) in per_view.iter_mut().zip([
            (ea.predicted_class(), ea.to_opinion().uncertainty()),
            (eb.predicted_class(), eb.to_opinion().uncertainty()),
            (argmax(&ef), fused_u),
        ]) {
            slot.0.push(pred);
            slot.1.push(u);
        }
    }
    let [a, b, f] = per_view;
    Ok(PairEvaluation {
        view_a: EvalReport::new(&a.0, &labels, &a.1, &degraded, k, threshold)?,
        view_b: EvalReport::new(&b.0, &labels, &b.1, &degraded, k, threshold)?,
        fused: EvalReport::new(&f.0, &labels, &f.1, &degraded, k, threshold)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// One score per requested strategy, in request order.
    pub strategies: Vec<(Strategy, Score)>,
    /// Single-view scores: evidential heads (`a-e`, `b-e`) and softmax
    /// classifiers (`a-s`, `b-s`).
    pub single_views: Vec<(String, Score)>,
    pub uncertainty: PairEvaluation,
    pub first_epoch_loss: f64,
    pub final_epoch_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySummary {
    pub view: String,
    pub mean_u: f64,
    pub mean_u_degraded: f64,
    pub mean_u_clean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub strategies: Vec<Summary>,
    pub single_views: Vec<Summary>,
    pub uncertainty: Vec<UncertaintySummary>,
    pub per_seed: Vec<SeedResult>,
}

/// Mean and sample standard deviation (n − 1); the deviation of a single
/// value is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(name: String, scores: &[Score]) -> Summary {
    let (accuracy_mean, accuracy_std) = mean_std(&scores.iter().map(|s| s.accuracy).collect::<Vec<_>>());
    let (f1_mean, f1_std) = mean_std(&scores.iter().map(|s| s.macro_f1).collect::<Vec<_>>());
    Summary { name, accuracy_mean, accuracy_std, f1_mean, f1_std }
}

/// Rebuilds the cross-seed summaries from a per-seed table.
pub fn aggregate(per_seed: Vec<SeedResult>) -> ComparisonReport {
    let Some(first) = per_seed.first() else {
        return ComparisonReport { strategies: vec![], single_views: vec![], uncertainty: vec![], per_seed };
    };
    let strategies = first
        .strategies
        .iter()
        .enumerate()
        .map(|(i, (s, _))| summarize(s.name().to_string(), &per_seed.iter().map(|r| r.strategies[i].1).collect::<Vec<_>>()))
        .collect();
    let single_views = first
        .single_views
        .iter()
        .enumerate()
        .map(|(i, (name, _))| summarize(name.clone(), &per_seed.iter().map(|r| r.single_views[i].1).collect::<Vec<_>>()))
        .collect();
    let uncertainty = ["a", "b", "fused"]
        .iter()
        .enumerate()
        .map(|(i, view)| {
            let reports: Vec<&EvalReport> = per_seed.iter().map(|r| r.uncertainty.views()[i].1).collect();
            let avg = |f: fn(&EvalReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / reports.len() as f64;
            UncertaintySummary {
                view: view.to_string(),
                mean_u: avg(|r| r.mean_u),
                mean_u_degraded: avg(|r| r.mean_u_degraded),
                mean_u_clean: avg(|r| r.mean_u_clean),
            }
        })
        .collect();
    ComparisonReport { strategies, single_views, uncertainty, per_seed }
}

fn stage<T>(seed: u64, stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { seed, stage, source: Box::new(e) })
}

fn score_softmax(models: [&SoftmaxClassifier; 2], data: &Dataset, cfg: &ExperimentConfig) -> Result<(Vec<Score>, Vec<Option<Score>>)> {
    let samples = data.subset(Split::Test);
    let k = data.num_classes();
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let mut probs = Vec::with_capacity(samples.len());
    for s in &samples {
        probs.push((models[0].predict_proba(&s.x_a)?, models[1].predict_proba(&s.x_b)?));
    }
    let single = [0, 1]
        .iter()
        .map(|&v| {
            let preds: Vec<usize> =
                probs.iter().map(|p| argmax(if v == 0 { p.0.probs() } else { p.1.probs() })).collect();
            let (accuracy, macro_f1) = accuracy_and_macro_f1(&preds, &labels, k)?;
            Ok(Score { accuracy, macro_f1 })
        })
        .collect::<Result<Vec<_>>>()?;
    let fused = cfg
        .strategies
        .iter()
        .map(|s| match s.baseline_rule() {
            None => Ok(None),
            Some(rule) => {
                let preds =
                    probs.iter().map(|(a, b)| fuse_baseline_with(a, b, rule, cfg.extremum_mode)).collect::<Result<Vec<_>>>()?;
                let (accuracy, macro_f1) = accuracy_and_macro_f1(&preds, &labels, k)?;
                Ok(Some(Score { accuracy, macro_f1 }))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((single, fused))
}

/// Runs one seed; also returns the trained evidential pair.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(SeedResult, TrainedPair)> {
    let (gen, train) = cfg.for_seed(seed);
    let data = stage(seed, "datagen", generate(&gen))?;
    let pair = stage(seed, "train_pair", train_pair(&data, &train))?;
    let soft_a = stage(seed, "train_softmax_a", train_softmax_baseline(&data, &train, View::A))?;
    let soft_b = stage(seed, "train_softmax_b", train_softmax_baseline(&data, &train, View::B))?;
    let eval = stage(seed, "evaluate", evaluate_pair(&pair, &data, Split::Test, cfg.credible_threshold))?;
    let (soft_single, soft_fused) = stage(seed, "evaluate", score_softmax([&soft_a, &soft_b], &data, cfg))?;

    let score_of = |r: &EvalReport| Score { accuracy: r.accuracy, macro_f1: r.macro_f1 };
    let strategies = cfg
        .strategies
        .iter()
        .zip(soft_fused)
        .map(|(s, fused)| (*s, fused.unwrap_or_else(|| score_of(&eval.fused))))
        .collect();
    let single_views = vec![
        ("a-e".to_string(), score_of(&eval.view_a)),
        ("b-e".to_string(), score_of(&eval.view_b)),
        ("a-s".to_string(), soft_single[0]),
        ("b-s".to_string(), soft_single[1]),
    ];
    let result = SeedResult {
        seed,
        strategies,
        single_views,
        uncertainty: eval,
        first_epoch_loss: pair.history.first().map_or(f64::NAN, |r| r.global_loss),
        final_epoch_loss: pair.history.last().map_or(f64::NAN, |r| r.global_loss),
    };
    Ok((result, pair))
}

/// Runs every seed and returns the report with the first seed's trained pair.
pub fn run_experiment_with_models(cfg: &ExperimentConfig) -> Result<(ComparisonReport, TrainedPair)> {
    cfg.validate()?;
    let runs = cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed)).collect::<Result<Vec<_>>>()?;
    let mut per_seed = Vec::with_capacity(runs.len());
    let mut first_pair = None;
    for (result, pair) in runs {
        first_pair.get_or_insert(pair);
        per_seed.push(result);
    }
    let first_pair = first_pair.expect("validated config has at least one seed");
    Ok((aggregate(per_seed), first_pair))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    Ok(run_experiment_with_models(cfg)?.0)
}

/// `report.csv`: summary rows then per-seed rows.
pub fn report_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("kind,seed,name,accuracy,macro_f1,accuracy_std,f1_std\n");
    for s in report.strategies.iter().chain(&report.single_views) {
        let _ = writeln!(out, "summary,,{},{},{},{},{}", s.name, s.accuracy_mean, s.f1_mean, s.accuracy_std, s.f1_std);
    }
    for r in &report.per_seed {
        let rows = r.strategies.iter().map(|(s, sc)| (s.name().to_string(), sc)).chain(r.single_views.iter().map(|(n, sc)| (n.clone(), sc)));
        for (name, sc) in rows {
            let _ = writeln!(out, "seed,{},{name},{},{},,", r.seed, sc.accuracy, sc.macro_f1);
        }
    }
    out
}

/// `uncertainty_hist.csv` rows `(view, bin_low, bin_high, count)`.
pub fn uncertainty_hist_csv<'a>(views: impl IntoIterator<Item = (&'a str, Vec<usize>)>) -> String {
    let mut out = String::from("view,bin_low,bin_high,count\n");
    for (view, hist) in views {
        for (i, count) in hist.iter().enumerate() {
            let lo = i as f64 / HISTOGRAM_BINS as f64;
            let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
            let _ = writeln!(out, "{view},{lo},{hi},{count}");
        }
    }
    out
}

/// `credible_counts.csv` rows `(view, class, threshold, count)`.
pub fn credible_counts_csv<'a>(threshold: f64, views: impl IntoIterator<Item = (&'a str, Vec<usize>)>) -> String {
    let mut out = String::from("view,class,threshold,count\n");
    for (view, counts) in views {
        for (k, count) in counts.iter().enumerate() {
            let _ = writeln!(out, "{view},{k},{threshold},{count}");
        }
    }
    out
}

fn sum_over_seeds(report: &ComparisonReport, view: usize, field: fn(&EvalReport) -> &Vec<usize>) -> Vec<usize> {
    let mut acc: Vec<usize> = Vec::new();
    for r in &report.per_seed {
        let v = field(r.uncertainty.views()[view].1);
        if acc.is_empty() {
            acc = vec![0; v.len()];
        }
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
    }
    acc
}

const VIEW_NAMES: [&str; 3] = ["a", "b", "fused"];

/// Writes the uncertainty histogram and credible-count CSVs, summed over
/// seeds.
pub fn write_uncertainty_files(report: &ComparisonReport, threshold: f64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let hist = VIEW_NAMES.iter().enumerate().map(|(i, v)| (*v, sum_over_seeds(report, i, |r| &r.histogram)));
    std::fs::write(out.join("uncertainty_hist.csv"), uncertainty_hist_csv(hist))?;
    let counts = VIEW_NAMES.iter().enumerate().map(|(i, v)| (*v, sum_over_seeds(report, i, |r| &r.credible_counts)));
    std::fs::write(out.join("credible_counts.csv"), credible_counts_csv(threshold, counts))?;
    Ok(())
}

pub fn write_models(pair: &TrainedPair, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    ModelFile::from_evidence_head(&pair.head_a).save(&out.join("model_a.json"))?;
    ModelFile::from_evidence_head(&pair.head_b).save(&out.join("model_b.json"))?;
    Ok(())
}

/// Writes all six experiment artifacts into `out`.
pub fn write_experiment(report: &ComparisonReport, pair: &TrainedPair, threshold: f64, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(report)?)?;
    std::fs::write(out.join("report.csv"), report_csv(report))?;
    write_uncertainty_files(report, threshold, out)?;
    write_models(pair, out)
}
