//! Synthetic paired-view datasets.
//!
//! Each class owns one prototype per view. Prototypes sit on the vertices
//! of a regular simplex with unit edge (`e_k / √2` in the first K
//! coordinates). View A prototypes are pulled toward their centroid by
//! `overlap_a`, so classes blur together as it approaches 1. A sample is its
//! class prototype plus isotropic Gaussian noise. With probability
//! `junk_rate_b` the view B vector is replaced by zero-mean noise with three
//! times the standard deviation, carrying no class information.
//!
//! Sample `i` draws from `Stream::new(seed).split(i)` in this order: one
//! uniform for the class, D normals for view A, D normals for view B, one
//! uniform for the junk decision, then D normals for the junk vector if the
//! sample is degraded. The train/val/test split shuffles indices with
//! `Stream::new(seed).split(u64::MAX)`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

fn default_noise_sigma() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    #[serde(alias = "K")]
    pub num_classes: usize,
    #[serde(alias = "D")]
    pub dim: usize,
    #[serde(alias = "n")]
    pub num_samples: usize,
    pub overlap_a: f64,
    pub junk_rate_b: f64,
    /// Relative class frequencies; uniform when absent.
    #[serde(default)]
    pub class_weights: Option<Vec<f64>>,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_classes: 5,
            dim: 16,
            num_samples: 2000,
            overlap_a: 0.35,
            junk_rate_b: 0.4,
            class_weights: None,
            noise_sigma: default_noise_sigma(),
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be at least 2"));
        }
        if self.dim < self.num_classes {
            return Err(Error::config(format!(
                "dim ({}) must be at least num_classes ({}) to place simplex prototypes",
                self.dim, self.num_classes
            )));
        }
        if self.num_samples == 0 {
            return Err(Error::config("num_samples must be positive"));
        }
        for (name, v) in [("overlap_a", self.overlap_a), ("junk_rate_b", self.junk_rate_b)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return Err(Error::config("noise_sigma must be positive"));
        }
        if let Some(w) = &self.class_weights {
            if w.len() != self.num_classes {
                return Err(Error::config(format!("class_weights has {} entries, expected {}", w.len(), self.num_classes)));
            }
            if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::config("class_weights must be positive"));
            }
        }
        Ok(())
    }

    /// Class weights normalized to sum to one.
    pub fn normalized_weights(&self) -> Vec<f64> {
        match &self.class_weights {
            Some(w) => {
                let total: f64 = w.iter().sum();
                w.iter().map(|v| v / total).collect()
            }
            None => vec![1.0 / self.num_classes as f64; self.num_classes],
        }
    }
}

/// Geometric class weights whose first/last ratio equals `ratio`.
pub fn long_tail_weights(num_classes: usize, ratio: f64) -> Result<Vec<f64>> {
    if num_classes < 2 {
        return Err(Error::Dimension { expected: 2, got: num_classes });
    }
    if !(ratio.is_finite() && ratio > 1.0) {
        return Err(Error::domain(format!("long-tail ratio must exceed 1, got {ratio}")));
    }
    let decay = ratio.powf(-1.0 / (num_classes - 1) as f64);
    let raw: Vec<f64> = (0..num_classes).map(|k| decay.powi(k as i32)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x_a: Vec<f64>,
    pub x_b: Vec<f64>,
    pub label: usize,
    pub degraded_b: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<PairedSample>,
    pub splits: Vec<Split>,
    pub config: GenConfig,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn subset(&self, split: Split) -> Vec<&PairedSample> {
        self.samples.iter().zip(&self.splits).filter(|(_, s)| **s == split).map(|(x, _)| x).collect()
    }

    /// One row per sample: split, label, degraded_b, x_a..., x_b...
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.dim();
        let mut header = vec!["split".to_string(), "label".into(), "degraded_b".into()];
        header.extend((0..d).map(|i| format!("xa_{i}")));
        header.extend((0..d).map(|i| format!("xb_{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for (s, split) in self.samples.iter().zip(&self.splits) {
            let mut row = vec![split.as_str().to_string(), s.label.to_string(), s.degraded_b.to_string()];
            row.extend(s.x_a.iter().chain(&s.x_b).map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `dataset.csv` and the `dataset.json` config sidecar.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("dataset.csv"))?)?;
        std::fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&self.config)?)?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Class prototypes for both views, `[view][class][dim]`.
pub fn prototypes(cfg: &GenConfig) -> [Vec<Vec<f64>>; 2] {
    let (k, d) = (cfg.num_classes, cfg.dim);
    let edge = std::f64::consts::FRAC_1_SQRT_2;
    let base: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            let mut v = vec![0.0; d];
            v[c] = edge;
            v
        })
        .collect();
    let centroid_coord = edge / k as f64;
    let keep = 1.0 - cfg.overlap_a;
    let view_a = base
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &x)| {
                    let c = if i < k { centroid_coord } else { 0.0 };
                    c + keep * (x - c)
                })
                .collect()
        })
        .collect();
    [view_a, base]
}

pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (k, d, n) = (cfg.num_classes, cfg.dim, cfg.num_samples);
    let [proto_a, proto_b] = prototypes(cfg);
    let mut cumulative = cfg.normalized_weights();
    for i in 1..k {
        cumulative[i] += cumulative[i - 1];
    }
    let root = Stream::new(cfg.seed);
    let sigma = cfg.noise_sigma;

    let samples = (0..n)
        .map(|i| {
            let mut s = root.split(i as u64);
            let u = s.uniform();
            let label = cumulative.iter().position(|c| u < *c).unwrap_or(k - 1);
            let x_a: Vec<f64> = proto_a[label].iter().map(|p| p + sigma * s.normal()).collect();
            let mut x_b: Vec<f64> = proto_b[label].iter().map(|p| p + sigma * s.normal()).collect();
            let degraded_b = s.uniform() < cfg.junk_rate_b;
            if degraded_b {
                x_b = (0..d).map(|_| 3.0 * sigma * s.normal()).collect();
            }
            PairedSample { x_a, x_b, label, degraded_b }
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    root.split(u64::MAX).shuffle(&mut order);
    let n_test = (0.2 * n as f64).round() as usize;
    let n_val = (0.08 * n as f64).round() as usize;
    let mut splits = vec![Split::Train; n];
    for (rank, &idx) in order.iter().enumerate() {
        if rank < n_test {
            splits[idx] = Split::Test;
        } else if rank < n_test + n_val {
            splits[idx] = Split::Val;
        }
    }
    Ok(Dataset { samples, splits, config: cfg.clone() })
}
