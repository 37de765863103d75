//! The Reciprocal Loss over Dirichlet parameters.
//!
//! For a sample with positive class `y` the positive-class term is
//! `ψ(α_0) − ψ(α_y)`, the expected cross-entropy under `Dir(α)`, and each
//! negative class `k` contributes the reciprocal `1 / (ψ(α_0) − ψ(α_k))`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::numerics::{digamma_unchecked, trigamma_unchecked};
use crate::opinion::DirichletParams;

/// One-hot class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOneHot {
    class: usize,
    num_classes: usize,
}

impl LabelOneHot {
    pub fn new(class: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Dimension { expected: 2, got: num_classes });
        }
        if class >= num_classes {
            return Err(Error::Label(format!("class {class} out of range for {num_classes} classes")));
        }
        Ok(LabelOneHot { class, num_classes })
    }

    /// Parses an explicit 0/1 vector with exactly one positive entry.
    pub fn from_vector(y: &[f64]) -> Result<Self> {
        if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::Label("label entries must be 0 or 1".into()));
        }
        let ones: Vec<usize> = y.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i).collect();
        match ones.as_slice() {
            [class] => LabelOneHot::new(*class, y.len()),
            _ => Err(Error::Label(format!("expected exactly one positive entry, found {}", ones.len()))),
        }
    }

    pub fn class(&self) -> usize {
        self.class
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn to_vector(&self) -> Vec<f64> {
        (0..self.num_classes).map(|k| if k == self.class { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub positive: f64,
    pub negative: f64,
    pub total: f64,
}

fn check(d: &DirichletParams, y: &LabelOneHot) -> Result<()> {
    check_len(d.num_classes(), y.num_classes)
}

/// Loss terms on raw concentration values. `alpha` must satisfy α_k ≥ 1.
pub(crate) fn reciprocal_terms(alpha: &[f64], class: usize) -> LossBreakdown {
    let alpha0: f64 = alpha.iter().sum();
    let psi0 = digamma_unchecked(alpha0);
    let mut positive = 0.0;
    let mut negative = 0.0;
    for (k, &a) in alpha.iter().enumerate() {
        let gap = psi0 - digamma_unchecked(a);
        if k == class {
            positive += gap;
        } else {
            debug_assert!(gap > 0.0, "digamma gap must be positive, got {gap}");
            negative += 1.0 / gap;
        }
    }
    LossBreakdown { positive, negative, total: positive + negative }
}

/// ∂L/∂α on raw concentration values.
pub(crate) fn reciprocal_grad(alpha: &[f64], class: usize) -> Vec<f64> {
    let alpha0: f64 = alpha.iter().sum();
    let psi0 = digamma_unchecked(alpha0);
    let tri0 = trigamma_unchecked(alpha0);
    // every α_j enters α_0, so each gap ψ(α_0) − ψ(α_k) shifts by ψ′(α_0)
    let mut shared = tri0; // from the positive term
    let mut own = vec![0.0; alpha.len()];
    for (k, &a) in alpha.iter().enumerate() {
        let tri = trigamma_unchecked(a);
        if k == class {
            own[k] = -tri;
        } else {
            let gap = psi0 - digamma_unchecked(a);
            let inv2 = 1.0 / (gap * gap);
            shared -= tri0 * inv2;
            own[k] = tri * inv2;
        }
    }
    own.into_iter().map(|g| g + shared).collect()
}

pub fn reciprocal_loss(d: &DirichletParams, y: &LabelOneHot) -> Result<LossBreakdown> {
    check(d, y)?;
    Ok(reciprocal_terms(d.alpha(), y.class))
}

/// Expected cross-entropy `E_{Dir(α)}[−Σ y_k ln p_k] = Σ y_k [ψ(α_0) − ψ(α_k)]`.
pub fn bayes_risk_ce(d: &DirichletParams, y: &LabelOneHot) -> Result<f64> {
    Ok(reciprocal_loss(d, y)?.positive)
}

pub fn reciprocal_loss_grad(d: &DirichletParams, y: &LabelOneHot) -> Result<Vec<f64>> {
    check(d, y)?;
    Ok(reciprocal_grad(d.alpha(), y.class))
}

/// `L¹ + L² + L_fused` for one sample.
pub fn global_loss(
    d1: &DirichletParams,
    d2: &DirichletParams,
    fused: &DirichletParams,
    y: &LabelOneHot,
) -> Result<f64> {
    check_len(d1.num_classes(), d2.num_classes())?;
    check_len(d1.num_classes(), fused.num_classes())?;
    Ok(reciprocal_loss(d1, y)?.total + reciprocal_loss(d2, y)?.total + reciprocal_loss(fused, y)?.total)
}

/// Mean of per-sample global losses over a batch.
pub fn global_loss_batch(samples: &[(DirichletParams, DirichletParams, DirichletParams, LabelOneHot)]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sum = 0.0;
    for (d1, d2, f, y) in samples {
        sum += global_loss(d1, d2, f, y)?;
    }
    Ok(sum / samples.len() as f64)
}
