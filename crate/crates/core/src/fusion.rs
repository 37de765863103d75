//! Uncertainty-weighted fusion of two opinions and fixed decision-level
//! baseline rules.
//!
//! For opinions `(c¹, u¹)` and `(c², u²)` over the same K classes:
//!
//! ```text
//! c_k = [c¹_k c²_k + (1 − u¹) c¹_k + (1 − u²) c²_k] / λ
//! u   = u¹ u² / λ
//! λ   = u¹ u² + (1 − u¹)² + (1 − u²)² + Σ_k c¹_k c²_k
//! ```
//!
//! Each view's credibility is weighted by the certainty of its partner, so a
//! view with high uncertainty contributes little. The fused evidence is
//! `e_k = K c_k / u`, which simplifies to `K N_k / (u¹ u²)` with `N_k` the
//! credibility numerator above.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::opinion::{argmax, Evidence, Opinion, SIMPLEX_TOL};

/// Result of fusing two opinions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusedDecision {
    pub opinion: Opinion,
    pub evidence: Evidence,
    pub predicted_class: usize,
}

/// Unnormalized fused masses and the normalizer λ.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionTerms {
    pub credibility_numerators: Vec<f64>,
    pub uncertainty_numerator: f64,
    /// λ evaluated in its closed form.
    pub lambda: f64,
}

pub fn fusion_terms(o1: &Opinion, o2: &Opinion) -> Result<FusionTerms> {
    check_len(o1.num_classes(), o2.num_classes())?;
    let (c1, c2) = (o1.credibility(), o2.credibility());
    let (u1, u2) = (o1.uncertainty(), o2.uncertainty());
    let credibility_numerators = c1
        .iter()
        .zip(c2)
        .map(|(a, b)| a * b + ((1.0 - u1) * a + (1.0 - u2) * b))
        .collect();
    let overlap: f64 = c1.iter().zip(c2).map(|(a, b)| a * b).sum();
    let lambda = u1 * u2 + ((1.0 - u1).powi(2) + (1.0 - u2).powi(2)) + overlap;
    Ok(FusionTerms { credibility_numerators, uncertainty_numerator: u1 * u2, lambda })
}

/// Fuses two views' opinions into a single decision.
pub fn fuse_opinions(o1: &Opinion, o2: &Opinion) -> Result<FusedDecision> {
    let terms = fusion_terms(o1, o2)?;
    let lambda = terms.lambda;
    debug_assert!(lambda >= terms.uncertainty_numerator);
    let credibility: Vec<f64> = terms.credibility_numerators.iter().map(|n| n / lambda).collect();
    let uncertainty = terms.uncertainty_numerator / lambda;
    let opinion = Opinion::from_parts(credibility, uncertainty);
    let evidence = opinion.to_evidence()?;
    let predicted_class = evidence.predicted_class();
    Ok(FusedDecision { opinion, evidence, predicted_class })
}

/// Left fold of [`fuse_opinions`] over more than two views.
///
/// The two-view rule is not associative, so the result depends on the order
/// of `opinions`.
pub fn fuse_sequential(opinions: &[Opinion]) -> Result<Opinion> {
    let (first, rest) = opinions
        .split_first()
        .ok_or_else(|| Error::domain("need at least one opinion to fuse"))?;
    rest.iter().try_fold(first.clone(), |acc, o| Ok(fuse_opinions(&acc, o)?.opinion))
}

/// Fused evidence computed directly from two evidence vectors.
pub fn fuse_evidence(e1: &[f64], e2: &[f64]) -> Vec<f64> {
    let k = e1.len() as f64;
    let (s1, s2) = (e1.iter().sum::<f64>() + k, e2.iter().sum::<f64>() + k);
    let (u1, u2) = (k / s1, k / s2);
    let scale = k / (u1 * u2);
    e1.iter()
        .zip(e2)
        .map(|(a, b)| {
            let (c1, c2) = (a / s1, b / s2);
            scale * (c1 * c2 + ((1.0 - u1) * c1 + (1.0 - u2) * c2))
        })
        .collect()
}

/// Vector-Jacobian product of [`fuse_evidence`]: maps ∂L/∂e_fused to
/// (∂L/∂e¹, ∂L/∂e²).
pub fn fuse_evidence_backward(e1: &[f64], e2: &[f64], grad: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let kk = e1.len();
    let k = kk as f64;
    let (s1, s2) = (e1.iter().sum::<f64>() + k, e2.iter().sum::<f64>() + k);
    let (u1, u2) = (k / s1, k / s2);
    let c1: Vec<f64> = e1.iter().map(|v| v / s1).collect();
    let c2: Vec<f64> = e2.iter().map(|v| v / s2).collect();
    let scale = k / (u1 * u2);

    // gradients w.r.t. the opinions
    let mut gc1 = vec![0.0; kk];
    let mut gc2 = vec![0.0; kk];
    let mut gu1 = 0.0;
    let mut gu2 = 0.0;
    for j in 0..kk {
        let n = c1[j] * c2[j] + (1.0 - u1) * c1[j] + (1.0 - u2) * c2[j];
        gc1[j] = grad[j] * scale * (c2[j] + 1.0 - u1);
        gc2[j] = grad[j] * scale * (c1[j] + 1.0 - u2);
        gu1 += grad[j] * scale * (-c1[j] - n / u1);
        gu2 += grad[j] * scale * (-c2[j] - n / u2);
    }
    (
        opinion_backward(e1, s1, &gc1, gu1),
        opinion_backward(e2, s2, &gc2, gu2),
    )
}

/// Pulls gradients on `(c, u)` back to evidence through `c = e / S`, `u = K / S`.
pub(crate) fn opinion_backward(e: &[f64], s: f64, gc: &[f64], gu: f64) -> Vec<f64> {
    let k = e.len() as f64;
    let dot: f64 = gc.iter().zip(e).map(|(g, v)| g * v).sum();
    let shared = (dot + gu * k) / (s * s);
    gc.iter().map(|g| g / s - shared).collect()
}

/// A probability vector, typically a softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::domain(format!("probability out of [0, 1]: {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(ProbVector(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// Fixed decision-level combination rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineRule {
    Sum,
    Product,
    Max,
    Min,
}

/// How `Max`/`Min` combine two views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumMode {
    /// Elementwise max/min of the two vectors, then argmax.
    #[default]
    Elementwise,
    /// Take the label of whichever view's top probability is larger (max)
    /// or smaller (min).
    ViewSelect,
}

pub fn fuse_baseline(p1: &ProbVector, p2: &ProbVector, rule: BaselineRule) -> Result<usize> {
    fuse_baseline_with(p1, p2, rule, ExtremumMode::Elementwise)
}

pub fn fuse_baseline_with(
    p1: &ProbVector,
    p2: &ProbVector,
    rule: BaselineRule,
    mode: ExtremumMode,
) -> Result<usize> {
    check_len(p1.0.len(), p2.0.len())?;
    let combine = |f: fn(f64, f64) -> f64| -> Vec<f64> { p1.0.iter().zip(&p2.0).map(|(a, b)| f(*a, *b)).collect() };
    let label = match (rule, mode) {
        (BaselineRule::Sum, _) => argmax(&combine(|a, b| a + b)),
        (BaselineRule::Product, _) => argmax(&combine(|a, b| a * b)),
        (BaselineRule::Max, ExtremumMode::Elementwise) => argmax(&combine(f64::max)),
        (BaselineRule::Min, ExtremumMode::Elementwise) => argmax(&combine(f64::min)),
        (BaselineRule::Max | BaselineRule::Min, ExtremumMode::ViewSelect) => {
            let (i1, i2) = (argmax(&p1.0), argmax(&p2.0));
            let (top1, top2) = (p1.0[i1], p2.0[i2]);
            let pick_first = match rule {
                BaselineRule::Max => top1 >= top2,
                _ => top1 <= top2,
            };
            if pick_first {
                i1
            } else {
                i2
            }
        }
    };
    Ok(label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(c: &[f64], u: f64) -> Opinion {
        Opinion::new(c.to_vec(), u).unwrap()
    }

    #[test]
    fn worked_example() {
        let o1 = op(&[0.5, 0.125, 0.0], 0.375);
        let o2 = op(&[0.0, 0.25, 0.25], 0.5);
        let t = fusion_terms(&o1, &o2).unwrap();
        assert_eq!(t.credibility_numerators, vec![0.3125, 0.234375, 0.125]);
        assert_eq!(t.uncertainty_numerator, 0.1875);
        assert!((t.lambda - 0.859375).abs() < 1e-15);

        let f = fuse_opinions(&o1, &o2).unwrap();
        let expect = [0.3125 / 0.859375, 0.234375 / 0.859375, 0.125 / 0.859375];
        for (a, b) in f.opinion.credibility().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.opinion.credibility()[0] - 0.363636).abs() < 1e-6);
        assert!((f.opinion.uncertainty() - 0.218182).abs() < 1e-6);
        assert_eq!(f.predicted_class, 0);
        // K c / u = 3 N / 0.1875
        let e = f.evidence.values();
        assert!((e[0] - 5.0).abs() < 1e-12 && (e[1] - 3.75).abs() < 1e-12 && (e[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vacuous_partner() {
        let f = fuse_opinions(&Opinion::vacuous(3).unwrap(), &op(&[0.25, 0.25, 0.0], 0.5)).unwrap();
        let c = f.opinion.credibility();
        assert!((c[0] - 1.0 / 6.0).abs() < 1e-15 && (c[1] - 1.0 / 6.0).abs() < 1e-15 && c[2] == 0.0);
        assert!((f.opinion.uncertainty() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_under_view_exchange() {
        let o1 = op(&[0.1, 0.6, 0.05], 0.25);
        let o2 = op(&[0.3, 0.1, 0.2], 0.4);
        let a = fuse_opinions(&o1, &o2).unwrap();
        let b = fuse_opinions(&o2, &o1).unwrap();
        assert_eq!(a.opinion, b.opinion);
        assert_eq!(a.predicted_class, b.predicted_class);
    }

    #[test]
    fn mismatched_classes_rejected() {
        assert!(fuse_opinions(&Opinion::vacuous(3).unwrap(), &Opinion::vacuous(4).unwrap()).is_err());
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let q = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!(fuse_baseline(&p, &q, BaselineRule::Sum).is_err());
    }

    #[test]
    fn direct_evidence_route_matches_opinion_route() {
        let e1 = [3.0, 0.5, 0.0, 1.25];
        let e2 = [0.0, 7.0, 2.0, 0.1];
        let f = fuse_opinions(
            &Evidence::new(e1.to_vec()).unwrap().to_opinion(),
            &Evidence::new(e2.to_vec()).unwrap().to_opinion(),
        )
        .unwrap();
        for (a, b) in fuse_evidence(&e1, &e2).iter().zip(f.evidence.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn fuse_evidence_backward_matches_finite_differences() {
        let e1 = vec![3.0, 0.5, 0.0, 1.25];
        let e2 = vec![0.2, 7.0, 2.0, 0.1];
        let w = [0.3, -1.2, 0.7, 2.0];
        let objective = |a: &[f64], b: &[f64]| -> f64 { fuse_evidence(a, b).iter().zip(&w).map(|(x, y)| x * y).sum() };
        let (g1, g2) = fuse_evidence_backward(&e1, &e2, &w);
        for (view, g) in [(0, g1), (1, g2)] {
            for i in 0..4 {
                let h = 1e-6;
                let (mut p, mut m) = ((e1.clone(), e2.clone()), (e1.clone(), e2.clone()));
                if view == 0 {
                    p.0[i] += h;
                    m.0[i] -= h;
                } else {
                    p.1[i] += h;
                    m.1[i] -= h;
                }
                let fd = (objective(&p.0, &p.1) - objective(&m.0, &m.1)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * fd.abs().max(1.0), "view {view} idx {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn sequential_two_views_equals_pairwise() {
        let o1 = op(&[0.1, 0.6], 0.3);
        let o2 = op(&[0.5, 0.1], 0.4);
        assert_eq!(fuse_sequential(&[o1.clone(), o2.clone()]).unwrap(), fuse_opinions(&o1, &o2).unwrap().opinion);
        assert!(fuse_sequential(&[]).is_err());
    }

    #[test]
    fn baseline_rules() {
        let pv = |v: &[f64]| ProbVector::new(v.to_vec()).unwrap();
        assert_eq!(fuse_baseline(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), BaselineRule::Sum).unwrap(), 1);
        assert_eq!(fuse_baseline(&pv(&[0.6, 0.4]), &pv(&[0.5, 0.5]), BaselineRule::Product).unwrap(), 0);
        assert_eq!(fuse_baseline(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), BaselineRule::Max).unwrap(), 1);
        // elementwise min [0.2, 0.4] -> 1; view-select min picks view 1's label 0
        assert_eq!(fuse_baseline(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), BaselineRule::Min).unwrap(), 1);
        assert_eq!(
            fuse_baseline_with(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), BaselineRule::Min, ExtremumMode::ViewSelect).unwrap(),
            0
        );
        assert_eq!(
            fuse_baseline_with(&pv(&[0.6, 0.4]), &pv(&[0.2, 0.8]), BaselineRule::Max, ExtremumMode::ViewSelect).unwrap(),
            1
        );
        // ties resolve to the lowest index
        assert_eq!(fuse_baseline(&pv(&[0.5, 0.5]), &pv(&[0.5, 0.5]), BaselineRule::Product).unwrap(), 0);
    }
}
