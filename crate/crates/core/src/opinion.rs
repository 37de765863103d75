//! Evidence, opinions and Dirichlet parameters.
//!
//! A K-class evidence vector `e` maps to an opinion with credibility
//! `c_k = e_k / S` and uncertainty `u = K / S`, where `S = Σ (e_k + 1)`, and
//! to a Dirichlet distribution with concentration `α_k = e_k + 1`. The three
//! views are interchangeable; every conversion here is exactly invertible.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::numerics::log_multivariate_beta;

/// Tolerance for simplex membership checks on externally supplied vectors.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_classes(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::Dimension { expected: 2, got: k })
    } else {
        Ok(())
    }
}

/// Non-negative per-class evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EvidenceRepr", into = "EvidenceRepr")]
pub struct Evidence(Vec<f64>);

#[derive(Serialize, Deserialize)]
struct EvidenceRepr {
    evidence: Vec<f64>,
}

impl TryFrom<EvidenceRepr> for Evidence {
    type Error = Error;
    fn try_from(r: EvidenceRepr) -> Result<Self> {
        Evidence::new(r.evidence)
    }
}

impl From<Evidence> for EvidenceRepr {
    fn from(e: Evidence) -> Self {
        EvidenceRepr { evidence: e.0 }
    }
}

impl Evidence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_classes(values.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain(format!("evidence must be finite and non-negative, got {v}")));
        }
        Ok(Evidence(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    /// Σ (e_k + 1), the Dirichlet strength.
    pub fn strength(&self) -> f64 {
        self.0.iter().sum::<f64>() + self.0.len() as f64
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.0)
    }

    pub fn to_opinion(&self) -> Opinion {
        evidence_to_opinion(self)
    }

    pub fn to_dirichlet(&self) -> DirichletParams {
        evidence_to_dirichlet(self)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Credibility masses plus residual uncertainty, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OpinionRepr", into = "OpinionRepr")]
pub struct Opinion {
    credibility: Vec<f64>,
    uncertainty: f64,
}

#[derive(Serialize, Deserialize)]
struct OpinionRepr {
    credibility: Vec<f64>,
    uncertainty: f64,
}

impl TryFrom<OpinionRepr> for Opinion {
    type Error = Error;
    fn try_from(r: OpinionRepr) -> Result<Self> {
        Opinion::new(r.credibility, r.uncertainty)
    }
}

impl From<Opinion> for OpinionRepr {
    fn from(o: Opinion) -> Self {
        OpinionRepr { credibility: o.credibility, uncertainty: o.uncertainty }
    }
}

impl Opinion {
    /// Validates `u + Σ c_k = 1` within [`SIMPLEX_TOL`], `c_k ≥ 0` and `u > 0`.
    pub fn new(credibility: Vec<f64>, uncertainty: f64) -> Result<Self> {
        check_classes(credibility.len())?;
        if !(uncertainty.is_finite() && uncertainty > 0.0 && uncertainty <= 1.0 + SIMPLEX_TOL) {
            return Err(Error::domain(format!("uncertainty must lie in (0, 1], got {uncertainty}")));
        }
        if let Some(c) = credibility.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::domain(format!("credibility must be finite and non-negative, got {c}")));
        }
        let total = uncertainty + credibility.iter().sum::<f64>();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("opinion mass sums to {total}, expected 1")));
        }
        Ok(Opinion { credibility, uncertainty })
    }

    /// Internal constructor for values produced by this crate's own maps.
    pub(crate) fn from_parts(credibility: Vec<f64>, uncertainty: f64) -> Self {
        Opinion { credibility, uncertainty }
    }

    /// Total ignorance: zero credibility, u = 1.
    pub fn vacuous(k: usize) -> Result<Self> {
        check_classes(k)?;
        Ok(Opinion { credibility: vec![0.0; k], uncertainty: 1.0 })
    }

    pub fn credibility(&self) -> &[f64] {
        &self.credibility
    }

    pub fn uncertainty(&self) -> f64 {
        self.uncertainty
    }

    pub fn num_classes(&self) -> usize {
        self.credibility.len()
    }

    pub fn predicted_class(&self) -> usize {
        argmax(&self.credibility)
    }

    pub fn to_evidence(&self) -> Result<Evidence> {
        opinion_to_evidence(self, self.num_classes())
    }
}

/// Dirichlet concentration with every `α_k ≥ 1` and the cached sum `α_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletParams {
    alpha: Vec<f64>,
    alpha0: f64,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        check_classes(alpha.len())?;
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a < 1.0) {
            return Err(Error::domain(format!("concentration must be finite and >= 1, got {a}")));
        }
        let alpha0 = alpha.iter().sum();
        Ok(DirichletParams { alpha, alpha0 })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// Expected class probabilities α_k / α_0.
    pub fn mean(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a / self.alpha0).collect()
    }
}

/// A probability vector on the unit simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_classes(probs.len())?;
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0) {
            return Err(Error::domain(format!("probability out of [0, 1]: {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::domain(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(SimplexPoint(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

pub fn evidence_to_opinion(e: &Evidence) -> Opinion {
    let s = e.strength();
    let credibility = e.0.iter().map(|v| v / s).collect();
    Opinion::from_parts(credibility, e.num_classes() as f64 / s)
}

pub fn evidence_to_dirichlet(e: &Evidence) -> DirichletParams {
    let alpha: Vec<f64> = e.0.iter().map(|v| v + 1.0).collect();
    let alpha0 = alpha.iter().sum();
    DirichletParams { alpha, alpha0 }
}

pub fn dirichlet_to_opinion(d: &DirichletParams) -> Opinion {
    let credibility = d.alpha.iter().map(|a| (a - 1.0) / d.alpha0).collect();
    Opinion::from_parts(credibility, d.num_classes() as f64 / d.alpha0)
}

pub fn dirichlet_to_evidence(d: &DirichletParams) -> Evidence {
    Evidence(d.alpha.iter().map(|a| a - 1.0).collect())
}

/// Recovers evidence `e_k = K c_k / u`.
pub fn opinion_to_evidence(o: &Opinion, k: usize) -> Result<Evidence> {
    check_len(k, o.num_classes())?;
    if o.uncertainty.is_nan() || o.uncertainty <= 0.0 {
        return Err(Error::domain("cannot recover evidence from an opinion with zero uncertainty"));
    }
    let scale = k as f64 / o.uncertainty;
    Evidence::new(o.credibility.iter().map(|c| c * scale).collect())
}

/// ln D(p | α) = −ln B(α) + Σ (α_k − 1) ln p_k.
///
/// Returns negative infinity when some `p_k = 0` carries `α_k > 1`.
pub fn dirichlet_log_density(d: &DirichletParams, p: &SimplexPoint) -> Result<f64> {
    check_len(d.num_classes(), p.0.len())?;
    let mut acc = -log_multivariate_beta(&d.alpha)?;
    for (&a, &pk) in d.alpha.iter().zip(&p.0) {
        if a == 1.0 {
            continue;
        }
        if pk == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += (a - 1.0) * pk.ln();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close_all(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn evidence_to_opinion_examples() {
        let o = Evidence::new(vec![0.0; 3]).unwrap().to_opinion();
        close_all(o.credibility(), &[0.0; 3], 0.0);
        assert_eq!(o.uncertainty(), 1.0);

        let o = Evidence::new(vec![4.0, 1.0, 0.0]).unwrap().to_opinion();
        close_all(o.credibility(), &[0.5, 0.125, 0.0], 1e-15);
        assert!((o.uncertainty() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_examples() {
        let d = Evidence::new(vec![0.0, 0.0]).unwrap().to_dirichlet();
        assert_eq!(d.alpha(), &[1.0, 1.0]);
        assert_eq!(d.alpha0(), 2.0);
        let d = Evidence::new(vec![4.0, 1.0, 0.0]).unwrap().to_dirichlet();
        assert_eq!(d.alpha(), &[5.0, 2.0, 1.0]);
        assert_eq!(d.alpha0(), 8.0);

        let o = dirichlet_to_opinion(&DirichletParams::new(vec![1.0; 3]).unwrap());
        assert_eq!(o.uncertainty(), 1.0);
        let o = dirichlet_to_opinion(&DirichletParams::new(vec![5.0, 2.0, 1.0]).unwrap());
        close_all(o.credibility(), &[0.5, 0.125, 0.0], 1e-15);
        let o = dirichlet_to_opinion(&DirichletParams::new(vec![2.0, 2.0]).unwrap());
        close_all(o.credibility(), &[0.25, 0.25], 1e-15);
        assert_eq!(o.uncertainty(), 0.5);
    }

    #[test]
    fn opinion_to_evidence_examples() {
        let e = Opinion::vacuous(3).unwrap().to_evidence().unwrap();
        close_all(e.values(), &[0.0; 3], 0.0);
        let o = Opinion::new(vec![0.5, 0.125, 0.0], 0.375).unwrap();
        close_all(o.to_evidence().unwrap().values(), &[4.0, 1.0, 0.0], 1e-12);
        // fused opinion of the two-view worked example, printed to six places
        let o = Opinion::new(vec![0.363636, 0.272727, 0.145455], 0.218182).unwrap();
        close_all(o.to_evidence().unwrap().values(), &[5.0, 3.75, 2.0], 1e-4);
    }

    #[test]
    fn validation() {
        assert!(Evidence::new(vec![1.0]).is_err());
        assert!(Evidence::new(vec![1.0, -0.1]).is_err());
        assert!(Evidence::new(vec![1.0, f64::NAN]).is_err());
        assert!(Opinion::new(vec![0.5, 0.5], 0.1).is_err());
        assert!(Opinion::new(vec![0.6, 0.4], 0.0).is_err());
        assert!(Opinion::new(vec![0.5, -0.1], 0.6).is_err());
        assert!(Opinion::new(vec![0.25, 0.25], 0.5 + 5e-10).is_ok());
        assert!(DirichletParams::new(vec![0.5, 2.0]).is_err());
        assert!(opinion_to_evidence(&Opinion::vacuous(3).unwrap(), 4).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn argmax_ties_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn log_density_examples() {
        let p = SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap();
        let d = DirichletParams::new(vec![1.0; 3]).unwrap();
        assert!((dirichlet_log_density(&d, &p).unwrap() - 2f64.ln()).abs() < 1e-14);
        let d = DirichletParams::new(vec![2.0, 1.0]).unwrap();
        let p = SimplexPoint::new(vec![0.75, 0.25]).unwrap();
        assert!((dirichlet_log_density(&d, &p).unwrap() - 1.5f64.ln()).abs() < 1e-10);
        let d = DirichletParams::new(vec![1.0, 1.0]).unwrap();
        let p = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        assert!(dirichlet_log_density(&d, &p).unwrap().abs() < 1e-14);
        let d = DirichletParams::new(vec![3.0, 1.0]).unwrap();
        let p = SimplexPoint::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(dirichlet_log_density(&d, &p).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn json_shapes() {
        let o = Opinion::new(vec![0.5, 0.125, 0.0], 0.375).unwrap();
        let s = serde_json::to_string(&o).unwrap();
        assert_eq!(s, r#"{"credibility":[0.5,0.125,0.0],"uncertainty":0.375}"#);
        let back: Opinion = serde_json::from_str(&s).unwrap();
        assert_eq!(back, o);
        let e: Evidence = serde_json::from_str(r#"{"evidence":[4,1,0]}"#).unwrap();
        assert_eq!(e.values(), &[4.0, 1.0, 0.0]);
        assert!(serde_json::from_str::<Opinion>(r#"{"credibility":[0.5,0.5],"uncertainty":0.5}"#).is_err());
    }
}
