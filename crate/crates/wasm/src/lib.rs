//! Browser bindings for the evidential fusion demo.
//!
//! Each exported function has a plain Rust twin (suffix `_impl`) so the logic
//! is testable without a JavaScript host.

use evifuse_core::opinion::{dirichlet_log_density, evidence_to_opinion};
use evifuse_core::{fuse_opinions, reciprocal_loss, DirichletParams, Evidence, LabelOneHot, SimplexPoint};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn describe(e: &Evidence) -> serde_json::Value {
    let o = evidence_to_opinion(e);
    json!({
        "evidence": e.values(),
        "credibility": o.credibility(),
        "uncertainty": o.uncertainty(),
        "predicted_class": o.predicted_class(),
    })
}

/// Opinions for two evidence vectors and their fusion, as a JSON string.
pub fn fuse_impl(evidence_a: &[f64], evidence_b: &[f64]) -> Result<String, String> {
    let ea = Evidence::new(evidence_a.to_vec()).map_err(|e| e.to_string())?;
    let eb = Evidence::new(evidence_b.to_vec()).map_err(|e| e.to_string())?;
    if ea.num_classes() != eb.num_classes() {
        return Err(format!("views disagree on class count: {} vs {}", ea.num_classes(), eb.num_classes()));
    }
    let fused = fuse_opinions(&evidence_to_opinion(&ea), &evidence_to_opinion(&eb)).map_err(|e| e.to_string())?;
    let out = json!({
        "a": describe(&ea),
        "b": describe(&eb),
        "fused": {
            "evidence": fused.evidence.values(),
            "credibility": fused.opinion.credibility(),
            "uncertainty": fused.opinion.uncertainty(),
            "predicted_class": fused.predicted_class,
        },
    });
    Ok(out.to_string())
}

/// Dirichlet density over the 3-class simplex sampled on a triangular grid.
///
/// Returns `(resolution + 1) * (resolution + 2) / 2` values in row order
/// `i = 0..=resolution`, `j = 0..=resolution - i`, for the point
/// `(i, j, resolution - i - j) / resolution`. Vertices and edges with zero
/// density come back as 0.
pub fn density_grid_impl(alpha: &[f64], resolution: usize) -> Result<Vec<f64>, String> {
    if alpha.len() != 3 {
        return Err(format!("density grid needs 3 concentrations, got {}", alpha.len()));
    }
    if !(1..=400).contains(&resolution) {
        return Err(format!("resolution must be in 1..=400, got {resolution}"));
    }
    let d = DirichletParams::new(alpha.to_vec()).map_err(|e| e.to_string())?;
    let r = resolution as f64;
    let mut out = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            let p = [i as f64 / r, j as f64 / r, k as f64 / r];
            let point = SimplexPoint::new(p.to_vec()).map_err(|e| e.to_string())?;
            let ld = dirichlet_log_density(&d, &point).map_err(|e| e.to_string())?;
            out.push(if ld.is_finite() { ld.exp() } else { 0.0 });
        }
    }
    Ok(out)
}

/// Loss as the evidence for one class sweeps `0..=max_evidence`.
///
/// The other classes keep the evidence in `base`. Returns a JSON object with
/// arrays `x`, `positive`, `negative`, `total` and `uncertainty`.
pub fn loss_curve_impl(base: &[f64], label: usize, sweep_class: usize, max_evidence: f64, points: usize) -> Result<String, String> {
    let k = base.len();
    if sweep_class >= k {
        return Err(format!("sweep class {sweep_class} out of range for {k} classes"));
    }
    if !(max_evidence.is_finite() && max_evidence > 0.0) {
        return Err(format!("max evidence must be positive, got {max_evidence}"));
    }
    if !(2..=2000).contains(&points) {
        return Err(format!("points must be in 2..=2000, got {points}"));
    }
    let y = LabelOneHot::new(label, k).map_err(|e| e.to_string())?;
    let (mut xs, mut pos, mut neg, mut tot, mut us) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..points {
        let x = max_evidence * i as f64 / (points - 1) as f64;
        let mut e = base.to_vec();
        e[sweep_class] = x;
        let ev = Evidence::new(e).map_err(|e| e.to_string())?;
        let l = reciprocal_loss(&ev.to_dirichlet(), &y).map_err(|e| e.to_string())?;
        xs.push(x);
        pos.push(l.positive);
        neg.push(l.negative);
        tot.push(l.total);
        us.push(evidence_to_opinion(&ev).uncertainty());
    }
    Ok(json!({ "x": xs, "positive": pos, "negative": neg, "total": tot, "uncertainty": us }).to_string())
}

#[wasm_bindgen]
pub fn fuse(evidence_a: &[f64], evidence_b: &[f64]) -> Result<String, JsError> {
    fuse_impl(evidence_a, evidence_b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = densityGrid)]
pub fn density_grid(alpha: &[f64], resolution: usize) -> Result<Vec<f64>, JsError> {
    density_grid_impl(alpha, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lossCurve)]
pub fn loss_curve(base: &[f64], label: usize, sweep_class: usize, max_evidence: f64, points: usize) -> Result<String, JsError> {
    loss_curve_impl(base, label, sweep_class, max_evidence, points).map_err(|e| JsError::new(&e))
}
