//! Placement quality metrics over the probabilistic occupancy field.
//!
//! The primary score is the negative mean voxel entropy over the covered set,
//! normalized by coverage size; 0 is best (every covered voxel deterministic)
//! and `-ln M` is worst. The occupancy-entropy baseline sums binary entropy
//! over covered voxels without normalization. Both use natural log; rankings
//! are invariant to the log base.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{ClassTable, ProbField, VoxelId};
use crate::raycast::CoverageSet;
use crate::util::pairwise_sum;

/// Which field the metric is computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricMode {
    /// All semantic classes enter the per-voxel distributions.
    Segmentation,
    /// The field is collapsed to {target, other material, empty}.
    Detection { target_class: u16 },
    /// Binary occupancy-entropy baseline.
    Smig,
}

impl std::fmt::Display for MetricMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricMode::Segmentation => write!(f, "segmentation"),
            MetricMode::Detection { target_class } => write!(f, "detection:{target_class}"),
            MetricMode::Smig => write!(f, "smig"),
        }
    }
}

impl FromStr for MetricMode {
    type Err = Error;

    /// Accepts `segmentation`, `smig`, or `detection:<class id>`. Class names
    /// are resolved by the caller, which has the class table.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "segmentation" => Ok(MetricMode::Segmentation),
            "smig" => Ok(MetricMode::Smig),
            other => {
                if let Some(target) = other.strip_prefix("detection:") {
                    let target_class: u16 = target.parse().map_err(|_| {
                        Error::Validation(format!("bad detection target `{target}`"))
                    })?;
                    Ok(MetricMode::Detection { target_class })
                } else {
                    Err(Error::Validation(format!(
                        "unknown metric mode `{other}` (expected segmentation, detection:<id>, or smig)"
                    )))
                }
            }
        }
    }
}

/// A computed metric value together with its coverage size and mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub value: f64,
    pub n_covered: usize,
    pub mode: MetricMode,
}

/// Negative mean voxel entropy over the covered set.
///
/// `value = (1/N_j) * sum_{v in cov} sum_c p log p`, which is 0 exactly when
/// every covered voxel is one-hot and bounded below by `-ln M`.
pub fn msog(prob: &ProbField, cov: &CoverageSet) -> Result<MetricScore> {
    if cov.is_empty() {
        return Err(Error::UndefinedMetric(
            "coverage set is empty; mean entropy undefined".into(),
        ));
    }
    let entropies: Vec<f64> = cov.ids().iter().map(|&id| prob.entropy(id)).collect();
    let mean = pairwise_sum(&entropies) / entropies.len() as f64;
    let max_h = prob.classes().max_entropy();
    // Absorb last-ulp rounding so the documented bounds hold exactly.
    let value = (-mean).clamp(-max_h, 0.0);
    Ok(MetricScore {
        value: if value == 0.0 { 0.0 } else { value },
        n_covered: cov.n_covered(),
        mode: MetricMode::Segmentation,
    })
}

/// Binary occupancy-entropy baseline: `-sum_{v in cov} H_b(1 - p(empty))`.
///
/// Deliberately unnormalized; reports may divide by the coverage size for
/// scatter plots.
pub fn smig(prob: &ProbField, cov: &CoverageSet) -> Result<MetricScore> {
    if cov.is_empty() {
        return Err(Error::UndefinedMetric(
            "coverage set is empty; occupancy entropy undefined".into(),
        ));
    }
    let terms: Vec<f64> = cov
        .ids()
        .iter()
        .map(|&id| binary_entropy(prob.p_occupied(id)))
        .collect();
    let value = -pairwise_sum(&terms);
    Ok(MetricScore {
        value: if value == 0.0 { 0.0 } else { value },
        n_covered: cov.n_covered(),
        mode: MetricMode::Smig,
    })
}

/// Binary entropy in nats; 0 at p = 0 or p = 1.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    let q = 1.0 - p;
    if q > 0.0 {
        h -= q * q.ln();
    }
    h.max(0.0).min(std::f64::consts::LN_2)
}

/// Collapses the field to three classes: target, other material, empty.
///
/// `p'(target) = p(target)`, `p'(empty) = p(empty)`, and the remaining mass
/// goes to `other`. The empty-class probability and total mass are preserved
/// exactly.
pub fn detection_relabel(prob: &ProbField, target: u16) -> Result<ProbField> {
    let classes = prob.classes();
    if target as usize >= classes.len() {
        return Err(Error::Validation(format!(
            "target class {} out of range for {} classes",
            target,
            classes.len()
        )));
    }
    if target == classes.empty_class() {
        return Err(Error::Validation(
            "detection target cannot be the empty class".into(),
        ));
    }
    let target_name = classes
        .name_of(target)
        .unwrap_or("target")
        .to_string();
    let new_classes = ClassTable::new(vec![target_name, "other".into(), "empty".into()], 2)?;

    let grid = prob.grid().clone();
    let n = grid.n_voxels();
    let m = classes.len();
    let empty = classes.empty_class() as usize;
    let mut probs = Vec::with_capacity(n * 3);
    for v in 0..n {
        let row = prob.probs(v as VoxelId);
        let p_target = row[target as usize];
        let p_empty = row[empty];
        let p_other: f64 = row
            .iter()
            .enumerate()
            .filter(|(c, _)| *c != target as usize && *c != empty)
            .map(|(_, &p)| p)
            .sum();
        // Renormalize the residual so the three entries sum to 1 exactly
        // within rounding while preserving p(target) and p(empty).
        let _ = m;
        let p_other = p_other.max(0.0).min(1.0 - p_target - p_empty).max(0.0);
        probs.extend_from_slice(&[p_target, p_other, p_empty]);
    }
    ProbField::from_probs(grid, new_classes, probs, prob.observed_flags().to_vec())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Validation(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(
            "pearson needs at least two samples".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::UndefinedMetric(
            "pearson undefined for zero-variance input".into(),
        ));
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}
