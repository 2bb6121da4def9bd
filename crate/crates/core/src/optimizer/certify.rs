//! Optimality certificate for a finished run.
//!
//! For an objective with Lipschitz constant `k_G` sampled over a
//! delta-density subset of the box, the gap between the sampled optimum and
//! the true global optimum is at most `C_M + k_G * delta`, where `C_M` is the
//! observed max-min spread of the objective over the samples. The
//! hyper-rectangle relaxation replaces `C_M` with `k_G * sum(U_i)` over the
//! per-dimension widths, requiring only the Lipschitz constant.
//!
//! The pairwise slope estimate used when no analytic constant is supplied is
//! a lower bound on the true `k_G`, and certificates carry that labeling.

use super::SearchSpace;
use crate::error::{Error, Result};

/// Cap on points entering the exact pairwise slope scan; larger eval sets are
/// strided down deterministically.
const MAX_PAIRWISE_POINTS: usize = 4000;

/// A computed optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Observed max - min of the objective over the sampled subset.
    pub c_m: f64,
    /// Lipschitz constant: analytic if supplied, else the empirical pairwise
    /// lower-bound estimate.
    pub k_g: f64,
    pub k_g_analytic: bool,
    /// Sampling density of the search grid.
    pub delta: f64,
    /// `C_M + k_G * delta`.
    pub bound_thm1: f64,
    /// `k_G * sum(U_i) + k_G * delta`.
    pub bound_cor1: f64,
    /// Evaluations that entered the estimate.
    pub n_samples: usize,
    /// Objective at the sampled optimum the certificate is anchored to.
    pub best_g: f64,
    /// Sum of per-dimension widths of the search box.
    pub sum_widths: f64,
}

impl Certificate {
    /// Structured text block for logs and certificate files.
    pub fn to_text_block(&self) -> String {
        let k_g_kind = if self.k_g_analytic {
            "analytic"
        } else {
            "empirical-lower-bound"
        };
        format!(
            "[certificate]\n\
             c_m = {}\n\
             k_g = {}\n\
             k_g_kind = {}\n\
             delta = {}\n\
             bound_thm1 = {}\n\
             bound_cor1 = {}\n\
             n_samples = {}\n\
             best_g = {}\n\
             sum_widths = {}\n",
            self.c_m,
            self.k_g,
            k_g_kind,
            self.delta,
            self.bound_thm1,
            self.bound_cor1,
            self.n_samples,
            self.best_g,
            self.sum_widths
        )
    }
}

/// Builds the certificate from recorded evaluations.
///
/// `analytic_k_g`, when given, replaces the empirical slope estimate and
/// makes the bounds honest upper bounds rather than best-effort estimates.
pub fn certify(
    evals: &[(Vec<f64>, f64)],
    space: &SearchSpace,
    best_g: f64,
    analytic_k_g: Option<f64>,
) -> Result<Certificate> {
    let finite: Vec<&(Vec<f64>, f64)> = evals.iter().filter(|(_, g)| g.is_finite()).collect();
    if finite.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "certificate needs at least 2 finite evaluations, got {}",
            finite.len()
        )));
    }
    let mut min_g = f64::INFINITY;
    let mut max_g = f64::NEG_INFINITY;
    for (_, g) in &finite {
        min_g = min_g.min(*g);
        max_g = max_g.max(*g);
    }
    let c_m = max_g - min_g;

    let (k_g, k_g_analytic) = match analytic_k_g {
        Some(k) => {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(Error::Validation("analytic k_G must be nonnegative".into()));
            }
            (k, true)
        }
        None => (empirical_slope(&finite), false),
    };

    let delta = space.delta();
    let sum_widths = space.sum_widths();
    Ok(Certificate {
        c_m,
        k_g,
        k_g_analytic,
        delta,
        bound_thm1: c_m + k_g * delta,
        bound_cor1: k_g * sum_widths + k_g * delta,
        n_samples: finite.len(),
        best_g,
        sum_widths,
    })
}

/// Max pairwise |dG| / ||du|| over the (possibly strided) evaluation set.
fn empirical_slope(finite: &[&(Vec<f64>, f64)]) -> f64 {
    let stride = finite.len().div_ceil(MAX_PAIRWISE_POINTS);
    let pts: Vec<&(Vec<f64>, f64)> = finite.iter().step_by(stride).copied().collect();
    let mut k_g = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let (u1, g1) = pts[i];
            let (u2, g2) = pts[j];
            let dist2: f64 = u1
                .iter()
                .zip(u2)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2 > 1e-24 {
                k_g = k_g.max((g1 - g2).abs() / dist2.sqrt());
            }
        }
    }
    k_g
}
