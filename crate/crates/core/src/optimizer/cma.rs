//! Evolution-strategy optimizer over the discretized placement space.
//!
//! Each iteration samples candidates from `N(m, sigma^2 C)` snapped to the
//! delta grid, ranks them by the Lagrangian objective, and updates the mean
//! from the weighted top candidates, the covariance through a rank-one
//! evolution-path update, and the step size through path-length control.
//!
//! The covariance update uses the rank-one path term only, and the step-size
//! path accumulates raw (unwhitened) mean shifts; whitening by `C^{-1/2}` is
//! available behind [`CmaParams::whiten_step_path`] for comparison against
//! the textbook strategy.
//!
//! Candidate RNG streams are keyed by `(seed, iteration, candidate index)`,
//! so parallel evaluation cannot change results.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Evaluation, SearchSpace};
use crate::error::{Error, Result};
use crate::rng;

/// Relative eigenvalue floor applied after every covariance update.
const EIGEN_FLOOR_REL: f64 = 1e-12;

/// Strategy parameters; [`CmaParams::standard`] fills the usual defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    /// Candidates sampled per iteration.
    pub population: usize,
    /// Top candidates recombined into the next mean.
    pub parents: usize,
    /// Recombination weights, descending, summing to 1.
    pub weights: Vec<f64>,
    /// Covariance-path learning rate.
    pub c_cov: f64,
    /// Step-size-path learning rate.
    pub c_sigma: f64,
    /// Step-size damping.
    pub d_sigma: f64,
    /// Accumulate `C^{-1/2}`-whitened steps in the step-size path.
    pub whiten_step_path: bool,
}

impl CmaParams {
    /// Standard settings for dimension `n`: population `4 + floor(3 ln n)`,
    /// half-population parents, log-linear weights.
    pub fn standard(n: usize) -> Self {
        let nf = n as f64;
        let population = 4 + (3.0 * nf.ln()).floor().max(0.0) as usize;
        let parents = (population / 2).max(1);
        let raw: Vec<f64> = (1..=parents)
            .map(|i| (parents as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        // Rank-one covariance learning rate. This constant multiplies the
        // path outer product in the covariance update, so it must scale like
        // the canonical rank-one rate; a 1/n-scale value there collapses all
        // off-path eigenvalues within a few dozen iterations.
        let c_cov = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        Self {
            population,
            parents,
            weights,
            c_cov,
            c_sigma,
            d_sigma,
            whiten_step_path: false,
        }
    }

    /// Variance-effective selection mass `1 / sum(w_i^2)`.
    pub fn mu_eff(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.population < 1 || self.parents < 1 || self.parents > self.population {
            return Err(Error::Config("invalid population sizing".into()));
        }
        if self.weights.len() != self.parents {
            return Err(Error::Config("weights must match parent count".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("weights sum to {sum}, expected 1")));
        }
        if self
            .weights
            .windows(2)
            .any(|w| w[0] < w[1])
            || self.weights.iter().any(|&w| w <= 0.0)
        {
            return Err(Error::Config("weights must be positive descending".into()));
        }
        if n == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(())
    }
}

/// Expected norm of an n-dimensional standard normal vector.
pub fn expected_standard_norm(n: usize) -> f64 {
    let nf = n as f64;
    nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf))
}

/// Search-distribution state.
#[derive(Debug, Clone)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub path_cov: DVector<f64>,
    pub path_sigma: DVector<f64>,
    pub iteration: usize,
    params: CmaParams,
    expected_norm: f64,
    sqrt_cov: DMatrix<f64>,
    inv_sqrt_cov: DMatrix<f64>,
}

impl CmaState {
    /// Fresh state centered on the space (or the given mean) with identity
    /// covariance and `sigma = 0.3 x` mean dimension width unless overridden.
    pub fn new(
        space: &SearchSpace,
        init_mean: Option<&[f64]>,
        init_sigma: Option<f64>,
        params: CmaParams,
    ) -> Result<Self> {
        let n = space.n_dims();
        params.validate(n)?;
        let mean = match init_mean {
            Some(m) => {
                if m.len() != n {
                    return Err(Error::Config(format!(
                        "initial mean has {} entries, space has {n}",
                        m.len()
                    )));
                }
                DVector::from_column_slice(m)
            }
            None => DVector::from_vec(space.center()),
        };
        let sigma = init_sigma.unwrap_or(0.3 * space.mean_width());
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Config("initial sigma must be positive".into()));
        }
        Ok(Self {
            mean,
            sigma,
            cov: DMatrix::identity(n, n),
            path_cov: DVector::zeros(n),
            path_sigma: DVector::zeros(n),
            iteration: 0,
            expected_norm: expected_standard_norm(n),
            params,
            sqrt_cov: DMatrix::identity(n, n),
            inv_sqrt_cov: DMatrix::identity(n, n),
        })
    }

    pub fn params(&self) -> &CmaParams {
        &self.params
    }

    pub fn expected_norm(&self) -> f64 {
        self.expected_norm
    }

    /// Raw draw from `N(mean, sigma^2 C)` before grid snapping.
    pub fn sample_raw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.mean.len();
        let z = DVector::from_fn(n, |_, _| -> f64 { rng.sample(StandardNormal) });
        let u = &self.mean + self.sigma * (&self.sqrt_cov * z);
        u.as_slice().to_vec()
    }

    /// Grid-snapped, clamped candidate for `(seed, iteration, index)`.
    pub fn sample_candidate(&self, space: &SearchSpace, seed: u64, index: usize) -> Vec<f64> {
        let mut stream = rng::stream(seed, &[3, self.iteration as u64, index as u64]);
        let mut u = self.sample_raw(&mut stream);
        space.snap_clamp(&mut u);
        u
    }

    /// Applies the mean, path, covariance, and step-size updates from the
    /// ranked candidates (ascending objective; at least `parents` entries,
    /// all finite).
    pub fn update(&mut self, ranked: &[(Vec<f64>, f64)]) -> Result<()> {
        let p = &self.params;
        if ranked.len() < p.parents {
            return Err(Error::OptimizerState(format!(
                "need {} ranked candidates, got {}",
                p.parents,
                ranked.len()
            )));
        }
        let top = &ranked[..p.parents];
        if top
            .iter()
            .any(|(u, g)| !g.is_finite() || u.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::OptimizerState(
                "non-finite candidate in the recombination set".into(),
            ));
        }
        debug_assert!(top.windows(2).all(|w| w[0].1 <= w[1].1), "candidates must be sorted");

        let n = self.mean.len();
        let mut new_mean = DVector::zeros(n);
        for (w, (u, _)) in p.weights.iter().zip(top) {
            new_mean += *w * DVector::from_column_slice(u);
        }

        let step = (&new_mean - &self.mean) / self.sigma;
        let mu_eff = p.mu_eff();

        let decay_c = 1.0 - p.c_cov;
        let norm_c = (1.0 - decay_c * decay_c).sqrt() * mu_eff.sqrt();
        self.path_cov = decay_c * &self.path_cov + norm_c * &step;

        self.cov = decay_c * &self.cov
            + p.c_cov * (&self.path_cov * self.path_cov.transpose());

        let decay_s = 1.0 - p.c_sigma;
        let norm_s = (1.0 - decay_s * decay_s).sqrt() * mu_eff.sqrt();
        let sigma_step = if p.whiten_step_path {
            &self.inv_sqrt_cov * &step
        } else {
            step.clone()
        };
        self.path_sigma = decay_s * &self.path_sigma + norm_s * sigma_step;

        let ratio = self.path_sigma.norm() / self.expected_norm;
        self.sigma *= ((p.c_sigma / p.d_sigma) * (ratio - 1.0)).exp();
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::OptimizerState(format!(
                "step size became {}",
                self.sigma
            )));
        }

        self.iteration += 1;
        self.mean = new_mean;
        self.repair_covariance()
    }

    /// Re-symmetrizes and floors eigenvalues at `1e-12 * trace / n`, then
    /// refreshes the square-root factors used for sampling.
    fn repair_covariance(&mut self) -> Result<()> {
        let n = self.cov.nrows();
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym.clone();
        let eigen = sym.symmetric_eigen();
        let floor = (EIGEN_FLOOR_REL * eigen.eigenvalues.sum() / n as f64).max(f64::MIN_POSITIVE);
        let mut vals = eigen.eigenvalues;
        for v in vals.iter_mut() {
            if !v.is_finite() {
                return Err(Error::OptimizerState("covariance has non-finite eigenvalue".into()));
            }
            if *v < floor {
                *v = floor;
            }
        }
        let vecs = eigen.eigenvectors;
        let sqrt_diag = DMatrix::from_diagonal(&vals.map(f64::sqrt));
        let inv_sqrt_diag = DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()));
        self.cov = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        self.sqrt_cov = &vecs * sqrt_diag * vecs.transpose();
        self.inv_sqrt_cov = &vecs * inv_sqrt_diag * vecs.transpose();
        Ok(())
    }

    /// Largest symmetry defect, for invariant checks.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.cov.nrows() {
            for j in 0..i {
                worst = worst.max((self.cov[(i, j)] - self.cov[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.cov
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Full optimization run configuration.
#[derive(Debug, Clone)]
pub struct OptimizeConfig {
    pub space: SearchSpace,
    /// Iteration budget K.
    pub iterations: usize,
    pub seed: u64,
    pub init_mean: Option<Vec<f64>>,
    pub init_sigma: Option<f64>,
    pub params: Option<CmaParams>,
}

impl OptimizeConfig {
    pub fn new(space: SearchSpace, iterations: usize, seed: u64) -> Self {
        Self {
            space,
            iterations,
            seed,
            init_mean: None,
            init_sigma: None,
            params: None,
        }
    }
}

/// Per-iteration log row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub k: usize,
    /// Running minimum of the objective; never increases.
    pub best_so_far: f64,
    /// Mean objective over the iteration's finite evaluations.
    pub mean_g: f64,
    /// Step size used to sample this iteration.
    pub sigma: f64,
}

/// Outcome of an optimization run.
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best_u: Vec<f64>,
    pub best_g: f64,
    pub best_penalty: f64,
    /// False when no sampled candidate ever satisfied the constraints; the
    /// returned best is then the lowest-objective infeasible candidate.
    pub feasible_found: bool,
    pub history: Vec<IterationStats>,
    /// Every finite evaluation `(u, G(u))`, for certification.
    pub evals: Vec<(Vec<f64>, f64)>,
}

/// Runs `K` iterations of sample, evaluate, rank, update.
///
/// The best-ever feasible candidate (penalty 0) wins; if none was seen, the
/// best by objective is returned with `feasible_found = false`.
pub fn optimize<F>(config: &OptimizeConfig, objective: F) -> Result<OptimizeResult>
where
    F: Fn(&[f64]) -> Evaluation + Sync,
{
    let params = config
        .params
        .clone()
        .unwrap_or_else(|| CmaParams::standard(config.space.n_dims()));
    let mut state = CmaState::new(
        &config.space,
        config.init_mean.as_deref(),
        config.init_sigma,
        params.clone(),
    )?;

    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut best_feasible: Option<(Vec<f64>, f64, f64)> = None;
    let mut history = Vec::with_capacity(config.iterations);
    let mut evals = Vec::new();
    let mut best_so_far = f64::INFINITY;

    for _ in 0..config.iterations {
        let state_ref = &state;
        let mut candidates: Vec<(Vec<f64>, Evaluation)> = (0..params.population)
            .into_par_iter()
            .map(|i| {
                let u = state_ref.sample_candidate(&config.space, config.seed, i);
                let e = objective(&u);
                (u, e)
            })
            .collect();

        let finite: Vec<f64> = candidates
            .iter()
            .filter(|(_, e)| e.g.is_finite())
            .map(|(_, e)| e.g)
            .collect();
        let mean_g = if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };

        for (u, e) in &candidates {
            if e.g.is_finite() {
                evals.push((u.clone(), e.g));
            }
            if best.as_ref().is_none_or(|(_, g, _)| e.g < *g) {
                best = Some((u.clone(), e.g, e.penalty));
            }
            if e.penalty == 0.0 && best_feasible.as_ref().is_none_or(|(_, g, _)| e.g < *g) {
                best_feasible = Some((u.clone(), e.g, e.penalty));
            }
            best_so_far = best_so_far.min(e.g);
        }

        // Stable sort: equal objectives keep sampling order, so runs are
        // reproducible regardless of thread count.
        candidates.sort_by(|a, b| a.1.g.total_cmp(&b.1.g));
        let sigma_used = state.sigma;

        let top_finite = candidates
            .iter()
            .take(params.parents)
            .all(|(_, e)| e.g.is_finite());
        if top_finite {
            let ranked: Vec<(Vec<f64>, f64)> = candidates
                .into_iter()
                .take(params.parents)
                .map(|(u, e)| (u, e.g))
                .collect();
            state.update(&ranked)?;
        } else {
            // Not enough usable candidates this iteration; resample next
            // round from the unchanged distribution.
            state.iteration += 1;
        }

        history.push(IterationStats {
            k: state.iteration - 1,
            best_so_far,
            mean_g,
            sigma: sigma_used,
        });
    }

    let feasible_found = best_feasible.is_some();
    let (best_u, best_g, best_penalty) = best_feasible.or(best).ok_or_else(|| {
        Error::InsufficientData("optimization ran zero iterations".into())
    })?;
    Ok(OptimizeResult {
        best_u,
        best_g,
        best_penalty,
        feasible_found,
        history,
        evals,
    })
}
