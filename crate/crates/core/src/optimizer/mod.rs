//! Placement optimization: evolution-strategy search over a discretized
//! placement space with Lagrangian constraint handling, plus an optimality
//! certificate for the found optimum.

pub mod certify;
pub mod cma;

pub use certify::{certify, Certificate};
pub use cma::{optimize, CmaParams, CmaState, IterationStats, OptimizeConfig, OptimizeResult};

use crate::error::{Error, Result};
use crate::grid::ProbField;
use crate::metric::{detection_relabel, msog, smig, MetricMode, MetricScore};
use crate::raycast::{coverage, LidarSpec, OcclusionMode, Placement};
use crate::rng;

/// Box-bounded search space discretized with step `delta`.
///
/// Placement vectors are laid out `[x, y, z, roll]` per LiDAR. Dimensions may
/// be pinned to a constant (the planar-mounting mode fixes every z).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    bounds: Vec<(f64, f64)>,
    delta: f64,
    fixed_dims: Vec<(usize, f64)>,
}

impl SearchSpace {
    pub fn new(bounds: Vec<(f64, f64)>, delta: f64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("search space needs at least one dimension".into()));
        }
        for (lo, hi) in &bounds {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!(
                    "invalid bounds [{lo}, {hi}]: lower must be below upper"
                )));
            }
        }
        if !(delta > 0.0) {
            return Err(Error::Config("grid density delta must be positive".into()));
        }
        let min_width = bounds
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        if delta >= min_width {
            return Err(Error::Config(format!(
                "delta {delta} must be smaller than the narrowest dimension width {min_width}"
            )));
        }
        Ok(Self {
            bounds,
            delta,
            fixed_dims: Vec::new(),
        })
    }

    /// Four variables per LiDAR with shared per-kind bounds.
    pub fn for_lidars(
        n_lidars: usize,
        x: (f64, f64),
        y: (f64, f64),
        z: (f64, f64),
        roll: (f64, f64),
        delta: f64,
    ) -> Result<Self> {
        if n_lidars == 0 {
            return Err(Error::Config("need at least one lidar".into()));
        }
        let mut bounds = Vec::with_capacity(4 * n_lidars);
        for _ in 0..n_lidars {
            bounds.extend_from_slice(&[x, y, z, roll]);
        }
        Self::new(bounds, delta)
    }

    /// Pins every z dimension (index 4j+2) to `z0`.
    pub fn with_planar_z(mut self, z0: f64) -> Result<Self> {
        if self.bounds.len() % 4 != 0 {
            return Err(Error::Config(
                "planar mode applies to 4-per-lidar spaces".into(),
            ));
        }
        self.fixed_dims = (0..self.bounds.len() / 4).map(|j| (4 * j + 2, z0)).collect();
        Ok(self)
    }

    pub fn n_dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn fixed_dims(&self) -> &[(usize, f64)] {
        &self.fixed_dims
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| hi - lo).collect()
    }

    pub fn sum_widths(&self) -> f64 {
        self.widths().iter().sum()
    }

    pub fn mean_width(&self) -> f64 {
        self.sum_widths() / self.n_dims() as f64
    }

    /// Snaps to the delta grid anchored at each lower bound, clamps into the
    /// bounds, then applies pinned dimensions.
    pub fn snap_clamp(&self, u: &mut [f64]) {
        debug_assert_eq!(u.len(), self.n_dims());
        for (x, (lo, hi)) in u.iter_mut().zip(&self.bounds) {
            let steps = ((*x - lo) / self.delta).round();
            let max_step = ((hi - lo) / self.delta + 1e-9).floor();
            let snapped = lo + steps.clamp(0.0, max_step) * self.delta;
            *x = snapped.min(*hi).max(*lo);
        }
        for &(dim, value) in &self.fixed_dims {
            u[dim] = value;
        }
    }

    /// Per-dimension distance outside the box, ignoring pinned dimensions.
    pub fn box_violation(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for (i, (x, (lo, hi))) in u.iter().zip(&self.bounds).enumerate() {
            if self.fixed_dims.iter().any(|(d, _)| *d == i) {
                continue;
            }
            if x < lo {
                total += lo - x;
            } else if x > hi {
                total += x - hi;
            }
        }
        total
    }
}

/// Physical constraints with their Lagrange multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    /// Minimum pairwise LiDAR separation in meters.
    pub min_mutual_distance: f64,
    /// Penalty weight in the Lagrangian objective.
    pub lambda: f64,
}

impl Default for ConstraintSpec {
    fn default() -> Self {
        Self {
            min_mutual_distance: 0.2,
            lambda: 1.0,
        }
    }
}

/// Constraint violation magnitude; zero iff the placement is feasible.
///
/// Sums pairwise separation shortfalls over LiDAR positions and per-dimension
/// box violations. Assumes the 4-per-LiDAR vector layout.
pub fn placement_penalty(u: &[f64], cs: &ConstraintSpec, space: &SearchSpace) -> f64 {
    let mut total = space.box_violation(u);
    let positions: Vec<[f64; 3]> = u.chunks_exact(4).map(|c| [c[0], c[1], c[2]]).collect();
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = ((positions[i][0] - positions[j][0]).powi(2)
                + (positions[i][1] - positions[j][1]).powi(2)
                + (positions[i][2] - positions[j][2]).powi(2))
            .sqrt();
            if d < cs.min_mutual_distance {
                total += cs.min_mutual_distance - d;
            }
        }
    }
    total
}

/// One objective evaluation: Lagrangian value plus the raw penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// `G(u) = -F(u) + lambda * P(u)`; lower is better.
    pub g: f64,
    pub penalty: f64,
}

/// The placement objective `G(u) = -score(u) + lambda * penalty(u)`.
///
/// Detection mode relabels the field once at construction; evaluation is then
/// pure and thread-safe.
pub struct PlacementObjective {
    field: ProbField,
    spec: LidarSpec,
    occlusion: OcclusionMode,
    use_smig: bool,
    pub constraints: ConstraintSpec,
    space: SearchSpace,
}

impl PlacementObjective {
    pub fn new(
        prob: &ProbField,
        mode: MetricMode,
        spec: LidarSpec,
        occlusion: OcclusionMode,
        constraints: ConstraintSpec,
        space: SearchSpace,
    ) -> Result<Self> {
        if space.n_dims() % 4 != 0 {
            return Err(Error::Config(
                "placement objective needs a 4-per-lidar search space".into(),
            ));
        }
        let (field, use_smig) = match mode {
            MetricMode::Segmentation => (prob.clone(), false),
            MetricMode::Detection { target_class } => {
                (detection_relabel(prob, target_class)?, false)
            }
            MetricMode::Smig => (prob.clone(), true),
        };
        spec.validate()?;
        Ok(Self {
            field,
            spec,
            occlusion,
            use_smig,
            constraints,
            space,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Metric score of a placement on the objective's (possibly relabeled) field.
    pub fn score(&self, placement: &Placement) -> Result<MetricScore> {
        let cov = coverage(placement, self.field.grid(), &self.field, self.occlusion)?;
        if self.use_smig {
            smig(&self.field, &cov)
        } else {
            msog(&self.field, &cov)
        }
    }

    /// Full Lagrangian evaluation; an empty-coverage placement scores +inf.
    pub fn evaluate(&self, u: &[f64]) -> Evaluation {
        let penalty = placement_penalty(u, &self.constraints, &self.space);
        let placement = match Placement::from_vector(u, self.spec) {
            Ok(p) => p,
            Err(_) => {
                return Evaluation {
                    g: f64::INFINITY,
                    penalty,
                }
            }
        };
        match self.score(&placement) {
            Ok(score) => Evaluation {
                g: -score.value + self.constraints.lambda * penalty,
                penalty,
            },
            Err(_) => Evaluation {
                g: f64::INFINITY,
                penalty,
            },
        }
    }

    /// Sets lambda to `10 x` the mean |score| over 16 seeded probe points, so
    /// the penalty dominates the metric's small magnitudes. Falls back to 1.0
    /// when no probe produces a defined score.
    pub fn calibrate_lambda(&mut self, seed: u64) -> f64 {
        use rand::Rng;
        let mut rng = rng::stream(seed, &[2]);
        let mut magnitudes = Vec::new();
        for _ in 0..16 {
            let mut u: Vec<f64> = self
                .space
                .bounds()
                .iter()
                .map(|(lo, hi)| rng.random_range(*lo..*hi))
                .collect();
            self.space.snap_clamp(&mut u);
            if let Ok(placement) = Placement::from_vector(&u, self.spec) {
                if let Ok(score) = self.score(&placement) {
                    magnitudes.push(score.value.abs());
                }
            }
        }
        let lambda = if magnitudes.is_empty() {
            1.0
        } else {
            let mean = magnitudes.iter().sum::<f64>() / magnitudes.len() as f64;
            (10.0 * mean).max(1e-12)
        };
        self.constraints.lambda = lambda;
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lidar_space() -> SearchSpace {
        SearchSpace::for_lidars(
            2,
            (-0.6, 0.6),
            (-0.6, 0.6),
            (2.2, 2.8),
            (-0.3, 0.3),
            0.05,
        )
        .unwrap()
    }

    #[test]
    fn feasible_placement_has_zero_penalty() {
        let space = lidar_space();
        let cs = ConstraintSpec {
            min_mutual_distance: 0.2,
            lambda: 1.0,
        };
        let u = [0.0, -0.4, 2.2, 0.0, 0.0, 0.4, 2.4, 0.0];
        assert_eq!(placement_penalty(&u, &cs, &space), 0.0);
    }

    #[test]
    fn coincident_lidars_pay_the_separation_shortfall() {
        let space = lidar_space();
        let cs = ConstraintSpec {
            min_mutual_distance: 0.2,
            lambda: 1.0,
        };
        let u = [0.1, 0.1, 2.4, 0.0, 0.1, 0.1, 2.4, 0.0];
        assert_abs_diff_eq!(placement_penalty(&u, &cs, &space), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn box_overshoot_is_linear() {
        let space = lidar_space();
        let cs = ConstraintSpec {
            min_mutual_distance: 0.0,
            lambda: 1.0,
        };
        let u = [0.0, -0.4, 2.85, 0.0, 0.0, 0.4, 2.4, 0.0];
        assert_abs_diff_eq!(placement_penalty(&u, &cs, &space), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn snap_rounds_to_nearest_grid_point() {
        let space = SearchSpace::new(vec![(0.0, 1.0)], 0.1).unwrap();
        let mut u = vec![0.234];
        space.snap_clamp(&mut u);
        assert_abs_diff_eq!(u[0], 0.2, epsilon = 1e-12);
        let mut v = vec![1.7];
        space.snap_clamp(&mut v);
        assert_abs_diff_eq!(v[0], 1.0, epsilon = 1e-12);
        let mut w = vec![-0.3];
        space.snap_clamp(&mut w);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn planar_mode_pins_z() {
        let space = lidar_space().with_planar_z(2.2).unwrap();
        let mut u = vec![0.1, 0.1, 2.6, 0.0, -0.1, -0.1, 2.7, 0.1];
        space.snap_clamp(&mut u);
        assert_eq!(u[2], 2.2);
        assert_eq!(u[6], 2.2);
    }

    #[test]
    fn space_rejects_bad_bounds_and_delta() {
        assert!(SearchSpace::new(vec![(1.0, 1.0)], 0.1).is_err());
        assert!(SearchSpace::new(vec![(0.0, 1.0)], 0.0).is_err());
        assert!(SearchSpace::new(vec![(0.0, 1.0)], 2.0).is_err());
    }
}
