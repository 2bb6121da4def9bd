//! Voxelized region of interest, semantic class tables, and the probabilistic
//! semantic occupancy grid (P-SOG).
//!
//! The ROI is an ego-centered cuboid split into axis-aligned voxels. Each
//! frame contributes one semantic label per observed voxel; accumulating T
//! frames and normalizing yields a per-voxel multinomial distribution over
//! the class table. Frames in which a voxel went unobserved count as
//! observations of the `empty` class, so every finalized probability vector
//! sums to 1.

mod io;

pub use io::{load_psog, save_psog};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::util::pairwise_sum;

/// Linear voxel identifier; `i_l` varies fastest, then `i_w`, then `i_h`.
pub type VoxelId = u32;

/// Sentinel label for voxels not observed in a frame.
pub const UNOBSERVED: u16 = u16::MAX;

/// Dense-count storage is used while the class count stays at or below this.
const DENSE_CLASS_LIMIT: usize = 32;

/// The voxelized region of interest.
///
/// Voxels are half-open boxes `[lo, hi)` along each axis: a point exactly on
/// a shared face belongs to the voxel whose low face it lies on, and points
/// on the ROI's max faces are outside.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiGrid {
    n: [usize; 3],
    res: [f64; 3],
    origin: [f64; 3],
}

impl RoiGrid {
    /// Builds a grid from voxel counts, per-axis resolution, and the minimum
    /// corner of the cuboid in the ego frame.
    pub fn new(n: [usize; 3], res: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if n.iter().any(|&c| c == 0) {
            return Err(Error::Config("grid axis with zero voxels".into()));
        }
        if res.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Config("grid resolution must be positive".into()));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        let total = n[0]
            .checked_mul(n[1])
            .and_then(|p| p.checked_mul(n[2]))
            .filter(|&t| t <= u32::MAX as usize);
        if total.is_none() {
            return Err(Error::Config("grid voxel count exceeds u32 range".into()));
        }
        Ok(Self { n, res, origin })
    }

    /// Builds a grid from cuboid side lengths; each extent must be an exact
    /// multiple of the matching resolution.
    pub fn from_extents(extent: [f64; 3], res: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let mut n = [0usize; 3];
        for a in 0..3 {
            if !(res[a] > 0.0) {
                return Err(Error::Config("grid resolution must be positive".into()));
            }
            let count = extent[a] / res[a];
            let rounded = count.round();
            if rounded < 1.0 || (count - rounded).abs() > 1e-9 * count.max(1.0) {
                return Err(Error::Config(format!(
                    "extent {} is not an exact multiple of resolution {}",
                    extent[a], res[a]
                )));
            }
            n[a] = rounded as usize;
        }
        Self::new(n, res, origin)
    }

    /// Ego-centered grid: origin at `-extent/2` along every axis.
    pub fn centered(extent: [f64; 3], res: [f64; 3]) -> Result<Self> {
        let origin = [-extent[0] / 2.0, -extent[1] / 2.0, -extent[2] / 2.0];
        Self::from_extents(extent, res, origin)
    }

    pub fn counts(&self) -> [usize; 3] {
        self.n
    }

    pub fn resolution(&self) -> [f64; 3] {
        self.res
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    /// Cuboid side lengths, always `n * res` exactly.
    pub fn extent(&self) -> [f64; 3] {
        [
            self.n[0] as f64 * self.res[0],
            self.n[1] as f64 * self.res[1],
            self.n[2] as f64 * self.res[2],
        ]
    }

    /// Total number of voxels.
    pub fn n_voxels(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// The maximum corner of the cuboid.
    pub fn max_corner(&self) -> [f64; 3] {
        let e = self.extent();
        [
            self.origin[0] + e[0],
            self.origin[1] + e[1],
            self.origin[2] + e[2],
        ]
    }

    /// Integer voxel coordinates containing `p`, or `None` outside the ROI.
    ///
    /// Total over all inputs; max-face points map to `None`.
    pub fn voxel_index(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = (p[a] - self.origin[a]) / self.res[a];
            if !(t >= 0.0) {
                return None;
            }
            let i = t.floor() as usize;
            if i >= self.n[a] {
                return None;
            }
            idx[a] = i;
        }
        Some(idx)
    }

    /// Linear id of integer coordinates; `i_l` fastest.
    pub fn linear_id(&self, idx: [usize; 3]) -> VoxelId {
        debug_assert!(idx[0] < self.n[0] && idx[1] < self.n[1] && idx[2] < self.n[2]);
        (idx[0] + self.n[0] * (idx[1] + self.n[1] * idx[2])) as VoxelId
    }

    /// Inverse of [`linear_id`](Self::linear_id).
    pub fn coords_of(&self, id: VoxelId) -> [usize; 3] {
        let id = id as usize;
        let i_l = id % self.n[0];
        let rest = id / self.n[0];
        [i_l, rest % self.n[1], rest / self.n[1]]
    }

    /// Center point of a voxel in the ego frame.
    pub fn voxel_center(&self, idx: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + (idx[0] as f64 + 0.5) * self.res[0],
            self.origin[1] + (idx[1] as f64 + 0.5) * self.res[1],
            self.origin[2] + (idx[2] as f64 + 0.5) * self.res[2],
        ]
    }
}

/// Ordered semantic class labels; one of them is the designated `empty` class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
    empty_class: u16,
}

impl ClassTable {
    pub fn new(names: Vec<String>, empty_class: u16) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::Config(
                "class table needs at least one material class plus empty".into(),
            ));
        }
        if names.len() > u16::MAX as usize {
            return Err(Error::Config("too many classes".into()));
        }
        if (empty_class as usize) >= names.len() {
            return Err(Error::Config(format!(
                "empty class id {} out of range for {} classes",
                empty_class,
                names.len()
            )));
        }
        Ok(Self { names, empty_class })
    }

    /// Number of classes, empty included.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least two classes
    }

    pub fn empty_class(&self) -> u16 {
        self.empty_class
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_of(&self, id: u16) -> Option<&str> {
        self.names.get(id as usize).map(|s| s.as_str())
    }

    pub fn id_of(&self, name: &str) -> Option<u16> {
        self.names.iter().position(|n| n == name).map(|i| i as u16)
    }

    /// Maximum possible voxel entropy, `ln M`.
    pub fn max_entropy(&self) -> f64 {
        (self.len() as f64).ln()
    }
}

/// One frame's semantic labeling of the ROI.
#[derive(Debug, Clone)]
pub struct SogFrame {
    grid: RoiGrid,
    labels: Vec<u16>,
}

impl SogFrame {
    /// An all-unobserved frame.
    pub fn empty(grid: RoiGrid) -> Self {
        let n = grid.n_voxels();
        Self {
            grid,
            labels: vec![UNOBSERVED; n],
        }
    }

    pub fn grid(&self) -> &RoiGrid {
        &self.grid
    }

    pub fn label(&self, id: VoxelId) -> Option<u16> {
        match self.labels[id as usize] {
            UNOBSERVED => None,
            c => Some(c),
        }
    }

    pub fn set_label(&mut self, id: VoxelId, class: u16) {
        self.labels[id as usize] = class;
    }

    /// Ids of observed voxels with their labels.
    pub fn observed(&self) -> impl Iterator<Item = (VoxelId, u16)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != UNOBSERVED)
            .map(|(i, &c)| (i as VoxelId, c))
    }

    pub fn n_observed(&self) -> usize {
        self.labels.iter().filter(|&&c| c != UNOBSERVED).count()
    }
}

/// Per-voxel class observation counts.
///
/// Dense when the class table is small, per-voxel maps otherwise.
#[derive(Debug, Clone)]
enum CountStorage {
    Dense(Vec<u32>),
    Sparse(Vec<BTreeMap<u16, u32>>),
}

impl CountStorage {
    fn new(n_voxels: usize, n_classes: usize) -> Self {
        if n_classes <= DENSE_CLASS_LIMIT {
            CountStorage::Dense(vec![0; n_voxels * n_classes])
        } else {
            CountStorage::Sparse(vec![BTreeMap::new(); n_voxels])
        }
    }

    fn increment(&mut self, voxel: usize, class: u16, n_classes: usize) {
        match self {
            CountStorage::Dense(v) => v[voxel * n_classes + class as usize] += 1,
            CountStorage::Sparse(maps) => *maps[voxel].entry(class).or_insert(0) += 1,
        }
    }

    fn get(&self, voxel: usize, class: u16, n_classes: usize) -> u32 {
        match self {
            CountStorage::Dense(v) => v[voxel * n_classes + class as usize],
            CountStorage::Sparse(maps) => maps[voxel].get(&class).copied().unwrap_or(0),
        }
    }

    fn voxel_total(&self, voxel: usize, n_classes: usize) -> u64 {
        match self {
            CountStorage::Dense(v) => v[voxel * n_classes..(voxel + 1) * n_classes]
                .iter()
                .map(|&c| c as u64)
                .sum(),
            CountStorage::Sparse(maps) => maps[voxel].values().map(|&c| c as u64).sum(),
        }
    }
}

/// Probabilistic semantic occupancy grid accumulator.
///
/// Single-writer: frames are folded in one at a time; [`finalize`](Self::finalize)
/// produces an immutable [`ProbField`] that is safe to share across threads.
#[derive(Debug, Clone)]
pub struct PSog {
    grid: RoiGrid,
    classes: ClassTable,
    counts: CountStorage,
    frames_seen: u64,
}

impl PSog {
    pub fn new(grid: RoiGrid, classes: ClassTable) -> Self {
        let counts = CountStorage::new(grid.n_voxels(), classes.len());
        Self {
            grid,
            classes,
            counts,
            frames_seen: 0,
        }
    }

    pub fn grid(&self) -> &RoiGrid {
        &self.grid
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    /// Number of frames accumulated so far (the paper-level T).
    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn count(&self, voxel: VoxelId, class: u16) -> u32 {
        self.counts.get(voxel as usize, class, self.classes.len())
    }

    pub(crate) fn set_count_unchecked(&mut self, voxel: VoxelId, class: u16, value: u32) {
        let m = self.classes.len();
        match &mut self.counts {
            CountStorage::Dense(v) => v[voxel as usize * m + class as usize] = value,
            CountStorage::Sparse(maps) => {
                if value == 0 {
                    maps[voxel as usize].remove(&class);
                } else {
                    maps[voxel as usize].insert(class, value);
                }
            }
        }
    }

    pub(crate) fn set_frames_seen(&mut self, t: u64) {
        self.frames_seen = t;
    }

    /// Folds one frame into the accumulator.
    ///
    /// Each observed voxel's labeled class count goes up by one and the frame
    /// counter advances; unobserved voxels are untouched.
    pub fn accumulate(&mut self, frame: &SogFrame) -> Result<()> {
        if frame.grid != self.grid {
            return Err(Error::Config(
                "frame grid does not match accumulator grid".into(),
            ));
        }
        let m = self.classes.len();
        for (id, class) in frame.observed() {
            if class as usize >= m {
                return Err(Error::Config(format!(
                    "frame label {} out of range for {} classes",
                    class, m
                )));
            }
            self.counts.increment(id as usize, class, m);
        }
        self.frames_seen += 1;
        Ok(())
    }

    /// Normalizes counts into per-voxel probability vectors.
    ///
    /// For a voxel observed in at least one frame, `p(c) = counts[c] / T`,
    /// with the frames that did not observe the voxel counted toward the
    /// empty class. Voxels never observed in any frame become deterministic
    /// empty and are flagged as unobserved.
    pub fn finalize(&self) -> Result<ProbField> {
        if self.frames_seen == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.grid.n_voxels();
        let m = self.classes.len();
        let empty = self.classes.empty_class() as usize;
        let t = self.frames_seen as f64;

        let mut probs = vec![0.0f64; n * m];
        let mut observed = vec![false; n];
        for v in 0..n {
            let total = self.counts.voxel_total(v, m);
            debug_assert!(total <= self.frames_seen, "voxel observed more than once per frame");
            let row = &mut probs[v * m..(v + 1) * m];
            if total == 0 {
                row[empty] = 1.0;
                continue;
            }
            observed[v] = true;
            for c in 0..m {
                row[c] = self.counts.get(v, c as u16, m) as f64 / t;
            }
            // Frames that saw the ROI but not this voxel observed it empty.
            row[empty] += (self.frames_seen - total) as f64 / t;
        }
        ProbField::from_probs(self.grid.clone(), self.classes.clone(), probs, observed)
    }
}

/// Immutable per-voxel probability field with precomputed entropies.
#[derive(Debug, Clone)]
pub struct ProbField {
    grid: RoiGrid,
    classes: ClassTable,
    probs: Vec<f64>,
    entropy: Vec<f64>,
    p_occupied: Vec<f64>,
    observed: Vec<bool>,
}

impl ProbField {
    /// Wraps raw probability rows, computing entropy and occupancy caches.
    ///
    /// Every row must sum to 1 within 1e-9.
    pub fn from_probs(
        grid: RoiGrid,
        classes: ClassTable,
        probs: Vec<f64>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        let n = grid.n_voxels();
        let m = classes.len();
        if probs.len() != n * m || observed.len() != n {
            return Err(Error::Config("probability field shape mismatch".into()));
        }
        let empty = classes.empty_class() as usize;
        let max_h = classes.max_entropy();
        let mut entropy = Vec::with_capacity(n);
        let mut p_occupied = Vec::with_capacity(n);
        for v in 0..n {
            let row = &probs[v * m..(v + 1) * m];
            entropy.push(entropy_unchecked(row, max_h)?);
            p_occupied.push((1.0 - row[empty]).clamp(0.0, 1.0));
        }
        Ok(Self {
            grid,
            classes,
            probs,
            entropy,
            p_occupied,
            observed,
        })
    }

    pub fn grid(&self) -> &RoiGrid {
        &self.grid
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    /// Probability row for one voxel, in class order.
    pub fn probs(&self, id: VoxelId) -> &[f64] {
        let m = self.classes.len();
        &self.probs[id as usize * m..(id as usize + 1) * m]
    }

    /// Precomputed Shannon entropy of the voxel's distribution, in nats.
    pub fn entropy(&self, id: VoxelId) -> f64 {
        self.entropy[id as usize]
    }

    /// `1 - p(empty)`: probability the voxel holds any material class.
    pub fn p_occupied(&self, id: VoxelId) -> f64 {
        self.p_occupied[id as usize]
    }

    /// Whether the voxel was observed in at least one accumulated frame.
    pub fn is_observed(&self, id: VoxelId) -> bool {
        self.observed[id as usize]
    }

    pub fn observed_flags(&self) -> &[bool] {
        &self.observed
    }

    /// Sum of entropies over the whole field (deterministic reduction).
    pub fn total_entropy(&self) -> f64 {
        pairwise_sum(&self.entropy)
    }
}

/// Shannon entropy of a probability vector, in nats.
///
/// Zero-probability terms contribute nothing; the result is clamped into
/// `[0, ln M]` to absorb last-ulp rounding. Rejects vectors that are not
/// normalized within 1e-9 or contain negative entries.
pub fn voxel_entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::Validation("empty probability vector".into()));
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Validation(
            "probability vector has negative or non-finite entries".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "probability vector sums to {sum}, expected 1"
        )));
    }
    entropy_unchecked(p, (p.len() as f64).ln())
}

fn entropy_unchecked(p: &[f64], max_h: f64) -> Result<f64> {
    let mut h = 0.0;
    for &x in p {
        if x > 0.0 {
            h -= x * x.ln();
        }
    }
    if !h.is_finite() {
        return Err(Error::Validation("entropy overflowed".into()));
    }
    Ok(h.min(max_h).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_grid() -> RoiGrid {
        RoiGrid::new([4, 4, 4], [1.0, 1.0, 1.0], [-2.0, -2.0, 0.0]).unwrap()
    }

    fn two_classes() -> ClassTable {
        ClassTable::new(vec!["empty".into(), "solid".into()], 0).unwrap()
    }

    #[test]
    fn voxel_index_center_of_first_voxel() {
        let g = small_grid();
        let o = g.origin();
        let p = [o[0] + 0.5, o[1] + 0.5, o[2] + 0.5];
        assert_eq!(g.voxel_index(p), Some([0, 0, 0]));
    }

    #[test]
    fn voxel_index_max_face_is_outside() {
        let g = small_grid();
        let p = g.max_corner();
        assert_eq!(g.voxel_index(p), None);
    }

    #[test]
    fn voxel_index_hand_computed() {
        // floor((p - origin)/res) with origin (-2,-2,0).
        let g = small_grid();
        assert_eq!(g.voxel_index([1.5, -0.5, 3.2]), Some([3, 1, 3]));
    }

    #[test]
    fn voxel_index_shared_face_goes_to_upper_cell() {
        let g = small_grid();
        // x = -1.0 is the face between cells 0 and 1; half-open puts it in 1.
        assert_eq!(g.voxel_index([-1.0, -1.5, 0.5]), Some([1, 0, 0]));
    }

    #[test]
    fn linear_id_roundtrip() {
        let g = small_grid();
        for id in 0..g.n_voxels() as VoxelId {
            assert_eq!(g.linear_id(g.coords_of(id)), id);
        }
    }

    #[test]
    fn extent_is_exact_product() {
        let g = RoiGrid::from_extents([8.0, 4.0, 2.0], [0.5, 0.5, 0.5], [0.0; 3]).unwrap();
        assert_eq!(g.counts(), [16, 8, 4]);
        assert_eq!(g.extent(), [8.0, 4.0, 2.0]);
    }

    #[test]
    fn from_extents_rejects_inexact_division() {
        let err = RoiGrid::from_extents([1.0, 1.0, 1.0], [0.3, 0.5, 0.5], [0.0; 3]);
        assert!(err.is_err());
    }

    #[test]
    fn accumulate_counts_single_frame() {
        let g = small_grid();
        let classes = ClassTable::new(
            vec!["empty".into(), "a".into(), "b".into(), "c".into()],
            0,
        )
        .unwrap();
        let mut psog = PSog::new(g.clone(), classes);
        let mut frame = SogFrame::empty(g);
        frame.set_label(5, 3);
        psog.accumulate(&frame).unwrap();
        assert_eq!(psog.count(5, 3), 1);
        assert_eq!(psog.frames_seen(), 1);
    }

    #[test]
    fn accumulate_extends_existing_counts() {
        let g = small_grid();
        let mut psog = PSog::new(g.clone(), two_classes());
        let mut f0 = SogFrame::empty(g.clone());
        f0.set_label(0, 0);
        psog.accumulate(&f0).unwrap();
        psog.accumulate(&f0).unwrap();
        let mut f1 = SogFrame::empty(g);
        f1.set_label(0, 1);
        psog.accumulate(&f1).unwrap();
        assert_eq!(psog.count(0, 0), 2);
        assert_eq!(psog.count(0, 1), 1);
        assert_eq!(psog.frames_seen(), 3);
    }

    #[test]
    fn accumulate_rejects_grid_mismatch() {
        let g = small_grid();
        let other = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let mut psog = PSog::new(g, two_classes());
        let frame = SogFrame::empty(other);
        assert!(matches!(psog.accumulate(&frame), Err(Error::Config(_))));
    }

    #[test]
    fn alternating_frames_give_half_half() {
        let g = small_grid();
        let mut psog = PSog::new(g.clone(), two_classes());
        for t in 0..10u16 {
            let mut f = SogFrame::empty(g.clone());
            f.set_label(7, t % 2);
            psog.accumulate(&f).unwrap();
        }
        let field = psog.finalize().unwrap();
        let p = field.probs(7);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn finalize_ratio() {
        let g = small_grid();
        let mut psog = PSog::new(g, two_classes());
        psog.set_frames_seen(4);
        psog.set_count_unchecked(3, 0, 3);
        psog.set_count_unchecked(3, 1, 1);
        let field = psog.finalize().unwrap();
        assert_eq!(field.probs(3), &[0.75, 0.25]);
        assert!(field.is_observed(3));
    }

    #[test]
    fn finalize_unobserved_becomes_empty() {
        let g = small_grid();
        let mut psog = PSog::new(g, two_classes());
        psog.set_frames_seen(4);
        let field = psog.finalize().unwrap();
        assert_eq!(field.probs(9), &[1.0, 0.0]);
        assert!(!field.is_observed(9));
        assert_eq!(field.entropy(9), 0.0);
    }

    #[test]
    fn finalize_three_class_ratio() {
        let g = small_grid();
        let classes = ClassTable::new(vec!["a".into(), "b".into(), "c".into()], 0).unwrap();
        let mut psog = PSog::new(g, classes);
        psog.set_frames_seen(10);
        psog.set_count_unchecked(0, 0, 2);
        psog.set_count_unchecked(0, 1, 5);
        psog.set_count_unchecked(0, 2, 3);
        let field = psog.finalize().unwrap();
        let p = field.probs(0);
        assert_abs_diff_eq!(p[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn finalize_partial_observation_assigns_missing_mass_to_empty() {
        let g = small_grid();
        let mut psog = PSog::new(g.clone(), two_classes());
        let mut seen = SogFrame::empty(g.clone());
        seen.set_label(2, 1);
        psog.accumulate(&seen).unwrap();
        psog.accumulate(&SogFrame::empty(g)).unwrap();
        let field = psog.finalize().unwrap();
        assert_eq!(field.probs(2), &[0.5, 0.5]);
        let total: f64 = field.probs(2).iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn finalize_empty_accumulator_errors() {
        let psog = PSog::new(small_grid(), two_classes());
        assert!(matches!(psog.finalize(), Err(Error::EmptyAccumulator)));
    }

    #[test]
    fn entropy_deterministic_vector_is_zero() {
        assert_eq!(voxel_entropy(&[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_fair_coin_is_ln2() {
        assert_abs_diff_eq!(
            voxel_entropy(&[0.5, 0.5]).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn entropy_hand_computed() {
        // -0.75 ln 0.75 - 0.25 ln 0.25
        assert_abs_diff_eq!(
            voxel_entropy(&[0.75, 0.25]).unwrap(),
            0.5623351446188083,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        assert!(voxel_entropy(&[0.5, 0.4]).is_err());
        assert!(voxel_entropy(&[-0.1, 1.1]).is_err());
    }

    #[test]
    fn entropy_bounded_by_ln_m() {
        for m in 2..6usize {
            let p = vec![1.0 / m as f64; m];
            let h = voxel_entropy(&p).unwrap();
            assert!(h >= 0.0 && h <= (m as f64).ln());
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn finalized_rows_are_normalized(counts in proptest::collection::vec(0u32..20, 8)) {
                let g = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
                let classes = ClassTable::new(
                    vec!["empty".into(), "a".into(), "b".into(), "c".into()], 0).unwrap();
                let mut psog = PSog::new(g, classes);
                // Two classes of counts per voxel, capped so totals fit T.
                let t: u32 = 40;
                psog.set_frames_seen(t as u64);
                for (v, chunk) in counts.chunks(2).enumerate() {
                    psog.set_count_unchecked(v as VoxelId, 1, chunk[0].min(20));
                    psog.set_count_unchecked(v as VoxelId, 2, chunk.get(1).copied().unwrap_or(0).min(20));
                }
                let field = psog.finalize().unwrap();
                for v in 0..4u32 {
                    let sum: f64 = field.probs(v).iter().sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-12);
                    let h = field.entropy(v);
                    prop_assert!((0.0..=(4f64).ln()).contains(&h));
                }
            }

            #[test]
            fn accumulation_is_order_independent(perm in proptest::sample::subsequence(vec![0usize,1,2,3,4,5], 6)) {
                // Build a fixed set of frames, accumulate in two orders.
                let g = RoiGrid::new([2, 2, 1], [1.0; 3], [0.0; 3]).unwrap();
                let classes = ClassTable::new(vec!["empty".into(), "x".into()], 0).unwrap();
                let mut frames = Vec::new();
                for i in 0..6usize {
                    let mut f = SogFrame::empty(g.clone());
                    f.set_label((i % 4) as VoxelId, (i % 2) as u16);
                    frames.push(f);
                }
                let mut fwd = PSog::new(g.clone(), classes.clone());
                for f in &frames { fwd.accumulate(f).unwrap(); }
                let mut shuffled: Vec<&SogFrame> = frames.iter().collect();
                // Rotate by the subsequence length for a deterministic reorder.
                shuffled.rotate_left(perm.len() % frames.len());
                let mut rev = PSog::new(g, classes);
                for f in shuffled { rev.accumulate(f).unwrap(); }
                for v in 0..4u32 {
                    for c in 0..2u16 {
                        prop_assert_eq!(fwd.count(v, c), rev.count(v, c));
                    }
                }
            }
        }
    }
}
