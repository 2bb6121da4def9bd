//! Placement coverage: the set of voxels reached by a placement's rays.
//!
//! Rays from every LiDAR are traversed through the grid and their voxels
//! unioned into a fixed-size bitset. Parallelism folds rays into thread-local
//! masks merged by word-wise OR, so the result is deterministic under any
//! schedule.

use std::str::FromStr;

use rayon::prelude::*;

use super::{gen_rays, GridTraversal, Placement, Ray};
use crate::error::{Error, Result};
use crate::grid::{ProbField, RoiGrid, VoxelId};

/// Where a cast ray terminates inside the probabilistic grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OcclusionMode {
    /// Rays run to full range regardless of field content.
    None,
    /// A ray stops after the first voxel whose occupancy probability
    /// (`1 - p(empty)`) reaches the threshold; that voxel is included.
    Threshold(f64),
}

impl Default for OcclusionMode {
    fn default() -> Self {
        OcclusionMode::Threshold(0.5)
    }
}

impl FromStr for OcclusionMode {
    type Err = Error;

    /// Accepts `none` or `threshold:<tau>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(OcclusionMode::None),
            other => {
                if let Some(tau) = other.strip_prefix("threshold:") {
                    let tau: f64 = tau
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad threshold `{tau}`")))?;
                    if !(0.0..=1.0).contains(&tau) {
                        return Err(Error::Validation(
                            "occlusion threshold must be in [0, 1]".into(),
                        ));
                    }
                    Ok(OcclusionMode::Threshold(tau))
                } else {
                    Err(Error::Validation(format!(
                        "unknown occlusion mode `{other}` (expected `none` or `threshold:<tau>`)"
                    )))
                }
            }
        }
    }
}

impl std::fmt::Display for OcclusionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OcclusionMode::None => write!(f, "none"),
            OcclusionMode::Threshold(tau) => write!(f, "threshold:{tau}"),
        }
    }
}

/// Fixed-size bitset over the grid's voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMask {
    words: Vec<u64>,
    len: usize,
}

impl VoxelMask {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    #[inline]
    pub fn set(&mut self, id: VoxelId) {
        let id = id as usize;
        debug_assert!(id < self.len);
        self.words[id >> 6] |= 1u64 << (id & 63);
    }

    #[inline]
    pub fn contains(&self, id: VoxelId) -> bool {
        let id = id as usize;
        id < self.len && self.words[id >> 6] & (1u64 << (id & 63)) != 0
    }

    /// Word-wise OR; both masks must cover the same grid.
    pub fn union_with(&mut self, other: &VoxelMask) {
        debug_assert_eq!(self.len, other.len);
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set ids in ascending order.
    pub fn iter_ids(&self) -> impl Iterator<Item = VoxelId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let base = (wi * 64) as u64;
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as u64;
                    bits &= bits - 1;
                    Some((base + tz) as VoxelId)
                }
            })
        })
    }
}

/// Sorted unique voxels covered by a placement's rays.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSet {
    ids: Vec<VoxelId>,
}

impl CoverageSet {
    pub fn from_mask(mask: &VoxelMask) -> Self {
        Self {
            ids: mask.iter_ids().collect(),
        }
    }

    pub fn from_sorted_ids(ids: Vec<VoxelId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        Self { ids }
    }

    pub fn ids(&self) -> &[VoxelId] {
        &self.ids
    }

    pub fn n_covered(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: VoxelId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    /// True when `self` is a subset of `other`.
    pub fn is_subset_of(&self, other: &CoverageSet) -> bool {
        self.ids.iter().all(|id| other.contains(*id))
    }
}

/// Walks one ray into the mask, honoring the occlusion mode.
fn trace_ray(ray: &Ray, grid: &RoiGrid, prob: &ProbField, occlusion: OcclusionMode, mask: &mut VoxelMask, t_max: f64) {
    match occlusion {
        OcclusionMode::None => {
            for visit in GridTraversal::new(ray, grid, t_max) {
                mask.set(visit.id);
            }
        }
        OcclusionMode::Threshold(tau) => {
            for visit in GridTraversal::new(ray, grid, t_max) {
                mask.set(visit.id);
                if prob.p_occupied(visit.id) >= tau {
                    break;
                }
            }
        }
    }
}

/// Union of traversed voxels over all rays of all LiDARs.
pub fn coverage(
    placement: &Placement,
    grid: &RoiGrid,
    prob: &ProbField,
    occlusion: OcclusionMode,
) -> Result<CoverageSet> {
    if prob.grid() != grid {
        return Err(Error::Config(
            "probability field grid does not match coverage grid".into(),
        ));
    }
    if let OcclusionMode::Threshold(tau) = occlusion {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::Validation(
                "occlusion threshold must be in [0, 1]".into(),
            ));
        }
    }
    let t_max = placement.spec.range_max;
    let rays: Vec<Ray> = placement
        .lidars
        .iter()
        .flat_map(|ext| gen_rays(ext, &placement.spec))
        .collect();

    let n = grid.n_voxels();
    let mask = rays
        .par_iter()
        .fold(
            || VoxelMask::new(n),
            |mut m, ray| {
                trace_ray(ray, grid, prob, occlusion, &mut m, t_max);
                m
            },
        )
        .reduce(
            || VoxelMask::new(n),
            |mut a, b| {
                a.union_with(&b);
                a
            },
        );
    Ok(CoverageSet::from_mask(&mask))
}
