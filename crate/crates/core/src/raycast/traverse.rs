//! Fast voxel traversal (Amanatides & Woo) over the ROI grid.
//!
//! Walks the segment `[origin, origin + t_max * dir]` through the grid,
//! yielding voxels in entry order. Origins inside and outside the ROI are
//! both handled; the segment is clipped to the grid before walking. A voxel
//! is yielded only when the segment passes through it with positive chord
//! length, so a segment ending exactly on a face does not spill into the
//! next voxel.

use super::Ray;
use crate::grid::{RoiGrid, VoxelId};

/// One traversed voxel with the parametric interval the ray spends inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visit {
    pub id: VoxelId,
    pub t_enter: f64,
    pub t_exit: f64,
}

/// Iterator over voxels along a clipped ray segment.
pub struct GridTraversal {
    idx: [i64; 3],
    step: [i64; 3],
    t_next: [f64; 3],
    t_delta: [f64; 3],
    n: [i64; 3],
    stride_w: i64,
    stride_h: i64,
    t_enter: f64,
    t_end: f64,
    done: bool,
}

impl GridTraversal {
    /// Sets up the walk; yields nothing if the segment misses the ROI.
    pub fn new(ray: &Ray, grid: &RoiGrid, t_max: f64) -> Self {
        let mut missed = Self {
            idx: [0; 3],
            step: [0; 3],
            t_next: [f64::INFINITY; 3],
            t_delta: [f64::INFINITY; 3],
            n: [0; 3],
            stride_w: 0,
            stride_h: 0,
            t_enter: 0.0,
            t_end: 0.0,
            done: true,
        };
        if !(t_max > 0.0) {
            return missed;
        }

        let o = ray.origin;
        let d = ray.dir;
        let lo = grid.origin();
        let hi = grid.max_corner();
        let res = grid.resolution();
        let counts = grid.counts();

        // Clip the segment to the grid box (slab method).
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            if d[a] == 0.0 {
                if o[a] < lo[a] || o[a] >= hi[a] {
                    return missed;
                }
            } else {
                let inv = 1.0 / d[a];
                let ta = (lo[a] - o[a]) * inv;
                let tb = (hi[a] - o[a]) * inv;
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
        }
        if !(t0 < t1) {
            return missed;
        }

        let mut idx = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_next = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            let entry = o[a] + t0 * d[a];
            let cell = ((entry - lo[a]) / res[a]).floor().clamp(0.0, (counts[a] - 1) as f64);
            idx[a] = cell as i64;
            if d[a] > 0.0 {
                step[a] = 1;
                t_delta[a] = res[a] / d[a];
                let boundary = lo[a] + (idx[a] + 1) as f64 * res[a];
                t_next[a] = (boundary - o[a]) / d[a];
            } else if d[a] < 0.0 {
                step[a] = -1;
                t_delta[a] = -res[a] / d[a];
                let boundary = lo[a] + idx[a] as f64 * res[a];
                t_next[a] = (boundary - o[a]) / d[a];
            }
        }

        missed.idx = idx;
        missed.step = step;
        missed.t_next = t_next;
        missed.t_delta = t_delta;
        missed.n = [counts[0] as i64, counts[1] as i64, counts[2] as i64];
        missed.stride_w = counts[0] as i64;
        missed.stride_h = (counts[0] * counts[1]) as i64;
        missed.t_enter = t0;
        missed.t_end = t1;
        missed.done = false;
        missed
    }

    fn current_id(&self) -> VoxelId {
        (self.idx[0] + self.stride_w * self.idx[1] + self.stride_h * self.idx[2]) as VoxelId
    }
}

impl Iterator for GridTraversal {
    type Item = Visit;

    fn next(&mut self) -> Option<Visit> {
        if self.done {
            return None;
        }
        // Crossing axis: smallest boundary distance, lowest axis on ties.
        let mut axis = 0;
        if self.t_next[1] < self.t_next[axis] {
            axis = 1;
        }
        if self.t_next[2] < self.t_next[axis] {
            axis = 2;
        }
        let t_cross = self.t_next[axis];
        let visit = Visit {
            id: self.current_id(),
            t_enter: self.t_enter,
            t_exit: t_cross.min(self.t_end),
        };

        if t_cross >= self.t_end {
            self.done = true;
            return Some(visit);
        }
        let next = self.idx[axis] + self.step[axis];
        if next < 0 || next >= self.n[axis] {
            self.done = true;
            return Some(visit);
        }
        self.idx[axis] = next;
        self.t_enter = t_cross;
        self.t_next[axis] += self.t_delta[axis];
        Some(visit)
    }
}

/// Ordered voxel ids the segment passes through.
pub fn traverse(ray: &Ray, grid: &RoiGrid, t_max: f64) -> Vec<VoxelId> {
    GridTraversal::new(ray, grid, t_max).map(|v| v.id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_grid() -> RoiGrid {
        RoiGrid::new([8, 1, 1], [1.0; 3], [0.0; 3]).unwrap()
    }

    #[test]
    fn axis_aligned_ray_walks_the_row() {
        let grid = line_grid();
        let ray = Ray {
            origin: [0.5, 0.5, 0.5],
            dir: [1.0, 0.0, 0.0],
        };
        let ids = traverse(&ray, &grid, 10.0);
        let expected: Vec<VoxelId> = (0..8).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn ray_pointing_away_misses() {
        let grid = line_grid();
        let ray = Ray {
            origin: [-1.0, 0.5, 0.5],
            dir: [-1.0, 0.0, 0.0],
        };
        assert!(traverse(&ray, &grid, 10.0).is_empty());
    }

    #[test]
    fn t_max_truncates_the_walk() {
        let grid = line_grid();
        let ray = Ray {
            origin: [0.5, 0.5, 0.5],
            dir: [1.0, 0.0, 0.0],
        };
        // Reaches x = 3.0 exactly: the face between voxels 2 and 3, so voxel 3
        // is never entered with positive chord.
        let ids = traverse(&ray, &grid, 2.5);
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn origin_outside_clips_to_entry() {
        let grid = line_grid();
        let ray = Ray {
            origin: [-3.5, 0.5, 0.5],
            dir: [1.0, 0.0, 0.0],
        };
        let ids = traverse(&ray, &grid, 6.0);
        // Enters at t = 3.5, leaves segment at t = 6 (x = 2.5): voxels 0..2.
        assert_eq!(ids, vec![0, 1, 2]);
    }

    #[test]
    fn zero_direction_component_stays_in_plane() {
        let grid = RoiGrid::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
        let ray = Ray {
            origin: [0.5, 1.5, 2.5],
            dir: [1.0, 0.0, 0.0],
        };
        let ids = traverse(&ray, &grid, 100.0);
        for id in &ids {
            let c = grid.coords_of(*id);
            assert_eq!(c[1], 1);
            assert_eq!(c[2], 2);
        }
        assert_eq!(ids.len(), 4);
    }

    #[test]
    fn diagonal_ray_steps_one_axis_at_a_time() {
        let grid = RoiGrid::new([16, 16, 16], [0.5; 3], [-4.0, -4.0, -4.0]).unwrap();
        let ray = Ray {
            origin: [-3.9, -3.7, -3.8],
            dir: {
                let d = [1.0f64, 0.8, 0.6];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                [d[0] / n, d[1] / n, d[2] / n]
            },
        };
        let ids = traverse(&ray, &grid, 50.0);
        assert!(ids.len() > 10);
        for pair in ids.windows(2) {
            let a = grid.coords_of(pair[0]);
            let b = grid.coords_of(pair[1]);
            let diff: usize = (0..3)
                .map(|k| (a[k] as i64 - b[k] as i64).unsigned_abs() as usize)
                .sum();
            assert_eq!(diff, 1, "consecutive voxels must share a face");
        }
    }

    #[test]
    fn visits_report_increasing_intervals() {
        let grid = RoiGrid::new([8, 8, 8], [1.0; 3], [0.0; 3]).unwrap();
        let ray = Ray {
            origin: [0.2, 0.3, 0.4],
            dir: [0.6, 0.64, 0.48],
        };
        let visits: Vec<Visit> = GridTraversal::new(&ray, &grid, 20.0).collect();
        assert!(!visits.is_empty());
        for w in visits.windows(2) {
            assert_eq!(w[0].t_exit, w[1].t_enter);
        }
        for v in &visits {
            assert!(v.t_exit >= v.t_enter);
        }
    }

    #[test]
    fn segment_fully_outside_is_empty() {
        let grid = line_grid();
        let ray = Ray {
            origin: [0.5, 5.0, 0.5],
            dir: [1.0, 0.0, 0.0],
        };
        assert!(traverse(&ray, &grid, 100.0).is_empty());
    }
}
