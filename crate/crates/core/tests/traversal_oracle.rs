//! Traversal correctness against an independent fine-step sampling oracle.
//!
//! The oracle walks each segment at step `res/20`, assigning sample points to
//! voxels through `voxel_index`. A voxel is ambiguous for this comparison
//! when every sample inside it lies within 1e-9 m of a voxel face, or when
//! its traversal chord is shorter than the sampling step (such a sliver can
//! fall entirely between sample points); ambiguous voxels are excluded from
//! the equality check on both sides.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use sogrid_core::grid::{RoiGrid, VoxelId};
use sogrid_core::raycast::{GridTraversal, Ray};
use sogrid_core::rng;

const FACE_EPS: f64 = 1e-9;

struct OracleSets {
    /// Voxels with at least one sample clearly interior.
    definite: HashSet<VoxelId>,
    /// Voxels sampled only within FACE_EPS of a face.
    grazed: HashSet<VoxelId>,
}

fn min_face_distance(grid: &RoiGrid, p: [f64; 3], idx: [usize; 3]) -> f64 {
    let origin = grid.origin();
    let res = grid.resolution();
    let mut min_d = f64::INFINITY;
    for a in 0..3 {
        let lo = origin[a] + idx[a] as f64 * res[a];
        let hi = lo + res[a];
        min_d = min_d.min(p[a] - lo).min(hi - p[a]);
    }
    min_d
}

fn sampling_oracle(ray: &Ray, grid: &RoiGrid, t_max: f64, step: f64) -> OracleSets {
    let mut definite = HashSet::new();
    let mut grazed = HashSet::new();
    let n_steps = (t_max / step).ceil() as usize;
    for k in 0..=n_steps {
        let t = (k as f64 * step).min(t_max);
        let p = [
            ray.origin[0] + t * ray.dir[0],
            ray.origin[1] + t * ray.dir[1],
            ray.origin[2] + t * ray.dir[2],
        ];
        if let Some(idx) = grid.voxel_index(p) {
            let id = grid.linear_id(idx);
            if min_face_distance(grid, p, idx) > FACE_EPS {
                definite.insert(id);
            } else {
                grazed.insert(id);
            }
        }
    }
    for id in &definite {
        grazed.remove(id);
    }
    OracleSets { definite, grazed }
}

#[test]
fn amanatides_woo_matches_sampling_oracle_on_1000_rays() {
    let grid = RoiGrid::new([32, 32, 32], [1.0; 3], [0.0; 3]).unwrap();
    let step = 1.0 / 20.0;
    let t_max = 80.0;
    let mut rng = rng::stream(0x5EED, &[]);

    let mut rays = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let origin = [
            rng.random_range(-8.0..40.0),
            rng.random_range(-8.0..40.0),
            rng.random_range(-8.0..40.0),
        ];
        // Uniform direction from normalized Gaussian triple.
        let mut dir = [0.0f64; 3];
        loop {
            let mut norm2 = 0.0;
            for d in &mut dir {
                *d = rng.random_range(-1.0..1.0);
                norm2 += *d * *d;
            }
            if norm2 > 1e-6 {
                let norm = norm2.sqrt();
                for d in &mut dir {
                    *d /= norm;
                }
                break;
            }
        }
        rays.push(Ray { origin, dir });
    }

    // Time only the traversal under test; the sampling oracle is scaffolding.
    let start = std::time::Instant::now();
    let traversals: Vec<Vec<(VoxelId, f64, f64)>> = rays
        .iter()
        .map(|ray| {
            GridTraversal::new(ray, &grid, t_max)
                .map(|v| (v.id, v.t_enter, v.t_exit))
                .collect()
        })
        .collect();
    let traversal_time = start.elapsed();

    let mut total_checked = 0usize;
    let mut total_excluded = 0usize;
    for (ray, visits) in rays.iter().zip(&traversals) {
        let oracle = sampling_oracle(ray, &grid, t_max, step);
        let aw_chords: HashMap<VoxelId, (f64, f64)> = visits
            .iter()
            .map(|(id, t_in, t_out)| (*id, (*t_in, *t_out)))
            .collect();

        // Every clearly-interior oracle voxel must be traversed.
        for id in &oracle.definite {
            assert!(
                aw_chords.contains_key(id),
                "oracle voxel {id} missing from traversal (ray {ray:?})"
            );
        }

        // Every traversed voxel absent from the oracle must be excludable:
        // grazed, or a sliver shorter than the sampling step, or hugging a
        // face along its whole chord.
        for (id, (t_in, t_out)) in &aw_chords {
            if oracle.definite.contains(id) {
                total_checked += 1;
                continue;
            }
            let chord = t_out - t_in;
            let mid_t = 0.5 * (t_in + t_out);
            let mid = [
                ray.origin[0] + mid_t * ray.dir[0],
                ray.origin[1] + mid_t * ray.dir[1],
                ray.origin[2] + mid_t * ray.dir[2],
            ];
            let idx = grid.coords_of(*id);
            let near_face = min_face_distance(&grid, mid, idx) <= FACE_EPS;
            assert!(
                oracle.grazed.contains(id) || chord < step || near_face,
                "traversed voxel {id} (chord {chord:.3e}) not justified by oracle (ray {ray:?})"
            );
            total_excluded += 1;
        }
    }

    assert!(
        total_checked > 10_000,
        "expected substantial agreement set, got {total_checked}"
    );
    // Exclusions must stay a sliver of the compared volume.
    assert!(
        (total_excluded as f64) < 0.05 * total_checked as f64,
        "too many excluded voxels: {total_excluded} vs {total_checked} checked"
    );
    assert!(
        traversal_time.as_secs_f64() < 1.0,
        "1000 traversals took {traversal_time:?}, budget is 1 s"
    );
}
