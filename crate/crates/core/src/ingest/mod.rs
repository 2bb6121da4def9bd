//! Labeled point-cloud ingestion: frame aggregation, majority-vote
//! voxelization, text file formats, and the procedural scene generator.

pub mod io;
pub mod scene;

use crate::corrupt::{self, CorruptionSpec};
use crate::error::{Error, Result};
use crate::grid::{ClassTable, PSog, RoiGrid, SogFrame};

/// One labeled point in a sensor/ego frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub pos: [f64; 3],
    pub class_id: u16,
}

/// A labeled point cloud for one time frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub frame_id: u64,
    pub points: Vec<LabeledPoint>,
}

impl LabeledCloud {
    pub fn new(frame_id: u64) -> Self {
        Self {
            frame_id,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, pos: [f64; 3], class_id: u16) {
        self.points.push(LabeledPoint { pos, class_id });
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Planar ego pose: world translation plus yaw about +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoPose {
    pub frame_id: u64,
    pub translation: [f64; 3],
    pub yaw: f64,
}

impl EgoPose {
    pub fn identity(frame_id: u64) -> Self {
        Self {
            frame_id,
            translation: [0.0; 3],
            yaw: 0.0,
        }
    }

    /// Ego-frame point to world coordinates.
    pub fn to_world(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            c * p[0] - s * p[1] + self.translation[0],
            s * p[0] + c * p[1] + self.translation[1],
            p[2] + self.translation[2],
        ]
    }

    /// World point into this pose's ego frame.
    pub fn to_ego(&self, w: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let d = [
            w[0] - self.translation[0],
            w[1] - self.translation[1],
            w[2] - self.translation[2],
        ];
        [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]]
    }
}

/// Checks that every point's class id fits the class table.
pub fn validate_cloud(cloud: &LabeledCloud, classes: &ClassTable) -> Result<()> {
    let m = classes.len() as u16;
    for (i, p) in cloud.points.iter().enumerate() {
        if p.class_id >= m {
            return Err(Error::Ingest(format!(
                "frame {} point {} has class id {} but the table has {} classes",
                cloud.frame_id, i, p.class_id, m
            )));
        }
    }
    Ok(())
}

/// Merges frames into the anchor frame's ego coordinates.
///
/// Each point is lifted to world coordinates through its own frame's pose and
/// then mapped into the anchor pose's ego frame. Labels are preserved and the
/// output holds the concatenation of all inputs.
pub fn aggregate_frames(
    clouds: &[LabeledCloud],
    poses: &[EgoPose],
    anchor: u64,
) -> Result<LabeledCloud> {
    let pose_of = |frame_id: u64| -> Result<&EgoPose> {
        poses
            .iter()
            .find(|p| p.frame_id == frame_id)
            .ok_or_else(|| Error::Ingest(format!("no pose for frame {frame_id}")))
    };
    let anchor_pose = pose_of(anchor)?;

    let mut out = LabeledCloud::new(anchor);
    out.points
        .reserve(clouds.iter().map(|c| c.points.len()).sum());
    for cloud in clouds {
        let pose = pose_of(cloud.frame_id)?;
        for p in &cloud.points {
            let world = pose.to_world(p.pos);
            out.push(anchor_pose.to_ego(world), p.class_id);
        }
    }
    Ok(out)
}

/// Labels each voxel by majority vote over the points it contains.
///
/// Ties break toward the lowest class id; voxels without points stay
/// unobserved. Points are assumed validated against the class table
/// (see [`validate_cloud`]).
pub fn voxelize_vote(cloud: &LabeledCloud, grid: &RoiGrid, classes: &ClassTable) -> SogFrame {
    let m = classes.len() as u16;
    let mut hits: Vec<(u32, u16)> = Vec::with_capacity(cloud.points.len());
    for p in &cloud.points {
        debug_assert!(p.class_id < m, "point class out of range");
        if let Some(idx) = grid.voxel_index(p.pos) {
            hits.push((grid.linear_id(idx), p.class_id.min(m - 1)));
        }
    }
    hits.sort_unstable();

    let mut frame = SogFrame::empty(grid.clone());
    let mut i = 0;
    while i < hits.len() {
        let voxel = hits[i].0;
        let mut best_class = hits[i].1;
        let mut best_count = 0usize;
        let mut j = i;
        while j < hits.len() && hits[j].0 == voxel {
            let class = hits[j].1;
            let mut count = 0usize;
            while j < hits.len() && hits[j].0 == voxel && hits[j].1 == class {
                count += 1;
                j += 1;
            }
            // Strict greater-than keeps the lowest class id on ties.
            if count > best_count {
                best_count = count;
                best_class = class;
            }
        }
        frame.set_label(voxel, best_class);
        i = j;
    }
    frame
}

/// Builds a probabilistic occupancy accumulator from a frame sequence.
///
/// Frames are corrupted (when a spec is given), grouped into windows of
/// `window` consecutive frames, aggregated into each window's first frame's
/// ego coordinates, voxelized by majority vote, and folded into the
/// accumulator; the trailing partial window is included. `window = 1`
/// voxelizes every frame on its own.
pub fn build_psog(
    clouds: &[LabeledCloud],
    poses: &[EgoPose],
    classes: &ClassTable,
    grid: &RoiGrid,
    window: usize,
    corruption: Option<&CorruptionSpec>,
) -> Result<PSog> {
    if window == 0 {
        return Err(Error::Config("aggregation window must be at least 1".into()));
    }
    if clouds.is_empty() {
        return Err(Error::Ingest("no frames to accumulate".into()));
    }
    for cloud in clouds {
        validate_cloud(cloud, classes)?;
    }
    if let Some(spec) = corruption {
        spec.validate()?;
    }

    let mut psog = PSog::new(grid.clone(), classes.clone());
    for chunk in clouds.chunks(window) {
        let processed: Vec<LabeledCloud> = match corruption {
            Some(spec) => chunk.iter().map(|c| corrupt::apply(c, spec)).collect(),
            None => chunk.to_vec(),
        };
        let anchor = processed[0].frame_id;
        let dense = aggregate_frames(&processed, poses, anchor)?;
        let frame = voxelize_vote(&dense, grid, classes);
        psog.accumulate(&frame)?;
    }
    Ok(psog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn classes() -> ClassTable {
        ClassTable::new(
            (0..9).map(|i| format!("c{i}")).collect::<Vec<_>>(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn aggregate_identity_pose_is_identity() {
        let mut cloud = LabeledCloud::new(0);
        cloud.push([1.0, 2.0, 3.0], 4);
        let poses = vec![EgoPose::identity(0)];
        let merged = aggregate_frames(&[cloud.clone()], &poses, 0).unwrap();
        assert_eq!(merged, cloud);
    }

    #[test]
    fn aggregate_pure_translation() {
        let mut cloud = LabeledCloud::new(1);
        cloud.push([1.0, 0.0, 0.0], 2);
        let poses = vec![
            EgoPose::identity(0),
            EgoPose {
                frame_id: 1,
                translation: [2.0, 0.0, 0.0],
                yaw: 0.0,
            },
        ];
        let merged = aggregate_frames(&[cloud], &poses, 0).unwrap();
        assert_eq!(merged.points[0].pos, [3.0, 0.0, 0.0]);
        assert_eq!(merged.points[0].class_id, 2);
    }

    #[test]
    fn aggregate_quarter_turn() {
        let mut cloud = LabeledCloud::new(1);
        cloud.push([1.0, 0.0, 0.0], 0);
        let poses = vec![
            EgoPose::identity(0),
            EgoPose {
                frame_id: 1,
                translation: [0.0; 3],
                yaw: FRAC_PI_2,
            },
        ];
        let merged = aggregate_frames(&[cloud], &poses, 0).unwrap();
        let p = merged.points[0].pos;
        assert_abs_diff_eq!(p[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn aggregate_missing_pose_errors() {
        let cloud = LabeledCloud::new(3);
        let poses = vec![EgoPose::identity(0)];
        assert!(matches!(
            aggregate_frames(&[cloud], &poses, 0),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn aggregate_concatenates_counts() {
        let mut a = LabeledCloud::new(0);
        a.push([0.0; 3], 1);
        a.push([1.0; 3], 1);
        let mut b = LabeledCloud::new(1);
        b.push([2.0; 3], 2);
        let poses = vec![EgoPose::identity(0), EgoPose::identity(1)];
        let merged = aggregate_frames(&[a, b], &poses, 0).unwrap();
        assert_eq!(merged.len(), 3);
    }

    #[test]
    fn vote_majority_wins() {
        let grid = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let mut cloud = LabeledCloud::new(0);
        cloud.push([0.5, 0.5, 0.5], 7);
        cloud.push([0.4, 0.5, 0.5], 7);
        cloud.push([0.6, 0.5, 0.5], 3);
        let frame = voxelize_vote(&cloud, &grid, &classes());
        assert_eq!(frame.label(grid.linear_id([0, 0, 0])), Some(7));
    }

    #[test]
    fn vote_tie_breaks_to_lowest_class() {
        let grid = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let mut cloud = LabeledCloud::new(0);
        cloud.push([0.5, 0.5, 0.5], 5);
        cloud.push([0.4, 0.5, 0.5], 2);
        let frame = voxelize_vote(&cloud, &grid, &classes());
        assert_eq!(frame.label(grid.linear_id([0, 0, 0])), Some(2));
    }

    #[test]
    fn vote_empty_voxel_is_unobserved() {
        let grid = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let cloud = LabeledCloud::new(0);
        let frame = voxelize_vote(&cloud, &grid, &classes());
        assert_eq!(frame.label(0), None);
        assert_eq!(frame.n_observed(), 0);
    }

    #[test]
    fn vote_ignores_points_outside_roi() {
        let grid = RoiGrid::new([2, 2, 2], [1.0; 3], [0.0; 3]).unwrap();
        let mut cloud = LabeledCloud::new(0);
        cloud.push([5.0, 5.0, 5.0], 1);
        let frame = voxelize_vote(&cloud, &grid, &classes());
        assert_eq!(frame.n_observed(), 0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_point() -> impl Strategy<Value = ([f64; 3], u16)> {
            (
                prop::array::uniform3(-2.0f64..6.0),
                0u16..9,
            )
        }

        proptest! {
            #[test]
            fn duplicating_points_leaves_vote_unchanged(pts in proptest::collection::vec(arb_point(), 1..60)) {
                let grid = RoiGrid::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
                let table = classes();
                let mut single = LabeledCloud::new(0);
                let mut doubled = LabeledCloud::new(0);
                for (pos, class) in &pts {
                    single.push(*pos, *class);
                    doubled.push(*pos, *class);
                    doubled.push(*pos, *class);
                }
                let a = voxelize_vote(&single, &grid, &table);
                let b = voxelize_vote(&doubled, &grid, &table);
                for v in 0..grid.n_voxels() as u32 {
                    prop_assert_eq!(a.label(v), b.label(v));
                }
            }

            #[test]
            fn aggregate_then_vote_matches_vote_of_transformed(
                pts in proptest::collection::vec(arb_point(), 1..40),
                yaw in -3.0f64..3.0,
                tx in -1.0f64..1.0,
            ) {
                // Rigid-transform invariance: aggregating a frame and voting
                // equals voting the hand-transformed points directly.
                let grid = RoiGrid::new([6, 6, 6], [1.0; 3], [-3.0, -3.0, -3.0]).unwrap();
                let table = classes();
                let pose = EgoPose { frame_id: 1, translation: [tx, 0.3, 0.0], yaw };
                let poses = vec![EgoPose::identity(0), pose];
                let mut cloud = LabeledCloud::new(1);
                let mut manual = LabeledCloud::new(0);
                for (pos, class) in &pts {
                    cloud.push(*pos, *class);
                    manual.push(pose.to_world(*pos), *class);
                }
                let merged = aggregate_frames(&[cloud], &poses, 0).unwrap();
                let a = voxelize_vote(&merged, &grid, &table);
                let b = voxelize_vote(&manual, &grid, &table);
                for v in 0..grid.n_voxels() as u32 {
                    prop_assert_eq!(a.label(v), b.label(v));
                }
            }
        }
    }
}
