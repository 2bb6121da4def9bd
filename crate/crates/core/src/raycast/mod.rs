//! Spinning-LiDAR sensor model, ray-bundle generation, grid traversal, and
//! placement coverage sets.
//!
//! Axis convention: x forward, y left, z up. `roll` rotates ray directions
//! about the sensor's forward (x) axis and is expressed in radians.

mod coverage;
mod io;
mod traverse;

pub use coverage::{coverage, CoverageSet, OcclusionMode, VoxelMask};
pub use io::{baseline_placements, load_placements, parse_placements, save_placements, NamedPlacement};
pub use traverse::{traverse, GridTraversal, Visit};

use crate::error::{Error, Result};

/// Spinning-LiDAR sensor parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarSpec {
    pub channels: usize,
    /// Maximum ray range in meters.
    pub range_max: f64,
    pub fov_upper_deg: f64,
    pub fov_lower_deg: f64,
    pub fov_horizontal_deg: f64,
    pub points_per_second_per_channel: f64,
    pub rotation_hz: f64,
}

impl Default for LidarSpec {
    /// 16-channel sensor: 100 m range, [-24.8, 2.0] degree vertical FOV,
    /// full horizontal sweep, 5000 points/s/channel at 20 Hz rotation.
    fn default() -> Self {
        Self {
            channels: 16,
            range_max: 100.0,
            fov_upper_deg: 2.0,
            fov_lower_deg: -24.8,
            fov_horizontal_deg: 360.0,
            points_per_second_per_channel: 5000.0,
            rotation_hz: 20.0,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 1 {
            return Err(Error::Config("lidar needs at least one channel".into()));
        }
        if !(self.range_max > 0.0) {
            return Err(Error::Config("lidar range must be positive".into()));
        }
        if self.fov_lower_deg >= self.fov_upper_deg {
            return Err(Error::Config("fov_lower must be below fov_upper".into()));
        }
        if !(self.fov_horizontal_deg > 0.0) || self.fov_horizontal_deg > 360.0 {
            return Err(Error::Config("horizontal fov must be in (0, 360]".into()));
        }
        if !(self.rotation_hz > 0.0) || !(self.points_per_second_per_channel > 0.0) {
            return Err(Error::Config("rates must be positive".into()));
        }
        let steps = self.points_per_second_per_channel / self.rotation_hz;
        if steps < 1.0 || (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "points/s/channel divided by rotation rate must be a positive integer, got {steps}"
            )));
        }
        Ok(())
    }

    /// Azimuth positions per revolution.
    pub fn azimuth_steps(&self) -> usize {
        (self.points_per_second_per_channel / self.rotation_hz).round() as usize
    }

    /// Rays emitted per frame: channels x azimuth steps.
    pub fn rays_per_frame(&self) -> usize {
        self.channels * self.azimuth_steps()
    }
}

/// Mounting pose of one LiDAR in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarExtrinsic {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Rotation about the sensor's forward axis, radians.
    pub roll: f64,
}

impl LidarExtrinsic {
    pub fn new(x: f64, y: f64, z: f64, roll: f64) -> Self {
        Self { x, y, z, roll }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// A set of LiDARs sharing one sensor spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub lidars: Vec<LidarExtrinsic>,
    pub spec: LidarSpec,
}

impl Placement {
    pub fn new(lidars: Vec<LidarExtrinsic>, spec: LidarSpec) -> Result<Self> {
        if lidars.is_empty() {
            return Err(Error::Config("placement needs at least one lidar".into()));
        }
        spec.validate()?;
        Ok(Self { lidars, spec })
    }

    /// Builds a placement from a flat `[x, y, z, roll]`-per-LiDAR vector.
    pub fn from_vector(u: &[f64], spec: LidarSpec) -> Result<Self> {
        if u.is_empty() || u.len() % 4 != 0 {
            return Err(Error::Config(format!(
                "placement vector length {} is not a multiple of 4",
                u.len()
            )));
        }
        let lidars = u
            .chunks_exact(4)
            .map(|c| LidarExtrinsic::new(c[0], c[1], c[2], c[3]))
            .collect();
        Self::new(lidars, spec)
    }

    /// Flattens to the optimization vector layout.
    pub fn to_vector(&self) -> Vec<f64> {
        self.lidars
            .iter()
            .flat_map(|l| [l.x, l.y, l.z, l.roll])
            .collect()
    }
}

/// One ray: origin plus unit direction, both in the ego frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub dir: [f64; 3],
}

/// Generates the full ray bundle for one LiDAR.
///
/// Elevations are evenly spaced inclusive over `[fov_lower, fov_upper]`;
/// azimuths evenly spaced over `[0, fov_horizontal)`. Roll is applied to each
/// direction before the origin offset. All directions are unit-norm.
pub fn gen_rays(ext: &LidarExtrinsic, spec: &LidarSpec) -> Vec<Ray> {
    let steps = spec.azimuth_steps();
    let lower = spec.fov_lower_deg.to_radians();
    let upper = spec.fov_upper_deg.to_radians();
    let fov_h = spec.fov_horizontal_deg.to_radians();
    let origin = ext.position();
    let (roll_s, roll_c) = ext.roll.sin_cos();

    let mut rays = Vec::with_capacity(spec.channels * steps);
    for ch in 0..spec.channels {
        let elevation = if spec.channels == 1 {
            0.5 * (lower + upper)
        } else {
            lower + (upper - lower) * ch as f64 / (spec.channels - 1) as f64
        };
        let (es, ec) = elevation.sin_cos();
        for k in 0..steps {
            let azimuth = fov_h * k as f64 / steps as f64;
            let (az_s, az_c) = azimuth.sin_cos();
            let d = [ec * az_c, ec * az_s, es];
            // Roll about +x.
            let dir = [
                d[0],
                roll_c * d[1] - roll_s * d[2],
                roll_s * d[1] + roll_c * d[2],
            ];
            rays.push(Ray { origin, dir });
        }
    }
    rays
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_spec_emits_4000_rays() {
        let spec = LidarSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.azimuth_steps(), 250);
        let rays = gen_rays(&LidarExtrinsic::new(0.0, 0.0, 2.2, 0.0), &spec);
        assert_eq!(rays.len(), 4000);
    }

    #[test]
    fn zero_elevation_zero_azimuth_points_forward() {
        let spec = LidarSpec {
            channels: 3,
            fov_lower_deg: -10.0,
            fov_upper_deg: 10.0,
            points_per_second_per_channel: 80.0,
            rotation_hz: 20.0,
            ..LidarSpec::default()
        };
        let rays = gen_rays(&LidarExtrinsic::new(0.0, 0.0, 0.0, 0.0), &spec);
        // Middle channel, first azimuth: elevation 0, azimuth 0.
        let mid = &rays[spec.azimuth_steps()];
        assert_abs_diff_eq!(mid.dir[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.dir[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mid.dir[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn half_turn_roll_flips_elevation() {
        let spec = LidarSpec {
            channels: 4,
            points_per_second_per_channel: 100.0,
            rotation_hz: 20.0,
            ..LidarSpec::default()
        };
        let flat = gen_rays(&LidarExtrinsic::new(0.0, 0.0, 0.0, 0.0), &spec);
        let rolled = gen_rays(&LidarExtrinsic::new(0.0, 0.0, 0.0, std::f64::consts::PI), &spec);
        for (a, b) in flat.iter().zip(&rolled) {
            let elev_a = a.dir[2].asin();
            let elev_b = b.dir[2].asin();
            assert_abs_diff_eq!(elev_a, -elev_b, epsilon = 1e-12);
        }
    }

    #[test]
    fn directions_are_unit_norm() {
        let spec = LidarSpec::default();
        let rays = gen_rays(&LidarExtrinsic::new(0.3, -0.2, 2.4, -0.3), &spec);
        for r in rays.iter().step_by(37) {
            let norm2: f64 = r.dir.iter().map(|d| d * d).sum();
            assert!((norm2.sqrt() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn elevations_span_fov_inclusive() {
        let spec = LidarSpec::default();
        let rays = gen_rays(&LidarExtrinsic::new(0.0, 0.0, 0.0, 0.0), &spec);
        let first_elev = rays[0].dir[2].asin().to_degrees();
        let last_elev = rays[rays.len() - 1].dir[2].asin().to_degrees();
        assert_abs_diff_eq!(first_elev, -24.8, epsilon = 1e-9);
        assert_abs_diff_eq!(last_elev, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn spec_rejects_fractional_azimuth_steps() {
        let spec = LidarSpec {
            points_per_second_per_channel: 5001.0,
            rotation_hz: 20.0,
            ..LidarSpec::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn placement_vector_roundtrip() {
        let spec = LidarSpec::default();
        let u = vec![0.1, -0.2, 2.3, 0.0, -0.4, 0.5, 2.6, -0.3];
        let p = Placement::from_vector(&u, spec).unwrap();
        assert_eq!(p.lidars.len(), 2);
        assert_eq!(p.to_vector(), u);
        assert!(Placement::from_vector(&u[..3], spec).is_err());
    }
}
