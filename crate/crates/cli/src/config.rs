//! TOML run configurations with CLI overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sogrid_core::ingest::scene::SceneParams;
use sogrid_core::{LidarSpec, RoiGrid, SearchSpace};

use crate::errors::{CliError, CliResult};

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
}

/// Scene generation parameters; unset fields take library defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub seed: u64,
    pub n_frames: usize,
    pub frame_dt: Option<f64>,
    pub density: Option<f64>,
    pub ground_half: Option<[f64; 2]>,
    pub n_buildings: Option<usize>,
    pub building_size_min: Option<[f64; 3]>,
    pub building_size_max: Option<[f64; 3]>,
    pub n_cars: Option<usize>,
    pub car_size_min: Option<[f64; 3]>,
    pub car_size_max: Option<[f64; 3]>,
    pub n_pedestrians: Option<usize>,
    pub ped_radius: Option<[f64; 2]>,
    pub ped_height: Option<[f64; 2]>,
    pub car_speed: Option<[f64; 2]>,
    pub ped_speed: Option<[f64; 2]>,
    pub ego_speed: Option<f64>,
    pub object_x: Option<[f64; 2]>,
    pub object_y: Option<[f64; 2]>,
    pub keepout_radius: Option<f64>,
}

impl SceneConfig {
    pub fn into_params(self) -> SceneParams {
        let d = SceneParams::default();
        SceneParams {
            rng_seed: self.seed,
            n_frames: self.n_frames,
            frame_dt: self.frame_dt.unwrap_or(d.frame_dt),
            density: self.density.unwrap_or(d.density),
            ground_half: self.ground_half.unwrap_or(d.ground_half),
            n_buildings: self.n_buildings.unwrap_or(d.n_buildings),
            building_size: (
                self.building_size_min.unwrap_or(d.building_size.0),
                self.building_size_max.unwrap_or(d.building_size.1),
            ),
            n_cars: self.n_cars.unwrap_or(d.n_cars),
            car_size: (
                self.car_size_min.unwrap_or(d.car_size.0),
                self.car_size_max.unwrap_or(d.car_size.1),
            ),
            n_pedestrians: self.n_pedestrians.unwrap_or(d.n_pedestrians),
            ped_radius: self.ped_radius.map(|r| (r[0], r[1])).unwrap_or(d.ped_radius),
            ped_height: self.ped_height.map(|r| (r[0], r[1])).unwrap_or(d.ped_height),
            car_speed: self.car_speed.map(|r| (r[0], r[1])).unwrap_or(d.car_speed),
            ped_speed: self.ped_speed.map(|r| (r[0], r[1])).unwrap_or(d.ped_speed),
            ego_speed: self.ego_speed.unwrap_or(d.ego_speed),
            object_x: self.object_x.map(|r| (r[0], r[1])).unwrap_or(d.object_x),
            object_y: self.object_y.map(|r| (r[0], r[1])).unwrap_or(d.object_y),
            keepout_radius: self.keepout_radius.unwrap_or(d.keepout_radius),
        }
    }
}

/// ROI grid shape; origin defaults to the fully centered cuboid.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiConfig {
    pub extent: [f64; 3],
    pub res: [f64; 3],
    pub origin: Option<[f64; 3]>,
}

impl RoiConfig {
    pub fn build_grid(&self) -> CliResult<RoiGrid> {
        let origin = self.origin.unwrap_or([
            -self.extent[0] / 2.0,
            -self.extent[1] / 2.0,
            -self.extent[2] / 2.0,
        ]);
        RoiGrid::from_extents(self.extent, self.res, origin).map_err(CliError::usage)
    }
}

fn default_iterations() -> usize {
    100
}

fn default_n_lidars() -> usize {
    4
}

fn default_min_mutual_distance() -> f64 {
    0.2
}

fn default_mode() -> String {
    "segmentation".to_string()
}

fn default_occlusion() -> String {
    "threshold:0.5".to_string()
}

/// Placement optimization run configuration.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeRunConfig {
    /// Field file; may be overridden by `--psog`.
    pub psog: Option<PathBuf>,
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    pub delta: f64,
    /// Penalty weight; absent means probe-calibrated.
    pub lambda: Option<f64>,
    #[serde(default = "default_min_mutual_distance")]
    pub min_mutual_distance: f64,
    /// `segmentation`, `detection:<class name or id>`, or `smig`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// `none` or `threshold:<tau>`.
    #[serde(default = "default_occlusion")]
    pub occlusion: String,
    #[serde(default = "default_n_lidars")]
    pub n_lidars: usize,
    pub x_bounds: [f64; 2],
    pub y_bounds: [f64; 2],
    pub z_bounds: [f64; 2],
    pub roll_bounds: [f64; 2],
    /// Pin every LiDAR to this mounting height (planar mode).
    pub planar_z: Option<f64>,
    pub init_sigma: Option<f64>,
    #[serde(default)]
    pub whiten_step_path: bool,
    /// Externally supplied Lipschitz constant for the certificate.
    pub analytic_k_g: Option<f64>,
    /// Sensor overrides; unset fields keep the standard 16-channel spec.
    pub sensor: Option<SensorConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub channels: Option<usize>,
    pub range_max: Option<f64>,
    pub fov_upper_deg: Option<f64>,
    pub fov_lower_deg: Option<f64>,
    pub fov_horizontal_deg: Option<f64>,
    pub points_per_second_per_channel: Option<f64>,
    pub rotation_hz: Option<f64>,
}

impl SensorConfig {
    pub fn build_spec(&self) -> CliResult<LidarSpec> {
        let d = LidarSpec::default();
        let spec = LidarSpec {
            channels: self.channels.unwrap_or(d.channels),
            range_max: self.range_max.unwrap_or(d.range_max),
            fov_upper_deg: self.fov_upper_deg.unwrap_or(d.fov_upper_deg),
            fov_lower_deg: self.fov_lower_deg.unwrap_or(d.fov_lower_deg),
            fov_horizontal_deg: self.fov_horizontal_deg.unwrap_or(d.fov_horizontal_deg),
            points_per_second_per_channel: self
                .points_per_second_per_channel
                .unwrap_or(d.points_per_second_per_channel),
            rotation_hz: self.rotation_hz.unwrap_or(d.rotation_hz),
        };
        spec.validate().map_err(CliError::usage)?;
        Ok(spec)
    }
}

impl OptimizeRunConfig {
    pub fn build_space(&self) -> CliResult<SearchSpace> {
        let space = SearchSpace::for_lidars(
            self.n_lidars,
            (self.x_bounds[0], self.x_bounds[1]),
            (self.y_bounds[0], self.y_bounds[1]),
            (self.z_bounds[0], self.z_bounds[1]),
            (self.roll_bounds[0], self.roll_bounds[1]),
            self.delta,
        )
        .map_err(CliError::usage)?;
        match self.planar_z {
            Some(z0) => space.with_planar_z(z0).map_err(CliError::usage),
            None => Ok(space),
        }
    }
}
