//! `sogrid psog`: build the probabilistic occupancy field from a scene.

use std::path::PathBuf;

use clap::Args;
use sogrid_core::corrupt::CorruptionSpec;
use sogrid_core::grid::save_psog;
use sogrid_core::ingest::io::{load_cloud, load_poses, SceneManifest};
use sogrid_core::ingest::build_psog;

use crate::config::{read_toml, RoiConfig};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct PsogArgs {
    /// Scene directory or manifest file.
    #[arg(long)]
    pub scene: PathBuf,
    /// ROI grid configuration (TOML).
    #[arg(long)]
    pub roi: PathBuf,
    /// Frames aggregated per occupancy sample.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    /// Corruption applied before voxelization, e.g. `fog:attenuation=0.03,seed=7`;
    /// overrides any corruption block in the scene manifest.
    #[arg(long)]
    pub corrupt: Option<String>,
    /// Output field file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &PsogArgs) -> CliResult<()> {
    let mut recorder = RunRecorder::new("psog");
    let manifest_path = if args.scene.is_dir() {
        args.scene.join("scene.manifest")
    } else {
        args.scene.clone()
    };
    recorder.input(&manifest_path).input(&args.roi).config(&args.roi);

    let manifest = SceneManifest::load(&manifest_path).map_err(CliError::data)?;
    let roi: RoiConfig = read_toml(&args.roi)?;
    let grid = roi.build_grid()?;

    let poses = load_poses(&manifest.pose_file).map_err(CliError::data)?;
    let mut clouds = Vec::with_capacity(manifest.frames.len());
    for (frame_id, path) in &manifest.frames {
        clouds.push(load_cloud(path, *frame_id).map_err(CliError::data)?);
    }

    let corruption = match &args.corrupt {
        Some(text) => Some(CorruptionSpec::parse(text).map_err(CliError::usage)?),
        None => manifest.corruption,
    };

    let psog = build_psog(
        &clouds,
        &poses,
        &manifest.classes,
        &grid,
        args.window,
        corruption.as_ref(),
    )
    .map_err(CliError::data)?;

    save_psog(&psog, &args.out).map_err(CliError::data)?;
    println!(
        "psog: {} frames ({} windows of {}), {} voxels -> {}",
        clouds.len(),
        psog.frames_seen(),
        args.window,
        grid.n_voxels(),
        args.out.display()
    );

    recorder.output(&args.out);
    let manifest_out = PathBuf::from(format!("{}.manifest.toml", args.out.display()));
    recorder.write(&manifest_out)
}
