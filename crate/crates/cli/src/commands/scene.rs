//! `sogrid scene`: generate a procedural labeled scene directory.

use std::path::PathBuf;

use clap::Args;
use sogrid_core::ingest::io::{save_cloud, save_poses, SceneManifest};
use sogrid_core::ingest::scene::gen_scene;

use crate::config::{read_toml, SceneConfig};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct SceneArgs {
    /// Scene parameter file (TOML).
    #[arg(long)]
    pub params: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SceneArgs) -> CliResult<()> {
    let mut recorder = RunRecorder::new("scene");
    recorder.config(&args.params).input(&args.params);

    let config: SceneConfig = read_toml(&args.params)?;
    let seed = config.seed;
    recorder.seed(seed);
    let params = config.into_params();
    let scene = gen_scene(&params).map_err(CliError::usage)?;

    let frames_dir = args.out.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(CliError::data)?;

    let mut frame_entries = Vec::with_capacity(scene.clouds.len());
    for cloud in &scene.clouds {
        let rel = PathBuf::from(format!("frames/frame_{:06}.txt", cloud.frame_id));
        save_cloud(cloud, &args.out.join(&rel)).map_err(CliError::data)?;
        frame_entries.push((cloud.frame_id, rel));
    }
    save_poses(&scene.poses, &args.out.join("poses.txt")).map_err(CliError::data)?;

    let manifest = SceneManifest {
        classes: scene.classes.clone(),
        pose_file: PathBuf::from("poses.txt"),
        frames: frame_entries,
        corruption: None,
    };
    let manifest_path = args.out.join("scene.manifest");
    manifest.save(&manifest_path).map_err(CliError::data)?;

    let total_points: usize = scene.clouds.iter().map(|c| c.len()).sum();
    println!(
        "scene: {} frames, {} points, {} objects -> {}",
        scene.clouds.len(),
        total_points,
        scene.objects.len(),
        args.out.display()
    );

    recorder.output(&manifest_path).output(&args.out.join("poses.txt"));
    recorder.write(&args.out.join("run.manifest.toml"))
}
