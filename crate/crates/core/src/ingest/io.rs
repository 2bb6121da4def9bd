//! Plain-text formats for clouds, poses, and the scene manifest.
//!
//! Cloud files hold one `x y z class_id` per line; pose files hold
//! `frame_id tx ty tz yaw`. Lines starting with `#` and blank lines are
//! ignored. The scene manifest ties classes, a pose file, and per-frame
//! cloud files together:
//!
//! ```text
//! class 0 empty
//! class 1 ground
//! empty_class 0
//! poses poses.txt
//! frame 0 frames/frame_000000.txt
//! corrupt fog:attenuation=0.03,seed=7   # optional
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::corrupt::CorruptionSpec;
use crate::error::{Error, Result};
use crate::grid::ClassTable;
use crate::ingest::{EgoPose, LabeledCloud};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

/// Loads a cloud file, assigning the caller's frame id.
pub fn load_cloud(path: &Path, frame_id: u64) -> Result<LabeledCloud> {
    let text = std::fs::read_to_string(path)?;
    let mut cloud = LabeledCloud::new(frame_id);
    for (line_no, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected `x y z class_id`, got {} fields", fields.len()),
            ));
        }
        let mut pos = [0.0f64; 3];
        for (slot, field) in pos.iter_mut().zip(&fields[..3]) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad coordinate `{field}`")))?;
        }
        let class_id: u16 = fields[3]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad class id `{}`", fields[3])))?;
        cloud.push(pos, class_id);
    }
    Ok(cloud)
}

/// Writes a cloud file; floats use the shortest round-trip representation.
pub fn save_cloud(cloud: &LabeledCloud, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(cloud.points.len() * 24);
    for p in &cloud.points {
        writeln!(out, "{} {} {} {}", p.pos[0], p.pos[1], p.pos[2], p.class_id)
            .expect("writing to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a pose file.
pub fn load_poses(path: &Path) -> Result<Vec<EgoPose>> {
    let text = std::fs::read_to_string(path)?;
    let mut poses = Vec::new();
    for (line_no, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected `frame_id tx ty tz yaw`, got {} fields", fields.len()),
            ));
        }
        let frame_id: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("bad frame id `{}`", fields[0])))?;
        let mut vals = [0.0f64; 4];
        for (slot, field) in vals.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|_| parse_err(path, line_no, format!("bad number `{field}`")))?;
        }
        poses.push(EgoPose {
            frame_id,
            translation: [vals[0], vals[1], vals[2]],
            yaw: vals[3],
        });
    }
    Ok(poses)
}

pub fn save_poses(poses: &[EgoPose], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in poses {
        writeln!(
            out,
            "{} {} {} {} {}",
            p.frame_id, p.translation[0], p.translation[1], p.translation[2], p.yaw
        )
        .expect("writing to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Scene manifest: class table, pose file, ordered frame files, and an
/// optional baked-in corruption.
#[derive(Debug, Clone)]
pub struct SceneManifest {
    pub classes: ClassTable,
    pub pose_file: PathBuf,
    /// `(frame_id, cloud file)` in manifest order.
    pub frames: Vec<(u64, PathBuf)>,
    pub corruption: Option<CorruptionSpec>,
}

impl SceneManifest {
    /// Loads a manifest; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &str| -> PathBuf {
            let pb = PathBuf::from(p);
            if pb.is_absolute() {
                pb
            } else {
                base.join(pb)
            }
        };

        let mut names: Vec<(u16, String)> = Vec::new();
        let mut empty_class: Option<u16> = None;
        let mut pose_file: Option<PathBuf> = None;
        let mut frames: Vec<(u64, PathBuf)> = Vec::new();
        let mut corruption = None;

        for (line_no, line) in content_lines(&text) {
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match keyword {
                "class" => {
                    let (id_str, name) = rest.split_once(char::is_whitespace).ok_or_else(|| {
                        parse_err(path, line_no, "expected `class <id> <name>`")
                    })?;
                    let id: u16 = id_str.parse().map_err(|_| {
                        parse_err(path, line_no, format!("bad class id `{id_str}`"))
                    })?;
                    names.push((id, name.trim().to_owned()));
                }
                "empty_class" => {
                    empty_class = Some(rest.parse().map_err(|_| {
                        parse_err(path, line_no, format!("bad empty_class id `{rest}`"))
                    })?);
                }
                "poses" => pose_file = Some(resolve(rest)),
                "frame" => {
                    let (id_str, file) = rest.split_once(char::is_whitespace).ok_or_else(|| {
                        parse_err(path, line_no, "expected `frame <id> <path>`")
                    })?;
                    let id: u64 = id_str.parse().map_err(|_| {
                        parse_err(path, line_no, format!("bad frame id `{id_str}`"))
                    })?;
                    frames.push((id, resolve(file.trim())));
                }
                "corrupt" => {
                    corruption = Some(CorruptionSpec::parse(rest).map_err(|e| {
                        parse_err(path, line_no, format!("bad corruption spec: {e}"))
                    })?);
                }
                other => {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("unknown manifest keyword `{other}`"),
                    ))
                }
            }
        }

        names.sort_by_key(|(id, _)| *id);
        for (expect, (id, _)) in names.iter().enumerate() {
            if *id as usize != expect {
                return Err(parse_err(
                    path,
                    0,
                    format!("class ids must be dense 0..M-1, missing id {expect}"),
                ));
            }
        }
        let classes = ClassTable::new(
            names.into_iter().map(|(_, n)| n).collect(),
            empty_class.ok_or_else(|| parse_err(path, 0, "missing empty_class line"))?,
        )?;
        Ok(Self {
            classes,
            pose_file: pose_file.ok_or_else(|| parse_err(path, 0, "missing poses line"))?,
            frames,
            corruption,
        })
    }

    /// Writes the manifest with paths exactly as stored.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("# scene manifest\n");
        for (id, name) in self.classes.names().iter().enumerate() {
            writeln!(out, "class {id} {name}").expect("writing to string");
        }
        writeln!(out, "empty_class {}", self.classes.empty_class()).expect("writing to string");
        writeln!(out, "poses {}", self.pose_file.display()).expect("writing to string");
        for (id, file) in &self.frames {
            writeln!(out, "frame {id} {}", file.display()).expect("writing to string");
        }
        if let Some(c) = &self.corruption {
            writeln!(out, "corrupt {}", c.to_parse_string()).expect("writing to string");
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_roundtrip_is_identity() {
        let mut cloud = LabeledCloud::new(7);
        cloud.push([1.0, 2.0, 3.0], 5);
        cloud.push([-0.125, 17.25, -3.5e-3], 0);
        cloud.push([1.0 / 3.0, 2.0_f64.sqrt(), -1e-17], 11);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.txt");
        save_cloud(&cloud, &path).unwrap();
        let loaded = load_cloud(&path, 7).unwrap();
        assert_eq!(loaded, cloud);
    }

    #[test]
    fn cloud_line_is_parsed_as_documented() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.txt");
        std::fs::write(&path, "# comment\n\n1.0 2.0 3.0 5\n").unwrap();
        let cloud = load_cloud(&path, 0).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.points[0].pos, [1.0, 2.0, 3.0]);
        assert_eq!(cloud.points[0].class_id, 5);
    }

    #[test]
    fn truncated_cloud_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.txt");
        std::fs::write(&path, "0 0 0 1\n1.0 2.0\n").unwrap();
        match load_cloud(&path, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn pose_roundtrip() {
        let poses = vec![
            EgoPose {
                frame_id: 0,
                translation: [0.0, 0.0, 0.0],
                yaw: 0.0,
            },
            EgoPose {
                frame_id: 3,
                translation: [1.5, -2.25, 0.1],
                yaw: 0.7853981633974483,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("poses.txt");
        save_poses(&poses, &path).unwrap();
        assert_eq!(load_poses(&path).unwrap(), poses);
    }

    #[test]
    fn manifest_roundtrip_with_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = SceneManifest {
            classes: ClassTable::new(vec!["empty".into(), "ground".into()], 0).unwrap(),
            pose_file: PathBuf::from("poses.txt"),
            frames: vec![(0, PathBuf::from("f0.txt")), (1, PathBuf::from("f1.txt"))],
            corruption: Some(CorruptionSpec::parse("fog:attenuation=0.02,seed=3").unwrap()),
        };
        let path = dir.path().join("scene.manifest");
        manifest.save(&path).unwrap();
        let loaded = SceneManifest::load(&path).unwrap();
        assert_eq!(loaded.classes, manifest.classes);
        assert_eq!(loaded.pose_file, dir.path().join("poses.txt"));
        assert_eq!(loaded.frames.len(), 2);
        assert_eq!(loaded.frames[1].1, dir.path().join("f1.txt"));
        assert_eq!(loaded.corruption, manifest.corruption);
    }

    #[test]
    fn manifest_rejects_sparse_class_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.manifest");
        std::fs::write(&path, "class 0 empty\nclass 2 car\nempty_class 0\nposes p.txt\n").unwrap();
        assert!(SceneManifest::load(&path).is_err());
    }
}
