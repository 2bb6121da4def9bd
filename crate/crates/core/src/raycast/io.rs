//! Placement file format and the bundled baseline placements.
//!
//! ```text
//! [sensor]
//! channels 16
//! range_max 100.0
//! fov_upper_deg 2.0
//! fov_lower_deg -24.8
//! fov_horizontal_deg 360.0
//! points_per_second_per_channel 5000
//! rotation_hz 20.0
//!
//! [placement Center]
//! 0.0 0.0 2.2 0.0
//! ...
//! ```
//!
//! The sensor block is optional (defaults apply) and covers every placement
//! in the file. Each placement line is one LiDAR's `x y z roll` in meters
//! and radians.

use std::fmt::Write as _;
use std::path::Path;

use super::{LidarExtrinsic, LidarSpec, Placement};
use crate::error::{Error, Result};

/// A placement with the label it carries in placement files and reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPlacement {
    pub name: String,
    pub placement: Placement,
}

const BASELINES_TEXT: &str = include_str!("../../data/baselines.placements");

/// The seven bundled four-LiDAR baselines (Center, Line, Pyramid, Square,
/// Trapezoid, Line-roll, Pyramid-roll) with the default sensor spec.
pub fn baseline_placements() -> Vec<NamedPlacement> {
    parse_placements(BASELINES_TEXT, "<bundled baselines>")
        .expect("bundled baseline data is valid")
}

/// Parses a placement file's text. `src` names the source in errors.
pub fn parse_placements(text: &str, src: &str) -> Result<Vec<NamedPlacement>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: src.to_string(),
        line,
        msg,
    };

    enum Section {
        Preamble,
        Sensor,
        Placement,
    }

    let mut spec = LidarSpec::default();
    let mut section = Section::Preamble;
    let mut named: Vec<(String, Vec<LidarExtrinsic>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header".into()))?
                .trim();
            if header == "sensor" {
                section = Section::Sensor;
            } else if let Some(name) = header.strip_prefix("placement") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(err(line_no, "placement section needs a name".into()));
                }
                named.push((name.to_string(), Vec::new()));
                section = Section::Placement;
            } else {
                return Err(err(line_no, format!("unknown section `{header}`")));
            }
            continue;
        }
        match &section {
            Section::Preamble => {
                return Err(err(line_no, "content before any section header".into()))
            }
            Section::Sensor => {
                let (key, value) = line
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err(line_no, "expected `key value`".into()))?;
                let value = value.trim();
                let parse_f64 = || -> Result<f64> {
                    value
                        .parse()
                        .map_err(|_| err(line_no, format!("bad number `{value}`")))
                };
                match key {
                    "channels" => {
                        spec.channels = value
                            .parse()
                            .map_err(|_| err(line_no, format!("bad channel count `{value}`")))?
                    }
                    "range_max" => spec.range_max = parse_f64()?,
                    "fov_upper_deg" => spec.fov_upper_deg = parse_f64()?,
                    "fov_lower_deg" => spec.fov_lower_deg = parse_f64()?,
                    "fov_horizontal_deg" => spec.fov_horizontal_deg = parse_f64()?,
                    "points_per_second_per_channel" => {
                        spec.points_per_second_per_channel = parse_f64()?
                    }
                    "rotation_hz" => spec.rotation_hz = parse_f64()?,
                    other => return Err(err(line_no, format!("unknown sensor key `{other}`"))),
                }
            }
            Section::Placement => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(err(
                        line_no,
                        format!("expected `x y z roll`, got {} fields", fields.len()),
                    ));
                }
                let mut vals = [0.0f64; 4];
                for (slot, f) in vals.iter_mut().zip(&fields) {
                    *slot = f
                        .parse()
                        .map_err(|_| err(line_no, format!("bad number `{f}`")))?;
                }
                named
                    .last_mut()
                    .expect("in a placement section")
                    .1
                    .push(LidarExtrinsic::new(vals[0], vals[1], vals[2], vals[3]));
            }
        }
    }

    spec.validate()?;
    if named.is_empty() {
        return Err(err(0, "no placement sections found".into()));
    }
    named
        .into_iter()
        .map(|(name, lidars)| {
            if lidars.is_empty() {
                return Err(Error::Config(format!("placement `{name}` has no lidars")));
            }
            Ok(NamedPlacement {
                name,
                placement: Placement::new(lidars, spec)?,
            })
        })
        .collect()
}

/// Loads placements from a file.
pub fn load_placements(path: &Path) -> Result<Vec<NamedPlacement>> {
    let text = std::fs::read_to_string(path)?;
    parse_placements(&text, &path.display().to_string())
}

/// Writes placements (sharing the first one's sensor spec) atomically.
pub fn save_placements(placements: &[NamedPlacement], path: &Path) -> Result<()> {
    let first = placements
        .first()
        .ok_or_else(|| Error::Config("nothing to save".into()))?;
    let spec = first.placement.spec;
    if placements.iter().any(|p| p.placement.spec != spec) {
        return Err(Error::Config(
            "placements in one file must share a sensor spec".into(),
        ));
    }
    let mut out = String::new();
    writeln!(out, "[sensor]").unwrap();
    writeln!(out, "channels {}", spec.channels).unwrap();
    writeln!(out, "range_max {}", spec.range_max).unwrap();
    writeln!(out, "fov_upper_deg {}", spec.fov_upper_deg).unwrap();
    writeln!(out, "fov_lower_deg {}", spec.fov_lower_deg).unwrap();
    writeln!(out, "fov_horizontal_deg {}", spec.fov_horizontal_deg).unwrap();
    writeln!(
        out,
        "points_per_second_per_channel {}",
        spec.points_per_second_per_channel
    )
    .unwrap();
    writeln!(out, "rotation_hz {}", spec.rotation_hz).unwrap();
    for np in placements {
        writeln!(out, "\n[placement {}]", np.name).unwrap();
        for l in &np.placement.lidars {
            writeln!(out, "{} {} {} {}", l.x, l.y, l.z, l.roll).unwrap();
        }
    }
    let tmp = path.with_extension("placements.tmp");
    std::fs::write(&tmp, out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_baselines_parse_to_seven_quads() {
        let baselines = baseline_placements();
        let names: Vec<&str> = baselines.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "Center",
                "Line",
                "Pyramid",
                "Square",
                "Trapezoid",
                "Line-roll",
                "Pyramid-roll"
            ]
        );
        for b in &baselines {
            assert_eq!(b.placement.lidars.len(), 4);
            assert_eq!(b.placement.spec, LidarSpec::default());
        }
        // Spot-check a few coordinates against the published table.
        let center = &baselines[0].placement.lidars;
        assert_eq!(center[0], LidarExtrinsic::new(0.0, 0.0, 2.2, 0.0));
        assert_eq!(center[3], LidarExtrinsic::new(0.0, 0.0, 2.8, 0.0));
        let line_roll = &baselines[5].placement.lidars;
        assert_eq!(line_roll[0], LidarExtrinsic::new(0.0, -0.6, 2.2, -0.3));
        assert_eq!(line_roll[3], LidarExtrinsic::new(0.0, 0.6, 2.2, -0.3));
        let pyramid = &baselines[2].placement.lidars;
        assert_eq!(pyramid[1], LidarExtrinsic::new(0.4, 0.0, 2.4, 0.0));
    }

    #[test]
    fn save_load_roundtrip() {
        let baselines = baseline_placements();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.placements");
        save_placements(&baselines, &path).unwrap();
        let loaded = load_placements(&path).unwrap();
        assert_eq!(loaded, baselines);
    }

    #[test]
    fn parse_error_names_line() {
        let text = "[placement broken]\n1.0 2.0\n";
        match parse_placements(text, "test") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn sensor_block_overrides_defaults() {
        let text = "[sensor]\nchannels 8\nrange_max 50\npoints_per_second_per_channel 2000\nrotation_hz 10\n[placement P]\n0 0 2.2 0\n";
        let parsed = parse_placements(text, "test").unwrap();
        assert_eq!(parsed[0].placement.spec.channels, 8);
        assert_eq!(parsed[0].placement.spec.range_max, 50.0);
        assert_eq!(parsed[0].placement.spec.azimuth_steps(), 200);
    }
}
