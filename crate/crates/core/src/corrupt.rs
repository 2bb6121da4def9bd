//! Simplified point-cloud corruption transforms.
//!
//! Four adverse-condition approximations operate directly on labeled clouds:
//! jitter (motion blur), crosstalk ghost returns, random echo dropout, and
//! range-dependent fog attenuation. The fog model keeps only the exponential
//! range-attenuation term; back-scattering and physically based weather
//! effects are out of scope.
//!
//! Every point derives its own RNG stream from `(seed, frame_id, point index)`,
//! so output is reproducible and independent of evaluation order.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ingest::{LabeledCloud, LabeledPoint};
use crate::rng;

/// Jitter noise level matching the published motion-blur setting.
pub const DEFAULT_MOTION_BLUR_SIGMA: f64 = 0.30;
/// Disturb ratio matching the published crosstalk setting.
pub const DEFAULT_CROSSTALK_RATIO: f64 = 0.07;
/// Dropout matching the published incomplete-echo attenuation setting.
pub const DEFAULT_INCOMPLETE_ECHO_DROP: f64 = 0.85;
/// Mid-range fog attenuation coefficient (1/m).
pub const DEFAULT_FOG_ATTENUATION: f64 = 0.03;
/// Ghost returns land inside the default sensor range sphere.
pub const DEFAULT_CROSSTALK_RANGE: f64 = 100.0;

/// Which corruption to apply and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptionKind {
    /// I.i.d. Gaussian offset (sigma meters per axis) on every point.
    MotionBlur { sigma: f64 },
    /// Replaces a fraction of points with uniform ghost returns inside the
    /// sensor range sphere, labeled with the designated noise class.
    Crosstalk {
        ratio: f64,
        range: f64,
        noise_class: u16,
    },
    /// Drops each point independently.
    IncompleteEcho { drop: f64 },
    /// Drops each point with probability `1 - exp(-attenuation * range)`.
    Fog { attenuation: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub rng_seed: u64,
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            CorruptionKind::MotionBlur { sigma } => {
                if sigma < 0.0 || !sigma.is_finite() {
                    return Err(Error::Validation("motion blur sigma must be >= 0".into()));
                }
            }
            CorruptionKind::Crosstalk { ratio, range, .. } => {
                if !(0.0..=1.0).contains(&ratio) {
                    return Err(Error::Validation("crosstalk ratio must be in [0, 1]".into()));
                }
                if !(range > 0.0) {
                    return Err(Error::Validation("crosstalk range must be positive".into()));
                }
            }
            CorruptionKind::IncompleteEcho { drop } => {
                if !(0.0..=1.0).contains(&drop) {
                    return Err(Error::Validation("echo drop must be in [0, 1]".into()));
                }
            }
            CorruptionKind::Fog { attenuation } => {
                if attenuation < 0.0 || !attenuation.is_finite() {
                    return Err(Error::Validation("fog attenuation must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Parses `kind:key=value,...` as used by the CLI flag and the scene
    /// manifest, e.g. `fog:attenuation=0.03,seed=7` or `motion_blur`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind_str, params_str) = match text.split_once(':') {
            Some((k, p)) => (k.trim(), p),
            None => (text.trim(), ""),
        };
        let mut params: Vec<(&str, &str)> = Vec::new();
        for part in params_str.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                Error::Validation(format!("corruption parameter `{part}` is not key=value"))
            })?;
            params.push((k.trim(), v.trim()));
        }
        let take_f64 = |params: &[(&str, &str)], key: &str, default: f64| -> Result<f64> {
            match params.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => v
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad value for {key}: {v}"))),
                None => Ok(default),
            }
        };
        let take_u64 = |params: &[(&str, &str)], key: &str, default: u64| -> Result<u64> {
            match params.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => v
                    .parse()
                    .map_err(|_| Error::Validation(format!("bad value for {key}: {v}"))),
                None => Ok(default),
            }
        };
        let known = |allowed: &[&str]| -> Result<()> {
            for (k, _) in &params {
                if !allowed.contains(k) {
                    return Err(Error::Validation(format!(
                        "unknown corruption parameter `{k}`"
                    )));
                }
            }
            Ok(())
        };

        let rng_seed = take_u64(&params, "seed", 0)?;
        let kind = match kind_str {
            "motion_blur" => {
                known(&["sigma", "seed"])?;
                CorruptionKind::MotionBlur {
                    sigma: take_f64(&params, "sigma", DEFAULT_MOTION_BLUR_SIGMA)?,
                }
            }
            "crosstalk" => {
                known(&["ratio", "range", "noise_class", "seed"])?;
                CorruptionKind::Crosstalk {
                    ratio: take_f64(&params, "ratio", DEFAULT_CROSSTALK_RATIO)?,
                    range: take_f64(&params, "range", DEFAULT_CROSSTALK_RANGE)?,
                    noise_class: take_u64(&params, "noise_class", 0)? as u16,
                }
            }
            "incomplete_echo" => {
                known(&["drop", "seed"])?;
                CorruptionKind::IncompleteEcho {
                    drop: take_f64(&params, "drop", DEFAULT_INCOMPLETE_ECHO_DROP)?,
                }
            }
            "fog" => {
                known(&["attenuation", "seed"])?;
                CorruptionKind::Fog {
                    attenuation: take_f64(&params, "attenuation", DEFAULT_FOG_ATTENUATION)?,
                }
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown corruption kind `{other}` (expected motion_blur, crosstalk, incomplete_echo, or fog)"
                )))
            }
        };
        let spec = CorruptionSpec { kind, rng_seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Inverse of [`parse`](Self::parse).
    pub fn to_parse_string(&self) -> String {
        match self.kind {
            CorruptionKind::MotionBlur { sigma } => {
                format!("motion_blur:sigma={},seed={}", sigma, self.rng_seed)
            }
            CorruptionKind::Crosstalk {
                ratio,
                range,
                noise_class,
            } => format!(
                "crosstalk:ratio={},range={},noise_class={},seed={}",
                ratio, range, noise_class, self.rng_seed
            ),
            CorruptionKind::IncompleteEcho { drop } => {
                format!("incomplete_echo:drop={},seed={}", drop, self.rng_seed)
            }
            CorruptionKind::Fog { attenuation } => {
                format!("fog:attenuation={},seed={}", attenuation, self.rng_seed)
            }
        }
    }
}

/// Applies the corruption to one cloud.
///
/// Deterministic: the per-point stream is keyed by the spec seed, the cloud's
/// frame id, and the point index.
pub fn apply(cloud: &LabeledCloud, spec: &CorruptionSpec) -> LabeledCloud {
    let mut out = LabeledCloud::new(cloud.frame_id);
    out.points.reserve(cloud.points.len());
    for (i, p) in cloud.points.iter().enumerate() {
        let mut rng = rng::stream(spec.rng_seed, &[cloud.frame_id, i as u64]);
        match spec.kind {
            CorruptionKind::MotionBlur { sigma } => {
                let mut pos = p.pos;
                for axis in &mut pos {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *axis += sigma * z;
                }
                out.push(pos, p.class_id);
            }
            CorruptionKind::Crosstalk {
                ratio,
                range,
                noise_class,
            } => {
                if rng.random::<f64>() < ratio {
                    out.points.push(uniform_in_ball(&mut rng, range, noise_class));
                } else {
                    out.points.push(*p);
                }
            }
            CorruptionKind::IncompleteEcho { drop } => {
                if rng.random::<f64>() >= drop {
                    out.points.push(*p);
                }
            }
            CorruptionKind::Fog { attenuation } => {
                let r = (p.pos[0] * p.pos[0] + p.pos[1] * p.pos[1] + p.pos[2] * p.pos[2]).sqrt();
                let survival = (-attenuation * r).exp();
                if rng.random::<f64>() < survival {
                    out.points.push(*p);
                }
            }
        }
    }
    out
}

fn uniform_in_ball<R: Rng>(rng: &mut R, radius: f64, class_id: u16) -> LabeledPoint {
    // Isotropic direction from normals, radius from the inverse CDF.
    let mut dir = [0.0f64; 3];
    loop {
        for d in &mut dir {
            *d = StandardNormal.sample(rng);
        }
        let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        if norm > 1e-12 {
            let r = radius * rng.random::<f64>().cbrt();
            return LabeledPoint {
                pos: [dir[0] / norm * r, dir[1] / norm * r, dir[2] / norm * r],
                class_id,
            };
        }
    }
}
