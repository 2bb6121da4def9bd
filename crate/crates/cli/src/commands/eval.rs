//! `sogrid eval`: score placements against a field.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use sogrid_core::grid::load_psog;
use sogrid_core::metric::{detection_relabel, msog, smig, MetricMode};
use sogrid_core::raycast::{coverage, load_placements, NamedPlacement, OcclusionMode};

use crate::commands::{resolve_mode, write_atomic};
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Field file produced by `psog`.
    #[arg(long)]
    pub psog: PathBuf,
    /// Placement file(s); rows appear in file order.
    #[arg(long = "placements", required = true)]
    pub placements: Vec<PathBuf>,
    /// `segmentation`, `detection:<class>`, or `smig`.
    #[arg(long, default_value = "segmentation")]
    pub mode: String,
    /// `none` or `threshold:<tau>`.
    #[arg(long, default_value = "threshold:0.5")]
    pub occlusion: String,
    /// Output row file (tab-separated).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let mut recorder = RunRecorder::new("eval");
    recorder.input(&args.psog);

    let psog = load_psog(&args.psog).map_err(CliError::data)?;
    let field = psog.finalize().map_err(CliError::data)?;
    let mode = resolve_mode(&args.mode, field.classes())?;
    let occlusion: OcclusionMode = args.occlusion.parse().map_err(CliError::usage)?;

    let mut named: Vec<NamedPlacement> = Vec::new();
    for path in &args.placements {
        recorder.input(path);
        named.extend(load_placements(path).map_err(CliError::usage)?);
    }

    // Detection mode scores on the collapsed field; the occupancy baseline
    // always uses the original field (the relabel preserves p(empty), so
    // either gives the same value).
    let score_field = match mode {
        MetricMode::Detection { target_class } => {
            detection_relabel(&field, target_class).map_err(CliError::usage)?
        }
        _ => field.clone(),
    };

    let mut out = String::from("name\tmsog\tsmig\tn_covered\n");
    for np in &named {
        let cov = coverage(&np.placement, field.grid(), &field, occlusion)
            .map_err(CliError::data)?;
        let m = msog(&score_field, &cov).map_err(CliError::numeric)?;
        let s = smig(&field, &cov).map_err(CliError::numeric)?;
        writeln!(out, "{}\t{}\t{}\t{}", np.name, m.value, s.value, cov.n_covered())
            .expect("writing to string");
    }
    print!("{out}");
    write_atomic(&args.out, &out)?;

    recorder.output(&args.out);
    let manifest_out = PathBuf::from(format!("{}.manifest.toml", args.out.display()));
    recorder.write(&manifest_out)
}
